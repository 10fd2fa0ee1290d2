'''The sidsp command line: application, benchmark harness and CSV outputs.'''
