'''Benchmark instance generation and file persistence.'''
from downlink_tools.instances.generate import Family, generate, synth_windows  # noqa: F401
from downlink_tools.instances.storage import (  # noqa: F401
    load_instance, load_run, load_schedules, save_instance, save_run, save_schedules)
