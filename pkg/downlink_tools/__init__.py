__version__ = '0.1.0'


main_help = "Schedule satellite image data downlinks with segmentation and bi-objective search."
