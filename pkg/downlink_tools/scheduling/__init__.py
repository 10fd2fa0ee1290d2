'''Downlink scheduling: model, construction, neighbourhoods, evolution and metrics.'''
from downlink_tools.scheduling.model import (  # noqa: F401
    ALL_MODES, DownlinkTask, GroundStation, ImageData, Instance, ObjectivePoint, Satellite,
    Schedule, SegmentationPlan, SolveMode, TransmissionWindow, Violation, ViolationCode,
    due_time, evaluate, failure_rate, segments, service_balance, validate_schedule)
