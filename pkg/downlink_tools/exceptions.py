'''
Exceptions raised by downlink_tools.

Feasibility problems are not exceptions: validate_schedule reports them as Violation
records. Everything here means the input could not be interpreted at all.
'''


class DownlinkError(Exception):
    '''Base class for every error raised by this package'''


class InstanceError(DownlinkError):
    '''An Instance (or one of its parts) breaks its invariants'''


class ScheduleResolutionError(DownlinkError):
    '''A schedule references ids that do not exist in the instance'''

    def __init__(self, missing: list[str]):
        self.missing = sorted(set(missing))
        super().__init__(f'unresolved ids in schedule: {", ".join(self.missing)}')


class EncodingError(DownlinkError):
    '''A chromosome breaks its invariants or a schedule cannot be encoded'''


class OperatorError(DownlinkError):
    '''Bad operator kind or unusable operator weights'''


class MetricError(DownlinkError):
    '''Invalid input to a quality indicator'''


class OracleLimitError(DownlinkError):
    '''Instance too large for exhaustive enumeration'''


class InfeasibleOffspringError(DownlinkError):
    '''A solver produced a schedule with violations (feasibility checking enabled)'''


class UsageError(DownlinkError):
    '''Bad command-line value: unknown family, unparsable mode, missing flag'''


class InstanceFileError(DownlinkError):
    '''Base class for instance/result file problems'''


class SchemaVersionError(InstanceFileError):
    '''The file declares a schema_version this code does not read'''


class MalformedContentError(InstanceFileError):
    '''The file is not valid JSON or does not match the document schema'''


class DanglingReferenceError(InstanceFileError):
    '''The file references an id that it never defines'''
