"""Commonly used tools
"""


class EinsteinFlowException(Exception):
    reason = 'einsteinflow_error'

    def __init__(self, msg):
        Exception.__init__(self, msg)


class AxisOutOfRange(EinsteinFlowException):
    reason = 'axis_out_of_range'


class GridMismatch(EinsteinFlowException):
    reason = 'grid_mismatch'


class SymmetryViolation(EinsteinFlowException):
    reason = 'symmetry_violation'


class IndexOutOfRange(EinsteinFlowException):
    reason = 'index_out_of_range'


class MetricNotPositiveDefinite(EinsteinFlowException):
    reason = 'metric_not_positive'


class OrderTooHigh(EinsteinFlowException):
    reason = 'order_too_high'


class NonpositiveTime(EinsteinFlowException):
    reason = 'nonpositive_time'


class CflViolation(EinsteinFlowException):
    reason = 'cfl_violation'


class RunAborted(EinsteinFlowException):
    """A run stopped early; the partial trajectory rides along."""
    reason = 'run_aborted'

    def __init__(self, msg, trajectory=None):
        EinsteinFlowException.__init__(self, msg)
        self.trajectory = trajectory


class SupportEscaped(RunAborted):
    reason = 'support_escaped'


class ValidatorBlowup(RunAborted):
    reason = 'validator_blowup'


class WindowTooSmall(EinsteinFlowException):
    reason = 'window_too_small'


class NonpositiveValues(EinsteinFlowException):
    reason = 'nonpositive_values'


class ConfigParse(EinsteinFlowException):
    reason = 'config_parse'

    def __init__(self, msg, line=None, key=None):
        where = []
        if line is not None:
            where.append('line {}'.format(line))
        if key is not None:
            where.append('key {!r}'.format(key))
        if where:
            msg = '{} ({})'.format(msg, ', '.join(where))
        EinsteinFlowException.__init__(self, msg)
        self.line = line
        self.key = key


def relative_deviation(actual, expected, floor=1e-300):
    """Max-norm distance between two arrays, relative to the larger of them."""
    scale = max(float(abs(expected).max(initial=0.0)),
                float(abs(actual).max(initial=0.0)), floor)
    return float(abs(actual - expected).max(initial=0.0)) / scale
