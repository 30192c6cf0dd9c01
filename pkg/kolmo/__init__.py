"""
kolmo - mean-squared-derivative cost, Kolmogorov kernels and minimizing-movement schemes.
"""
from kolmo.config import ConfigError
from kolmo.grid import GridError
from kolmo.optimal_transport import ConvergenceError
from kolmo.jko_scheme import MissingReferenceError, MonitorError

__all__ = [
    'ConfigError',
    'GridError',
    'ConvergenceError',
    'MissingReferenceError',
    'MonitorError',
]
