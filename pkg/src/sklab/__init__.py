"""Skorokhod M1 tools and Monte Carlo checks for sum-maximum limits of heavy-tailed sequences."""

from sklab.cadlag import CadlagPath
from sklab.errors import ConfigError, DomainError, UnsupportedError
from sklab.limits import LimitSpec, limit_spec_mm11
from sklab.models import MovingMaximaModel, NormingMode
from sklab.pointproc import TimeSpacePointMeasure

__all__ = [
    "CadlagPath",
    "ConfigError",
    "DomainError",
    "LimitSpec",
    "MovingMaximaModel",
    "NormingMode",
    "TimeSpacePointMeasure",
    "UnsupportedError",
    "limit_spec_mm11",
]

__version__ = "0.1.0"
