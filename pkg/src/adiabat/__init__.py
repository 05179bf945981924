"""Adiabatic vs zero-polytropic process simulator."""

__version__ = "0.1.0"

from .errors import AdiabatError, ConfigError  # noqa: F401
from .numerics import Numerics  # noqa: F401
