"""Figures from adiabat CSV reports."""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, render  # noqa: F401
from .io import PlotkitError, SchemaError  # noqa: F401
