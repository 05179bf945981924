"""Solver tuning knobs shared by the continuum and sweep machinery."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class Numerics:
    """Tolerances and grid layout; every field maps to a scenario config key."""

    ode_rel_tol: float = 1e-10
    ode_abs_tol: float = 1e-12
    grid_nodes: int = 2048
    grid_lo_frac: float = 1e-7
    tail_mass: float = 1e-12
    detection_tol: float = 1e-9
    norm_tol: float = 1e-8

    def __post_init__(self):
        for name in ("ode_rel_tol", "ode_abs_tol", "grid_lo_frac", "tail_mass",
                     "detection_tol", "norm_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError("constraint", f"numerics.{name} must be > 0")
        if self.grid_nodes < 16:
            raise ConfigError("constraint", "numerics.grid_nodes must be >= 16")
        if self.grid_lo_frac >= 1:
            raise ConfigError("constraint", "numerics.grid_lo_frac must be < 1")
