"""Quasicontinuum solver: wave velocity, characteristics, and transport.

The probability function w(eps, a) rides along characteristics
d(eps)/da = -u(eps, a), where u = (1/G) * integral_0^eps dG/da.  Each
characteristic conserves the cumulative state count Phi, which is the
module's master invariant: it implies both normalization and entropy
conservation.

Grids are geometric on (0, eps_cut]; the untiled head segment
[0, grid[0]] enters every integral analytically as w(grid[0]) * f(grid[0])
* Phi(grid[0], a), and interpolation extends w constantly below the first
node.  Both conventions contribute O(grid_lo_frac) relative error, far
below the stated tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, simpson, solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.special import gammainccinv

from . import kernels
from .errors import (
    AdiabatError,
    DomainError,
    DomainExitError,
    ExtrapolationError,
    SingularVelocityError,
)
from .numerics import Numerics
from .spectra import ContinuumDos, TwoLadder, TwoTerm

__all__ = [
    "ContinuumDistribution",
    "Characteristic",
    "wave_velocity",
    "trace_characteristic",
    "advect",
    "continuum_entropy",
    "continuum_moments",
    "canonical_distribution",
    "canonical_eps_cut",
    "geometric_grid",
    "log_linear_fit",
]


def geometric_grid(eps_cut: float, n_nodes: int, lo_frac: float) -> np.ndarray:
    """Geometrically spaced nodes on (0, eps_cut]."""
    if eps_cut <= 0:
        raise DomainError("eps_cut must be positive")
    return np.geomspace(lo_frac * eps_cut, eps_cut, n_nodes)


@dataclass(frozen=True)
class ContinuumDistribution:
    """Per-pure-state probability w sampled on an energy grid at parameter a."""

    grid: np.ndarray
    w: np.ndarray
    dos: ContinuumDos
    a: float
    norm_tol: Optional[float] = 1e-8

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).copy()
        w = np.asarray(self.w, dtype=float).copy()
        if grid.ndim != 1 or grid.shape != w.shape:
            raise DomainError("grid and w must be 1-d arrays of equal length")
        if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing and positive")
        if np.any(w < 0):
            raise DomainError("w must be nonnegative")
        grid.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "w", w)
        if self.norm_tol is not None:
            total = _grid_integral(self, None)
            if abs(total - 1.0) > self.norm_tol:
                raise AdiabatError(
                    f"distribution normalization {total!r} deviates from 1 "
                    f"beyond {self.norm_tol}"
                )

    def g_values(self) -> np.ndarray:
        return np.asarray(self.dos.g(self.grid, self.a), dtype=float)


def _grid_integral(dist: ContinuumDistribution, f_values) -> float:
    """integral G * w * f over [0, eps_cut] (f omitted means f = 1).

    Evaluated as integral G w f eps dln(eps), where the geometric grid is
    uniform and composite Simpson keeps its full order.  The head segment
    [0, grid[0]] enters as w(grid[0]) * f(grid[0]) * Phi(grid[0]) with a
    second-order correction from the local log-slopes of w and G.
    """
    gv = dist.g_values()
    integrand = gv * dist.w if f_values is None else gv * dist.w * f_values
    head_f = 1.0 if f_values is None else float(f_values[0])
    eps1 = float(dist.grid[0])
    head = float(dist.w[0]) * head_f * float(dist.dos.phi(eps1, dist.a))
    w1, w2 = float(dist.w[0]), float(dist.w[1])
    g1, g2 = float(gv[0]), float(gv[1])
    if head > 0 and w1 > 0 and w2 > 0 and g1 > 0 and g2 > 0:
        lam = (math.log(w1) - math.log(w2)) / float(dist.grid[1] - dist.grid[0])
        m_loc = (math.log(g2) - math.log(g1)) / (math.log(float(dist.grid[1])) - math.log(eps1))
        if math.isfinite(lam) and math.isfinite(m_loc) and abs(lam * eps1) < 1.0:
            head *= 1.0 + lam * eps1 / (max(m_loc, -0.99) + 2.0)
    return head + float(simpson(integrand * dist.grid, x=np.log(dist.grid)))


def wave_velocity(dos: ContinuumDos, eps: float, a: float,
                  quad_rel_tol: float = 1e-10) -> float:
    """u(eps, a) = (1/G) * integral_0^eps dG/da d(eps')."""
    g_val = float(dos.g(eps, a))
    if g_val <= 0.0 or not math.isfinite(g_val):
        raise SingularVelocityError(
            f"G({eps}, {a}) = {g_val}; the point carries no states"
        )
    if dos.u is not None:
        return float(dos.u(eps, a))
    integral, _ = quad(lambda e: dos.g_da(e, a), 0.0, eps,
                       epsabs=0.0, epsrel=quad_rel_tol, limit=200)
    return integral / g_val


def _trace_generic(dos: ContinuumDos, eps0: np.ndarray, a0: float, a1: float,
                   numerics: Numerics) -> np.ndarray:
    """Characteristic feet for a DOS without a compiled-kernel descriptor."""

    def u_of(eps, a):
        if dos.u is not None:
            return np.asarray(dos.u(eps, a), dtype=float)
        return np.array([
            0.0 if e <= 0 else wave_velocity(dos, float(e), a)
            for e in np.atleast_1d(eps)
        ])

    sol = solve_ivp(
        lambda a, y: -u_of(np.clip(y, 0.0, None), a),
        (a0, a1), np.atleast_1d(eps0).astype(float),
        method="RK45", rtol=numerics.ode_rel_tol, atol=numerics.ode_abs_tol,
    )
    if not sol.success:
        raise AdiabatError(f"characteristic integration failed: {sol.message}")
    return sol.y[:, -1]


def _trace(dos: ContinuumDos, eps0, a0: float, a1: float, numerics: Numerics) -> np.ndarray:
    eps_arr = np.atleast_1d(np.asarray(eps0, dtype=float))
    if dos.kernel is not None:
        kind, params = dos.kernel
        return kernels.trace_batch(kind, params, eps_arr, a0, a1,
                                   numerics.ode_rel_tol, numerics.ode_abs_tol)
    return _trace_generic(dos, eps_arr, a0, a1, numerics)


@dataclass(frozen=True)
class Characteristic:
    """One traced characteristic, sampled along the sweep."""

    a0: float
    eps0: float
    a_samples: np.ndarray
    eps_samples: np.ndarray

    def path(self, a):
        order = np.argsort(self.a_samples)
        interp = PchipInterpolator(self.a_samples[order], self.eps_samples[order],
                                   extrapolate=False)
        return interp(a)


def trace_characteristic(dos: ContinuumDos, eps0: float, a0: float, a1: float,
                         numerics: Numerics = Numerics(), n_samples: int = 65,
                         method: str = "ode") -> Characteristic:
    """Integrate d(eps)/da = -u from (a0, eps0) to a1, sampling the path."""
    hi = dos.support_max(a0)
    if not (0.0 <= eps0 <= hi):
        raise DomainError(f"eps0 = {eps0} outside support [0, {hi}] at a = {a0}")
    a_samples = np.linspace(a0, a1, n_samples)
    if method == "ode":
        eps_path = np.empty(n_samples)
        eps_path[0] = eps0
        for i in range(1, n_samples):
            eps_path[i] = _trace(dos, eps_path[i - 1], a_samples[i - 1],
                                 a_samples[i], numerics)[0]
    elif method == "phi":
        if dos.phi_inverse is None:
            raise DomainError("this DOS has no closed-form Phi inversion")
        phi0 = float(dos.phi(eps0, a0))
        eps_path = np.array([
            eps0 if i == 0 else dos.phi_inverse(phi0, float(a))
            for i, a in enumerate(a_samples)
        ])
    else:
        raise DomainError(f"unknown tracing method {method!r}")

    for a, e in zip(a_samples, eps_path):
        lim = dos.support_max(float(a))
        if e < -1e-12 or e > lim * (1.0 + 1e-9):
            raise DomainExitError(
                f"characteristic left the support (eps = {e}, limit {lim})",
                a_exit=float(a),
            )
    return Characteristic(a0, eps0, a_samples, eps_path)


def advect(initial: ContinuumDistribution, a1: float,
           numerics: Numerics = Numerics(),
           grid: Optional[np.ndarray] = None) -> ContinuumDistribution:
    """Transport the distribution to parameter a1 by backward characteristics.

    w is constant along characteristics: each target node is traced back
    to a0 and assigned the monotone-cubic interpolant of the initial w at
    its foot.  By default the target grid is the image of the initial
    one, so the top node's foot is the initial top; an explicit target
    grid must stay inside the image or the feet extrapolate.
    """
    a0 = initial.a
    if a1 == a0 and grid is None:
        return ContinuumDistribution(initial.grid, initial.w, initial.dos, a0,
                                     norm_tol=initial.norm_tol)
    if grid is not None:
        grid1 = np.asarray(grid, dtype=float)
    else:
        top0 = float(initial.grid[-1])
        if initial.dos.phi_inverse is not None:
            # State-count-exact image of the grid top.
            top1 = float(initial.dos.phi_inverse(float(initial.dos.phi(top0, a0)), a1))
        else:
            top1 = float(_trace(initial.dos, top0, a0, a1, numerics)[0])
        lo_frac = float(initial.grid[0] / initial.grid[-1])
        grid1 = geometric_grid(top1, initial.grid.size, lo_frac)
    feet = _trace(initial.dos, grid1, a1, a0, numerics)

    src_lo, src_hi = float(initial.grid[0]), float(initial.grid[-1])
    overshoot = src_hi * (1.0 + 1e-8)
    if np.any(feet > overshoot):
        worst = float(np.max(feet))
        raise ExtrapolationError(
            f"characteristic foot {worst} beyond the initial grid top {src_hi}; "
            "widen the grid"
        )
    if np.any(feet < -1e-12):
        raise ExtrapolationError("characteristic foot below 0")
    feet = np.minimum(feet, src_hi)
    w1 = _interp_w(initial.grid, initial.w, feet)
    return ContinuumDistribution(grid1, w1, initial.dos, a1, norm_tol=initial.norm_tol)


def _interp_w(grid: np.ndarray, w: np.ndarray, feet: np.ndarray) -> np.ndarray:
    """Monotone cubic interpolation of w at the characteristic feet.

    Strictly positive data is interpolated as ln w, which is exact for
    canonical profiles and keeps positivity; data with zeros falls back
    to direct interpolation clipped at 0.  Feet below the first node (the
    analytic head segment) extrapolate the boundary log-slope.
    """
    below = feet < grid[0]
    core = np.maximum(feet, grid[0])
    if np.all(w > 0):
        lnw = np.log(w)
        out = np.exp(PchipInterpolator(grid, lnw, extrapolate=False)(core))
        if below.any():
            s0 = (lnw[1] - lnw[0]) / (grid[1] - grid[0])
            step = np.clip(s0 * (feet[below] - grid[0]), -0.7, 0.7)
            out[below] = np.exp(lnw[0] + step)
        return out
    out = np.clip(PchipInterpolator(grid, w, extrapolate=False)(core), 0.0, None)
    out[below] = w[0]
    return out


def continuum_entropy(dist: ContinuumDistribution) -> float:
    """S = -integral G w ln w with 0 ln 0 = 0."""
    w = dist.w
    lnw = np.zeros_like(w)
    pos = w > 0
    lnw[pos] = np.log(w[pos])
    return -_grid_integral(dist, lnw)


def continuum_moments(dist: ContinuumDistribution):
    """(mean energy, energy variance) under the density G * w."""
    mean = _grid_integral(dist, dist.grid)
    second = _grid_integral(dist, dist.grid ** 2)
    return mean, max(second - mean * mean, 0.0)


def canonical_eps_cut(dos: ContinuumDos, a: float, T: float, tail_mass: float) -> float:
    """Energy cutoff leaving less than tail_mass canonical probability above it.

    Bounded supports are cut at the tail bound too when it is tighter,
    which keeps every characteristic inside the smooth interior (ladder
    region boundaries are only grazed by states of negligible weight).
    """
    fam = dos.family
    if isinstance(fam, TwoLadder):
        top = float(dos.support_max(a))
        tops = (fam.m_a * fam.delta_a * a, fam.m_b * fam.delta_b / a)
        dens = (1.0 / (fam.delta_a * a), a / fam.delta_b)
        z = sum(d * T * -math.expm1(-t / T) for d, t in zip(dens, tops))

        def tail(eps):
            total = 0.0
            for d, t in zip(dens, tops):
                if eps < t:
                    total += d * T * (math.exp(-eps / T) - math.exp(-t / T))
            return total / z

        if tail(top * (1.0 - 1e-12)) >= tail_mass:
            return top
        lo, hi = 0.0, top
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if tail(mid) > tail_mass:
                lo = mid
            else:
                hi = mid
        return hi
    hi = dos.support_max(a)
    if math.isfinite(hi):
        return float(hi)
    if isinstance(fam, TwoTerm):
        cuts = []
        for c, eta in ((fam.c1, fam.eta1), (fam.c2, fam.eta2)):
            if c == 0:
                continue
            cuts.append(T * float(gammainccinv(eta + 1.0, tail_mass / 2.0)))
        return max(cuts)
    raise DomainError(
        "cannot bound the canonical tail for this DOS; pass eps_cut explicitly"
    )


def canonical_distribution(dos: ContinuumDos, a: float, T: float,
                           numerics: Numerics = Numerics(),
                           eps_cut: Optional[float] = None,
                           grid: Optional[np.ndarray] = None) -> ContinuumDistribution:
    """Canonical w = exp(-eps/T)/Z on the solver grid, normalized on-grid."""
    if T <= 0:
        raise DomainError("temperature must be positive")
    if grid is None:
        if eps_cut is None:
            eps_cut = canonical_eps_cut(dos, a, T, numerics.tail_mass)
        grid = geometric_grid(eps_cut, numerics.grid_nodes, numerics.grid_lo_frac)
    else:
        grid = np.asarray(grid, dtype=float)
    boltzmann = np.exp(-grid / T)
    unnorm = ContinuumDistribution(grid, boltzmann, dos, a, norm_tol=None)
    z = _grid_integral(unnorm, None)
    if not (z > 0 and math.isfinite(z)):
        raise AdiabatError(f"on-grid partition integral is {z!r}")
    return ContinuumDistribution(grid, boltzmann / z, dos, a, norm_tol=numerics.norm_tol)


def uniform_distribution(dos: ContinuumDos, a: float, eps_cut: float,
                         numerics: Numerics = Numerics()) -> ContinuumDistribution:
    """Equal per-pure-state probability over [0, eps_cut] (microcanonical)."""
    grid = geometric_grid(eps_cut, numerics.grid_nodes, numerics.grid_lo_frac)
    n_states = float(dos.phi(eps_cut, a))
    if n_states <= 0:
        raise DomainError("no states below eps_cut")
    w = np.full(grid.size, 1.0 / n_states)
    return ContinuumDistribution(grid, w, dos, a, norm_tol=numerics.norm_tol)


def log_linear_fit(dist: ContinuumDistribution):
    """Least-squares fit ln w = intercept + slope * eps over nodes with w > 0.

    Returns (slope, intercept, max_abs_residual); a canonical distribution
    has slope -1/T and vanishing residual.
    """
    mask = dist.w > 0
    eps = dist.grid[mask]
    lnw = np.log(dist.w[mask])
    design = np.column_stack([eps, np.ones_like(eps)])
    coef, *_ = np.linalg.lstsq(design, lnw, rcond=None)
    resid = lnw - design @ coef
    return float(coef[0]), float(coef[1]), float(np.max(np.abs(resid)))
