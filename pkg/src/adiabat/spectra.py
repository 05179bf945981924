"""Parametrized spectra: discrete level tracks and continuum densities of states.

Energies, temperatures and the external parameter a are dimensionless
(k_B = 1).  Continuum supports start at energy 0; configurations whose
levels dip below 0 anywhere on the sweep interval are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, UnsupportedFamilyError
from .kernels import FIELD_TWO_LADDER, FIELD_TWO_TERM

__all__ = [
    "PowerLaw",
    "TwoTerm",
    "TwoLadder",
    "LinearEnsemble",
    "OscillatorLadder",
    "SpectrumFamily",
    "LevelTrack",
    "DiscreteSpectrum",
    "ContinuumDos",
    "eval_levels",
    "discrete_spectrum",
    "analytic_dos",
    "dos_of_discrete",
]


# ---------------------------------------------------------------------------
# Built-in families


@dataclass(frozen=True)
class PowerLaw:
    """G(eps, a) = c * a^-kappa * eps^eta, unbounded support."""

    c: float
    kappa: float
    eta: float

    def __post_init__(self):
        if self.c <= 0:
            raise DomainError("PowerLaw needs c > 0")
        if self.eta <= -1:
            raise DomainError("PowerLaw needs eta > -1 for integrability at 0")


@dataclass(frozen=True)
class TwoTerm:
    """Sum of two power laws: G = c1 a^-k1 eps^e1 + c2 a^-k2 eps^e2."""

    c1: float
    kappa1: float
    eta1: float
    c2: float
    kappa2: float
    eta2: float

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0 or self.c1 + self.c2 <= 0:
            raise DomainError("TwoTerm needs c1, c2 >= 0 and not both zero")
        if self.eta1 <= -1 or self.eta2 <= -1:
            raise DomainError("TwoTerm needs eta > -1 in both terms")


@dataclass(frozen=True)
class TwoLadder:
    """Two interleaved ladders: eps = n*delta_a*a (n=1..m_a) and m*delta_b/a."""

    delta_a: float
    delta_b: float
    m_a: int
    m_b: int

    def __post_init__(self):
        if self.delta_a <= 0 or self.delta_b <= 0:
            raise DomainError("TwoLadder needs positive level spacings")
        if self.m_a < 1 or self.m_b < 1:
            raise DomainError("TwoLadder needs at least one level per ladder")


@dataclass(frozen=True)
class LinearEnsemble:
    """Straight-line tracks eps_j(a) = intercepts[j] + slopes[j] * a."""

    intercepts: tuple
    slopes: tuple
    degeneracies: tuple = ()

    def __post_init__(self):
        if len(self.intercepts) != len(self.slopes):
            raise DomainError("LinearEnsemble needs matching intercepts and slopes")
        if self.degeneracies and len(self.degeneracies) != len(self.slopes):
            raise DomainError("LinearEnsemble degeneracies length mismatch")


@dataclass(frozen=True)
class OscillatorLadder:
    """Oscillator levels eps_n(a) = a*(n + modes/2), n = 0..levels-1,
    with the usual multimode degeneracy C(n+modes-1, modes-1)."""

    levels: int
    modes: int = 1

    def __post_init__(self):
        if self.levels < 1 or self.modes < 1:
            raise DomainError("OscillatorLadder needs levels >= 1 and modes >= 1")


SpectrumFamily = Union[PowerLaw, TwoTerm, TwoLadder, LinearEnsemble, OscillatorLadder]


# ---------------------------------------------------------------------------
# Discrete representation


@dataclass(frozen=True)
class LevelTrack:
    """One parametrized level: id, energy function a -> eps(a), degeneracy."""

    id: int
    energy: Callable[[float], float]
    degeneracy: int
    label: str = ""

    def __post_init__(self):
        if self.degeneracy < 1:
            raise DomainError(f"track {self.id}: degeneracy must be >= 1")


def _probe_grid(a_start: float, a_end: float, n: int = 65) -> np.ndarray:
    return np.linspace(a_start, a_end, n)


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Ordered level tracks over a sweep interval.

    Tracks are reordered at construction so energies ascend at a_start
    (ties keep insertion order); ids must be unique.  Energies are probed
    on the sweep interval and must stay finite and nonnegative.
    """

    tracks: tuple
    sweep_range: tuple
    family: Optional[SpectrumFamily] = None

    def __post_init__(self):
        ids = [t.id for t in self.tracks]
        if len(set(ids)) != len(ids):
            raise DomainError("track ids must be unique")
        a_start, a_end = self.sweep_range
        if self.tracks:
            e0 = np.array([float(t.energy(a_start)) for t in self.tracks])
            order = np.argsort(e0, kind="stable")
            object.__setattr__(self, "tracks", tuple(self.tracks[i] for i in order))
            probe = _probe_grid(a_start, a_end)
            for t in self.tracks:
                vals = np.asarray(t.energy(probe), dtype=float)
                if not np.all(np.isfinite(vals)):
                    raise DomainError(f"track {t.id}: energy not finite on sweep interval")
                if np.any(vals < 0):
                    raise DomainError(
                        f"track {t.id}: negative energy on sweep interval; "
                        "supports start at 0"
                    )

    @property
    def degeneracies(self) -> np.ndarray:
        return np.array([t.degeneracy for t in self.tracks], dtype=np.int64)

    def index_of(self, track_id: int) -> int:
        for i, t in enumerate(self.tracks):
            if t.id == track_id:
                return i
        raise DomainError(f"unknown level id {track_id}")

    def energies(self, a) -> np.ndarray:
        """Energies of all tracks at parameter a (vectorized over a)."""
        a_arr = np.asarray(a, dtype=float)
        out = np.empty((len(self.tracks),) + a_arr.shape)
        for i, t in enumerate(self.tracks):
            out[i] = t.energy(a_arr)
        return out


def eval_levels(spectrum: DiscreteSpectrum, a: float):
    """(id, energy, degeneracy) for every track at parameter a."""
    lo, hi = min(spectrum.sweep_range), max(spectrum.sweep_range)
    if not (lo <= a <= hi):
        raise DomainError(f"a = {a} outside sweep range [{lo}, {hi}]")
    out = []
    for t in spectrum.tracks:
        e = float(t.energy(a))
        if not math.isfinite(e):
            raise DomainError(f"track {t.id}: non-finite energy at a = {a}")
        out.append((t.id, e, t.degeneracy))
    return out


def discrete_spectrum(family: SpectrumFamily, sweep_range) -> DiscreteSpectrum:
    """Instantiate the discrete level tracks of a ladder-type family."""
    a_start, a_end = sweep_range
    tracks = []
    if isinstance(family, TwoLadder):
        for n in range(1, family.m_a + 1):
            tracks.append(LevelTrack(
                id=len(tracks),
                energy=(lambda a, n=n, d=family.delta_a: n * d * np.asarray(a, dtype=float)),
                degeneracy=1,
                label=f"A{n}",
            ))
        for m in range(1, family.m_b + 1):
            tracks.append(LevelTrack(
                id=len(tracks),
                energy=(lambda a, m=m, d=family.delta_b: m * d / np.asarray(a, dtype=float)),
                degeneracy=1,
                label=f"B{m}",
            ))
    elif isinstance(family, LinearEnsemble):
        degs = family.degeneracies or (1,) * len(family.slopes)
        for j, (b, m, g) in enumerate(zip(family.intercepts, family.slopes, degs)):
            tracks.append(LevelTrack(
                id=j,
                energy=(lambda a, b=float(b), m=float(m): b + m * np.asarray(a, dtype=float)),
                degeneracy=int(g),
                label=f"L{j}",
            ))
    elif isinstance(family, OscillatorLadder):
        half = family.modes / 2.0
        for n in range(family.levels):
            tracks.append(LevelTrack(
                id=n,
                energy=(lambda a, s=n + half: s * np.asarray(a, dtype=float)),
                degeneracy=math.comb(n + family.modes - 1, family.modes - 1),
                label=f"n{n}",
            ))
    else:
        raise UnsupportedFamilyError(
            f"{type(family).__name__} has no discrete level representation"
        )
    return DiscreteSpectrum(tuple(tracks), (float(a_start), float(a_end)), family=family)


# ---------------------------------------------------------------------------
# Continuum representation


@dataclass(frozen=True)
class ContinuumDos:
    """Density of pure states per unit energy, with cumulative count.

    g(eps, a) >= 0 on the support [0, support_max(a)]; phi(eps, a) is the
    cumulative count from 0; g_da its a-derivative at fixed eps.  An
    unbounded support is marked by support_max returning math.inf.
    Optional hooks carry closed forms: `kernel` is the (kind, params)
    descriptor of the compiled tracer fast path, `u` the closed-form wave
    velocity, `phi_inverse` solves phi(eps, a) = y for eps.
    """

    g: Callable
    g_da: Callable
    phi: Callable
    support_max: Callable[[float], float]
    kernel: Optional[tuple] = None
    u: Optional[Callable] = None
    phi_inverse: Optional[Callable] = None
    family: Optional[SpectrumFamily] = None


def _pow_expr(c: float, kappa: float, eta: float, eps, a):
    """c * a^-kappa * eps^eta evaluated in log space (large-eta safe)."""
    eps_arr = np.asarray(eps, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    shape = np.broadcast(eps_arr, a_arr).shape
    ee = np.broadcast_to(eps_arr, shape)
    aa = np.broadcast_to(a_arr, shape)
    out = np.zeros(shape)
    pos = ee > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(math.log(c) - kappa * np.log(aa[pos]) + eta * np.log(ee[pos]))
    if eta == 0:
        out[~pos] = np.exp(math.log(c) - kappa * np.log(aa[~pos]))
    elif eta < 0:
        out[~pos] = np.inf
    if np.ndim(eps) == 0 and np.ndim(a) == 0:
        return float(out)
    return out


def _two_term_eval(fam: TwoTerm, eps, a, da_weight: bool = False):
    """G or (integral of dG/da) for a sum of power laws."""
    terms = []
    for c, k, e in ((fam.c1, fam.kappa1, fam.eta1), (fam.c2, fam.kappa2, fam.eta2)):
        if c == 0:
            continue
        if da_weight:
            # integral_0^eps dG/da = -(k/a) * c a^-k eps^(e+1)/(e+1)
            terms.append(-(k / np.asarray(a, dtype=float))
                         * _pow_expr(c, k, e + 1.0, eps, a) / (e + 1.0))
        else:
            terms.append(_pow_expr(c, k, e, eps, a))
    return sum(terms)


def _generic_phi_inverse(phi: Callable, support_max: Callable):
    """Monotone inversion of phi(., a) by bracketed root search in log eps."""
    from scipy.optimize import brentq

    def inverse(y: float, a: float) -> float:
        if y < 0:
            raise DomainError("phi_inverse needs y >= 0")
        if y == 0:
            return 0.0
        hi = support_max(a)
        if not math.isfinite(hi):
            hi = 1.0
            while phi(hi, a) < y:
                hi *= 4.0
                if hi > 1e300:
                    raise DomainError("phi_inverse: no finite bracket")
        lo = hi * 1e-16
        while phi(lo, a) > y:
            lo *= 1e-4
            if lo < 1e-300:
                return 0.0
        f = lambda t: math.log(max(phi(math.exp(t), a), 1e-320)) - math.log(y)
        t = brentq(f, math.log(lo), math.log(hi), xtol=1e-15, rtol=8.9e-16)
        return math.exp(t)

    return inverse


def analytic_dos(family: SpectrumFamily) -> ContinuumDos:
    """Exact closed-form DOS for PowerLaw, TwoTerm, and TwoLadder families."""
    if isinstance(family, PowerLaw):
        family = TwoTerm(family.c, family.kappa, family.eta, 0.0, 0.0, 0.0)
    if isinstance(family, TwoTerm):
        fam = family
        n1, n2 = fam.eta1 + 1.0, fam.eta2 + 1.0

        def g(eps, a):
            return _two_term_eval(fam, eps, a)

        def g_da(eps, a):
            total = 0.0
            for c, k, e in ((fam.c1, fam.kappa1, fam.eta1), (fam.c2, fam.kappa2, fam.eta2)):
                if c == 0:
                    continue
                total = total + (-(k / np.asarray(a, dtype=float))) * _pow_expr(c, k, e, eps, a)
            return total

        def phi(eps, a):
            total = 0.0
            for c, k, e in ((fam.c1, fam.kappa1, fam.eta1), (fam.c2, fam.kappa2, fam.eta2)):
                if c == 0:
                    continue
                total = total + _pow_expr(c, k, e + 1.0, eps, a) / (e + 1.0)
            return total

        def u(eps, a):
            gv = g(eps, a)
            return _two_term_eval(fam, eps, a, da_weight=True) / gv

        params = np.array([fam.c1, fam.kappa1, fam.eta1, fam.c2, fam.kappa2, fam.eta2])
        inverse = None
        if fam.c2 == 0.0:
            def inverse(y, a):  # noqa: E731 - closed form beats root search
                if y <= 0:
                    return 0.0
                return math.exp(
                    (math.log(y) + math.log(n1) - math.log(fam.c1)
                     + fam.kappa1 * math.log(a)) / n1
                )
        else:
            inverse = _generic_phi_inverse(phi, lambda a: math.inf)

        return ContinuumDos(
            g=g, g_da=g_da, phi=phi,
            support_max=lambda a: math.inf,
            kernel=(FIELD_TWO_TERM, params),
            u=u, phi_inverse=inverse, family=family,
        )

    if isinstance(family, TwoLadder):
        fam = family
        da_, db_ = fam.delta_a, fam.delta_b
        ma, mb = fam.m_a, fam.m_b

        def g(eps, a):
            eps_arr = np.asarray(eps, dtype=float)
            a_arr = np.asarray(a, dtype=float)
            val = ((eps_arr <= ma * da_ * a_arr) / (da_ * a_arr)
                   + (eps_arr <= mb * db_ / a_arr) * a_arr / db_)
            return float(val) if np.ndim(eps) == 0 and np.ndim(a) == 0 else val

        def g_da(eps, a):
            eps_arr = np.asarray(eps, dtype=float)
            a_arr = np.asarray(a, dtype=float)
            val = ((eps_arr <= ma * da_ * a_arr) * (-1.0 / (da_ * a_arr ** 2))
                   + (eps_arr <= mb * db_ / a_arr) / db_)
            return float(val) if np.ndim(eps) == 0 and np.ndim(a) == 0 else val

        def phi(eps, a):
            eps_arr = np.asarray(eps, dtype=float)
            a_arr = np.asarray(a, dtype=float)
            val = (np.minimum(eps_arr, ma * da_ * a_arr) / (da_ * a_arr)
                   + np.minimum(eps_arr, mb * db_ / a_arr) * a_arr / db_)
            return float(val) if np.ndim(eps) == 0 and np.ndim(a) == 0 else val

        def u(eps, a):
            eps_arr = np.asarray(eps, dtype=float)
            a_arr = np.asarray(a, dtype=float)
            in_a = eps_arr <= ma * da_ * a_arr
            in_b = eps_arr <= mb * db_ / a_arr
            gv = in_a / (da_ * a_arr) + in_b * a_arr / db_
            dphi = in_a * (-eps_arr / (da_ * a_arr ** 2)) + in_b * eps_arr / db_
            val = np.where(gv > 0, dphi / np.where(gv > 0, gv, 1.0), 0.0)
            return float(val) if np.ndim(eps) == 0 and np.ndim(a) == 0 else val

        params = np.array([da_, db_, float(ma), float(mb)])
        return ContinuumDos(
            g=g, g_da=g_da, phi=phi,
            support_max=lambda a: max(ma * da_ * a, mb * db_ / a),
            kernel=(FIELD_TWO_LADDER, params),
            u=u,
            phi_inverse=_generic_phi_inverse(phi, lambda a: max(ma * da_ * a, mb * db_ / a)),
            family=family,
        )

    raise UnsupportedFamilyError(
        f"{type(family).__name__} has no closed-form density of states"
    )


# ---------------------------------------------------------------------------
# Kernel-smoothed empirical DOS (diagnostics)


def _triangular_cdf(t):
    """CDF of the unit triangular kernel on [-1, 1]."""
    t = np.asarray(t, dtype=float)
    below = np.clip(t, -1.0, 0.0)
    above = np.clip(t, 0.0, 1.0)
    return np.where(
        t <= 0.0,
        0.5 * (1.0 + below) ** 2,
        1.0 - 0.5 * (1.0 - above) ** 2,
    )


def dos_of_discrete(spectrum: DiscreteSpectrum, a: float, bandwidth: Optional[float] = None) -> ContinuumDos:
    """Triangular-kernel smoothing of the discrete spectrum.

    Kernels are reflected at eps = 0 so the total count is exactly the
    number of pure states for any bandwidth.  Diagnostics only; g_da is a
    central finite difference in a.
    """
    if not spectrum.tracks:
        raise DomainError("cannot smooth an empty spectrum")
    if bandwidth is None:
        eps = np.sort(spectrum.energies(a))
        if eps.size < 2:
            bandwidth = max(3.0 * abs(float(eps[0])), 1.0)
        else:
            bandwidth = 3.0 * float(np.median(np.diff(eps)))
            if bandwidth <= 0:
                bandwidth = max(3.0 * float(np.median(eps)), 1.0)
    if bandwidth <= 0:
        raise DomainError("bandwidth must be positive")
    h = float(bandwidth)
    degs = spectrum.degeneracies.astype(float)

    def g(eps, a_):
        eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
        centers = spectrum.energies(a_)
        x = (eps_arr[None, :] - centers[:, None]) / h
        xr = (eps_arr[None, :] + centers[:, None]) / h
        kern = np.clip(1.0 - np.abs(x), 0.0, None) + np.clip(1.0 - np.abs(xr), 0.0, None)
        val = degs @ kern / h
        return float(val[0]) if np.ndim(eps) == 0 else val

    def phi(eps, a_):
        eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
        centers = spectrum.energies(a_)
        x = (eps_arr[None, :] - centers[:, None]) / h
        xr = (eps_arr[None, :] + centers[:, None]) / h
        val = degs @ (_triangular_cdf(x) + _triangular_cdf(xr) - 1.0)
        val = np.where(eps_arr <= 0.0, 0.0, val)
        return float(val[0]) if np.ndim(eps) == 0 else val

    def g_da(eps, a_):
        step = 1e-5 * max(abs(a_), 1.0)
        return (g(eps, a_ + step) - g(eps, a_ - step)) / (2.0 * step)

    def support_max(a_):
        return float(np.max(spectrum.energies(a_))) + h

    return ContinuumDos(g=g, g_da=g_da, phi=phi, support_max=support_max,
                        family=spectrum.family)
