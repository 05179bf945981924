"""Probability state over a discrete spectrum and the equalization rule.

w_j is the probability of one pure state of level j (not a density);
normalization is sum_j g_j * w_j = 1.  At a level crossing the listed
levels pool their probability to the degeneracy-weighted mean, which is
the microcanonical distribution over the degenerate subspace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateTemperatureError, DomainError
from .spectra import DiscreteSpectrum

__all__ = [
    "ProbabilityState",
    "EqualizationEvent",
    "canonical_init",
    "uniform_init",
    "equalize",
    "entropy",
    "moments",
    "state_rows",
]

_NORM_ATOL = 1e-12


@dataclass(frozen=True)
class ProbabilityState:
    """Per-pure-state probabilities w_j with the level degeneracies g_j."""

    w: np.ndarray
    degeneracies: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).copy()
        g = np.asarray(self.degeneracies, dtype=np.int64).copy()
        if w.shape != g.shape or w.ndim != 1:
            raise DomainError("w and degeneracies must be 1-d arrays of equal length")
        if np.any(w < 0):
            raise DomainError("probabilities must be nonnegative")
        if np.any(g < 1):
            raise DomainError("degeneracies must be >= 1")
        total = float(g @ w)
        if abs(total - 1.0) > _NORM_ATOL:
            raise DomainError(f"sum g_j w_j = {total!r} is not 1 within {_NORM_ATOL}")
        w.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "degeneracies", g)

    def total(self) -> float:
        return float(self.degeneracies @ self.w)


@dataclass(frozen=True)
class EqualizationEvent:
    """Record of one crossing: the pooled levels and the entropy step."""

    a_star: float
    level_ids: frozenset
    w_before: tuple
    w_after: float
    delta_s: float
    merged: bool = False


def canonical_init(spectrum: DiscreteSpectrum, a: float, T: float) -> ProbabilityState:
    """Gibbs state w_j = exp(-eps_j/T) / Z with Z = sum_k g_k exp(-eps_k/T)."""
    if T <= 0:
        raise DomainError("temperature must be positive")
    eps = spectrum.energies(a)
    g = spectrum.degeneracies.astype(float)
    with np.errstate(over="raise"):
        weights = np.exp(-eps / T)
    z = float(g @ weights)
    if z == 0.0 or not np.isfinite(z):
        raise DegenerateTemperatureError(
            f"all Boltzmann weights underflow at T = {T}; raise T or shift energies"
        )
    return ProbabilityState(weights / z, spectrum.degeneracies)


def uniform_init(spectrum: DiscreteSpectrum) -> ProbabilityState:
    """Equal per-pure-state probability over all levels (microcanonical)."""
    g = spectrum.degeneracies
    n = int(g.sum())
    if n == 0:
        raise DomainError("empty spectrum")
    return ProbabilityState(np.full(len(g), 1.0 / n), g)


def entropy(state: ProbabilityState) -> float:
    """Gibbs entropy S = -sum_j g_j w_j ln w_j with 0 ln 0 = 0."""
    w = state.w
    g = state.degeneracies.astype(float)
    pos = w > 0
    return float(-(g[pos] * w[pos]) @ np.log(w[pos]))


def equalize(state: ProbabilityState, level_ids: Iterable[int], a_star: float):
    """Pool the listed levels to their degeneracy-weighted mean probability.

    Returns (new_state, event).  level_ids index the state's level
    ordering.  Already-equal probabilities are returned unchanged, making
    the operation exactly idempotent.
    """
    ids = sorted(set(int(i) for i in level_ids))
    if len(ids) < 2:
        raise DomainError("equalization needs at least two levels")
    n = state.w.size
    for i in ids:
        if i < 0 or i >= n:
            raise DomainError(f"unknown level id {i}")
    idx = np.array(ids, dtype=np.int64)
    w_sel = state.w[idx]
    g_sel = state.degeneracies[idx].astype(float)
    w_before = tuple(float(v) for v in w_sel)

    if np.all(w_sel == w_sel[0]):
        event = EqualizationEvent(a_star, frozenset(ids), w_before, float(w_sel[0]), 0.0)
        return state, event

    pooled = float(g_sel @ w_sel) / float(g_sel.sum())
    new_w = np.array(state.w)
    new_w[idx] = pooled

    # delta S = sum g_i w_i ln(w_i / pooled), nonnegative by concavity;
    # clamp the sub-ulp negatives roundoff can produce.
    pos = w_sel > 0
    delta_s = float((g_sel[pos] * w_sel[pos]) @ np.log(w_sel[pos] / pooled))
    if delta_s < 0.0:
        if delta_s < -1e-10:
            raise AssertionError(f"entropy decreased by {delta_s} in equalization")
        delta_s = 0.0

    new_state = ProbabilityState(new_w, state.degeneracies)
    event = EqualizationEvent(a_star, frozenset(ids), w_before, pooled, delta_s)
    return new_state, event


def moments(state: ProbabilityState, spectrum: DiscreteSpectrum, a: float):
    """(mean energy, energy variance) of the state at parameter a."""
    if state.w.size != len(spectrum.tracks):
        raise DomainError("state and spectrum have different level counts")
    eps = spectrum.energies(a)
    gw = state.degeneracies.astype(float) * state.w
    mean = float(gw @ eps)
    var = float(gw @ (eps * eps)) - mean * mean
    return mean, max(var, 0.0)


def state_rows(state: ProbabilityState, spectrum: DiscreteSpectrum, a: float):
    """CSV rows (level id, energy, degeneracy, w) in spectrum order."""
    eps = spectrum.energies(a)
    return [
        (t.id, float(eps[i]), t.degeneracy, float(state.w[i]))
        for i, t in enumerate(spectrum.tracks)
    ]
