"""Level-crossing detection and the discrete adiabatic sweep.

Between crossings each level carries its probability unchanged; at every
crossing the involved levels equalize.  Crossing locations are found in
closed form for the ladder and linear families and by sign-change
scanning plus bisection for general tracks; tangential contacts (equal
energies without reordering) are refined from local minima of the gap
and fire an equalization too.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ResolutionError
from .microstate import (
    EqualizationEvent,
    ProbabilityState,
    canonical_init,
    entropy,
    equalize,
    moments,
    uniform_init,
)
from .spectra import (
    DiscreteSpectrum,
    LinearEnsemble,
    OscillatorLadder,
    TwoLadder,
    analytic_dos,
    discrete_spectrum,
)

__all__ = [
    "CrossingSchedule",
    "SweepResult",
    "find_crossings",
    "sweep_adiabatic",
    "refine_study",
    "RefineRow",
]


@dataclass(frozen=True)
class CrossingSchedule:
    """Crossing events (a_star, set of track ids), ascending in a_star.

    merged_count tells how many events were formed by tolerance-grouping
    of non-coincident pair crossings (flagged in reports).
    """

    events: tuple
    detection_tol: float
    merged_count: int = 0

    def __post_init__(self):
        stars = [e[0] for e in self.events]
        if any(b < a for a, b in zip(stars, stars[1:])):
            raise DomainError("schedule events must ascend in a_star")


@dataclass(frozen=True)
class TrajectorySample:
    a: float
    entropy: float
    mean_energy: float
    energy_variance: float


@dataclass(frozen=True)
class SweepResult:
    final_state: ProbabilityState
    ledger: tuple
    total_delta_s: float
    trajectory: tuple


# ---------------------------------------------------------------------------
# Detection


def _closed_form_pairs(spectrum: DiscreteSpectrum):
    """Exact pair crossings for ladder/linear families, None otherwise."""
    fam = spectrum.family
    lo, hi = sorted(spectrum.sweep_range)
    if isinstance(fam, OscillatorLadder):
        return []
    if isinstance(fam, TwoLadder):
        by_label = {t.label: t.id for t in spectrum.tracks}
        out = []
        for n in range(1, fam.m_a + 1):
            for m in range(1, fam.m_b + 1):
                a_star = math.sqrt(m * fam.delta_b / (n * fam.delta_a))
                if lo <= a_star <= hi:
                    out.append((a_star, (by_label[f"A{n}"], by_label[f"B{m}"])))
        return out
    if isinstance(fam, LinearEnsemble):
        out = []
        tracks = spectrum.tracks
        a_probe = np.array([lo, hi])
        eps = spectrum.energies(a_probe)
        slopes = (eps[:, 1] - eps[:, 0]) / (hi - lo)
        intercepts = eps[:, 0] - slopes * lo
        for i in range(len(tracks)):
            for j in range(i + 1, len(tracks)):
                dm = slopes[i] - slopes[j]
                if dm == 0.0:
                    continue
                a_star = (intercepts[j] - intercepts[i]) / dm
                if lo <= a_star <= hi:
                    out.append((a_star, (tracks[i].id, tracks[j].id)))
        return out
    return None


def _bisect_sign_change(f: Callable[[float], float], lo: float, hi: float,
                        tol: float) -> float:
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (flo < 0) != (fmid < 0):
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def _scan_pairs(spectrum: DiscreteSpectrum, detection_tol: float,
                resolution: int, max_resolution: int):
    """Sign-change scan with stability check under grid doubling."""
    lo, hi = sorted(spectrum.sweep_range)
    tracks = spectrum.tracks

    def scan(res: int):
        a_grid = np.linspace(lo, hi, res + 1)
        eps = spectrum.energies(a_grid)
        found = []
        for i in range(len(tracks)):
            for j in range(i + 1, len(tracks)):
                d = eps[i] - eps[j]
                gap = lambda a: float(tracks[i].energy(a)) - float(tracks[j].energy(a))
                pair_hits = []
                sign_change = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
                for k in sign_change:
                    pair_hits.append(_bisect_sign_change(
                        gap, float(a_grid[k]), float(a_grid[k + 1]), detection_tol))
                for k in np.nonzero(d == 0.0)[0]:
                    pair_hits.append(float(a_grid[k]))
                # Tangential contacts: refine interior local minima of |d|.
                absd = np.abs(d)
                interior = (
                    (absd[1:-1] <= absd[:-2]) & (absd[1:-1] <= absd[2:])
                    & (np.sign(d[:-2]) == np.sign(d[2:])) & (d[1:-1] != 0.0)
                )
                for k in np.nonzero(interior)[0] + 1:
                    res_min = minimize_scalar(
                        lambda a: abs(gap(a)),
                        bounds=(float(a_grid[k - 1]), float(a_grid[k + 1])),
                        method="bounded",
                        options={"xatol": detection_tol * 0.1},
                    )
                    a_star = float(res_min.x)
                    if abs(gap(a_star)) <= _energy_tol(gap, a_star, detection_tol):
                        pair_hits.append(a_star)
                pair_hits.sort()
                dedup = []
                for a_star in pair_hits:
                    if not dedup or a_star - dedup[-1] > detection_tol:
                        dedup.append(a_star)
                found.extend((a_star, (tracks[i].id, tracks[j].id)) for a_star in dedup)
        return sorted(found)

    prev = scan(resolution)
    res = resolution
    while res < max_resolution:
        res *= 2
        cur = scan(res)
        if len(cur) == len(prev) and all(
            abs(a - b) <= max(detection_tol, 1e-12) and ia == ib
            for (a, ia), (b, ib) in zip(cur, prev)
        ):
            return cur
        prev = cur
    raise ResolutionError(
        f"crossing scan did not stabilize below resolution {max_resolution}; "
        "refine the grid or supply closed-form tracks"
    )


def _energy_tol(gap: Callable[[float], float], a_star: float, detection_tol: float) -> float:
    """Energy closeness bound from local slopes of the gap."""
    h = max(1e-7, abs(a_star) * 1e-7)
    slope = abs(gap(a_star + h) - gap(a_star - h)) / (2 * h)
    return detection_tol * max(slope, 1.0) + 1e-12


def find_crossings(spectrum: DiscreteSpectrum, detection_tol: float = 1e-9,
                   resolution: int = 4096, max_resolution: int = 2 ** 20) -> CrossingSchedule:
    """All level crossings on the sweep interval, grouped into events."""
    if detection_tol <= 0:
        raise DomainError("detection_tol must be positive")
    pairs = _closed_form_pairs(spectrum)
    if pairs is None:
        pairs = _scan_pairs(spectrum, detection_tol, resolution, max_resolution)
    pairs = sorted(pairs, key=lambda e: (e[0], e[1]))

    # Union pair events sharing a level within detection_tol of each other.
    parent = list(range(len(pairs)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[ry] = rx

    last_seen = {}
    for k, (a_star, ids) in enumerate(pairs):
        for i in ids:
            if i in last_seen:
                k_prev = last_seen[i]
                if a_star - pairs[k_prev][0] <= detection_tol:
                    union(k_prev, k)
            last_seen[i] = k

    groups = {}
    for k in range(len(pairs)):
        groups.setdefault(find(k), []).append(k)

    events = []
    merged_count = 0
    for members in groups.values():
        stars = [pairs[k][0] for k in members]
        ids = set()
        for k in members:
            ids.update(pairs[k][1])
        merged = (max(stars) - min(stars)) > 0.0
        if merged:
            merged_count += 1
        events.append((float(np.mean(stars)), frozenset(ids), merged))
    events.sort(key=lambda e: (e[0], tuple(sorted(e[1]))))
    return CrossingSchedule(
        events=tuple((a, ids) for a, ids, _ in events),
        detection_tol=detection_tol,
        merged_count=merged_count,
    )


# ---------------------------------------------------------------------------
# Sweep


def sweep_adiabatic(spectrum: DiscreteSpectrum, initial: ProbabilityState,
                    schedule: CrossingSchedule,
                    checkpoints: Sequence[float] = ()) -> SweepResult:
    """Carry the state from a_start to a_end through the scheduled crossings.

    Between events per-level probabilities are constant; each event pools
    its levels.  Checkpoints are sampled right-continuously (just after
    any event at the same a).
    """
    a_start, a_end = spectrum.sweep_range
    forward = a_end >= a_start
    lo, hi = sorted((a_start, a_end))
    for c in checkpoints:
        if not (lo <= c <= hi):
            raise DomainError(f"checkpoint {c} outside sweep range")

    pos_of = {t.id: i for i, t in enumerate(spectrum.tracks)}
    events = list(schedule.events)
    if not forward:
        events.reverse()
    marks = sorted(checkpoints, reverse=not forward)

    def before(x, y):
        return x <= y if forward else x >= y

    state = initial
    ledger = []
    trajectory = []
    deltas = []
    mi = 0
    for k, (a_star, ids) in enumerate(events):
        while mi < len(marks) and before(marks[mi], a_star) and marks[mi] != a_star:
            trajectory.append(_sample(state, spectrum, marks[mi]))
            mi += 1
        positions = [pos_of[i] if i in pos_of else _missing(i) for i in ids]
        state, ev = equalize(state, positions, a_star)
        ev = dataclasses.replace(ev, level_ids=frozenset(ids),
                                 w_before=_by_id_order(ev, positions, ids))
        ledger.append(ev)
        deltas.append(ev.delta_s)
        # Sample a coincident checkpoint only once every event at this
        # a_star has fired (right-continuous convention).
        last_at_a_star = k + 1 >= len(events) or events[k + 1][0] != a_star
        if last_at_a_star:
            while mi < len(marks) and marks[mi] == a_star:
                trajectory.append(_sample(state, spectrum, marks[mi]))
                mi += 1
    while mi < len(marks):
        trajectory.append(_sample(state, spectrum, marks[mi]))
        mi += 1

    return SweepResult(
        final_state=state,
        ledger=tuple(ledger),
        total_delta_s=math.fsum(deltas),
        trajectory=tuple(trajectory),
    )


def _missing(track_id):
    raise DomainError(f"schedule references unknown track id {track_id}")


def _by_id_order(event: EqualizationEvent, positions, ids) -> tuple:
    """Reorder w_before from sorted-position order to sorted-id order."""
    sorted_pos = sorted(set(positions))
    w_of_pos = dict(zip(sorted_pos, event.w_before))
    pos_of_id = dict(zip(ids, positions))
    return tuple(w_of_pos[pos_of_id[i]] for i in sorted(ids))


def _sample(state: ProbabilityState, spectrum: DiscreteSpectrum, a: float) -> TrajectorySample:
    mean, var = moments(state, spectrum, a)
    return TrajectorySample(a=a, entropy=entropy(state), mean_energy=mean,
                            energy_variance=var)


# ---------------------------------------------------------------------------
# Refinement toward the continuum


@dataclass(frozen=True)
class RefineRow:
    m: int
    spacing: float
    total_delta_s: float
    distance_to_continuum: float


def _triangular_density(centers, weights, h, grid):
    """Probability density from triangular kernels reflected at 0."""
    x = (grid[None, :] - centers[:, None]) / h
    xr = (grid[None, :] + centers[:, None]) / h
    kern = np.clip(1.0 - np.abs(x), 0.0, None) + np.clip(1.0 - np.abs(xr), 0.0, None)
    return weights @ kern / h


def refine_study(make_family: Callable[[int], TwoLadder], m_values: Sequence[int],
                 a_start: float, a_end: float, T0: float,
                 numerics=None, initial_kind: str = "canonical"):
    """Sweep nested refinements and measure entropy production and the
    distance of the smoothed final state to the continuum solution."""
    from .continuum import advect, canonical_distribution
    from .numerics import Numerics

    numerics = numerics or Numerics()
    rows = []
    for m in m_values:
        fam = make_family(int(m))
        spectrum = discrete_spectrum(fam, (a_start, a_end))
        if initial_kind == "canonical":
            state0 = canonical_init(spectrum, a_start, T0)
        elif initial_kind == "uniform":
            state0 = uniform_init(spectrum)
        else:
            raise DomainError(f"unknown initial kind {initial_kind!r}")
        schedule = find_crossings(spectrum, numerics.detection_tol)
        result = sweep_adiabatic(spectrum, state0, schedule)

        eps_final = np.sort(spectrum.energies(a_end))
        # Median nearest-neighbor spacing at the sweep midpoint, where
        # interleaving is generic (ladders can be exactly degenerate at
        # the endpoints).
        a_mid = 0.5 * (a_start + a_end)
        spacing = float(np.median(np.diff(np.sort(spectrum.energies(a_mid))))) \
            if len(spectrum.tracks) > 1 else math.nan

        dos = analytic_dos(fam)
        cont0 = canonical_distribution(dos, a_start, T0, numerics)
        cont1 = advect(cont0, a_end, numerics)
        grid = cont1.grid
        rho_c = cont1.g_values() * cont1.w

        h = 3.0 * float(np.median(np.diff(eps_final)))
        centers = spectrum.energies(a_end)
        weights = spectrum.degeneracies.astype(float) * result.final_state.w
        rho_d = _triangular_density(centers, weights, h, grid)

        from scipy.integrate import simpson

        distance = float(simpson(np.abs(rho_d - rho_c), x=grid))
        rows.append(RefineRow(int(m), spacing, result.total_delta_s, distance))
    return rows
