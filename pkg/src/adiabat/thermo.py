"""Canonical-ensemble machinery and the two-process comparison.

The zero-polytropic process keeps the system canonical at every point
and conserves the canonical entropy S = ln Z + <E>/T, which defines the
isentropic temperature path T(a).  The adiabatic side is measured from
transported distributions (continuum) or swept discrete states, and the
fluctuation predictions are sqrt(c_a(a, T(a))) * T(a) for the
zero-polytropic process versus sqrt(c_a(a0, T0)) * T(a) for the
adiabatic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaincc, gammaln

from .continuum import (
    advect,
    canonical_distribution,
    continuum_entropy,
    continuum_moments,
)
from .crossings import find_crossings, sweep_adiabatic
from .errors import BracketRangeError, DivergenceError, DomainError, UnsupportedFamilyError
from .microstate import canonical_init
from .numerics import Numerics
from .spectra import (
    ContinuumDos,
    DiscreteSpectrum,
    PowerLaw,
    SpectrumFamily,
    TwoLadder,
    TwoTerm,
    analytic_dos,
    discrete_spectrum,
)

__all__ = [
    "CanonicalEnsemble",
    "ProcessComparison",
    "partition_function",
    "log_partition",
    "canonical_moments",
    "canonical_entropy",
    "heat_capacity",
    "isentropic_temperature",
    "predict_fluctuations",
    "compare_processes",
    "size_scaling_study",
    "scaled_two_term",
]

EnsembleSource = Union[SpectrumFamily, ContinuumDos, DiscreteSpectrum]


@dataclass(frozen=True)
class CanonicalEnsemble:
    """A thermostatted system: spectrum or DOS held at (a, T)."""

    source: EnsembleSource
    a: float
    T: float

    def __post_init__(self):
        if self.T <= 0:
            raise DomainError("temperature must be positive")


def _family_of(source: EnsembleSource):
    if isinstance(source, PowerLaw):
        return TwoTerm(source.c, source.kappa, source.eta, 0.0, 0.0, 0.0)
    if isinstance(source, (TwoTerm, TwoLadder)):
        return source
    if isinstance(source, ContinuumDos) and isinstance(source.family, (TwoTerm, TwoLadder)):
        return source.family
    return None


def _two_term_logz_terms(fam: TwoTerm, a: float, T: float):
    terms = []
    for c, k, eta in ((fam.c1, fam.kappa1, fam.eta1), (fam.c2, fam.kappa2, fam.eta2)):
        if c == 0:
            continue
        n = eta + 1.0
        terms.append((math.log(c) - k * math.log(a) + gammaln(n) + n * math.log(T), n))
    return terms


def _ladder_integrals(fam: TwoLadder, a: float, T: float):
    """Per-ladder (density, x=top/T) with the truncated-exponential moments."""
    tops = (fam.m_a * fam.delta_a * a, fam.m_b * fam.delta_b / a)
    dens = (1.0 / (fam.delta_a * a), a / fam.delta_b)
    return tops, dens


def log_partition(source: EnsembleSource, a: float, T: float,
                  quad_rel_tol: float = 1e-12) -> float:
    """ln Z at (a, T); closed form where the family provides one."""
    if T <= 0:
        raise DomainError("temperature must be positive")
    fam = _family_of(source)
    if isinstance(fam, TwoTerm):
        terms = _two_term_logz_terms(fam, a, T)
        logs = np.array([t[0] for t in terms])
        return float(np.logaddexp.reduce(logs))
    if isinstance(fam, TwoLadder):
        tops, dens = _ladder_integrals(fam, a, T)
        z = sum(d * T * -math.expm1(-t / T) for d, t in zip(dens, tops))
        return math.log(z)
    if isinstance(source, DiscreteSpectrum):
        eps = source.energies(a)
        logg = np.log(source.degeneracies.astype(float))
        shifted = logg - eps / T
        m = float(np.max(shifted))
        return m + math.log(float(np.sum(np.exp(shifted - m))))
    if isinstance(source, ContinuumDos):
        hi = source.support_max(a)
        upper = hi if math.isfinite(hi) else np.inf
        val, _ = quad(lambda e: source.g(e, a) * math.exp(-e / T), 0.0, upper,
                      epsabs=0.0, epsrel=quad_rel_tol, limit=400)
        if not (val > 0 and math.isfinite(val)):
            raise DivergenceError(f"partition integral evaluated to {val!r}")
        return math.log(val)
    raise UnsupportedFamilyError(f"no partition rule for {type(source).__name__}")


def partition_function(ens: CanonicalEnsemble) -> float:
    """Z at (a, T); raises DivergenceError when not finite and positive."""
    z = math.exp(log_partition(ens.source, ens.a, ens.T))
    if not (z > 0 and math.isfinite(z)):
        raise DivergenceError(f"partition function is {z!r} at (a={ens.a}, T={ens.T})")
    return z


def canonical_moments(source: EnsembleSource, a: float, T: float):
    """(mean energy, energy variance) of the canonical ensemble."""
    fam = _family_of(source)
    if isinstance(fam, TwoTerm):
        terms = _two_term_logz_terms(fam, a, T)
        logs = np.array([t[0] for t in terms])
        ns = np.array([t[1] for t in terms])
        p = np.exp(logs - np.logaddexp.reduce(logs))
        mean = T * float(p @ ns)
        second = T * T * float(p @ (ns * (ns + 1.0)))
        return mean, max(second - mean * mean, 0.0)
    if isinstance(fam, TwoLadder):
        tops, dens = _ladder_integrals(fam, a, T)
        z = m1 = m2 = 0.0
        for d, t in zip(dens, tops):
            x = t / T
            ex = math.exp(-x)
            z += d * T * -math.expm1(-x)
            m1 += d * T * T * (1.0 - ex * (1.0 + x))
            m2 += d * T ** 3 * (2.0 - ex * (x * x + 2.0 * x + 2.0))
        mean = m1 / z
        return mean, max(m2 / z - mean * mean, 0.0)
    if isinstance(source, DiscreteSpectrum):
        eps = source.energies(a)
        g = source.degeneracies.astype(float)
        shifted = np.log(g) - eps / T
        m = float(np.max(shifted))
        p = np.exp(shifted - m)
        p /= p.sum()
        mean = float(p @ eps)
        return mean, max(float(p @ (eps * eps)) - mean * mean, 0.0)
    if isinstance(source, ContinuumDos):
        lnz = log_partition(source, a, T)
        hi = source.support_max(a)
        upper = hi if math.isfinite(hi) else np.inf

        def moment(k):
            val, _ = quad(
                lambda e: source.g(e, a) * e ** k * math.exp(-e / T - lnz),
                0.0, upper, epsabs=0.0, epsrel=1e-12, limit=400,
            )
            return val

        mean = moment(1)
        return mean, max(moment(2) - mean * mean, 0.0)
    raise UnsupportedFamilyError(f"no canonical moments for {type(source).__name__}")


def canonical_entropy(source: EnsembleSource, a: float, T: float) -> float:
    """S = ln Z + <E>/T (k_B = 1, no additive constants)."""
    mean, _ = canonical_moments(source, a, T)
    return log_partition(source, a, T) + mean / T


def heat_capacity(ens: CanonicalEnsemble, fd_step_rel: float = 5e-6,
                  cross_check_tol: float = 1e-6) -> float:
    """c_a = dE/dT at fixed a, from Var(E)/T^2, cross-checked against a
    central finite difference of the mean energy."""
    _, var = canonical_moments(ens.source, ens.a, ens.T)
    c_fluct = var / (ens.T * ens.T)
    h = fd_step_rel * ens.T
    e_hi, _ = canonical_moments(ens.source, ens.a, ens.T + h)
    e_lo, _ = canonical_moments(ens.source, ens.a, ens.T - h)
    c_fd = (e_hi - e_lo) / (2.0 * h)
    scale = max(abs(c_fluct), abs(c_fd), 1e-300)
    # Differencing noise floor of the mean-energy evaluations.
    noise = 1e-13 * max(abs(e_hi), abs(e_lo), 1.0) / (2.0 * h)
    if abs(c_fluct - c_fd) > cross_check_tol * scale + noise:
        raise DomainError(
            f"heat-capacity routes disagree: fluctuation {c_fluct}, "
            f"finite-difference {c_fd}"
        )
    return c_fluct


def isentropic_temperature(source: EnsembleSource, a0: float, T0: float, a1: float,
                           bracket_decades: float = 6.0) -> float:
    """Temperature at a1 on the constant-canonical-entropy curve through (a0, T0)."""
    if T0 <= 0:
        raise DomainError("T0 must be positive")
    if a1 == a0:
        return T0
    s0 = canonical_entropy(source, a0, T0)

    def f(T):
        return canonical_entropy(source, a1, T) - s0

    lo = T0 * 10.0 ** -bracket_decades
    hi = T0 * 10.0 ** bracket_decades
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise BracketRangeError(
            f"isentropic temperature not bracketed in [{lo}, {hi}]; "
            "expand bracket_decades"
        )
    return float(brentq(f, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=300))


def predict_fluctuations(source: EnsembleSource, a0: float, T0: float, a1: float):
    """(Delta E zero-polytropic, Delta E adiabatic) at a1: sqrt(c_a) * T with
    c_a taken at the endpoint vs frozen at the initial state."""
    T1 = isentropic_temperature(source, a0, T0, a1)
    c1 = heat_capacity(CanonicalEnsemble(source, a1, T1))
    c0 = heat_capacity(CanonicalEnsemble(source, a0, T0))
    return math.sqrt(c1) * T1, math.sqrt(c0) * T1


# ---------------------------------------------------------------------------
# Process comparison


@dataclass(frozen=True)
class ProcessComparison:
    """Per-checkpoint columns of the adiabatic vs zero-polytropic run."""

    a_path: tuple
    T_path: tuple
    e_zp: tuple
    e_ad: tuple
    de_zp_measured: tuple
    de_zp_predicted: tuple
    de_ad_measured: tuple
    de_ad_predicted: tuple
    s_ad: tuple
    s_zp: tuple
    delta_s_total: float

    COLUMNS = ("a", "T", "E_zp", "E_ad", "dE_zp_measured", "dE_zp_predicted",
               "dE_ad_measured", "dE_ad_predicted", "S_ad", "S_zp")

    def rows(self):
        cols = (self.a_path, self.T_path, self.e_zp, self.e_ad,
                self.de_zp_measured, self.de_zp_predicted,
                self.de_ad_measured, self.de_ad_predicted, self.s_ad, self.s_zp)
        return list(zip(*cols))


def compare_processes(family: SpectrumFamily, a0: float, T0: float,
                      a_path: Sequence[float], numerics: Numerics = Numerics(),
                      mode: str = "auto") -> ProcessComparison:
    """Run both processes from a canonical start and record every column.

    mode 'continuum' transports the initial distribution by the wave
    solver; 'discrete' sweeps the level spectrum through its crossings;
    'auto' picks continuum when a closed-form DOS exists.
    """
    if mode == "auto":
        try:
            analytic_dos(family)
            mode = "continuum"
        except UnsupportedFamilyError:
            mode = "discrete"

    a_path = [float(a) for a in a_path]
    if not a_path or a_path[0] != a0:
        a_path = [a0] + a_path

    c0 = None
    out = {k: [] for k in ("T", "e_zp", "e_ad", "de_zp_m", "de_zp_p",
                           "de_ad_m", "de_ad_p", "s_ad", "s_zp")}

    def record(a, T, e_zp, v_zp, e_ad, v_ad, s_ad, s_zp):
        c_here = heat_capacity(CanonicalEnsemble(source, a, T))
        out["T"].append(T)
        out["e_zp"].append(e_zp)
        out["e_ad"].append(e_ad)
        out["de_zp_m"].append(math.sqrt(v_zp))
        out["de_zp_p"].append(math.sqrt(c_here) * T)
        out["de_ad_m"].append(math.sqrt(v_ad))
        out["de_ad_p"].append(math.sqrt(c0) * T)
        out["s_ad"].append(s_ad)
        out["s_zp"].append(s_zp)

    if mode == "continuum":
        dos = analytic_dos(family)
        source = dos
        initial = canonical_distribution(dos, a0, T0, numerics)
        c0 = heat_capacity(CanonicalEnsemble(source, a0, T0))
        delta_s_total = 0.0
        for a in a_path:
            T = isentropic_temperature(source, a0, T0, a)
            adv = advect(initial, a, numerics)
            e_ad, v_ad = continuum_moments(adv)
            s_ad = continuum_entropy(adv)
            # Measure the zero-polytropic side on the same grid so that
            # quadrature residuals cancel in the comparison columns.
            zp = canonical_distribution(dos, a, T, numerics, grid=adv.grid)
            e_zp, v_zp = continuum_moments(zp)
            record(a, T, e_zp, v_zp, e_ad, v_ad, s_ad,
                   canonical_entropy(source, a, T))
    elif mode == "discrete":
        spectrum = discrete_spectrum(family, (a0, a_path[-1]))
        source = spectrum
        state0 = canonical_init(spectrum, a0, T0)
        c0 = heat_capacity(CanonicalEnsemble(source, a0, T0))
        schedule = find_crossings(spectrum, numerics.detection_tol)
        result = sweep_adiabatic(spectrum, state0, schedule, checkpoints=a_path)
        samples = {s.a: s for s in result.trajectory}
        delta_s_total = result.total_delta_s
        for a in a_path:
            T = isentropic_temperature(source, a0, T0, a)
            s = samples[a]
            e_zp, v_zp = canonical_moments(source, a, T)
            record(a, T, e_zp, v_zp, s.mean_energy, s.energy_variance,
                   s.entropy, canonical_entropy(source, a, T))
    else:
        raise DomainError(f"unknown comparison mode {mode!r}")

    return ProcessComparison(
        a_path=tuple(a_path), T_path=tuple(out["T"]),
        e_zp=tuple(out["e_zp"]), e_ad=tuple(out["e_ad"]),
        de_zp_measured=tuple(out["de_zp_m"]), de_zp_predicted=tuple(out["de_zp_p"]),
        de_ad_measured=tuple(out["de_ad_m"]), de_ad_predicted=tuple(out["de_ad_p"]),
        s_ad=tuple(out["s_ad"]), s_zp=tuple(out["s_zp"]),
        delta_s_total=delta_s_total,
    )


def size_scaling_study(make_family: Callable[[int], SpectrumFamily],
                       n_values: Sequence[int], a0: float, T0: float, a1: float,
                       numerics: Numerics = Numerics()):
    """Relative mean-energy gap between the processes versus system size.

    Returns (rows, slope) where rows are (N, relative gap, measured/predicted
    adiabatic fluctuation ratio) and slope is the log-log fit of gap vs N
    (None when every gap is below 1e-12, the canonical-invariant case).
    """
    rows = []
    for n in n_values:
        fam = make_family(int(n))
        comp = compare_processes(fam, a0, T0, [a1], numerics)
        gap = abs(comp.e_ad[-1] - comp.e_zp[-1]) / abs(comp.e_zp[-1])
        ratio = comp.de_ad_measured[-1] / comp.de_ad_predicted[-1]
        rows.append((int(n), gap, ratio))
    gaps = np.array([r[1] for r in rows])
    if np.all(gaps < 1e-12):
        return rows, None
    slope = float(np.polyfit(np.log([r[0] for r in rows]), np.log(gaps), 1)[0])
    return rows, slope


def scaled_two_term(h1: float, h2: float, c1: float, c2: float, n: int,
                    beta1: float = 0.0, beta2: float = 0.0) -> TwoTerm:
    """TwoTerm family with both exponents scaled by the size proxy N.

    eta_i = N*h_i and kappa_i = c_i*(eta_i + 1), with amplitudes
    exp(beta_i*N)/Gamma(eta_i + 1) giving ln Z_i = N*beta_i - kappa_i ln a
    + (eta_i+1) ln T: mean energy and heat capacity are extensive in N and
    the beta offsets place the component crossover relative to (a, T) =
    (1, 1), so a sweep can be made to traverse it.
    """
    eta1, eta2 = n * h1, n * h2
    return TwoTerm(
        math.exp(beta1 * n - gammaln(eta1 + 1.0)), c1 * (eta1 + 1.0), eta1,
        math.exp(beta2 * n - gammaln(eta2 + 1.0)), c2 * (eta2 + 1.0), eta2,
    )
