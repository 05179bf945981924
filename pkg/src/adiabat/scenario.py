"""Scenario configs: INI-style tables parsed into validated run descriptions.

Grammar: one level of section headers with key = value pairs.  Lists are
comma-separated.  Every validation failure carries a stable error code
(parse, unknown-experiment, unknown-family, missing-key, bad-value,
constraint) plus the offending key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .numerics import Numerics
from .spectra import (
    LinearEnsemble,
    OscillatorLadder,
    PowerLaw,
    SpectrumFamily,
    TwoLadder,
    TwoTerm,
)

EXPERIMENTS = ("discrete_sweep", "continuum_advect", "compare",
               "refine_entropy", "size_scaling")

DISCRETE_FAMILIES = ("two_ladder", "linear_ensemble", "oscillator_ladder")
CONTINUUM_FAMILIES = ("power_law", "two_term", "two_ladder")


@dataclass(frozen=True)
class ScalingSpec:
    """Generator parameters for the size-scaling study."""

    n_values: tuple
    h1: float = 1.0
    h2: float = 0.7
    c1: float = 0.1
    c2: float = 0.95
    beta1: float = -1.3
    beta2: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    experiment: str
    spectrum: Optional[SpectrumFamily]
    initial_kind: str
    T0: Optional[float]
    custom_w: Optional[tuple]
    a_start: float
    a_end: float
    checkpoints: tuple
    out_and_back: bool
    numerics: Numerics
    mode: str = "auto"
    m_values: tuple = ()
    scaling: Optional[ScalingSpec] = None
    out_dir: str = ""


class _Section:
    """Typed accessors over one config section with keyed errors."""

    def __init__(self, name, mapping):
        self.name = name
        self.raw = dict(mapping)
        self.seen = set()

    def _get(self, key, required, default):
        self.seen.add(key)
        if key not in self.raw:
            if required:
                raise ConfigError("missing-key", f"[{self.name}] needs key '{key}'")
            return default
        return self.raw[key]

    def text(self, key, required=False, default=None):
        val = self._get(key, required, default)
        return val if val is None else str(val).strip()

    def number(self, key, required=False, default=None):
        val = self._get(key, required, default)
        if val is None or isinstance(val, float):
            return val
        try:
            return float(str(val))
        except ValueError:
            raise ConfigError("bad-value", f"[{self.name}] {key} = {val!r} is not a number")

    def integer(self, key, required=False, default=None):
        val = self._get(key, required, default)
        if val is None or isinstance(val, int):
            return val
        try:
            return int(str(val))
        except ValueError:
            raise ConfigError("bad-value", f"[{self.name}] {key} = {val!r} is not an integer")

    def flag(self, key, default=False):
        val = self._get(key, False, None)
        if val is None:
            return default
        text = str(val).strip().lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise ConfigError("bad-value", f"[{self.name}] {key} = {val!r} is not a boolean")

    def number_list(self, key, required=False, default=()):
        val = self._get(key, required, None)
        if val is None:
            return tuple(default)
        parts = [p for p in str(val).replace(",", " ").split() if p]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError("bad-value", f"[{self.name}] {key} = {val!r} is not a number list")

    def integer_list(self, key, required=False, default=()):
        vals = self.number_list(key, required, default)
        out = []
        for v in vals:
            if v != int(v):
                raise ConfigError("bad-value", f"[{self.name}] {key} holds non-integer {v}")
            out.append(int(v))
        return tuple(out)

    def reject_unknown(self):
        unknown = set(self.raw) - self.seen
        if unknown:
            raise ConfigError(
                "bad-value", f"[{self.name}] unknown key(s): {', '.join(sorted(unknown))}")


def _parse_family(sec: _Section) -> SpectrumFamily:
    kind = sec.text("family", required=True).lower()
    try:
        if kind == "power_law":
            return PowerLaw(sec.number("c", True), sec.number("kappa", True),
                            sec.number("eta", True))
        if kind == "two_term":
            return TwoTerm(sec.number("c1", True), sec.number("kappa1", True),
                           sec.number("eta1", True), sec.number("c2", True),
                           sec.number("kappa2", True), sec.number("eta2", True))
        if kind == "two_ladder":
            return TwoLadder(sec.number("delta_a", True), sec.number("delta_b", True),
                             sec.integer("m_a", True), sec.integer("m_b", True))
        if kind == "linear_ensemble":
            intercepts = sec.number_list("intercepts", True)
            slopes = sec.number_list("slopes", True)
            degener = sec.integer_list("degeneracies", default=())
            return LinearEnsemble(intercepts, slopes, degener)
        if kind == "oscillator_ladder":
            return OscillatorLadder(sec.integer("levels", True),
                                    sec.integer("modes", default=1))
        if kind == "scaled_two_term":
            from .thermo import scaled_two_term

            return scaled_two_term(
                sec.number("h1", True), sec.number("h2", True),
                sec.number("c1", True), sec.number("c2", True),
                sec.integer("n", True),
                sec.number("beta1", default=0.0), sec.number("beta2", default=0.0))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError("constraint", f"[spectrum] invalid family parameters: {exc}")
    raise ConfigError("unknown-family", f"[spectrum] unknown family {kind!r}")


def _family_tag(fam: SpectrumFamily) -> str:
    return {
        PowerLaw: "power_law", TwoTerm: "two_term", TwoLadder: "two_ladder",
        LinearEnsemble: "linear_ensemble", OscillatorLadder: "oscillator_ladder",
    }[type(fam)]


def parse_scenario(text: str, fallback_name: str = "scenario") -> Scenario:
    """Parse and fully validate one scenario document."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("parse", f"malformed config: {exc}")

    sections = {s.lower(): _Section(s.lower(), parser[s]) for s in parser.sections()}

    def section(name):
        return sections.get(name, _Section(name, {}))

    sc = section("scenario")
    name = sc.text("name", default=fallback_name)
    experiment = sc.text("experiment", required=True).lower()
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            "unknown-experiment",
            f"experiment {experiment!r} is not one of {', '.join(EXPERIMENTS)}")
    sc.reject_unknown()

    spectrum = None
    if experiment != "size_scaling":
        if "spectrum" not in sections:
            raise ConfigError("missing-key", "[spectrum] section is required")
        spectrum = _parse_family(section("spectrum"))
        section("spectrum").reject_unknown()
        tag = _family_tag(spectrum)
        if experiment == "discrete_sweep" and tag not in DISCRETE_FAMILIES:
            raise ConfigError(
                "constraint", f"discrete_sweep needs a discrete family, got {tag}")
        if experiment in ("continuum_advect",) and tag not in CONTINUUM_FAMILIES:
            raise ConfigError(
                "constraint", f"continuum_advect needs a closed-form DOS, got {tag}")
        if experiment == "refine_entropy" and tag != "two_ladder":
            raise ConfigError(
                "constraint", f"refine_entropy refines two_ladder, got {tag}")

    ini = section("initial")
    initial_kind = (ini.text("kind", default="canonical") or "canonical").lower()
    if initial_kind not in ("canonical", "uniform", "custom_table"):
        raise ConfigError("bad-value", f"[initial] unknown kind {initial_kind!r}")
    T0 = ini.number("t0", default=None)
    custom_w = ini.number_list("w", default=()) or None
    ini.reject_unknown()
    if initial_kind == "canonical":
        if T0 is None:
            raise ConfigError("missing-key", "[initial] canonical start needs t0")
        if T0 <= 0:
            raise ConfigError("constraint", "[initial] t0 must be > 0")
    if initial_kind == "custom_table" and not custom_w:
        raise ConfigError("missing-key", "[initial] custom_table needs w")

    sw = section("sweep")
    a_start = sw.number("a_start", required=True)
    a_end = sw.number("a_end", required=True)
    if a_start == a_end:
        raise ConfigError("constraint", "[sweep] a_start must differ from a_end")
    checkpoints = sw.number_list("checkpoints", default=())
    lo, hi = min(a_start, a_end), max(a_start, a_end)
    for c in checkpoints:
        if not (lo <= c <= hi):
            raise ConfigError(
                "constraint", f"[sweep] checkpoint {c} outside [{lo}, {hi}]")
    out_and_back = sw.flag("out_and_back", default=False)
    sw.reject_unknown()

    nm = section("numerics")
    try:
        numerics = Numerics(
            ode_rel_tol=nm.number("ode_rel_tol", default=1e-10),
            ode_abs_tol=nm.number("ode_abs_tol", default=1e-12),
            grid_nodes=nm.integer("grid_nodes", default=2048),
            grid_lo_frac=nm.number("grid_lo_frac", default=1e-7),
            tail_mass=nm.number("tail_mass", default=1e-12),
            detection_tol=nm.number("detection_tol", default=1e-9),
            norm_tol=nm.number("norm_tol", default=1e-8),
        )
    except ConfigError:
        raise
    nm.reject_unknown()

    pr = section("process")
    mode = (pr.text("mode", default="auto") or "auto").lower()
    if mode not in ("auto", "continuum", "discrete"):
        raise ConfigError("bad-value", f"[process] unknown mode {mode!r}")
    pr.reject_unknown()

    rf = section("refine")
    m_values = rf.integer_list("m_values", required=(experiment == "refine_entropy"))
    if experiment == "refine_entropy":
        if len(m_values) < 2:
            raise ConfigError("constraint", "[refine] needs at least two m_values")
        if any(m < 1 for m in m_values):
            raise ConfigError("constraint", "[refine] m_values must be >= 1")
    rf.reject_unknown()

    scaling = None
    if experiment == "size_scaling":
        sg = section("scaling")
        n_values = sg.integer_list("n_values", required=True)
        if len(n_values) < 2 or any(n < 1 for n in n_values):
            raise ConfigError("constraint", "[scaling] n_values must be >= 1, at least two")
        scaling = ScalingSpec(
            n_values=n_values,
            h1=sg.number("h1", default=1.0),
            h2=sg.number("h2", default=0.7),
            c1=sg.number("c1", default=0.1),
            c2=sg.number("c2", default=0.95),
            beta1=sg.number("beta1", default=-1.3),
            beta2=sg.number("beta2", default=0.0),
        )
        if not (0 < scaling.h2 <= scaling.h1 <= 1.0):
            raise ConfigError("constraint", "[scaling] needs 0 < h2 <= h1 <= 1")
        sg.reject_unknown()

    ou = section("output")
    out_dir = ou.text("dir", default=name) or name
    ou.reject_unknown()

    known = {"scenario", "spectrum", "initial", "sweep", "numerics",
             "process", "refine", "scaling", "output"}
    stray = set(sections) - known
    if stray:
        raise ConfigError("bad-value", f"unknown section(s): {', '.join(sorted(stray))}")

    scenario = Scenario(
        name=name, experiment=experiment, spectrum=spectrum,
        initial_kind=initial_kind, T0=T0, custom_w=custom_w,
        a_start=a_start, a_end=a_end, checkpoints=checkpoints,
        out_and_back=out_and_back, numerics=numerics, mode=mode,
        m_values=m_values, scaling=scaling, out_dir=out_dir,
    )
    _validate_custom_table(scenario)
    return scenario


def _validate_custom_table(s: Scenario):
    if s.initial_kind != "custom_table" or s.spectrum is None:
        return
    from .spectra import discrete_spectrum

    try:
        spec = discrete_spectrum(s.spectrum, (s.a_start, s.a_end))
    except Exception:
        return
    w = s.custom_w
    if len(w) != len(spec.tracks):
        raise ConfigError(
            "constraint",
            f"[initial] w has {len(w)} entries for {len(spec.tracks)} levels")
    total = sum(g * wi for g, wi in zip(spec.degeneracies.tolist(), w))
    if any(wi < 0 for wi in w) or abs(total - 1.0) > 1e-12:
        raise ConfigError(
            "constraint",
            f"[initial] custom probabilities must be nonnegative with "
            f"sum g_j w_j = 1 (got {total!r})")


def scenario_echo(s: Scenario) -> dict:
    """JSON-ready echo of the scenario for the run manifest."""
    fam = None
    if s.spectrum is not None:
        fam = {"family": _family_tag(s.spectrum)}
        fam.update({k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in s.spectrum.__dict__.items()})
    return {
        "name": s.name,
        "experiment": s.experiment,
        "spectrum": fam,
        "initial": {"kind": s.initial_kind, "T0": s.T0,
                    "w": list(s.custom_w) if s.custom_w else None},
        "sweep": {"a_start": s.a_start, "a_end": s.a_end,
                  "checkpoints": list(s.checkpoints),
                  "out_and_back": s.out_and_back},
        "numerics": {k: getattr(s.numerics, k) for k in (
            "ode_rel_tol", "ode_abs_tol", "grid_nodes", "grid_lo_frac",
            "tail_mass", "detection_tol", "norm_tol")},
        "mode": s.mode,
        "m_values": list(s.m_values),
        "scaling": None if s.scaling is None else {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in s.scaling.__dict__.items()},
        "out_dir": s.out_dir,
    }
