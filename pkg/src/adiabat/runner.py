"""Scenario execution: dispatch to the solvers and emit deterministic reports.

Output layout per scenario (fixed names): trajectory.csv, ledger.csv,
distribution_<a>.csv, comparison.csv, scaling.csv, state_initial.csv,
state_final.csv, summary.json, manifest.json.  All data files are
byte-reproducible; the manifest carries the only wall-clock field.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, kernels
from ._csvio import a_slug, fmt, sha256_of, write_csv, write_json
from .continuum import (
    advect,
    canonical_distribution,
    continuum_entropy,
    continuum_moments,
    log_linear_fit,
)
from .crossings import find_crossings, refine_study, sweep_adiabatic
from .errors import AdiabatError, ConfigError, DomainError
from .microstate import ProbabilityState, canonical_init, state_rows, uniform_init
from .numerics import Numerics
from .scenario import Scenario, parse_scenario, scenario_echo
from .spectra import analytic_dos, discrete_spectrum
from .thermo import ProcessComparison, compare_processes, scaled_two_term, size_scaling_study

TRAJECTORY_HEADER = ("a", "S", "E_mean", "E_var")
LEDGER_HEADER = ("a_star", "level_ids", "w_before", "w_after", "delta_s", "merged")
STATE_HEADER = ("level_id", "energy", "degeneracy", "w")
DISTRIBUTION_HEADER = ("epsilon", "G", "w")


@dataclass(frozen=True)
class RunManifest:
    scenario: dict
    version: str
    duration_s: float
    files: dict
    out_dir: str

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "version": self.version,
            "duration_s": self.duration_s,
            "files": self.files,
            "out_dir": self.out_dir,
            "kernel_backend": kernels.BACKEND,
        }


def _initial_state(s: Scenario, spectrum) -> ProbabilityState:
    if s.initial_kind == "canonical":
        return canonical_init(spectrum, s.a_start, s.T0)
    if s.initial_kind == "uniform":
        return uniform_init(spectrum)
    return ProbabilityState(np.asarray(s.custom_w, dtype=float), spectrum.degeneracies)


def _ledger_rows(ledger):
    rows = []
    for ev in ledger:
        ids = sorted(ev.level_ids)
        rows.append((
            ev.a_star,
            ";".join(str(i) for i in ids),
            ";".join(fmt(w) for w in ev.w_before),
            ev.w_after,
            ev.delta_s,
            ev.merged,
        ))
    return rows


def _run_discrete_sweep(s: Scenario, out: Path) -> dict:
    spectrum = discrete_spectrum(s.spectrum, (s.a_start, s.a_end))
    state0 = _initial_state(s, spectrum)
    schedule = find_crossings(spectrum, s.numerics.detection_tol)
    marks = list(s.checkpoints) or [s.a_start, s.a_end]
    result = sweep_adiabatic(spectrum, state0, schedule, checkpoints=marks)

    trajectory = [(t.a, t.entropy, t.mean_energy, t.energy_variance)
                  for t in result.trajectory]
    ledger = list(result.ledger)
    final_state = result.final_state
    total_delta_s = result.total_delta_s
    summary = {
        "experiment": s.experiment,
        "n_events": len(schedule.events),
        "merged_events": schedule.merged_count,
        "total_delta_s": total_delta_s,
    }

    if s.out_and_back:
        back_spec = discrete_spectrum(s.spectrum, (s.a_end, s.a_start))
        back_sched = find_crossings(back_spec, s.numerics.detection_tol)
        back = sweep_adiabatic(back_spec, final_state, back_sched, checkpoints=marks)
        trajectory.extend((t.a, t.entropy, t.mean_energy, t.energy_variance)
                          for t in back.trajectory)
        ledger.extend(back.ledger)
        final_state = back.final_state
        total_delta_s += back.total_delta_s
        l1 = float(spectrum.degeneracies @ np.abs(final_state.w - state0.w))
        summary["round_trip_l1"] = l1
        summary["total_delta_s"] = total_delta_s

    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, trajectory)
    write_csv(out / "ledger.csv", LEDGER_HEADER, _ledger_rows(ledger))
    write_csv(out / "state_initial.csv", STATE_HEADER,
              state_rows(state0, spectrum, s.a_start))
    write_csv(out / "state_final.csv", STATE_HEADER,
              state_rows(final_state, spectrum,
                         s.a_start if s.out_and_back else s.a_end))
    return summary


def _write_distribution(out: Path, dist, tag: str, extra=None):
    g = dist.g_values()
    header = DISTRIBUTION_HEADER if extra is None else DISTRIBUTION_HEADER + (extra[0],)
    rows = zip(dist.grid, g, dist.w) if extra is None else zip(
        dist.grid, g, dist.w, extra[1])
    write_csv(out / f"distribution_{tag}.csv", header, rows)


def _run_continuum_advect(s: Scenario, out: Path) -> dict:
    dos = analytic_dos(s.spectrum)
    if s.initial_kind != "canonical":
        raise ConfigError("constraint",
                          "continuum_advect supports canonical starts only")
    initial = canonical_distribution(dos, s.a_start, s.T0, s.numerics)
    marks = list(s.checkpoints) or [s.a_start, s.a_end]

    trajectory = []
    s0 = continuum_entropy(initial)
    drift_max = 0.0
    for a in marks:
        dist = advect(initial, a, s.numerics)
        mean, var = continuum_moments(dist)
        entropy = continuum_entropy(dist)
        drift_max = max(drift_max, abs(entropy / s0 - 1.0))
        trajectory.append((a, entropy, mean, var))
        _write_distribution(out, dist, a_slug(a))
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, trajectory)

    summary = {
        "experiment": s.experiment,
        "initial_entropy": s0,
        "entropy_drift_max": drift_max,
    }
    if s.out_and_back:
        there = advect(initial, s.a_end, s.numerics)
        back = advect(there, s.a_start, s.numerics)
        summary["round_trip_linf"] = float(np.max(np.abs(back.w - initial.w)))
    return summary


def _run_compare(s: Scenario, out: Path) -> dict:
    from .errors import UnsupportedFamilyError

    mode = s.mode
    if mode == "auto":
        try:
            analytic_dos(s.spectrum)
            mode = "continuum"
        except UnsupportedFamilyError:
            mode = "discrete"
    marks = list(s.checkpoints) or [s.a_start, s.a_end]
    comp = compare_processes(s.spectrum, s.a_start, s.T0, marks,
                             s.numerics, mode=mode)
    write_csv(out / "comparison.csv", ProcessComparison.COLUMNS, comp.rows())

    if mode == "continuum":
        dos = analytic_dos(s.spectrum)
        initial = canonical_distribution(dos, s.a_start, s.T0, s.numerics)
        fits = {}
        for a, T in zip(comp.a_path, comp.T_path):
            adv = advect(initial, a, s.numerics)
            zp = canonical_distribution(dos, a, T, s.numerics, grid=adv.grid)
            _write_distribution(out, adv, a_slug(a), extra=("w_zp", zp.w))
            slope, _, resid = log_linear_fit(adv)
            fits[fmt(float(a))] = {"slope": slope, "max_ln_residual": resid,
                                   "isentropic_T": T}
        summary_fits = fits
    else:
        summary_fits = None

    gaps = [abs(ad - zp) / abs(zp) for ad, zp in zip(comp.e_ad, comp.e_zp)]
    return {
        "experiment": s.experiment,
        "mode": mode,
        "delta_s_total": comp.delta_s_total,
        "max_mean_energy_gap_rel": max(gaps),
        "final_dE_ad_measured": comp.de_ad_measured[-1],
        "final_dE_ad_predicted": comp.de_ad_predicted[-1],
        "final_dE_zp_predicted": comp.de_zp_predicted[-1],
        "log_linear_fits": summary_fits,
    }


def _run_refine_entropy(s: Scenario, out: Path) -> dict:
    fam = s.spectrum
    rows = refine_study(
        lambda m: type(fam)(fam.delta_a / m, fam.delta_b / m, m, m),
        s.m_values, s.a_start, s.a_end, s.T0, s.numerics,
        initial_kind=s.initial_kind if s.initial_kind != "custom_table" else "canonical",
    )
    spacing = np.array([r.spacing for r in rows])
    ds = np.array([r.total_delta_s for r in rows])
    slope = float(np.polyfit(np.log(spacing), np.log(ds), 1)[0]) \
        if np.all(ds > 0) else math.nan
    write_csv(out / "scaling.csv",
              ("m", "spacing", "total_delta_s", "distance_to_continuum", "fitted_slope"),
              [(r.m, r.spacing, r.total_delta_s, r.distance_to_continuum, slope)
               for r in rows])
    return {
        "experiment": s.experiment,
        "fitted_slope": slope,
        "delta_s_strictly_decreasing": bool(np.all(np.diff(ds) < 0)),
        "distance_decreasing": bool(np.all(
            np.diff([r.distance_to_continuum for r in rows]) < 0)),
    }


def _run_size_scaling(s: Scenario, out: Path) -> dict:
    spec = s.scaling
    rows, slope = size_scaling_study(
        lambda n: scaled_two_term(spec.h1, spec.h2, spec.c1, spec.c2, n,
                                  spec.beta1, spec.beta2),
        spec.n_values, s.a_start, s.T0, s.a_end, s.numerics,
    )
    slope_out = math.nan if slope is None else slope
    write_csv(out / "scaling.csv",
              ("n", "rel_energy_gap", "fluctuation_ratio", "fitted_slope"),
              [(n, gap, ratio, slope_out) for n, gap, ratio in rows])
    return {
        "experiment": s.experiment,
        "fitted_slope": slope,
        "largest_gap_n": int(min(rows, key=lambda r: -r[1])[0]),
    }


_EXPERIMENTS = {
    "discrete_sweep": _run_discrete_sweep,
    "continuum_advect": _run_continuum_advect,
    "compare": _run_compare,
    "refine_entropy": _run_refine_entropy,
    "size_scaling": _run_size_scaling,
}


def run_scenario(s: Scenario, out_root: Path) -> RunManifest:
    """Execute one scenario into out_root/<out_dir> and write its manifest."""
    out = Path(out_root) / s.out_dir
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    try:
        summary = _EXPERIMENTS[s.experiment](s, out)
    except AdiabatError as exc:
        raise type(exc)(f"scenario {s.name!r}: {exc}") from exc
    write_json(out / "summary.json", summary)

    files = {
        p.name: sha256_of(p)
        for p in sorted(out.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = RunManifest(
        scenario=scenario_echo(s),
        version=__version__,
        duration_s=time.monotonic() - started,
        files=files,
        out_dir=str(out),
    )
    write_json(out / "manifest.json", manifest.as_dict())
    return manifest


def run_scenario_file(path, out_root) -> RunManifest:
    text = Path(path).read_text(encoding="utf-8")
    scenario = parse_scenario(text, fallback_name=Path(path).stem)
    return run_scenario(scenario, Path(out_root))


def _suite_worker(args):
    path, out_root = args
    manifest = run_scenario_file(path, out_root)
    return manifest.as_dict()


def run_suite(paths: Sequence, out_root, jobs: int = 1):
    """Run many scenario files, at most `jobs` concurrently.

    Returns (results, any_failed); failures are recorded per scenario and
    do not stop the rest.  Output directories must be disjoint.
    """
    paths = [Path(p) for p in paths]
    scenarios = []
    for p in paths:
        scenarios.append(parse_scenario(p.read_text(encoding="utf-8"),
                                        fallback_name=p.stem))
    dirs = [s.out_dir for s in scenarios]
    if len(set(dirs)) != len(dirs):
        raise ConfigError("constraint", "suite scenarios share an output directory")

    results = []
    if jobs <= 1:
        for p in paths:
            results.append(_guarded(p, out_root))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_guarded, p, out_root) for p in paths]
            results = [f.result() for f in futures]

    any_failed = any(r["status"] != "ok" for r in results)
    index = {
        "version": __version__,
        "scenarios": [
            {k: r[k] for k in ("name", "status", "out_dir", "error") if k in r}
            for r in results
        ],
    }
    write_json(Path(out_root) / "index.json", index)
    return results, any_failed


def _guarded(path: Path, out_root) -> dict:
    name = Path(path).stem
    try:
        manifest = run_scenario_file(path, out_root)
        return {"name": manifest.scenario["name"], "status": "ok",
                "out_dir": manifest.out_dir, "manifest": manifest.as_dict()}
    except Exception as exc:  # failures are isolated per scenario
        return {"name": name, "status": "error", "error": str(exc),
                "out_dir": str(Path(out_root) / name)}
