"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  Criteria 3-9 consume
the scenario suite under scenarios/, executed once per session through
the public CLI-level runner.
"""

import csv
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from adiabat import kernels
from adiabat.continuum import trace_characteristic, wave_velocity
from adiabat.crossings import find_crossings, sweep_adiabatic
from adiabat.microstate import ProbabilityState, canonical_init, equalize
from adiabat.numerics import Numerics
from adiabat.runner import run_suite
from adiabat.spectra import (
    LinearEnsemble,
    OscillatorLadder,
    PowerLaw,
    TwoLadder,
    TwoTerm,
    analytic_dos,
    discrete_spectrum,
)
from adiabat.thermo import CanonicalEnsemble, canonical_moments, heat_capacity

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def _report(criterion: int, ok: bool, detail: str):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="session")
def suite_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    paths = sorted(SCENARIO_DIR.glob("*.ini"))
    started = time.monotonic()
    results, failed = run_suite(paths, root, jobs=1)
    elapsed = time.monotonic() - started
    assert not failed, f"scenario suite failed: {results}"
    return {"root": root, "results": results, "elapsed": elapsed, "paths": paths}


def _summary(suite, name):
    return json.loads((suite["root"] / name / "summary.json").read_text())


def test_criterion_1_wave_velocity_oracle():
    started = time.monotonic()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        c = rng.uniform(0.2, 3.0)
        kappa = rng.uniform(0.1, 4.0)
        eta = rng.uniform(-0.5, 3.0)
        eps, a = rng.uniform(0.05, 20.0), rng.uniform(0.3, 4.0)
        dos = analytic_dos(PowerLaw(c, kappa, eta))
        expected = -kappa * eps / ((eta + 1.0) * a)
        got = wave_velocity(dos, eps, a)
        worst = max(worst, abs(got / expected - 1.0))
    elapsed = time.monotonic() - started
    _report(1, worst < 1e-8 and elapsed < 1.0,
            f"max rel deviation {worst:.2e} over 100 probes in {elapsed:.2f}s")


def test_criterion_2_phi_conservation():
    started = time.monotonic()
    num = Numerics()
    worst_phi = 0.0
    worst_route = 0.0
    for fam in (PowerLaw(0.5, 3.0, 2.0), PowerLaw(1.0, 1.0, 0.0),
                TwoTerm(1.0, 2.0, 1.0, 0.5, 1.0, 0.5),
                TwoTerm(0.7, 1.5, 0.5, 1.2, 0.5, 2.0)):
        dos = analytic_dos(fam)
        for eps0 in (0.4, 1.3, 6.0):
            ode = trace_characteristic(dos, eps0, 1.0, 4.0, num)
            phi0 = dos.phi(eps0, 1.0)
            for a, e in zip(ode.a_samples, ode.eps_samples):
                worst_phi = max(worst_phi, abs(dos.phi(e, a) / phi0 - 1.0))
            inv = trace_characteristic(dos, eps0, 1.0, 4.0, num, method="phi")
            worst_route = max(worst_route, float(np.max(
                np.abs(ode.eps_samples / inv.eps_samples - 1.0))))
    elapsed = time.monotonic() - started
    _report(2, worst_phi < 1e-8 and worst_route < 1e-6 and elapsed < 10.0,
            f"Phi drift {worst_phi:.2e}, route gap {worst_route:.2e} "
            f"across a 4x sweep in {elapsed:.2f}s")


def test_criterion_3_canonical_invariance(suite_run):
    fits = _summary(suite_run, "canonical_invariance")["log_linear_fits"]
    kappa, eta, T0, a0 = 2.0, 1.0, 1.0, 1.0
    worst_resid = 0.0
    worst_slope = 0.0
    for fit in fits.values():
        a = fit["isentropic_T"] ** ((eta + 1.0) / kappa) * a0  # invert T(a)
        T_expected = T0 * (a / a0) ** (kappa / (eta + 1.0))
        worst_resid = max(worst_resid, fit["max_ln_residual"])
        worst_slope = max(worst_slope, abs(-1.0 / fit["slope"] / T_expected - 1.0))
    witness = _summary(suite_run, "two_term_witness")["log_linear_fits"]
    final = max(witness.items(), key=lambda kv: float(kv[0]))[1]
    ok = (worst_resid < 1e-6 and worst_slope < 1e-6
          and final["max_ln_residual"] > 1e-3 and suite_run["elapsed"] < 30.0)
    _report(3, ok,
            f"ln-residual {worst_resid:.2e}, slope gap {worst_slope:.2e}, "
            f"witness residual {final['max_ln_residual']:.2e}")


def test_criterion_4_entropy_laws(suite_run):
    # continuum transport conserves entropy
    drift = _summary(suite_run, "ladder_continuum_roundtrip")["entropy_drift_max"]
    # every equalization in the big discrete sweep raised entropy
    ledger_path = suite_run["root"] / "ladder_roundtrip" / "ledger.csv"
    with ledger_path.open() as fh:
        deltas = [float(row["delta_s"]) for row in csv.DictReader(fh)]
    min_delta = min(deltas)
    # per-crossing second-order law
    delta = 1e-3
    w = 0.2
    state = ProbabilityState(np.array([w, w * (1 + delta), 1 - w - w * (1 + delta)]),
                             np.array([1, 1, 1]))
    _, ev = equalize(state, {0, 1}, 0.0)
    second_order_gap = abs(ev.delta_s / delta ** 2 - w / 4.0)
    # refinement: entropy production dies with the level spacing
    refine = _summary(suite_run, "ladder_refine")
    ok = (drift < 1e-6 and min_delta >= 0.0 and second_order_gap < 0.01 * w
          and refine["delta_s_strictly_decreasing"]
          and refine["fitted_slope"] >= 0.8 and suite_run["elapsed"] < 120.0)
    _report(4, ok,
            f"S drift {drift:.2e}, min dS {min_delta:.2e} over {len(deltas)} "
            f"events, 2nd-order gap {second_order_gap:.2e}, "
            f"refinement slope {refine['fitted_slope']:.3f}")


def test_criterion_5_fluctuations(suite_run):
    started = time.monotonic()
    sources = (
        PowerLaw(1.0, 2.0, 1.0),
        TwoTerm(1.0, 2.0, 1.0, 0.5, 1.0, 0.5),
        TwoLadder(70 / 16, 70 / 16, 16, 16),
        discrete_spectrum(LinearEnsemble((0.0, 0.7, 2.0), (0.2, 0.5, 0.0)), (0.0, 1.0)),
        discrete_spectrum(OscillatorLadder(levels=40, modes=2), (0.5, 2.0)),
    )
    worst_identity = 0.0
    for src in sources:
        for a, T in ((0.6, 0.9), (1.0, 1.0), (0.8, 1.7)):
            _, var = canonical_moments(src, a, T)
            c = heat_capacity(CanonicalEnsemble(src, a, T))
            worst_identity = max(worst_identity, abs(var / (c * T * T) - 1.0))

    rows = {}
    with (suite_run["root"] / "fluctuation_split" / "comparison.csv").open() as fh:
        for row in csv.DictReader(fh):
            rows[float(row["a"])] = row
    final = rows[max(rows)]
    measured = float(final["dE_ad_measured"])
    pred_ad = float(final["dE_ad_predicted"])
    pred_zp = float(final["dE_zp_predicted"])
    c_change = abs((pred_zp / pred_ad) ** 2 - 1.0)
    elapsed = time.monotonic() - started
    ok = (worst_identity < 1e-8
          and c_change >= 0.2
          and abs(measured - pred_ad) < abs(measured - pred_zp)
          and abs(measured / pred_ad - 1.0) < 0.05
          and elapsed + suite_run["elapsed"] < 60.0)
    _report(5, ok,
            f"Var=c_aT^2 drift {worst_identity:.2e}; c_a change {c_change:.0%}; "
            f"measured {measured:.4f} vs frozen {pred_ad:.4f} / endpoint {pred_zp:.4f}")


def test_criterion_6_mean_energy_scaling(suite_run):
    summary = _summary(suite_run, "size_scaling")
    slope = summary["fitted_slope"]
    ok = (slope is not None and -1.3 <= slope <= -0.7
          and suite_run["elapsed"] < 120.0)
    _report(6, ok, f"log-log slope of the relative mean-energy gap: {slope:.3f}")


def test_criterion_7_irreversibility(suite_run):
    discrete = _summary(suite_run, "ladder_roundtrip")
    cont = _summary(suite_run, "ladder_continuum_roundtrip")
    ok = (discrete["round_trip_l1"] > 0.0 and discrete["total_delta_s"] > 0.0
          and cont["round_trip_linf"] < 1e-6 and suite_run["elapsed"] < 30.0)
    _report(7, ok,
            f"discrete round trip L1 {discrete['round_trip_l1']:.3f} with "
            f"dS {discrete['total_delta_s']:.3f}; continuum round trip "
            f"Linf {cont['round_trip_linf']:.2e}")


def test_criterion_8_discrete_to_continuum(suite_run):
    rows = []
    with (suite_run["root"] / "ladder_refine" / "scaling.csv").open() as fh:
        for row in csv.DictReader(fh):
            rows.append(float(row["distance_to_continuum"]))
    monotone = all(b < a for a, b in zip(rows, rows[1:]))
    ok = monotone and len(rows) == 5 and suite_run["elapsed"] < 120.0
    _report(8, ok, f"L1 distances across 4 refinements: "
                   f"{', '.join(f'{d:.3f}' for d in rows)}")


def test_criterion_9_determinism(suite_run, tmp_path_factory):
    rerun_root = tmp_path_factory.mktemp("acceptance_rerun")
    results, failed = run_suite(suite_run["paths"], rerun_root, jobs=1)
    assert not failed
    mismatches = []
    for r in results:
        name = r["name"]
        first = json.loads(
            (suite_run["root"] / r["manifest"]["scenario"]["out_dir"] / "manifest.json")
            .read_text())
        second = r["manifest"]
        if first["files"] != second["files"]:
            mismatches.append(name)
    ok = not mismatches
    _report(9, ok, "rerun digests identical for all scenarios"
            if ok else f"digest mismatch in: {mismatches}")
