"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""

import math
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from pdlqkd.asymptotic import RateInputs, heuristic_p_optimal, optimal_mu_residual, solve_optimal_mu
from pdlqkd.decoy import y1_deviation
from pdlqkd.finite import FiniteKeyParams
from pdlqkd.model import ChannelGeometry, SourceModel, SystemParams, pdl_loss_factor
from pdlqkd.optimizer import Scenario, optimize_rate, sweep
from pdlqkd.validation import validate_estimators

DEFAULTS = SystemParams()

# tabulated log10 rates at 80 km
TABLE_PDL = (0.0, 1.6, 3.0, 5.0)
WITH_POST_SELECTION = (-3.61, -3.643, -3.688, -3.784)
WITHOUT_POST_SELECTION = (-3.61, -3.657, -3.718, -3.859)
PERCENT_INCREASE = (3.28, 7.15, 18.9)
CALIBRATION = [(q, f) for q in (0.5, 1.0) for f in (1.0, 1.16, 1.22)]


def _log10(r):
    return math.log10(r) if r > 0 else -math.inf


def _table_rows(q, f, pdls=TABLE_PDL):
    inputs = RateInputs(q, f)
    ps, nops = [], []
    for pdl in pdls:
        sc = Scenario(DEFAULTS, ChannelGeometry(80), pdl, inputs)
        ps.append(optimize_rate(sc, "asymptotic", "free").rate)
        nops.append(optimize_rate(sc, "asymptotic", 1.0).rate)
    return ps, nops


def _calibrate():
    best = None
    for q, f in CALIBRATION:
        ps, nops = _table_rows(q, f)
        dev = max(
            max(abs(_log10(a) - b) for a, b in zip(ps, WITH_POST_SELECTION)),
            max(abs(_log10(a) - b) for a, b in zip(nops, WITHOUT_POST_SELECTION)),
        )
        if best is None or dev < best[0]:
            best = (dev, q, f, ps, nops)
    return best


_CAL = {}


def calibration():
    if not _CAL:
        t0 = time.perf_counter()
        _CAL["best"] = _calibrate()
        _CAL["seconds"] = time.perf_counter() - t0
    return _CAL["best"], _CAL["seconds"]


def test_table_rates_calibrated(acceptance):
    (dev, q, f, ps, nops), seconds = calibration()
    passed = dev <= 0.15 and seconds < 60
    acceptance(
        1,
        "80 km rate table, one (q,f) from {1/2,1}x{1.0,1.16,1.22}",
        passed,
        f"best (q={q}, f={f}) max |dlog10| = {dev:.3f} (tol 0.15), "
        f"with PS {[round(_log10(x), 3) for x in ps]}, without {[round(_log10(x), 3) for x in nops]}, {seconds:.1f} s",
    )
    assert passed


def test_table_rates_sifted_efficiency_informational():
    """Outside the calibration grid: q = 1/4 (Z-basis key, both sides choose Z with probability 1/2)."""
    ps, nops = _table_rows(0.25, 1.22)
    dev = max(
        max(abs(_log10(a) - b) for a, b in zip(ps, WITH_POST_SELECTION)),
        max(abs(_log10(a) - b) for a, b in zip(nops, WITHOUT_POST_SELECTION)),
    )
    print(f"q=1/4, f=1.22: max |dlog10| = {dev:.4f}")
    assert dev <= 0.15


def test_table_qualitative_facts(acceptance):
    (_, q, f, _, _), _ = calibration()
    ps, nops = _table_rows(q, f, (1.6, 3.0, 5.0, 10.0))
    zero_without = nops[-1] == 0.0
    positive_with = ps[-1] > 0
    pct = [100 * (a / b - 1) for a, b in zip(ps[:3], nops[:3])]
    increasing = all(b > a for a, b in zip([0.0] + pct, pct))
    within = all(abs(p - ref) <= 3 for p, ref in zip(pct, PERCENT_INCREASE))
    passed = zero_without and positive_with and increasing and within
    acceptance(
        2,
        "80 km qualitative facts",
        passed,
        f"PDL 10 dB: without PS R={nops[-1]:g}, with PS R={ps[-1]:.3e}; "
        f"increase {[round(p, 2) for p in pct]}% vs {list(PERCENT_INCREASE)} (+-3 pp) at f={f}",
    )
    assert passed


def test_optimal_intensity_trend(acceptance):
    pdls = np.arange(0, 10.01, 0.05)
    roots = np.array([solve_optimal_mu(float(pdl_loss_factor(p))) for p in pdls])
    residual = max(abs(float(optimal_mu_residual(m, float(pdl_loss_factor(p)), 0.015, 1.16))) for m, p in zip(roots, pdls))
    increasing = bool(np.all(np.diff(roots) > 0))
    above = pdls[roots > 1]
    crossing = float(above[0]) if len(above) else math.nan
    in_window = 3.0 <= crossing <= 5.0
    passed = increasing and in_window and residual < 1e-10
    acceptance(
        3,
        "optimal signal intensity vs PDL",
        passed,
        f"strictly increasing={increasing}, crosses 1 at {crossing:.2f} dB (window [3, 5]), max |residual|={residual:.1e}",
    )
    assert passed


def test_heuristic_post_selection_consistency(acceptance):
    worst, where = 0.0, None
    for pdl in (0, 2, 4, 6, 8, 10):
        L = float(pdl_loss_factor(pdl))
        for d in range(10, 101, 10):
            r = optimize_rate(Scenario(DEFAULTS, ChannelGeometry(d), pdl), "asymptotic", "free")
            gap = abs(r.params["p_select"] - float(heuristic_p_optimal(r.params["mu_s"], L)))
            if gap >= worst:
                worst, where = gap, (d, pdl)
    passed = worst <= 0.05
    acceptance(4, "numeric vs heuristic post-selection", passed, f"max |P_opt - P_heur| = {worst:.4f} at (d, PDL) = {where} (tol 0.05)")
    assert passed


def test_decoy_deviation_trends(acceptance):
    geom = ChannelGeometry(50)
    mu_v = np.linspace(0.01, 0.3, 30)
    pdls = range(0, 11)
    beta = np.array([y1_deviation(DEFAULTS, geom, p, solve_optimal_mu(float(pdl_loss_factor(p))), mu_v) for p in pdls])
    in_mu = bool(np.all(np.diff(beta, axis=1) > 0))
    in_pdl = bool(np.all(np.diff(beta, axis=0) > 0))
    drops = sorted({(int(i), int(i) + 1) for i, _ in np.argwhere(np.diff(beta, axis=0) <= 0)})
    tiny = max(float(y1_deviation(DEFAULTS, geom, p, solve_optimal_mu(float(pdl_loss_factor(p))), 1e-4)) for p in pdls)
    passed = in_mu and in_pdl and tiny < 1e-3
    acceptance(
        5,
        "decoy yield deviation",
        passed,
        f"increasing in mu_v={in_mu}, in PDL={in_pdl} (drops between dB {drops}), "
        f"max beta at mu_v=1e-4: {tiny:.2e} (< 1e-3)",
    )
    assert passed


def _cutoff(scenario, mode, p_mode, lo=0.0, hi=300.0, tol=0.1):
    """Largest distance with a positive optimized rate (rates fall with distance)."""
    def positive(d):
        return optimize_rate(replace(scenario, geom=ChannelGeometry(d)), mode, p_mode).rate > 0

    if not positive(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if positive(mid) else (lo, mid)
    return lo


def test_two_decoy_close_to_asymptotic(acceptance):
    dominated = True
    for pdl in (0, 5, 10):
        d = list(range(0, 201, 10))
        two = [r.rate for r in sweep(Scenario(pdl_db=pdl), "distance", d, "two-decoy", "free")]
        asym = [r.rate for r in sweep(Scenario(pdl_db=pdl), "distance", d, "asymptotic", "free")]
        dominated &= all(a <= b * (1 + 1e-12) for a, b in zip(two, asym))
    c_two = _cutoff(Scenario(pdl_db=10.0), "two-decoy", "free")
    c_asym = _cutoff(Scenario(pdl_db=10.0), "asymptotic", "free")
    passed = dominated and abs(c_two - c_asym) < 15
    acceptance(
        6,
        "two-decoy vs asymptotic",
        passed,
        f"two-decoy <= asymptotic everywhere={dominated}; PDL 10 dB cutoffs {c_two:.1f} km vs {c_asym:.1f} km (diff < 15)",
    )
    assert passed


def test_finite_key_family(acceptance):
    t0 = time.perf_counter()
    fk = FiniteKeyParams()
    base = Scenario(DEFAULTS, ChannelGeometry(50), 10.0, RateInputs(), fk)
    ns = [1e10, 1e11, 1e12, 1e13, 1e14]
    monotone = True
    curves = {}
    for d in range(0, 151, 10):
        rates = [r.rate for r in sweep(replace(base, geom=ChannelGeometry(d)), "n", ns, "finite", "heuristic")]
        curves[d] = rates
        monotone &= all(b >= a for a, b in zip(rates, rates[1:]))
    cutoff = _cutoff(base, "finite", "heuristic", hi=200.0, tol=0.5)
    # asymptotic reference with the same Z-basis sifting
    asym = optimize_rate(replace(base, inputs=RateInputs(q=fk.key_sift_factor)), "asymptotic", "heuristic").rate
    gap = abs(_log10(curves[50][-1]) - _log10(asym))
    seconds = time.perf_counter() - t0
    passed = monotone and abs(cutoff - 100) <= 15 and gap <= 0.3 and seconds < 600
    acceptance(
        7,
        "finite-key family, PDL 10 dB",
        passed,
        f"nondecreasing in N={monotone}; N=1e10 cutoff {cutoff:.1f} km (100 +- 15); "
        f"N=1e14 vs asymptotic at 50 km |dlog10|={gap:.3f} (tol 0.3); {seconds:.0f} s",
    )
    assert passed


def test_monte_carlo_dominance(acceptance):
    mu_s = solve_optimal_mu(0.1)
    P = float(heuristic_p_optimal(mu_s, 0.1))
    src = SourceModel.symmetric(mu_s, 0.1, 10.0, P)
    fk = FiniteKeyParams(n_pulses=1e9, p_select=P)
    rep = validate_estimators(DEFAULTS, src, ChannelGeometry(50), fk, range(100))
    passed = not rep.violations and rep.coverage >= 0.95
    acceptance(
        8,
        "Monte-Carlo oracle dominance",
        passed,
        f"100 photon-resolved runs at N=1e9: {len(rep.violations)} violations, interval coverage {rep.coverage:.4f} (>= 0.95)",
    )
    assert passed


def test_unit_values(acceptance):
    path = Path(__file__).with_name("test_unit_values.py")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(path)], capture_output=True, text=True)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    passed = proc.returncode == 0
    acceptance(9, "unit-value suite at 1e-6 relative", passed, summary)
    assert passed
