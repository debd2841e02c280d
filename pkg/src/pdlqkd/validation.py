"""Check the finite-size estimators against Monte-Carlo ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .finite import (
    FiniteKeyParams,
    _worst_y1,
    allocate_pulses,
    expected_interval,
    finite_key_rate,
    phase_error_upper,
    single_photon_events_lower,
)
from .model import CELLS, X_BASIS, ChannelGeometry, Polarization, Setting, SourceModel, SystemParams, forward_observables
from .montecarlo import simulate_counts

S, V = Setting.SIGNAL, Polarization.V


@dataclass
class SeedReport:
    seed: int
    s1_lower: float
    s1_true: int
    e1_upper: float
    e1_true: float
    unbounded: bool
    rate: float
    violations: list = field(default_factory=list)
    covered: int = 0
    intervals: int = 0


@dataclass
class ValidationReport:
    seeds: list

    @property
    def violations(self) -> list:
        return [(r.seed, v) for r in self.seeds for v in r.violations]

    @property
    def coverage(self) -> float:
        total = sum(r.intervals for r in self.seeds)
        return sum(r.covered for r in self.seeds) / total if total else float("nan")


def _expected(params, source, geom, fk):
    obs = forward_observables(params, source, geom)
    alloc = allocate_pulses(fk)
    exp = {}
    for c in CELLS:
        rate = float(obs.gain[c]) * fk.match_probability(c[1])
        n = float(alloc.pulses[c])
        exp[c] = (n * rate, n * rate * float(obs.qber[c]))
    rate = float(obs.gain[(S, V)]) * fk.match_probability(V)
    exp["kept_sV"] = (float(alloc.kept_sV) * rate, float(alloc.kept_sV) * rate * float(obs.qber[(S, V)]))
    return exp


def check_seed(params: SystemParams, source: SourceModel, geom: ChannelGeometry, fk: FiniteKeyParams, seed: int, f: float = 1.16, coverage_eps=None) -> SeedReport:
    """Run one photon-resolved simulation through the estimators.

    Lower bounds on single-photon detections must not exceed the sampled true
    counts, and the phase-error bound must not fall below the true
    single-photon error rate. ``coverage_eps`` sets the interval width for the
    coverage statistic (defaults to ``fk.eps_sec``).
    """
    run = simulate_counts(params, source, geom, fk, seed, photon_resolved=True)
    obs, truth = run.counts, run.truth
    alloc = allocate_pulses(fk)
    eps = fk.eps_sec
    s1 = float(single_photon_events_lower(obs, alloc, source, eps))
    e1, unbounded = phase_error_upper(obs, alloc, source, eps, params.e0)
    res = finite_key_rate(params, source, geom, fk, f, obs=obs)
    other = Polarization.H if source.excess == V else V
    s1_true = truth[(S, other)].detections + truth["kept_sV"].detections
    viol = []
    if s1 > s1_true:
        viol.append(f"s1_lower {s1:.6g} > true {s1_true}")
    for m in Polarization:
        y1 = float(_worst_y1(obs, source, m, eps))
        t = truth[(S, m)]
        if y1 * t.pulses > t.detections:
            viol.append(f"Y1_{m.value} bound x pulses {y1 * t.pulses:.6g} > true {t.detections}")
    det_x = sum(truth[(n, m)].detections for n in Setting for m in X_BASIS)
    err_x = sum(truth[(n, m)].errors for n in Setting for m in X_BASIS)
    e1_true = err_x / det_x if det_x else 0.0
    if not unbounded and float(e1) < e1_true:
        viol.append(f"e1_upper {float(e1):.6g} < true {e1_true:.6g}")

    ceps = eps if coverage_eps is None else coverage_eps
    covered = total = 0
    expected = _expected(params, source, geom, fk)
    cells = list(CELLS) + ["kept_sV"]
    for c in cells:
        cc = obs.kept_sV if c == "kept_sV" else obs.counts[c]
        for observed, target in ((cc.detections, expected[c][0]), (cc.errors, expected[c][1])):
            lo, hi = expected_interval(observed, cc.pulses, ceps)
            covered += int(lo <= target <= hi)
            total += 1
    return SeedReport(seed, s1, s1_true, float(e1), e1_true, bool(unbounded), float(res.rate), viol, covered, total)


def validate_estimators(params, source, geom, fk, seeds, f: float = 1.16, coverage_eps=None) -> ValidationReport:
    return ValidationReport([check_seed(params, source, geom, fk, int(s), f, coverage_eps) for s in seeds])
