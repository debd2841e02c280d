import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlqkd.asymptotic import heuristic_p_optimal
from pdlqkd.finite import FiniteKeyParams
from pdlqkd.model import CELLS, ChannelGeometry, Polarization, Setting, SourceModel, SystemParams, forward_observables, pdl_loss_factor
from pdlqkd.montecarlo import RNG_ALGORITHM, SinglePhotonTruth, _photon_pmf, empirical_rates, simulate_counts


def scenario(pdl=10.0, mu_s=1.4, n=1e9, sifting=True):
    P = float(heuristic_p_optimal(mu_s, pdl_loss_factor(pdl)))
    src = SourceModel.symmetric(mu_s, 0.1, pdl, P)
    return SystemParams(), src, ChannelGeometry(50), FiniteKeyParams(n_pulses=n, p_select=P, sifting=sifting)


def test_concentration_over_100_seeds():
    p, src, geom, fk = scenario(sifting=False)
    obs = forward_observables(p, src, geom)
    far = total = 0
    for seed in range(100):
        emp = empirical_rates(simulate_counts(p, src, geom, fk, seed).counts)
        for c in CELLS:
            n, q = emp.counts[c].pulses, float(obs.gain[c])
            far += abs(emp.gain[c] - q) > 4 * math.sqrt(q * (1 - q) / n)
            total += 1
    assert far / total < 0.01


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_deterministic_per_seed(seed):
    p, src, geom, fk = scenario(n=1e7)
    a, b = simulate_counts(p, src, geom, fk, seed), simulate_counts(p, src, geom, fk, seed)
    assert a.counts.counts == b.counts.counts and a.counts.kept_sV == b.counts.kept_sV


def test_different_seeds_differ():
    p, src, geom, fk = scenario()
    assert simulate_counts(p, src, geom, fk, 1).counts.counts != simulate_counts(p, src, geom, fk, 2).counts.counts


def test_kept_part_inside_vertical_cell():
    p, src, geom, fk = scenario()
    run = simulate_counts(p, src, geom, fk, 4)
    sv = run.counts.counts[(Setting.SIGNAL, Polarization.V)]
    assert run.counts.kept_sV.detections <= sv.detections and run.counts.kept_sV.pulses <= sv.pulses


def test_truth_consistent_with_counts():
    p, src, geom, fk = scenario()
    run = simulate_counts(p, src, geom, fk, 8, photon_resolved=True)
    for c in CELLS:
        t, cc = run.truth[c], run.counts.counts[c]
        assert isinstance(t, SinglePhotonTruth)
        assert t.errors <= t.detections <= cc.detections and t.pulses <= cc.pulses


def test_resolved_mode_matches_gain():
    p, src, geom, fk = scenario(n=1e10, sifting=False)
    run = simulate_counts(p, src, geom, fk, 21, photon_resolved=True)
    obs = forward_observables(p, src, geom)
    for c in CELLS:
        n, q = run.counts.counts[c].pulses, float(obs.gain[c])
        assert abs(run.counts.counts[c].detections / n - q) < 5 * math.sqrt(q / n)


@given(st.floats(0.0, 5.0))
def test_photon_pmf_is_distribution(mu):
    pmf = _photon_pmf(mu)
    assert np.all(pmf >= 0) and pmf.sum() == pytest.approx(1.0, abs=1e-14)


def test_rng_documented():
    p, src, geom, fk = scenario(n=1e6)
    assert RNG_ALGORITHM in simulate_counts(p, src, geom, fk, 0).rng
