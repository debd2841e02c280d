import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlqkd.asymptotic import heuristic_p_optimal, key_rate_asymptotic
from pdlqkd.decoy import decoy_bounds, key_rate_two_decoy, y0_lower, y1_deviation, y1_lower
from pdlqkd.model import (
    ChannelGeometry,
    Polarization,
    SourceModel,
    SystemParams,
    forward_observables,
    pdl_loss_factor,
    single_photon_truth,
)

GRID = list(itertools.product((0, 25, 50, 100, 150), (0, 2, 5, 10), (0.3, 0.7, 1.5, 2.5), (0.01, 0.1, 0.25)))


@pytest.mark.parametrize("d,pdl,mu_s,mu_v", GRID)
def test_bounds_dominate_truth(d, pdl, mu_s, mu_v):
    p, geom = SystemParams(), ChannelGeometry(d)
    src = SourceModel.symmetric(mu_s, mu_v, pdl)
    b = decoy_bounds(forward_observables(p, src, geom), src)
    y1, e1 = single_photon_truth(p, geom)
    for m in Polarization:
        assert b.y1_low[m] <= y1 * (1 + 1e-12)
    for m in (Polarization.D, Polarization.A):
        assert b.e1y1_up[m] >= y1 * e1 * (1 - 1e-12)


@pytest.mark.parametrize("d,pdl,mu_s,mu_v", GRID)
def test_two_decoy_below_asymptotic(d, pdl, mu_s, mu_v):
    p, geom = SystemParams(), ChannelGeometry(d)
    src = SourceModel.symmetric(mu_s, mu_v, pdl, float(heuristic_p_optimal(mu_s, pdl_loss_factor(pdl))))
    assert key_rate_two_decoy(p, src, geom).rate <= key_rate_asymptotic(p, src, geom).rate


@pytest.mark.parametrize("pdl", [0, 4, 10])
def test_beta_increasing_in_decoy_intensity(pdl):
    mu_v = np.linspace(0.005, 0.3, 60)
    beta = y1_deviation(SystemParams(), ChannelGeometry(50), pdl, 1.4, mu_v)
    assert np.all(np.diff(beta) > 0)


@settings(max_examples=50)
@given(st.floats(0.0, 150.0), st.floats(0.0, 10.0))
def test_vacuum_row_recovers_background(d, pdl):
    src = SourceModel.symmetric(0.7, 0.1, pdl)
    obs = forward_observables(SystemParams(), src, ChannelGeometry(d))
    assert all(y0_lower(obs, m) == pytest.approx(2e-5, rel=1e-12) for m in Polarization)


def test_decoy_ordering_enforced():
    with pytest.raises(ValueError):
        y1_lower(1e-3, 1e-4, 2e-5, 0.1, 0.2)
    with pytest.raises(ValueError):
        y1_lower(1e-3, 1e-4, 2e-5, 0.5, 0.0)


def test_vectorized_bounds():
    mu_v = np.array([0.05, 0.1, 0.2])
    src = SourceModel.symmetric(0.8, mu_v, 3.0)
    b = decoy_bounds(forward_observables(SystemParams(), src, ChannelGeometry(50)), src)
    assert np.shape(b.y1_combined) == (3,)
