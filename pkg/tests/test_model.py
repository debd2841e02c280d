import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlqkd.model import (
    CELLS,
    CellCounts,
    ChannelGeometry,
    Polarization,
    Setting,
    SourceModel,
    SystemParams,
    binary_entropy,
    error_n,
    forward_observables,
    gain,
    pdl_loss_factor,
    poisson_photon_pmf,
    qber,
    system_transmittance,
    yield_n,
)

mus = st.floats(0.0, 5.0)
etas = st.floats(1e-6, 1.0)
y0s = st.floats(0.0, 1e-3)


@given(mus, mus, y0s, etas)
def test_gain_increasing_in_mu(a, b, y0, eta):
    lo, hi = sorted((a, b))
    if hi - lo < 1e-6:
        return
    assert gain(lo, y0, eta) < gain(hi, y0, eta)


@given(st.integers(0, 50), y0s, etas)
def test_yield_nondecreasing_in_photon_number(i, y0, eta):
    assert yield_n(y0, eta, i) <= yield_n(y0, eta, i + 1)


def _series(mu, y0, eta, e_d, e0=0.5):
    total, i = 0.0, 0
    terms = []
    while True:
        p = float(poisson_photon_pmf(mu, i))
        if i > mu and p < 1e-18:
            break
        y = float(yield_n(y0, eta, i))
        if y > 0:
            terms.append(p * y * float(error_n(y0, y, e_d, e0)))
        i += 1
    return math.fsum(terms)


@settings(max_examples=60)
@given(st.floats(0.01, 3.0), st.floats(1e-6, 1e-4), st.floats(1e-4, 0.5), st.floats(0.0, 0.1))
def test_gain_times_qber_matches_photon_series(mu, y0, eta, e_d):
    closed = float(gain(mu, y0, eta) * qber(mu, y0, eta, e_d))
    assert closed == pytest.approx(_series(mu, y0, eta, e_d), abs=1e-12)


@given(st.floats(0.0, 5.0), mus, st.floats(0.0, 200.0))
def test_no_pdl_columns_identical(mu_s, mu_v, d):
    obs = forward_observables(SystemParams(), SourceModel.symmetric(mu_s, mu_v, 0.0), ChannelGeometry(d))
    for n in Setting:
        q = [obs.gain[(n, m)] for m in Polarization]
        e = [obs.qber[(n, m)] for m in Polarization]
        assert all(x == q[0] for x in q) and all(x == e[0] for x in e)


@given(st.floats(0.0, 1.0))
def test_entropy_symmetric(x):
    assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-12)


@given(st.floats(0.0, 10.0))
def test_pmf_normalized(mu):
    assert math.fsum(float(poisson_photon_pmf(mu, i)) for i in range(201)) == pytest.approx(1.0, abs=1e-12)


def test_pmf_vectorized():
    out = poisson_photon_pmf(np.array([0.1, 0.5, 1.0]), 1)
    assert out.shape == (3,)


def test_transmittance_decreases_with_distance():
    p = SystemParams()
    etas = [system_transmittance(p, ChannelGeometry(d)) for d in range(0, 200, 10)]
    assert all(b < a for a, b in zip(etas, etas[1:]))


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        pdl_loss_factor(-1)
    with pytest.raises(ValueError):
        SystemParams(e_d=1.5)
    with pytest.raises(ValueError):
        ChannelGeometry(-5)
    with pytest.raises(ValueError):
        binary_entropy(1.2)
    with pytest.raises(ValueError):
        poisson_photon_pmf(0.5, -1)
    with pytest.raises(ValueError):
        SourceModel.symmetric(0.5, 0.1, 0.0, p_select=0.0)
    with pytest.raises(ValueError):
        CellCounts(10, 11, 0)


def test_zero_gain_cells_flagged():
    obs = forward_observables(SystemParams(y0=0.0), SourceModel.symmetric(0.5, 0.1), ChannelGeometry(50))
    assert {c for c in CELLS if c[0] == Setting.VACUUM} == set(obs.flagged)


def test_pdl_attenuates_h_and_d_only():
    src = SourceModel.symmetric(0.8, 0.1, 3.0)
    L = pdl_loss_factor(3.0)
    assert src.mu[(Setting.SIGNAL, Polarization.H)] == pytest.approx(L * 0.8)
    assert src.mu[(Setting.SIGNAL, Polarization.D)] == pytest.approx(L * 0.8)
    assert src.mu[(Setting.SIGNAL, Polarization.V)] == 0.8
    assert src.mu[(Setting.DECOY, Polarization.H)] == pytest.approx(L * 0.1)


def test_default_system_defaults():
    p = SystemParams()
    assert (p.e_d, p.y0, p.eta_bob, p.alpha) == (0.015, 2e-5, 0.2, 0.2)
