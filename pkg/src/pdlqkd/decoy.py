"""Vacuum + weak decoy bounds, evaluated separately for each polarization.

Each polarization is analyzed with its own intensities, so no assumption
about how PDL scales the mean photon numbers is needed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotic import KeyRateResult, RateInputs, Substituted, key_rate, post_selected_signal
from .model import (
    X_BASIS,
    ChannelGeometry,
    ObservableTable,
    Polarization,
    Setting,
    SourceModel,
    SystemParams,
    forward_observables,
    single_photon_truth,
    system_transmittance,
)

H, V, D, A = Polarization.H, Polarization.V, Polarization.D, Polarization.A
S, W, VAC = Setting.SIGNAL, Setting.DECOY, Setting.VACUUM


@dataclass(frozen=True)
class DecoyBounds:
    y0_low: dict
    y1_low: dict
    e1y1_up: dict
    y1_combined: object
    e1_phase_up: object
    unbounded: object = False


def y0_lower(obs: ObservableTable, m: Polarization):
    # the vacuum setting sends nothing, so its gain is the background yield
    return obs.Q(VAC, m)


def y1_lower(q_s, q_v, y0_low, mu_s, mu_v):
    mu_s = np.asarray(mu_s, dtype=float)
    mu_v = np.asarray(mu_v, dtype=float)
    if np.any(mu_v <= 0) or np.any(mu_v >= mu_s):
        raise ValueError("decoy ordering requires 0 < mu_v < mu_s")
    val = (mu_s / (mu_s * mu_v - mu_v**2)) * (
        q_v * np.exp(mu_v) - q_s * np.exp(mu_s) * mu_v**2 / mu_s**2 - (mu_s**2 - mu_v**2) / mu_s**2 * y0_low
    )
    return np.clip(val, 0.0, 1.0)[()]


def e1y1_upper(q_v, e_v, y0_low, e0, mu_v):
    """Upper bound on Y1*e1. Pass ``y0_low=0`` for the looser, background-free bound."""
    mu_v = np.asarray(mu_v, dtype=float)
    if np.any(mu_v <= 0):
        raise ValueError("mu_v must be > 0")
    val = (e_v * q_v * np.exp(mu_v) - e0 * y0_low) / mu_v
    return np.clip(val, 0.0, 1.0)[()]


def combine_bounds(y0_low: dict, y1_low: dict, e1y1_up: dict) -> DecoyBounds:
    y1_comb = (y1_low[H] + y1_low[V]) / 2
    den = np.asarray(y1_low[D] + y1_low[A], dtype=float)
    num = np.asarray(e1y1_up[D] + e1y1_up[A], dtype=float)
    unbounded = den <= 0
    e_ph = np.where(unbounded, 0.5, num / np.where(unbounded, 1.0, den))
    return DecoyBounds(
        y0_low=y0_low,
        y1_low=y1_low,
        e1y1_up=e1y1_up,
        y1_combined=y1_comb,
        e1_phase_up=np.clip(e_ph, 0.0, 1.0)[()],
        unbounded=unbounded[()],
    )


def decoy_bounds(obs: ObservableTable, source: SourceModel, e0: float = 0.5) -> DecoyBounds:
    y0l, y1l, e1y1 = {}, {}, {}
    for m in Polarization:
        y0l[m] = y0_lower(obs, m)
        y1l[m] = y1_lower(obs.Q(S, m), obs.Q(W, m), y0l[m], source.mu[(S, m)], source.mu[(W, m)])
        if m in X_BASIS:
            e1y1[m] = e1y1_upper(obs.Q(W, m), obs.E(W, m), y0l[m], e0, source.mu[(W, m)])
    return combine_bounds(y0l, y1l, e1y1)


def deviation_beta(y1_true, y1_low):
    y1_true = np.asarray(y1_true, dtype=float)
    if np.any(y1_true <= 0):
        raise ValueError("relative deviation undefined for zero yield")
    return ((y1_true - y1_low) / y1_true)[()]


def key_rate_two_decoy(
    params: SystemParams,
    source: SourceModel,
    geom: ChannelGeometry,
    inputs: RateInputs = RateInputs(),
    p_select=None,
) -> KeyRateResult:
    P = source.p_select if p_select is None else p_select
    obs = forward_observables(params, source, geom)
    b = decoy_bounds(obs, source, params.e0)
    untagged, qs, qs_es = post_selected_signal(obs, source, P)
    subst = Substituted(q1=untagged * b.y1_combined, y1=b.y1_combined, e1_phase=b.e1_phase_up, qs=qs, qs_es=qs_es)
    return key_rate(inputs, subst, applied_p=P)


def y1_deviation(params: SystemParams, geom: ChannelGeometry, pdl_db, mu_s, mu_v, approx: bool = True):
    """Relative gap between the combined decoy bound and the true Y1.

    ``approx=True`` takes the true yield as Y0 + eta_sys, dropping the
    Y0*eta_sys cross term; ``approx=False`` uses the exact yield.
    """
    source = SourceModel.symmetric(mu_s, mu_v, pdl_db)
    b = decoy_bounds(forward_observables(params, source, geom), source, params.e0)
    if approx:
        y1 = params.y0 + system_transmittance(params, geom)
    else:
        y1, _ = single_photon_truth(params, geom)
    return deviation_beta(y1, b.y1_combined)
