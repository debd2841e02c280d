"""GLLP-style asymptotic key rate with and without post-selection."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import (
    ChannelGeometry,
    ObservableTable,
    Polarization,
    Setting,
    SourceModel,
    SystemParams,
    binary_entropy,
    forward_observables,
    single_photon_truth,
)

H, V, D, A = Polarization.H, Polarization.V, Polarization.D, Polarization.A
S = Setting.SIGNAL

BISECT_LO = 1e-6
BISECT_HI = 5.0
BISECT_XTOL = 1e-12


@dataclass(frozen=True)
class RateInputs:
    """Protocol efficiency ``q`` and error-correction inefficiency ``f``."""

    q: float = 0.5
    f: float = 1.16

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ValueError(f"q must lie in (0, 1], got {self.q!r}")
        if self.f < 1:
            raise ValueError(f"f must be >= 1, got {self.f!r}")


@dataclass(frozen=True)
class Substituted:
    q1: object
    y1: object
    e1_phase: object
    qs: object
    qs_es: object

    @property
    def es(self):
        return self.qs_es / self.qs


@dataclass(frozen=True)
class KeyRateResult:
    rate: object
    q1: object
    qs: object
    es: object
    e1_phase: object
    y1: object
    applied_p: object
    raw_rate: object = None

    @property
    def log10_rate(self):
        r = np.asarray(self.rate, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, np.log10(np.where(r > 0, r, 1.0)), -np.inf)[()]

    def as_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items()}
        d["log10_rate"] = self.log10_rate
        return d


def _z_pair(source: SourceModel):
    """(unselected, post-selected) Z-basis polarizations."""
    kept = source.excess
    other = H if kept == V else V
    return other, kept


def post_selected_signal(obs: ObservableTable, source: SourceModel, p_select=None):
    """Untagged single-photon fraction, signal gain and gain*QBER after post-selection."""
    P = source.p_select if p_select is None else p_select
    other, kept = _z_pair(source)
    mu_o, mu_k = source.mu[(S, other)], source.mu[(S, kept)]
    untagged = np.minimum(mu_o * np.exp(-mu_o), P * mu_k * np.exp(-mu_k))
    qs = obs.Q(S, other) / 2 + P * obs.Q(S, kept) / 2
    qs_es = obs.Q(S, other) * obs.E(S, other) / 2 + P * obs.Q(S, kept) * obs.E(S, kept) / 2
    return untagged, qs, qs_es


def substituted_quantities(obs: ObservableTable, source: SourceModel, y1: dict, e1: dict, p_select=None) -> Substituted:
    """Replace Q1, Y1, e1_phase, Qs and QsEs by their untagged / post-selected versions.

    ``y1`` and ``e1`` map each polarization to its single-photon yield and
    error rate. With ``p_select == 1`` this is the plain untagged-qubit
    substitution.
    """
    untagged, qs, qs_es = post_selected_signal(obs, source, p_select)
    y1_z = (y1[H] + y1[V]) / 2
    den = np.asarray(y1[D] + y1[A], dtype=float)
    if np.any(den <= 0):
        raise ValueError("phase error undefined: X-basis single-photon yields sum to zero")
    e1_phase = (y1[D] * e1[D] + y1[A] * e1[A]) / den
    return Substituted(q1=untagged * y1_z, y1=y1_z, e1_phase=e1_phase, qs=qs, qs_es=qs_es)


def key_rate(inputs: RateInputs, subst: Substituted, applied_p=1.0) -> KeyRateResult:
    qs = np.asarray(subst.qs, dtype=float)
    if np.any(qs <= 0):
        raise ValueError("no signal detections: Qs = 0")
    es = np.clip(subst.es, 0.0, 1.0)
    # a phase error bound above 1/2 carries no information
    e_ph = np.clip(subst.e1_phase, 0.0, 0.5)
    raw = inputs.q * (subst.q1 * (1 - binary_entropy(e_ph)) - qs * inputs.f * binary_entropy(es))
    return KeyRateResult(
        rate=np.maximum(raw, 0.0)[()],
        q1=subst.q1,
        qs=subst.qs,
        es=es[()],
        e1_phase=subst.e1_phase,
        y1=subst.y1,
        applied_p=applied_p,
        raw_rate=raw[()],
    )


def key_rate_asymptotic(
    params: SystemParams,
    source: SourceModel,
    geom: ChannelGeometry,
    inputs: RateInputs = RateInputs(),
    p_select=None,
) -> KeyRateResult:
    """Infinite-decoy rate: single-photon yields and errors are known exactly."""
    P = source.p_select if p_select is None else p_select
    obs = forward_observables(params, source, geom)
    y1, e1 = single_photon_truth(params, geom)
    yields = {m: y1 for m in Polarization}
    errors = {m: e1 for m in Polarization}
    return key_rate(inputs, substituted_quantities(obs, source, yields, errors, P), applied_p=P)


def heuristic_p_optimal(mu_sV, L):
    """P that balances untagged single photons between H and V, capped at 1."""
    mu = np.asarray(mu_sV, dtype=float)
    L = np.asarray(L, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("mu_sV must be > 0")
    if np.any(L <= 0) or np.any(L > 1):
        raise ValueError("L must lie in (0, 1]")
    return np.minimum(L * np.exp((1 - L) * mu), 1.0)[()]


def approx_key_rate(mu_s, L, P, eta_sys, e_d, f):
    """Rate in the low-background, low-transmittance limit."""
    h = binary_entropy(e_d)
    return -(0.5 * P * eta_sys * mu_s + 0.5 * eta_sys * L * mu_s) * f * h + eta_sys * L * mu_s * np.exp(-L * mu_s) * (1 - h)


def optimal_mu_residual(mu_s, L, e_d, f):
    """Stationarity condition of ``approx_key_rate`` in mu_s (with the heuristic P); zero at the optimum."""
    h = binary_entropy(e_d)
    lhs = (1 - h) * (L * np.exp(-L * mu_s) - L**2 * mu_s * np.exp(-L * mu_s))
    g = np.exp((1 - L) * mu_s)
    rhs = 0.5 * f * h * (L + L * g + L * mu_s * g * (1 - L))
    return lhs - rhs


def solve_optimal_mu(L, e_d=0.015, f=1.16, lo=BISECT_LO, hi=BISECT_HI, xtol=BISECT_XTOL) -> float:
    """Bisection root of :func:`optimal_mu_residual` on ``[lo, hi]``."""
    r_lo = float(optimal_mu_residual(lo, L, e_d, f))
    r_hi = float(optimal_mu_residual(hi, L, e_d, f))
    if r_lo == 0:
        return lo
    if r_hi == 0:
        return hi
    if (r_lo > 0) == (r_hi > 0):
        raise ValueError(f"no interior optimum: residual has no sign change on [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        r_mid = float(optimal_mu_residual(mid, L, e_d, f))
        if r_mid == 0:
            return mid
        if (r_mid > 0) == (r_lo > 0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
