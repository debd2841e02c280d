"""Finite-size key length with Hoeffding fluctuations on the twelve observables.

Counts in a cell are Bob's detections in the basis Alice prepared (sifted),
so the yields estimated here already contain the basis-matching factor and
no separate protocol efficiency ``q`` is applied.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .decoy import e1y1_upper, y1_lower
from .model import (
    CELLS,
    X_BASIS,
    Z_BASIS,
    CellCounts,
    ChannelGeometry,
    ObservableTable,
    Polarization,
    Setting,
    SourceModel,
    SystemParams,
    binary_entropy,
    forward_observables,
)

H, V, D, A = Polarization.H, Polarization.V, Polarization.D, Polarization.A
S, W, VAC = Setting.SIGNAL, Setting.DECOY, Setting.VACUUM


@dataclass(frozen=True)
class FiniteKeyParams:
    n_pulses: float = 1e10
    p_signal: object = 0.8
    p_decoy: object = 0.15
    p_vacuum: object = 0.05
    p_basis: float = 0.5  # P(Z); Bob uses the same basis statistics
    p_pol: float = 0.5  # P(H | Z) = P(D | X)
    eps_cor: float = 1e-10
    eps_sec: float = 1e-10
    p_select: object = 1.0
    sifting: bool = True

    def __post_init__(self):
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be >= 1")
        for name in ("p_signal", "p_decoy", "p_vacuum", "p_basis", "p_pol"):
            v = np.asarray(getattr(self, name), dtype=float)
            if np.any(v < 0) or np.any(v > 1):
                raise ValueError(f"{name} must lie in [0, 1]")
        total = np.asarray(self.p_signal) + np.asarray(self.p_decoy) + np.asarray(self.p_vacuum)
        if not np.allclose(total, 1.0, atol=1e-9):
            raise ValueError("setting probabilities must sum to 1")
        for name in ("eps_cor", "eps_sec"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        p = np.asarray(self.p_select)
        if np.any(p <= 0) or np.any(p > 1):
            raise ValueError("p_select must lie in (0, 1]")

    @property
    def p_setting(self):
        return {S: self.p_signal, W: self.p_decoy, VAC: self.p_vacuum}

    def match_probability(self, m: Polarization) -> float:
        """Probability that Bob measures in the basis of polarization ``m``."""
        if not self.sifting:
            return 1.0
        return self.p_basis if m.basis == "Z" else 1.0 - self.p_basis

    @property
    def key_sift_factor(self) -> float:
        """Fraction of all pulses that are Z-prepared and Z-measured.

        This is the protocol efficiency an asymptotic rate must use to be
        comparable with :func:`finite_key_rate`.
        """
        return self.p_basis * self.match_probability(H)


@dataclass(frozen=True)
class CountAllocation:
    pulses: dict
    kept_sV: object
    zero_cells: frozenset = frozenset()


@dataclass(frozen=True)
class FiniteKeyResult:
    rate: object
    length: object
    s1_lower: object
    e1_upper: object
    n_z: object
    e_z: object
    lambda_ec: object
    unbounded: object
    applied_p: object


def hoeffding_delta(x, eps):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("count must be >= 0")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return np.sqrt(x / 2 * math.log(1 / eps))[()]


def expected_interval(detections, pulses, eps):
    """Interval on the expected count given an observed count."""
    det = np.asarray(detections, dtype=float)
    if np.any(det > np.asarray(pulses)):
        raise ValueError("detections cannot exceed pulses")
    d = hoeffding_delta(det, eps)
    return np.clip(det - d, 0, pulses)[()], np.clip(det + d, 0, pulses)[()]


def allocate_pulses(fk: FiniteKeyParams) -> CountAllocation:
    pulses = {}
    for n, pn in fk.p_setting.items():
        total = np.rint(np.asarray(pn, dtype=float) * fk.n_pulses)
        v = np.floor(total * fk.p_basis * (1 - fk.p_pol))
        d = np.floor(total * (1 - fk.p_basis) * fk.p_pol)
        a = np.floor(total * (1 - fk.p_basis) * (1 - fk.p_pol))
        pulses[(n, V)], pulses[(n, D)], pulses[(n, A)] = v, d, a
        # rounding remainder goes to H
        pulses[(n, H)] = total - v - d - a
    kept = np.floor(np.asarray(fk.p_select) * pulses[(S, V)])
    zero = frozenset(c for c in CELLS if np.any(pulses[c] == 0))
    if np.any(kept == 0):
        zero = zero | {"kept_sV"}
    return CountAllocation(pulses=pulses, kept_sV=kept, zero_cells=zero)


def expected_counts(params: SystemParams, source: SourceModel, geom: ChannelGeometry, fk: FiniteKeyParams) -> ObservableTable:
    """Expected sifted detections and errors per cell, as a count table."""
    alloc = allocate_pulses(fk)
    obs = forward_observables(params, source, geom)
    counts = {}
    for c in CELLS:
        rate = obs.gain[c] * fk.match_probability(c[1])
        counts[c] = CellCounts(alloc.pulses[c], alloc.pulses[c] * rate, alloc.pulses[c] * rate * obs.qber[c])
    r = obs.gain[(S, V)] * fk.match_probability(V)
    kept = CellCounts(alloc.kept_sV, alloc.kept_sV * r, alloc.kept_sV * r * obs.qber[(S, V)])
    return ObservableTable(gain=obs.gain, qber=obs.qber, counts=counts, kept_sV=kept)


def _rate_interval(count, pulses, eps):
    """Interval on a per-pulse rate; an empty cell carries no information."""
    lo, hi = expected_interval(count, pulses, eps)
    pulses = np.asarray(pulses, dtype=float)
    empty = pulses <= 0
    safe = np.where(empty, 1.0, pulses)
    return np.where(empty, 0.0, lo / safe), np.where(empty, 1.0, hi / safe)


def _worst_y1(obs: ObservableTable, source: SourceModel, m: Polarization, eps):
    ends = [_rate_interval(obs.counts[(n, m)].detections, obs.counts[(n, m)].pulses, eps) for n in (S, W, VAC)]
    mu_s, mu_v = source.mu[(S, m)], source.mu[(W, m)]
    vals = [y1_lower(qs, qv, qw, mu_s, mu_v) for qs, qv, qw in itertools.product(*ends)]
    return np.minimum.reduce(vals)


def single_photon_events_lower(obs: ObservableTable, alloc: CountAllocation, source: SourceModel, eps):
    """Lower bound on untagged single-photon events in the sifted Z-basis signal key.

    Understood as balanced: the post-selected polarization contributes only as
    many single-photon pulses as the attenuated one.
    """
    kept_pol = source.excess
    other = H if kept_pol == V else V
    mu_o, mu_k = source.mu[(S, other)], source.mu[(S, kept_pol)]
    t = np.minimum(mu_o * np.exp(-mu_o) * alloc.pulses[(S, other)], mu_k * np.exp(-mu_k) * alloc.kept_sV)
    y1 = {m: _worst_y1(obs, source, m, eps) for m in Z_BASIS}
    return (t * (y1[H] + y1[V]))[()]


def phase_error_upper(obs: ObservableTable, alloc: CountAllocation, source: SourceModel, eps, e0: float = 0.5):
    """Upper bound on the single-photon phase error from X-basis data.

    Returns ``(e1_upper, unbounded)``; ``e1_upper`` is capped at 1/2 and
    ``unbounded`` is set when the data bound it no better than that.
    """
    num, den = 0.0, 0.0
    for m in X_BASIS:
        den = den + _worst_y1(obs, source, m, eps)
        qe = _rate_interval(obs.counts[(W, m)].errors, obs.counts[(W, m)].pulses, eps)
        y0 = _rate_interval(obs.counts[(VAC, m)].detections, obs.counts[(VAC, m)].pulses, eps)
        mu_v = source.mu[(W, m)]
        num = num + np.maximum.reduce([e1y1_upper(a, 1.0, b, e0, mu_v) for a, b in itertools.product(qe, y0)])
    den = np.asarray(den, dtype=float)
    empty = den <= 0
    e = np.where(empty, 0.5, num / np.where(empty, 1.0, den))
    unbounded = empty | (e >= 0.5)
    return np.clip(e, 0.0, 0.5)[()], unbounded[()]


def key_length(s1_lower, e1_upper, lambda_ec, eps_cor, eps_sec):
    raw = (
        np.asarray(s1_lower) * (1 - binary_entropy(np.clip(e1_upper, 0.0, 0.5)))
        - lambda_ec
        - 6 * math.log2(21 / eps_sec)
        - math.log2(2 / eps_cor)
    )
    return np.maximum(0.0, np.floor(raw))[()]


def finite_key_rate(
    params: SystemParams,
    source: SourceModel,
    geom: ChannelGeometry,
    fk: FiniteKeyParams,
    f: float = 1.16,
    obs: ObservableTable = None,
) -> FiniteKeyResult:
    """Key length per pulse sent. Uses expected counts unless ``obs`` is given."""
    alloc = allocate_pulses(fk)
    if obs is None:
        obs = expected_counts(params, source, geom, fk)
    P = fk.p_select
    s1 = single_photon_events_lower(obs, alloc, source, fk.eps_sec)
    e1, unbounded = phase_error_upper(obs, alloc, source, fk.eps_sec, params.e0)
    other = H if source.excess == V else V
    n_z = obs.counts[(S, other)].detections + obs.kept_sV.detections
    err_z = obs.counts[(S, other)].errors + obs.kept_sV.errors
    n_z_arr = np.asarray(n_z, dtype=float)
    e_z = np.where(n_z_arr > 0, err_z / np.where(n_z_arr > 0, n_z_arr, 1.0), 0.0)
    lam = f * n_z_arr * binary_entropy(np.clip(e_z, 0.0, 1.0))
    length = np.where(unbounded, 0.0, key_length(s1, e1, lam, fk.eps_cor, fk.eps_sec))
    return FiniteKeyResult(
        rate=(length / fk.n_pulses)[()],
        length=length[()],
        s1_lower=s1,
        e1_upper=e1,
        n_z=n_z,
        e_z=e_z[()],
        lambda_ec=lam[()],
        unbounded=unbounded,
        applied_p=P,
    )
