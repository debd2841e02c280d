"""Seeded sampling of detection and error counts from the analytic model.

PRNG: numpy ``PCG64`` bit generator, one independent substream per cell,
derived as ``SeedSequence(seed, spawn_key=(cell_index, part))``. Results do
not depend on the order cells are generated in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .finite import FiniteKeyParams, allocate_pulses
from .model import (
    CELLS,
    CellCounts,
    ChannelGeometry,
    ObservableTable,
    Polarization,
    Setting,
    SourceModel,
    SystemParams,
    error_n,
    forward_observables,
    system_transmittance,
    yield_n,
)

RNG_ALGORITHM = "numpy.random.PCG64"
RNG_VERSION = np.__version__
TAIL_MASS = 1e-15

S, V = Setting.SIGNAL, Polarization.V


@dataclass(frozen=True)
class SinglePhotonTruth:
    pulses: int
    detections: int
    errors: int


@dataclass(frozen=True)
class SimulationRun:
    seed: int
    fk: FiniteKeyParams
    params: SystemParams
    source: SourceModel
    geom: ChannelGeometry
    counts: ObservableTable
    truth: dict = None  # cell or "kept_sV" -> SinglePhotonTruth, photon-resolved runs only
    rng: str = f"{RNG_ALGORITHM} (numpy {RNG_VERSION})"


def _generator(seed: int, cell_index: int, part: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(cell_index, part))
    return np.random.Generator(np.random.PCG64(ss))


def _photon_pmf(mu: float) -> np.ndarray:
    """Poisson weights up to where the tail mass drops below TAIL_MASS; the last bin holds the tail."""
    probs = [math.exp(-mu)]
    i, total = 0, probs[0]
    while 1.0 - total > TAIL_MASS and i < 1000:
        i += 1
        probs.append(probs[-1] * mu / i)
        total += probs[-1]
    p = np.array(probs)
    p[-1] += max(0.0, 1.0 - p.sum())
    return p / p.sum()


def _sample_cell(rng, n: int, mu: float, q: float, e: float, match: float, params, eta, resolved: bool):
    if n == 0:
        return 0, 0, SinglePhotonTruth(0, 0, 0)
    if not resolved:
        det = int(rng.binomial(n, min(1.0, q * match)))
        err = int(rng.binomial(det, e)) if det else 0
        return det, err, None
    pmf = _photon_pmf(mu)
    n_i = rng.multinomial(n, pmf)
    i = np.arange(len(pmf))
    y_i = yield_n(params.y0, eta, i)
    det_i = rng.binomial(n_i, np.minimum(1.0, y_i * match))
    e_i = np.where(y_i > 0, error_n(params.y0, np.where(y_i > 0, y_i, 1.0), params.e_d, params.e0), 0.0)
    err_i = rng.binomial(det_i, e_i)
    n1 = int(n_i[1]) if len(n_i) > 1 else 0
    d1 = int(det_i[1]) if len(det_i) > 1 else 0
    e1 = int(err_i[1]) if len(err_i) > 1 else 0
    return int(det_i.sum()), int(err_i.sum()), SinglePhotonTruth(n1, d1, e1)


def simulate_counts(
    params: SystemParams,
    source: SourceModel,
    geom: ChannelGeometry,
    fk: FiniteKeyParams,
    seed: int,
    photon_resolved: bool = False,
) -> SimulationRun:
    """Sample sifted detection and error counts for every cell.

    Default fidelity draws detections ~ Binomial(N, Q * match) per cell.
    ``photon_resolved`` splits each cell by Poisson photon number first and
    records the true single-photon detections. The vertical signal cell is
    sampled as its post-selected part plus the discarded remainder.
    """
    alloc = allocate_pulses(fk)
    obs = forward_observables(params, source, geom)
    eta = system_transmittance(params, geom)
    counts, truth = {}, {}
    kept = None
    for idx, cell in enumerate(CELLS):
        n_total = int(alloc.pulses[cell])
        mu, q, e = float(source.mu[cell]), float(obs.gain[cell]), float(obs.qber[cell])
        match = fk.match_probability(cell[1])
        parts = [n_total]
        if cell == (S, V):
            k = int(alloc.kept_sV)
            parts = [k, n_total - k]
        det_sum = err_sum = 0
        truths = []
        for part, n in enumerate(parts):
            det, err, t = _sample_cell(_generator(seed, idx, part), n, mu, q, e, match, params, eta, photon_resolved)
            det_sum += det
            err_sum += err
            truths.append(t)
            if cell == (S, V) and part == 0:
                kept = CellCounts(n, det, err)
                if photon_resolved:
                    truth["kept_sV"] = t
        counts[cell] = CellCounts(n_total, det_sum, err_sum)
        if photon_resolved:
            truth[cell] = SinglePhotonTruth(*(sum(getattr(t, f) for t in truths) for f in ("pulses", "detections", "errors")))
    table = ObservableTable(gain=obs.gain, qber=obs.qber, counts=counts, kept_sV=kept)
    return SimulationRun(seed, fk, params, source, geom, table, truth if photon_resolved else None)


def empirical_rates(counts: ObservableTable) -> ObservableTable:
    """Observed gains and QBERs; cells with no detections get QBER 0 and are flagged."""
    gains, qbers, flagged = {}, {}, set()
    for cell, c in counts.counts.items():
        if c.pulses <= 0:
            raise ValueError(f"cell {cell} has no pulses")
        gains[cell] = c.detections / c.pulses
        if c.detections == 0:
            qbers[cell] = 0.0
            flagged.add(cell)
        else:
            qbers[cell] = c.errors / c.detections
    return ObservableTable(gain=gains, qber=qbers, counts=counts.counts, kept_sV=counts.kept_sV, flagged=frozenset(flagged))
