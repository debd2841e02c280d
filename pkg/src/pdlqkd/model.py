"""Source, channel and detection model for decoy-state BB84 with PDL.

All scalar functions are written with numpy ufuncs, so every argument may
also be an array; results broadcast. The optimizer relies on this to score a
whole parameter grid in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class Polarization(str, Enum):
    H = "H"
    V = "V"
    D = "D"
    A = "A"

    @property
    def basis(self) -> str:
        return "Z" if self in (Polarization.H, Polarization.V) else "X"


class Setting(str, Enum):
    SIGNAL = "s"
    DECOY = "v"
    VACUUM = "w"


Z_BASIS = (Polarization.H, Polarization.V)
X_BASIS = (Polarization.D, Polarization.A)
CELLS = tuple((n, m) for n in Setting for m in Polarization)


def _check_prob(name, value):
    v = np.asarray(value, dtype=float)
    if np.any(v < 0) or np.any(v > 1) or np.any(np.isnan(v)):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Detector and fiber constants. Defaults are the on-chip QKD values."""

    e_d: float = 0.015
    y0: float = 2e-5
    eta_bob: float = 0.2
    alpha: float = 0.2  # dB/km
    e0: float = 0.5

    def __post_init__(self):
        for name in ("e_d", "y0", "eta_bob", "e0"):
            _check_prob(name, getattr(self, name))
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")


@dataclass(frozen=True)
class ChannelGeometry:
    distance_km: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.distance_km) < 0):
            raise ValueError(f"distance_km must be >= 0, got {self.distance_km!r}")


@dataclass(frozen=True)
class SourceModel:
    """Mean photon number of every (setting, polarization) pair.

    ``p_select`` is the probability of keeping a signal pulse of the
    over-represented polarization ``excess`` (V by convention).
    """

    mu: Mapping[tuple, ArrayLike]
    pdl_db: ArrayLike = 0.0
    p_select: ArrayLike = 1.0
    excess: Polarization = Polarization.V

    def __post_init__(self):
        missing = [c for c in CELLS if c not in self.mu]
        if missing:
            raise ValueError(f"mu is missing cells {missing}")
        for c in CELLS:
            if np.any(np.asarray(self.mu[c]) < 0):
                raise ValueError(f"mean photon number for {c} must be >= 0")
        if np.any(np.asarray(self.pdl_db) < 0):
            raise ValueError("pdl_db must be >= 0")
        p = np.asarray(self.p_select)
        if np.any(p <= 0) or np.any(p > 1):
            raise ValueError(f"p_select must lie in (0, 1], got {self.p_select!r}")

    @property
    def L(self) -> ArrayLike:
        return pdl_loss_factor(self.pdl_db)

    def __getitem__(self, key):
        return self.mu[key]

    @classmethod
    def symmetric(cls, mu_s, mu_v=0.0, pdl_db=0.0, p_select=1.0) -> "SourceModel":
        """Same PDL in both bases: H and D are attenuated by L, V and A are not.

        The decoy setting suffers the same attenuation as the signal.
        """
        L = pdl_loss_factor(pdl_db)
        mu = {}
        for n, nominal in ((Setting.SIGNAL, mu_s), (Setting.DECOY, mu_v), (Setting.VACUUM, 0.0)):
            mu[(n, Polarization.H)] = L * nominal
            mu[(n, Polarization.V)] = nominal
            mu[(n, Polarization.D)] = L * nominal
            mu[(n, Polarization.A)] = nominal
        return cls(mu=mu, pdl_db=pdl_db, p_select=p_select)

    def with_p_select(self, p_select) -> "SourceModel":
        return SourceModel(mu=self.mu, pdl_db=self.pdl_db, p_select=p_select, excess=self.excess)


@dataclass(frozen=True)
class CellCounts:
    pulses: ArrayLike
    detections: ArrayLike
    errors: ArrayLike

    def __post_init__(self):
        if np.any(np.asarray(self.errors) > np.asarray(self.detections)) or np.any(
            np.asarray(self.detections) > np.asarray(self.pulses)
        ):
            raise ValueError("counts must satisfy errors <= detections <= pulses")


@dataclass(frozen=True)
class ObservableTable:
    """Gains and QBERs for the twelve (setting, polarization) cells.

    When built from counts, ``counts`` holds the raw cell counts and
    ``kept_sV`` the post-selected subset of the vertical signal cell.
    """

    gain: Mapping[tuple, ArrayLike]
    qber: Mapping[tuple, ArrayLike]
    counts: Optional[Mapping[tuple, CellCounts]] = None
    kept_sV: Optional[CellCounts] = None
    flagged: frozenset = field(default_factory=frozenset)

    def Q(self, n: Setting, m: Polarization) -> ArrayLike:
        return self.gain[(n, m)]

    def E(self, n: Setting, m: Polarization) -> ArrayLike:
        return self.qber[(n, m)]


def plasma_dispersion_shift(delta_ne, delta_nh):
    """Refractive-index and absorption change in silicon at 1.55 um.

    Carrier densities in cm^-3; returns (delta_n, delta_alpha [cm^-1]).
    """
    ne = np.asarray(delta_ne, dtype=float)
    nh = np.asarray(delta_nh, dtype=float)
    if np.any(ne < 0) or np.any(nh < 0):
        raise ValueError("carrier density changes must be >= 0")
    delta_n = -(8.8e-22 * ne + 8.5e-18 * nh**0.8)
    delta_alpha = 8.5e-18 * ne + 6.0e-18 * nh
    return delta_n[()], delta_alpha[()]


def poisson_photon_pmf(mu, i: int):
    if i < 0 or int(i) != i:
        raise ValueError("photon number must be a non-negative integer")
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mean photon number must be >= 0")
    if i == 0:
        return np.exp(-mu)[()]
    # log space keeps large i finite; mu = 0 gives exp(-inf) = 0
    with np.errstate(divide="ignore"):
        return np.exp(i * np.log(mu) - mu - math.lgamma(i + 1))[()]


def pdl_loss_factor(pdl_db):
    pdl = np.asarray(pdl_db, dtype=float)
    if np.any(pdl < 0):
        raise ValueError("PDL must be >= 0 dB")
    return (10.0 ** (-pdl / 10.0))[()]


def system_transmittance(params: SystemParams, geom: ChannelGeometry):
    d = np.asarray(geom.distance_km, dtype=float)
    return (params.eta_bob * 10.0 ** (-params.alpha * d / 10.0))[()]


def yield_n(y0, eta_sys, i):
    return 1.0 - (1.0 - y0) * (1.0 - eta_sys) ** i


def gain(mu, y0, eta_sys):
    return -np.expm1(np.log1p(-np.asarray(y0, dtype=float)) - np.asarray(mu) * eta_sys)


def error_n(y0, y_i, e_d, e0=0.5):
    y_i = np.asarray(y_i, dtype=float)
    if np.any(y_i <= 0):
        raise ValueError("error rate undefined for zero yield")
    return ((y0 * e0 + (y_i - y0) * e_d) / y_i)[()]


def qber(mu, y0, eta_sys, e_d, e0=0.5):
    q = gain(mu, y0, eta_sys)
    if np.any(q <= 0):
        raise ValueError("QBER undefined for zero gain")
    return (y0 * (e0 - e_d) + e_d * q) / q


def binary_entropy(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("binary entropy is defined on [0, 1]")
    inner = (x > 0) & (x < 1)
    xs = np.where(inner, x, 0.5)
    h = -xs * np.log2(xs) - (1 - xs) * np.log2(1 - xs)
    return np.where(inner, h, 0.0)[()]


def forward_observables(params: SystemParams, source: SourceModel, geom: ChannelGeometry) -> ObservableTable:
    """Analytic gains and QBERs on a polarization-independent channel.

    Cells with zero gain (no light and no background) get QBER 0 and are flagged.
    """
    eta = system_transmittance(params, geom)
    gains, qbers, flagged = {}, {}, set()
    for cell in CELLS:
        mu = source.mu[cell]
        q = gain(mu, params.y0, eta)
        gains[cell] = q
        if np.any(q <= 0):
            flagged.add(cell)
            safe = np.where(q > 0, q, 1.0)
            qbers[cell] = np.where(q > 0, (params.y0 * (params.e0 - params.e_d) + params.e_d * q) / safe, 0.0)[()]
        else:
            qbers[cell] = qber(mu, params.y0, eta, params.e_d, params.e0)
    return ObservableTable(gain=gains, qber=qbers, flagged=frozenset(flagged))


def single_photon_truth(params: SystemParams, geom: ChannelGeometry):
    """Exact single-photon yield and error rate of the channel model."""
    eta = system_transmittance(params, geom)
    y1 = yield_n(params.y0, eta, 1)
    return y1, error_n(params.y0, y1, params.e_d, params.e0)
