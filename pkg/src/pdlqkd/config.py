"""Scenario configuration: INI file sections plus command-line overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from typing import Optional

from .asymptotic import RateInputs, heuristic_p_optimal, solve_optimal_mu
from .finite import FiniteKeyParams
from .model import ChannelGeometry, SourceModel, SystemParams, pdl_loss_factor
from .optimizer import MODES, GridDefaults, Scenario


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


SECTIONS = {
    "system": ("e_d", "y0", "eta_bob", "alpha", "e0"),
    "source": ("mu_s", "mu_v", "pdl_db", "p_select"),
    "channel": ("distance_km",),
    "rate": ("q", "f"),
    "finite": ("n_pulses", "p_signal", "p_decoy", "p_vacuum", "p_basis", "eps_sec", "eps_cor", "sifting"),
    "optimizer": ("mu_s_step", "mu_v_step", "p_step", "prob_step", "levels"),
    "run": ("mode", "seed", "threads", "n_seeds", "photon_resolved"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    e_d: float = 0.015
    y0: float = 2e-5
    eta_bob: float = 0.2
    alpha: float = 0.2
    e0: float = 0.5
    # None: mu_s from the stationarity root, P from the balancing heuristic
    mu_s: Optional[float] = None
    mu_v: float = 0.1
    pdl_db: float = 0.0
    p_select: Optional[float] = None
    distance_km: float = 50.0
    q: float = 0.5
    f: float = 1.16
    n_pulses: float = 1e10
    p_signal: float = 0.8
    p_decoy: float = 0.15
    p_vacuum: float = 0.05
    p_basis: float = 0.5
    eps_sec: float = 1e-10
    eps_cor: float = 1e-10
    sifting: bool = True
    mu_s_step: float = 0.05
    mu_v_step: float = 0.01
    p_step: float = 0.02
    prob_step: float = 0.05
    levels: int = 6
    mode: str = "asymptotic"
    seed: Optional[int] = None
    threads: int = 1
    n_seeds: int = 100
    photon_resolved: bool = True

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        values = {}
        for section in cp.sections():
            if section not in SECTIONS:
                raise ConfigError(section, "unknown section")
            for key, raw in cp.items(section):
                if key not in SECTIONS[section]:
                    raise ConfigError(f"{section}.{key}", "unknown field")
                values[key] = raw
        return cls().updated(values)

    def updated(self, values: dict) -> "ScenarioConfig":
        """Return a copy with string or typed ``values`` parsed and validated."""
        types = {f.name: f.type for f in fields(self)}
        parsed = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in types:
                raise ConfigError(key, "unknown field")
            parsed[key] = _parse(key, types[key], raw)
        cfg = replace(self, **parsed)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("e_d", "y0", "eta_bob", "e0", "p_signal", "p_decoy", "p_vacuum", "p_basis"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(_qual(name), "must lie in [0, 1]")
        for name in ("alpha", "pdl_db", "distance_km"):
            if getattr(self, name) < 0:
                raise ConfigError(_qual(name), "must be >= 0")
        if self.mu_s is not None and self.mu_s <= 0:
            raise ConfigError(_qual("mu_s"), "must be > 0")
        if self.mu_v < 0:
            raise ConfigError(_qual("mu_v"), "must be >= 0")
        if self.p_select is not None and not 0 < self.p_select <= 1:
            raise ConfigError(_qual("p_select"), "must lie in (0, 1]")
        if not 0 < self.q <= 1:
            raise ConfigError(_qual("q"), "must lie in (0, 1]")
        if self.f < 1:
            raise ConfigError(_qual("f"), "must be >= 1")
        if self.n_pulses < 1:
            raise ConfigError(_qual("n_pulses"), "must be >= 1")
        if abs(self.p_signal + self.p_decoy + self.p_vacuum - 1) > 1e-9:
            raise ConfigError(_qual("p_vacuum"), "setting probabilities must sum to 1")
        for name in ("eps_sec", "eps_cor"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(_qual(name), "must lie in (0, 1)")
        for name in ("mu_s_step", "mu_v_step", "p_step", "prob_step"):
            if getattr(self, name) <= 0:
                raise ConfigError(_qual(name), "must be > 0")
        if self.levels < 0:
            raise ConfigError(_qual("levels"), "must be >= 0")
        if self.mode not in MODES:
            raise ConfigError(_qual("mode"), f"must be one of {', '.join(MODES)}")
        if self.threads < 1:
            raise ConfigError(_qual("threads"), "must be >= 1")
        if self.n_seeds < 1:
            raise ConfigError(_qual("n_seeds"), "must be >= 1")

    @property
    def L(self) -> float:
        return float(pdl_loss_factor(self.pdl_db))

    def system(self) -> SystemParams:
        return SystemParams(self.e_d, self.y0, self.eta_bob, self.alpha, self.e0)

    def geometry(self) -> ChannelGeometry:
        return ChannelGeometry(self.distance_km)

    def inputs(self) -> RateInputs:
        return RateInputs(self.q, self.f)

    def resolved_mu_s(self) -> float:
        if self.mu_s is not None:
            return self.mu_s
        return solve_optimal_mu(self.L, self.e_d, self.f)

    def resolved_p_select(self) -> float:
        if self.p_select is not None:
            return self.p_select
        return float(heuristic_p_optimal(self.resolved_mu_s(), self.L))

    def source(self) -> SourceModel:
        mu_s = self.resolved_mu_s()
        if self.mode != "asymptotic" and not 0 < self.mu_v < mu_s:
            raise ConfigError(_qual("mu_v"), f"decoy intensity must lie in (0, mu_s={mu_s:g})")
        return SourceModel.symmetric(mu_s, self.mu_v, self.pdl_db, self.resolved_p_select())

    def finite(self) -> FiniteKeyParams:
        return FiniteKeyParams(
            n_pulses=self.n_pulses,
            p_signal=self.p_signal,
            p_decoy=self.p_decoy,
            p_vacuum=self.p_vacuum,
            p_basis=self.p_basis,
            eps_cor=self.eps_cor,
            eps_sec=self.eps_sec,
            p_select=self.resolved_p_select(),
            sifting=self.sifting,
        )

    def grid(self) -> GridDefaults:
        return GridDefaults(
            mu_s_step=self.mu_s_step,
            mu_v_step=self.mu_v_step,
            p_step=self.p_step,
            prob_step=self.prob_step,
            levels=self.levels,
        )

    def scenario(self) -> Scenario:
        return Scenario(self.system(), self.geometry(), self.pdl_db, self.inputs(), self.finite())


def _qual(name: str) -> str:
    for section, names in SECTIONS.items():
        if name in names:
            return f"{section}.{name}"
    return name


def _parse(key, typ, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if "Optional" in str(typ) and text.lower() in ("", "auto", "none"):
            return None
        if "bool" in str(typ):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in str(typ):
            return int(float(text)) if key != "seed" else int(text, 0)
        if "float" in str(typ):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(_qual(key), f"cannot parse {raw!r}") from None
