"""Deterministic grid search with local refinement, and the key-rate objectives it maximizes.

Objectives take a dict of equal-length 1-D parameter arrays and return one
rate per point, so a whole grid level is scored in a single vectorized call.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .asymptotic import RateInputs, heuristic_p_optimal, key_rate_asymptotic
from .decoy import key_rate_two_decoy
from .finite import FiniteKeyParams, finite_key_rate
from .model import ChannelGeometry, SourceModel, SystemParams, pdl_loss_factor

MODES = ("asymptotic", "two-decoy", "finite")
CHUNK = 262_144


@dataclass(frozen=True)
class Axis:
    """Search axis on the half-open interval (lo, hi]."""

    name: str
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi <= self.lo:
            raise ValueError(f"axis {self.name}: need finite lo < hi")
        if self.step <= 0:
            raise ValueError(f"axis {self.name}: step must be > 0")

    def coarse(self) -> np.ndarray:
        n = int(np.floor((self.hi - self.lo) / self.step + 1e-9))
        return np.round(self.lo + self.step * np.arange(1, n + 1), 12)

    def contains(self, x):
        return (x > self.lo + 1e-12) & (x <= self.hi + 1e-12)


@dataclass(frozen=True)
class SearchSpec:
    axes: tuple
    levels: int = 6
    constraint: Optional[Callable] = None
    max_moves: int = 200
    reach: int = 2  # neighbourhood half-width, in refinement steps

    @property
    def names(self):
        return tuple(a.name for a in self.axes)


@dataclass(frozen=True)
class SearchResult:
    params: dict
    value: float
    coarse_value: float
    coarse_params: dict
    n_evals: int
    all_zero: bool = False
    at_boundary: tuple = ()


def _evaluate(objective, pts: dict) -> np.ndarray:
    n = len(next(iter(pts.values())))
    out = np.empty(n)
    for start in range(0, n, CHUNK):
        sl = {k: v[start:start + CHUNK] for k, v in pts.items()}
        out[start:start + CHUNK] = np.broadcast_to(objective(sl), (len(next(iter(sl.values()))),))
    return np.where(np.isnan(out), -np.inf, out)


def _argmax(values: np.ndarray, pts: dict, names) -> int:
    """Index of the maximum; ties go to the smallest parameters in axis order."""
    best = values.max()
    cand = np.flatnonzero(values == best)
    if len(cand) == 1:
        return int(cand[0])
    order = np.lexsort([pts[n][cand] for n in reversed(names)])
    return int(cand[order[0]])


def _feasible(spec: SearchSpec, pts: dict) -> np.ndarray:
    ok = np.ones(len(next(iter(pts.values()))), dtype=bool)
    for a in spec.axes:
        ok &= a.contains(pts[a.name])
    if spec.constraint is not None:
        ok &= np.asarray(spec.constraint(pts), dtype=bool)
    return ok


def optimize(spec: SearchSpec, objective: Callable, extra_points: Sequence[dict] = ()) -> SearchResult:
    """Coarse grid scan, then pattern refinement with the step halved each level.

    ``extra_points`` are scored together with the coarse grid, which lets a
    sweep warm-start from the previous optimum.
    """
    names = spec.names
    mesh = np.meshgrid(*[a.coarse() for a in spec.axes], indexing="ij")
    pts = {n: m.ravel() for n, m in zip(names, mesh)}
    for extra in extra_points:
        for n in names:
            pts[n] = np.append(pts[n], extra[n])
    ok = _feasible(spec, pts)
    pts = {n: v[ok] for n, v in pts.items()}
    if len(pts[names[0]]) == 0:
        raise ValueError("search grid has no feasible point")
    values = _evaluate(objective, pts)
    n_evals = len(values)
    i = _argmax(values, pts, names)
    x = np.array([pts[n][i] for n in names])
    v = float(values[i])
    coarse_v, coarse_x = v, dict(zip(names, x.tolist()))

    all_zero = bool(np.all(values == 0))
    if not all_zero:
        offsets = np.array(list(itertools.product(np.arange(-spec.reach, spec.reach + 1.0), repeat=len(names))))
        steps = np.array([a.step for a in spec.axes])
        for level in range(1, spec.levels + 1):
            h = steps / 2**level
            for _ in range(spec.max_moves):
                cand = np.round(x + offsets * h, 12)
                cpts = {n: cand[:, j] for j, n in enumerate(names)}
                ok = _feasible(spec, cpts)
                cpts = {n: c[ok] for n, c in cpts.items()}
                cvals = _evaluate(objective, cpts)
                n_evals += len(cvals)
                j = _argmax(cvals, cpts, names)
                if cvals[j] > v:
                    v = float(cvals[j])
                    x = np.array([cpts[n][j] for n in names])
                else:
                    break

    params = dict(zip(names, x.tolist()))
    boundary = tuple(a.name for a in spec.axes if np.isclose(params[a.name], a.coarse()[0]) or np.isclose(params[a.name], a.hi))
    return SearchResult(params, v, coarse_v, coarse_x, n_evals, all_zero, boundary)


@dataclass(frozen=True)
class GridDefaults:
    mu_s_max: float = 2.5
    mu_s_step: float = 0.05
    mu_v_max: float = 0.3
    mu_v_step: float = 0.01
    p_step: float = 0.02
    prob_step: float = 0.05
    levels: int = 6


@dataclass(frozen=True)
class Scenario:
    params: SystemParams = SystemParams()
    geom: ChannelGeometry = ChannelGeometry(50.0)
    pdl_db: float = 0.0
    inputs: RateInputs = RateInputs()
    fk: FiniteKeyParams = FiniteKeyParams()


@dataclass(frozen=True)
class OptimizedRate:
    mode: str
    params: dict
    result: object
    search: SearchResult
    p_heuristic: float = field(default=float("nan"))

    @property
    def rate(self) -> float:
        return float(self.result.rate)


def _p_of(pts, L, p_mode):
    if p_mode == "free":
        return pts["p_select"]
    if p_mode == "heuristic":
        return heuristic_p_optimal(pts["mu_s"], L)
    return np.full_like(pts["mu_s"], float(p_mode))


def make_evaluator(scenario: Scenario, mode: str, p_mode="free"):
    """Vectorized rate evaluator for ``mode`` taking a dict of parameter arrays."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "finite" and p_mode == "free":
        raise ValueError("finite mode supports p_mode 'heuristic' or a fixed value")
    L = pdl_loss_factor(scenario.pdl_db)

    def evaluate(pts):
        P = _p_of(pts, L, p_mode)
        mu_v = pts.get("mu_v", 0.0)
        src = SourceModel.symmetric(pts["mu_s"], mu_v, scenario.pdl_db, P)
        if mode == "asymptotic":
            return key_rate_asymptotic(scenario.params, src, scenario.geom, scenario.inputs)
        if mode == "two-decoy":
            return key_rate_two_decoy(scenario.params, src, scenario.geom, scenario.inputs)
        fk = replace(
            scenario.fk,
            p_signal=pts["p_signal"],
            p_decoy=pts["p_decoy"],
            p_vacuum=1.0 - pts["p_signal"] - pts["p_decoy"],
            p_select=P,
        )
        return finite_key_rate(scenario.params, src, scenario.geom, fk, scenario.inputs.f)

    return evaluate


def search_spec(mode: str, p_mode="free", grid: GridDefaults = GridDefaults()) -> SearchSpec:
    axes = [Axis("mu_s", 0.0, grid.mu_s_max, grid.mu_s_step)]
    cons = []
    if mode != "asymptotic":
        axes.append(Axis("mu_v", 0.0, grid.mu_v_max, grid.mu_v_step))
        cons.append(lambda p: p["mu_v"] < p["mu_s"])
    if p_mode == "free":
        axes.append(Axis("p_select", 0.0, 1.0, grid.p_step))
    if mode == "finite":
        axes.append(Axis("p_signal", 0.0, 1.0, grid.prob_step))
        axes.append(Axis("p_decoy", 0.0, 1.0, grid.prob_step))
        cons.append(lambda p: p["p_signal"] + p["p_decoy"] < 1.0 - 1e-9)

    def constraint(p):
        ok = np.ones(len(p["mu_s"]), dtype=bool)
        for c in cons:
            ok &= c(p)
        return ok

    return SearchSpec(axes=tuple(axes), levels=grid.levels, constraint=constraint if cons else None)


def _balancing_line(spec: SearchSpec, L, grid: GridDefaults) -> dict:
    """Candidates on P = min(1, P_h(mu_s)), where the two untagged terms balance.

    The free-P rate has a kink along this curve and its maximum over P sits on
    it, but the curve is not aligned with the search lattice, so the pattern
    moves alone can stall next to it. Scoring it at a fine mu_s resolution
    gives the refinement a start on the ridge.
    """
    axes = {a.name: a for a in spec.axes}
    fine = axes["mu_s"].step / 2**grid.levels
    mu_s = np.round(np.arange(fine, axes["mu_s"].hi + fine / 2, fine), 12)
    cols = {"mu_s": mu_s}
    if "mu_v" in axes:
        mu_v = axes["mu_v"].coarse()
        cols = {"mu_s": np.repeat(mu_s, len(mu_v)), "mu_v": np.tile(mu_v, len(mu_s))}
    cols["p_select"] = np.asarray(heuristic_p_optimal(cols["mu_s"], L), dtype=float)
    return cols


def optimize_rate(
    scenario: Scenario,
    mode: str = "asymptotic",
    p_mode="free",
    grid: GridDefaults = GridDefaults(),
    extra_points: Sequence[dict] = (),
) -> OptimizedRate:
    """Maximize the key rate of ``mode`` over its free parameters.

    ``p_mode`` is ``"free"`` (P searched), ``"heuristic"`` (P balances the
    untagged single photons at each mu_s) or a fixed probability.
    """
    evaluate = make_evaluator(scenario, mode, p_mode)
    spec = search_spec(mode, p_mode, grid)
    L = pdl_loss_factor(scenario.pdl_db)
    extra = list(extra_points)
    if p_mode == "free":
        extra.append(_balancing_line(spec, L, grid))
    res = optimize(spec, lambda pts: evaluate(pts).rate, extra)
    best = {k: np.array([v]) for k, v in res.params.items()}
    scalar = evaluate(best)
    result = type(scalar)(**{k: (np.asarray(v).reshape(-1)[0] if np.ndim(v) else v) for k, v in vars(scalar).items()})
    params = dict(res.params)
    params["p_select"] = float(_p_of(best, L, p_mode)[0])
    return OptimizedRate(mode, params, result, res, float(heuristic_p_optimal(params["mu_s"], L)))


AXES = ("distance", "pdl", "n")


def scenario_at(scenario: Scenario, axis: str, value) -> Scenario:
    if axis == "distance":
        return replace(scenario, geom=ChannelGeometry(float(value)))
    if axis == "pdl":
        return replace(scenario, pdl_db=float(value))
    if axis == "n":
        return replace(scenario, fk=replace(scenario.fk, n_pulses=float(value)))
    raise ValueError(f"unknown sweep axis {axis!r}")


def sweep(
    scenario: Scenario,
    axis: str,
    values,
    mode: str = "asymptotic",
    p_mode="free",
    grid: GridDefaults = GridDefaults(),
    threads: int = 1,
) -> list:
    """One optimization per axis value, returned in ascending axis order.

    Along the N axis each point is warm-started from the previous optimum,
    so the optimized finite-key rate cannot drop as N grows.
    """
    values = sorted(float(v) for v in values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if axis == "n":
        out, prev = [], ()
        for v in values:
            r = optimize_rate(scenario_at(scenario, axis, v), mode, p_mode, grid, prev)
            out.append(r)
            prev = (r.search.params,) if r.rate > 0 else ()
        return out

    def run(v):
        return optimize_rate(scenario_at(scenario, axis, v), mode, p_mode, grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(run, values))
    return [run(v) for v in values]
