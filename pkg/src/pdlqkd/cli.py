"""Command-line entry point: keyrate, optimize, sweep, validate, simulate.

Exit codes: 0 success, 1 configuration error, 2 estimator dominance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import asdict

import numpy as np

from .asymptotic import key_rate_asymptotic
from .config import ConfigError, ScenarioConfig
from .decoy import key_rate_two_decoy, y1_deviation
from .finite import finite_key_rate
from .montecarlo import RNG_ALGORITHM, RNG_VERSION, simulate_counts
from .optimizer import optimize_rate, sweep
from .validation import validate_estimators

EXIT_OK, EXIT_CONFIG, EXIT_DOMINANCE = 0, 1, 2

# flag -> config field
OVERRIDES = {
    "mode": "mode",
    "distance_km": "distance_km",
    "pdl_db": "pdl_db",
    "n_pulses": "n_pulses",
    "eps_sec": "eps_sec",
    "eps_cor": "eps_cor",
    "q": "q",
    "f": "f",
    "seed": "seed",
    "threads": "threads",
    "mu_s": "mu_s",
    "mu_v": "mu_v",
    "p_select": "p_select",
    "n_seeds": "n_seeds",
    "photon_resolved": "photon_resolved",
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, np.ndarray) and v.ndim == 0:
        return _fmt(v[()])
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def _log10(r) -> float:
    r = float(r)
    return math.log10(r) if r > 0 else float("-inf")


def render(rows: list, fmt: str) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in header])
        return buf.getvalue()
    if len(rows) == 1:
        width = max(len(k) for k in header)
        return "".join(f"{k:<{width}}  {_fmt(v)}\n" for k, v in rows[0].items())
    cells = [[_fmt(r[k]) for k in header] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _context(cfg: ScenarioConfig) -> dict:
    return {"mode": cfg.mode, "distance_km": cfg.distance_km, "pdl_db": cfg.pdl_db}


def _scalar(x):
    return np.asarray(x).reshape(-1)[0].item() if np.ndim(x) else (x.item() if hasattr(x, "item") else x)


def cmd_keyrate(cfg: ScenarioConfig) -> list:
    src = cfg.source()
    row = _context(cfg)
    row.update(mu_s=cfg.resolved_mu_s(), mu_v=cfg.mu_v if cfg.mode != "asymptotic" else 0.0, p_select=cfg.resolved_p_select())
    if cfg.mode == "finite":
        row.update(n_pulses=cfg.n_pulses)
        res = finite_key_rate(cfg.system(), src, cfg.geometry(), cfg.finite(), cfg.f)
        vals = {k: _scalar(v) for k, v in asdict(res).items() if k != "applied_p"}
    else:
        fn = key_rate_asymptotic if cfg.mode == "asymptotic" else key_rate_two_decoy
        res = fn(cfg.system(), src, cfg.geometry(), cfg.inputs())
        vals = {k: _scalar(v) for k, v in asdict(res).items() if k != "applied_p"}
    row["rate"] = vals.pop("rate")
    row["log10_rate"] = _log10(row["rate"])
    row.update(vals)
    return [row]


def _p_mode(arg, cfg):
    if arg is not None:
        if arg in ("free", "heuristic"):
            return arg
        try:
            return float(arg)
        except ValueError:
            raise ConfigError("p_mode", f"expected free, heuristic or a probability, got {arg!r}") from None
    if cfg.p_select is not None:
        return cfg.p_select
    return "heuristic" if cfg.mode == "finite" else "free"


def _opt_row(cfg, point, r) -> dict:
    row = dict(point)
    row.update({k: float(v) for k, v in sorted(r.params.items())})
    row["p_heuristic"] = r.p_heuristic
    row["rate"] = r.rate
    row["log10_rate"] = _log10(r.rate)
    row["all_zero"] = r.search.all_zero
    row["at_boundary"] = r.search.at_boundary
    return row


def cmd_optimize(cfg: ScenarioConfig, p_mode=None) -> list:
    r = optimize_rate(cfg.scenario(), cfg.mode, _p_mode(p_mode, cfg), cfg.grid())
    return [_opt_row(cfg, _context(cfg), r)]


SWEEP_AXES = {"distance": "distance_km", "pdl": "pdl_db", "n": "n_pulses", "decoy-intensity": "mu_v"}


def parse_values(text: str) -> list:
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    if text is None or not text.strip():
        raise ConfigError("values", "empty range")
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError("values", "need start <= stop and step > 0")
            n = int(math.floor((stop - start) / step + 1e-9))
            return [round(start + i * step, 12) for i in range(n + 1)]
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("values", f"cannot parse {text!r}") from None
    if not vals:
        raise ConfigError("values", "empty range")
    return vals


def cmd_sweep(cfg: ScenarioConfig, axis: str, values: list, p_mode=None) -> list:
    if not values:
        raise ConfigError("values", "empty range")
    if axis not in SWEEP_AXES:
        raise ConfigError("axis", f"must be one of {', '.join(SWEEP_AXES)}")
    field = SWEEP_AXES[axis]
    for v in values:
        cfg.updated({field: v})  # field-level validation of every point
    if axis == "decoy-intensity":
        mu_s = cfg.resolved_mu_s()
        rows = []
        for v in sorted(values):
            if not 0 < v < mu_s:
                raise ConfigError("source.mu_v", f"decoy intensity must lie in (0, mu_s={mu_s:g})")
            rows.append({"mu_v": v, "distance_km": cfg.distance_km, "pdl_db": cfg.pdl_db, "mu_s": mu_s,
                         "beta": float(y1_deviation(cfg.system(), cfg.geometry(), cfg.pdl_db, mu_s, v))})
        return rows
    results = sweep(cfg.scenario(), axis, values, cfg.mode, _p_mode(p_mode, cfg), cfg.grid(), cfg.threads)
    return [_opt_row(cfg, {field: v, **{k: x for k, x in _context(cfg).items() if k != field}}, r)
            for v, r in zip(sorted(float(v) for v in values), results)]


def cmd_validate(cfg: ScenarioConfig):
    """Per-seed rows and the list of dominance violations."""
    if cfg.mode not in ("finite", "two-decoy"):
        raise ConfigError("run.mode", "validate needs mode finite or two-decoy")
    seed0 = 0 if cfg.seed is None else cfg.seed
    seeds = range(seed0, seed0 + cfg.n_seeds)
    rep = validate_estimators(cfg.system(), cfg.source(), cfg.geometry(), cfg.finite(), seeds, cfg.f)
    rows = [
        {"seed": r.seed, "s1_lower": r.s1_lower, "s1_true": r.s1_true, "e1_upper": r.e1_upper,
         "e1_true": r.e1_true, "unbounded": r.unbounded, "rate": r.rate,
         "coverage": r.covered / r.intervals if r.intervals else float("nan"), "violations": len(r.violations)}
        for r in rep.seeds
    ]
    return rows, rep


def cmd_simulate(cfg: ScenarioConfig) -> list:
    seed = 0 if cfg.seed is None else cfg.seed
    run = simulate_counts(cfg.system(), cfg.source(), cfg.geometry(), cfg.finite(), seed, cfg.photon_resolved)
    rows = []
    items = list(run.counts.counts.items()) + [(("s", "V_kept"), run.counts.kept_sV)]
    for (n, m), c in items:
        row = {"seed": seed, "rng": f"{RNG_ALGORITHM}/numpy-{RNG_VERSION}", "setting": getattr(n, "value", n),
               "polarization": getattr(m, "value", m), "pulses": int(c.pulses), "detections": int(c.detections),
               "errors": int(c.errors)}
        if run.truth is not None:
            t = run.truth["kept_sV" if m == "V_kept" else (n, m)]
            row.update(single_pulses=t.pulses, single_detections=t.detections, single_errors=t.errors)
        rows.append(row)
    return rows


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("scenario")
    g.add_argument("--config", metavar="PATH", help="INI file with [system] [source] [channel] [rate] [finite] [optimizer] [run]")
    g.add_argument("--mode", choices=("asymptotic", "two-decoy", "finite"))
    g.add_argument("--distance-km", dest="distance_km")
    g.add_argument("--pdl-db", dest="pdl_db")
    g.add_argument("--n-pulses", dest="n_pulses")
    g.add_argument("--eps-sec", dest="eps_sec")
    g.add_argument("--eps-cor", dest="eps_cor")
    g.add_argument("--q")
    g.add_argument("--f")
    g.add_argument("--mu-s", dest="mu_s", help="signal intensity; 'auto' solves the stationarity condition")
    g.add_argument("--mu-v", dest="mu_v", help="weak decoy intensity")
    g.add_argument("--p-select", dest="p_select", help="post-selection probability; 'auto' uses the balancing heuristic")
    g.add_argument("--seed")
    g.add_argument("--threads")
    g.add_argument("--out", metavar="PATH")
    g.add_argument("--format", choices=("csv", "human"), default="human")

    p = argparse.ArgumentParser(prog="pdlqkd", description="Decoy-state BB84 key rates under polarization-dependent loss.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("keyrate", parents=[common], help="key rate at fixed source settings")
    for name in ("optimize", "sweep"):
        sp = sub.add_parser(name, parents=[common], help="optimized key rate" if name == "optimize" else "optimized rate along an axis")
        sp.add_argument("--p-mode", dest="p_mode", help="free, heuristic, or a fixed probability")
    sub.choices["sweep"].add_argument("--axis", choices=tuple(SWEEP_AXES), required=True)
    sub.choices["sweep"].add_argument("--values", required=True, help="a,b,c or start:stop:step")
    v = sub.add_parser("validate", parents=[common], help="Monte-Carlo check of the finite-size estimators")
    v.add_argument("--n-seeds", dest="n_seeds")
    s = sub.add_parser("simulate", parents=[common], help="sample detection and error counts")
    s.add_argument("--photon-resolved", dest="photon_resolved", action=argparse.BooleanOptionalAction, default=None)
    return p


def load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    return cfg.updated({field: getattr(args, flag) for flag, field in OVERRIDES.items() if getattr(args, flag, None) is not None})


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        status = EXIT_OK
        if args.command == "keyrate":
            rows = cmd_keyrate(cfg)
        elif args.command == "optimize":
            rows = cmd_optimize(cfg, args.p_mode)
        elif args.command == "sweep":
            rows = cmd_sweep(cfg, args.axis, parse_values(args.values), args.p_mode)
        elif args.command == "validate":
            rows, rep = cmd_validate(cfg)
            summary = (f"seeds={len(rep.seeds)} violations={len(rep.violations)} "
                       f"coverage={rep.coverage:.4f} unbounded={sum(r.unbounded for r in rep.seeds)}\n")
            for seed, msg in rep.violations:
                sys.stderr.write(f"violation seed={seed}: {msg}\n")
            sys.stderr.write(summary)
            if rep.violations:
                status = EXIT_DOMINANCE
        else:
            rows = cmd_simulate(cfg)
    except ConfigError as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG
    except OSError as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG
    _emit(render(rows, args.format), args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
