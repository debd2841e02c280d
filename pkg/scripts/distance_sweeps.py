"""Optimized key rate versus distance for several PDL values.

Covers the asymptotic and two-decoy rates, each with free post-selection
and with P = 1 (no post-selection).

    python3 scripts/distance_sweeps.py --pdl 0 5 10 --threads 4
"""

import math

from _common import parser, write_rows

from pdlqkd.optimizer import Scenario, sweep


def main():
    p = parser(__doc__, "distance_sweeps.csv")
    p.add_argument("--pdl", type=float, nargs="+", default=[0.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    p.add_argument("--max-km", type=float, default=200.0)
    p.add_argument("--step-km", type=float, default=5.0)
    p.add_argument("--modes", nargs="+", default=["asymptotic", "two-decoy"])
    args = p.parse_args()
    n = int(round(args.max_km / args.step_km))
    distances = [i * args.step_km for i in range(n + 1)]
    rows = []
    for mode in args.modes:
        for p_mode, label in (("free", "post-selected"), (1.0, "none")):
            for pdl in args.pdl:
                for d, r in zip(distances, sweep(Scenario(pdl_db=pdl), "distance", distances, mode, p_mode, threads=args.threads)):
                    rows.append({
                        "mode": mode, "post_selection": label, "pdl_db": pdl, "distance_km": d,
                        "rate": r.rate, "log10_rate": math.log10(r.rate) if r.rate > 0 else -math.inf,
                        "mu_s": r.params["mu_s"], "mu_v": r.params.get("mu_v", math.nan),
                        "p_select": r.params["p_select"],
                    })
    write_rows(rows, args.out)


if __name__ == "__main__":
    main()
