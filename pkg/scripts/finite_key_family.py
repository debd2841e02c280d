"""Finite-key rate versus distance for a family of block sizes.

P follows the balancing rule; intensities and basis probabilities are
optimized per point.

    python3 scripts/finite_key_family.py --pdl 10
"""

import math
from dataclasses import replace

from _common import parser, write_rows

from pdlqkd.model import ChannelGeometry
from pdlqkd.optimizer import Scenario, sweep

NS = (1e10, 1e11, 1e12, 1e13, 1e14)


def main():
    p = parser(__doc__, "finite_key_family.csv")
    p.add_argument("--pdl", type=float, default=10.0)
    p.add_argument("--max-km", type=float, default=150.0)
    p.add_argument("--step-km", type=float, default=10.0)
    args = p.parse_args()
    base = Scenario(pdl_db=args.pdl)
    rows = []
    n = int(round(args.max_km / args.step_km))
    for d in (i * args.step_km for i in range(n + 1)):
        for N, r in zip(NS, sweep(replace(base, geom=ChannelGeometry(d)), "n", NS, "finite", "heuristic")):
            rows.append({
                "pdl_db": args.pdl, "distance_km": d, "n_pulses": N,
                "rate": r.rate, "log10_rate": math.log10(r.rate) if r.rate > 0 else -math.inf,
                "mu_s": r.params["mu_s"], "mu_v": r.params["mu_v"], "p_select": r.params["p_select"],
                "p_signal": r.params["p_signal"], "p_decoy": r.params["p_decoy"],
            })
    write_rows(rows, args.out)


if __name__ == "__main__":
    main()
