"""Stationary signal intensity of the approximate rate versus PDL.

    python3 scripts/optimal_intensity.py --f 1.0 1.16 1.22
"""

import numpy as np
from _common import parser, write_rows

from pdlqkd.asymptotic import heuristic_p_optimal, optimal_mu_residual, solve_optimal_mu
from pdlqkd.model import pdl_loss_factor


def main():
    p = parser(__doc__, "optimal_intensity.csv")
    p.add_argument("--f", type=float, nargs="+", default=[1.16])
    p.add_argument("--e-d", type=float, default=0.015)
    args = p.parse_args()
    rows = []
    for f in args.f:
        for pdl in np.round(np.arange(0, 10.001, 0.05), 2):
            L = float(pdl_loss_factor(pdl))
            mu = solve_optimal_mu(L, args.e_d, f)
            rows.append({
                "f": f, "pdl_db": float(pdl), "mu_opt": mu,
                "p_heuristic": float(heuristic_p_optimal(mu, L)),
                "residual": float(optimal_mu_residual(mu, L, args.e_d, f)),
            })
    write_rows(rows, args.out)


if __name__ == "__main__":
    main()
