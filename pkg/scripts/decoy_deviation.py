"""Relative gap between the true and decoy-bounded single-photon yield.

The signal intensity is the stationary root at each PDL.

    python3 scripts/decoy_deviation.py --distance-km 50
"""

import numpy as np
from _common import parser, write_rows

from pdlqkd.asymptotic import solve_optimal_mu
from pdlqkd.decoy import y1_deviation
from pdlqkd.model import ChannelGeometry, SystemParams, pdl_loss_factor


def main():
    p = parser(__doc__, "decoy_deviation.csv")
    p.add_argument("--distance-km", type=float, default=50.0)
    args = p.parse_args()
    geom, params = ChannelGeometry(args.distance_km), SystemParams()
    mu_v = np.linspace(0.01, 0.3, 30)
    rows = []
    for pdl in range(11):
        mu_s = solve_optimal_mu(float(pdl_loss_factor(pdl)))
        for v, beta in zip(mu_v, y1_deviation(params, geom, pdl, mu_s, mu_v)):
            rows.append({"pdl_db": float(pdl), "mu_s": mu_s, "mu_v": float(v), "beta": float(beta)})
    write_rows(rows, args.out)


if __name__ == "__main__":
    main()
