"""Independent hand-arithmetic oracle for the unit-value test suite.

Every number here is computed directly from the closed-form model expressions
in 50-digit mpmath arithmetic. Nothing is imported from ``pdlqkd``; the output
file ``tests/data/oracle_values.json`` is frozen and checked against the
package by ``tests/test_unit_values.py``.

    python scripts/oracle_values.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50

E_D = mp.mpf("0.015")
Y0 = mp.mpf("2e-5")
ETA_BOB = mp.mpf("0.2")
ALPHA = mp.mpf("0.2")
E0 = mp.mpf("0.5")


def h2(x):
    x = mp.mpf(x)
    if x == 0 or x == 1:
        return mp.mpf(0)
    return -x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2)


def eta_sys(d, eta_bob=ETA_BOB, alpha=ALPHA):
    return eta_bob * mp.power(10, -alpha * mp.mpf(d) / 10)


def y_i(y0, eta, i):
    return 1 - (1 - y0) * (1 - eta) ** i


def gain(mu, y0, eta):
    return 1 - (1 - y0) * mp.exp(-mu * eta)


def qber(mu, y0, eta, ed=E_D, e0=E0):
    return (y0 * (e0 - ed) + ed * (1 - (1 - y0) * mp.exp(-mu * eta))) / gain(mu, y0, eta)


def e_i(y0, yi, ed=E_D, e0=E0):
    return (y0 * e0 + (yi - y0) * ed) / yi


def y1_lower(qs, qv, y0l, ms, mv):
    val = ms / (ms * mv - mv**2) * (
        qv * mp.exp(mv) - qs * mp.exp(ms) * mv**2 / ms**2 - (ms**2 - mv**2) / ms**2 * y0l
    )
    return max(val, mp.mpf(0))


def e1y1_upper(qv, ev, y0l, mv, e0=E0):
    return max((ev * qv * mp.exp(mv) - e0 * y0l) / mv, mp.mpf(0))


def residual(mu, L, ed, f):
    h = h2(ed)
    lhs = (1 - h) * (L * mp.exp(-L * mu) - L**2 * mu * mp.exp(-L * mu))
    rhs = f * h / 2 * (L + L * mp.exp((1 - L) * mu) + L * mu * mp.exp((1 - L) * mu) * (1 - L))
    return lhs - rhs


def bisect(fn, lo, hi, tol=mp.mpf("1e-40")):
    flo = fn(lo)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def asymptotic_rate(mu_s, pdl, d, q, f, P):
    L = mp.power(10, -mp.mpf(pdl) / 10)
    eta = eta_sys(d)
    mh, mv = L * mu_s, mu_s
    y1 = y_i(Y0, eta, 1)
    e1 = e_i(Y0, y1)
    q1 = min(mh * mp.exp(-mh), P * mv * mp.exp(-mv)) * y1
    qs = gain(mh, Y0, eta) / 2 + P * gain(mv, Y0, eta) / 2
    qses = (gain(mh, Y0, eta) * qber(mh, Y0, eta) + P * gain(mv, Y0, eta) * qber(mv, Y0, eta)) / 2
    es = qses / qs
    raw = q * (q1 * (1 - h2(e1)) - qs * f * h2(es))
    return {"rate": max(raw, mp.mpf(0)), "raw": raw, "q1": q1, "qs": qs, "es": es, "e1": e1, "y1": y1}


def main():
    out = {}

    ne, nh = mp.mpf("5e17"), mp.mpf("5e17")
    out["plasma_0_0"] = [0.0, 0.0]
    out["plasma_ne"] = [-mp.mpf("8.8e-22") * ne, mp.mpf("8.5e-18") * ne]
    out["plasma_nh"] = [-mp.mpf("8.5e-18") * nh ** mp.mpf("0.8"), mp.mpf("6.0e-18") * nh]

    out["pmf_0_0"] = 1.0
    out["pmf_0_1"] = 0.0
    out["pmf_05_1"] = mp.mpf("0.5") * mp.exp(-mp.mpf("0.5"))

    out["L_0"] = 1.0
    out["L_10"] = mp.power(10, -1)
    out["L_1p6"] = mp.power(10, -mp.mpf("0.16"))

    out["eta_d0"] = ETA_BOB
    out["eta_a02_d50_b1"] = eta_sys(50, eta_bob=1)
    eta80 = eta_sys(80)
    out["eta_d80"] = eta80

    out["yield_i1_defaults"] = y_i(Y0, eta80, 1)
    out["gain_05_defaults"] = gain(mp.mpf("0.5"), Y0, eta80)
    y1 = y_i(Y0, eta80, 1)
    out["error_1_defaults"] = e_i(Y0, y1)
    out["qber_05_defaults"] = qber(mp.mpf("0.5"), Y0, eta80)

    L10 = mp.mpf("0.1")
    out["forward_sH_pdl10_d80"] = [gain(L10 * mp.mpf("0.5"), Y0, eta80), qber(L10 * mp.mpf("0.5"), Y0, eta80)]

    out["h2_05"] = 1.0
    out["h2_0"] = 0.0
    out["h2_002"] = h2(mp.mpf("0.02"))

    out["min_term_L05_mu1"] = min(mp.mpf("0.5") * mp.exp(-mp.mpf("0.5")), mp.exp(-1))
    r = asymptotic_rate(mp.mpf("0.7"), 0, 80, mp.mpf("0.5"), mp.mpf("1.16"), 1)
    out["keyrate_defaults_d80_mu07"] = {k: v for k, v in r.items()}

    out["p_heur_L01_mu1"] = L10 * mp.exp(mp.mpf("0.9"))
    out["p_heur_L05_mu2_raw"] = mp.mpf("0.5") * mp.exp(1)

    P = L10 * mp.exp((1 - L10) * 1)
    h = h2(E_D)
    f = mp.mpf("1.16")
    out["approx_rate_L01"] = -(P * eta80 * 1 / 2 + eta80 * L10 * 1 / 2) * f * h + eta80 * L10 * mp.exp(-L10) * (1 - h)

    out["mu_star_L1"] = bisect(lambda m: residual(m, mp.mpf(1), E_D, f), mp.mpf("1e-6"), mp.mpf(5))
    out["mu_star_by_pdl"] = {
        str(p): bisect(lambda m: residual(m, mp.power(10, -mp.mpf(p) / 10), E_D, f), mp.mpf("1e-6"), mp.mpf(5))
        for p in range(0, 11)
    }

    # two-decoy bounds on the analytic model, default system, d = 80 km, no PDL
    ms, mv = mp.mpf("0.7"), mp.mpf("0.1")
    qs, qv = gain(ms, Y0, eta80), gain(mv, Y0, eta80)
    ev = qber(mv, Y0, eta80)
    y1l = y1_lower(qs, qv, Y0, ms, mv)
    out["y1_lower_d80"] = y1l
    out["beta_d80_exact"] = (y1 - y1l) / y1
    out["e1y1_upper_d80"] = e1y1_upper(qv, ev, Y0, mv)
    out["y1e1_true_d80"] = y1 * e_i(Y0, y1)

    # refined analysis, PDL = 10 dB, d = 50 km, mu_s = 0.7, mu_v = 0.1
    eta50 = eta_sys(50)
    per = {}
    for pol, scale in (("H", L10), ("V", 1), ("D", L10), ("A", 1)):
        a, b = scale * ms, scale * mv
        Qs, Qv = gain(a, Y0, eta50), gain(b, Y0, eta50)
        per[pol] = (y1_lower(Qs, Qv, Y0, a, b), e1y1_upper(Qv, qber(b, Y0, eta50), Y0, b))
    out["combine_pdl10_d50"] = {
        "y1_combined": (per["H"][0] + per["V"][0]) / 2,
        "e1_phase_up": (per["D"][1] + per["A"][1]) / (per["D"][0] + per["A"][0]),
        "y1_true": y_i(Y0, eta50, 1),
        "e1_true": e_i(Y0, y_i(Y0, eta50, 1)),
    }

    eps = mp.mpf("1e-10")
    out["hoeffding_5000"] = mp.sqrt(mp.mpf(5000) / 2 * mp.log(1 / eps))
    out["interval_5000"] = [5000 - out["hoeffding_5000"], 5000 + out["hoeffding_5000"]]
    raw_len = (
        mp.mpf("1e6") * (1 - h2(mp.mpf("0.02")))
        - 328141
        - 6 * mp.log(21 / eps, 2)
        - mp.log(2 / eps, 2)
    )
    out["key_length_example"] = int(mp.floor(raw_len))

    n = 10**10
    ns, nv, nw = round(0.8 * n), round(0.15 * n), round(0.05 * n)
    out["alloc_1e10"] = {"N_s": ns, "N_v": nv, "N_w": nw, "cell_s": ns // 4, "cell_v": nv // 4, "cell_w": nw // 4}

    def to_float(v):
        if isinstance(v, dict):
            return {k: to_float(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [to_float(x) for x in v]
        if isinstance(v, int):
            return v
        return float(v)

    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracle_values.json"
    path.write_text(json.dumps(to_float(out), indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
