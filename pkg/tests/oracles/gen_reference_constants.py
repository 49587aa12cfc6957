"""Generate frozen high-precision reference constants for the test suite.

Offline developer tool.  Run from the repository root:

    python tests/oracles/gen_reference_constants.py

Writes tests/data/reference_constants.json with every scalar the unit and
acceptance tests compare against.  All arithmetic is done with mpmath at
50 decimal digits, independently of the package code (the formulas here
are written straight from the closed forms, not imported), and stored as
30-significant-digit strings.  The JSON file is committed; tests never
execute this script.
"""

from __future__ import annotations

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50

OUT = Path(__file__).resolve().parents[1] / "data" / "reference_constants.json"


def s(x) -> str:
    """Format an mpf as a 30-significant-digit string."""
    return mp.nstr(mp.mpf(x), 30)


# ---------------------------------------------------------------------------
# closed forms (straight-line, no package imports)
# ---------------------------------------------------------------------------

def risk_share_matrix(gammas, eta):
    """kappa and the mu matrix of the price-risk sharing rule."""
    n = len(gammas)

    def prod_excl(skip):
        p = mp.mpf(1)
        for idx, g in enumerate(gammas):
            if idx not in skip:
                p *= g
        return p

    kappa_inv = prod_excl(set()) + eta * mp.fsum(
        prod_excl({j}) for j in range(n)
    )
    kappa = 1 / kappa_inv
    mu = [[mp.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                mu[i][i] = kappa * (
                    prod_excl({i})
                    + eta * mp.fsum(prod_excl({i, j2}) for j2 in range(n) if j2 != i)
                )
            else:
                mu[i][j] = -eta * kappa * prod_excl({i, j})
    return kappa, mu


def price_incentives(q, gammas, eta):
    """z^{S,i}(q) = -sum_j mu_ij gamma_j q_j."""
    _, mu = risk_share_matrix(gammas, eta)
    n = len(gammas)
    return [
        -mp.fsum(mu[i][j] * gammas[j] * q[j] for j in range(n)) for i in range(n)
    ]


def inventory_cost(q, gammas, eta, sigma):
    """Running cost of the risk-sharing rule at inventory vector q."""
    z = price_incentives(q, gammas, eta)
    n = len(gammas)
    quad = mp.fsum(
        (eta / 2) * sigma**2 * gammas[i] * (q[i] + z[i]) ** 2 for i in range(n)
    )
    cross = (eta**2 * sigma**2 / 2) * mp.fsum(z) ** 2
    return quad + cross


class Scenario:
    """All closed-form constants for one parameter set (equal or mixed gammas)."""

    def __init__(self, gammas, varpi, c, *, eta=1, sigma="0.3", k="0.3",
                 A="1.5", tick=1, T=600):
        self.g = [mp.mpf(x) for x in gammas]
        self.n = len(self.g)
        self.varpi = mp.mpf(varpi)
        self.c = mp.mpf(c)
        self.eta = mp.mpf(eta)
        self.sigma = mp.mpf(sigma)
        self.k = mp.mpf(k)
        self.A = mp.mpf(A)
        self.tick = mp.mpf(tick)
        self.T = mp.mpf(T)

        self.kv = self.k * self.varpi
        self.inv_sum = mp.fsum(1 / (self.kv + self.sigma * gi) for gi in self.g)
        # constant inside the arrival-incentive log, without the best-quoter count
        self.log_constant = (self.kv / (self.kv + self.eta * self.sigma)) * (
            1 + self.eta * self.sigma * self.inv_sum
        )
        gmax = max(self.g)
        self.top = [i for i, gi in enumerate(self.g) if gi == gmax]
        self.card = len(self.top)
        # per-agent spread offset (1/gamma_i) log(1 + sigma gamma_i / (k varpi))
        self.offsets = [
            mp.log(1 + self.sigma * gi / self.kv) / gi for gi in self.g
        ]

    # -- model ----------------------------------------------------------
    def delta_inf_min(self, v_ratio_bound=1):
        c_inf = (
            self.n * abs(self.c)
            + mp.fsum(
                (1 / self.eta + 1 / gi) * mp.log(1 + self.sigma * gi / self.kv)
                for gi in self.g
            )
            - (self.n / self.eta) * mp.log(self.log_constant)
        )
        return c_inf + (self.n / self.eta) * abs(mp.log(mp.mpf(v_ratio_bound)))

    # -- value-equation constants ----------------------------------------
    def arrival_constant(self):
        expo = (
            self.c * (1 - self.varpi)
            - (self.varpi / self.eta) * mp.log(self.log_constant * self.card)
            + self.varpi * mp.fsum(self.offsets)
        )
        return (
            self.A
            * mp.exp(-(self.k / self.sigma) * expo)
            * (self.sigma * self.eta / (self.kv + self.sigma * self.eta))
            * (1 + self.eta * self.sigma * self.inv_sum)
        )

    # -- incentives -------------------------------------------------------
    def flow_incentive_terminal_q0(self):
        # value-ratio log cancels against the Card factor at the flat terminal value
        return (self.c + mp.log(self.log_constant) / self.eta) / self.n

    def equilibrium_best_quote_terminal_q0(self):
        z = self.flow_incentive_terminal_q0()
        return -z + self.offsets[self.top[0]]

    def equilibrium_lambda_terminal_q0(self):
        # all best-quoters sit at the best spread; no covering quotes (equal gammas)
        quote = self.equilibrium_best_quote_terminal_q0()
        expo = self.c + self.varpi * self.card * quote
        return self.A * mp.exp(-(self.k / self.sigma) * expo)

    def taker_cost_static(self):
        i = self.top[0]
        return (
            -self.tick / (2 * self.n)
            - mp.log(self.log_constant) / (self.eta * self.n)
            + mp.log(1 + self.sigma * self.g[i] / self.kv) / (self.g[i] * self.n)
        )

    def taker_cost_small_ratio(self):
        return (self.sigma / self.kv - self.tick / 2) / self.n

    # -- first best --------------------------------------------------------
    def risk_tilde(self):
        big_gamma = mp.fsum(1 / gi for gi in self.g)
        return self.eta / (1 + self.eta * big_gamma)

    def arrival_constant_first_best(self):
        gt = self.risk_tilde()
        return (
            self.A
            * mp.exp(-(self.kv / (self.sigma * gt)) * mp.log(1 + gt * self.sigma / self.kv))
            * gt * self.sigma / (self.kv + gt * self.sigma)
        )

    def first_best_target_terminal_q0(self):
        gt = self.risk_tilde()
        # value ratio is Card(top set) at the flat terminal value
        return (mp.log(1 + gt * self.sigma / self.kv) + mp.log(self.card)) / gt


# ---------------------------------------------------------------------------
# stationary proxy for the welfare-versus-N rule (weights 1/N convention)
# ---------------------------------------------------------------------------

def welfare_curve_point(n, *, gamma="0.01", c="0.5", eta=1, sigma="0.3",
                        k="0.3", A="1.5", T=600):
    g = mp.mpf(gamma)
    c = mp.mpf(c)
    eta = mp.mpf(eta)
    sigma = mp.mpf(sigma)
    k = mp.mpf(k)
    A = mp.mpf(A)
    T = mp.mpf(T)
    n = mp.mpf(n)
    varpi = 1 / n
    kv = k * varpi

    off = mp.log(1 + sigma * g / kv) / g
    b = mp.log((kv / (kv + sigma * eta)) * n * (1 + n * eta * sigma / (kv + sigma * g))) / eta
    lam = A * mp.exp(-(k / sigma) * (c * (1 - varpi) + varpi * n * off - varpi * b))
    c_hat = 2 * (sigma / (kv + sigma * g)) * A * mp.exp(-(k / sigma) * (c + varpi * n * off))
    welfare = n * c_hat * (mp.exp((kv / sigma) * (c + b)) - kv / (sigma * eta))
    score = welfare - 2 * lam * b
    y0 = (kv / sigma) * mp.log(1 + 2 * c_hat * T)
    return {
        "flow_proxy": lam,
        "per_agent_growth": c_hat,
        "welfare_proxy": welfare,
        "score": score,
        "reservation_y0": y0,
    }


# ---------------------------------------------------------------------------
# main
# ---------------------------------------------------------------------------

def main():
    out = {
        "_generator": "tests/oracles/gen_reference_constants.py",
        "_dps": mp.mp.dps,
        "_note": "30-significant-digit strings; parse with float().",
    }

    # ----- single-maker baseline ----------------------------------------
    b1 = Scenario(["0.01"], 1, "0.5")
    g1 = b1.g[0]
    off1 = b1.offsets[0]
    kappa1, mu1 = risk_share_matrix(b1.g, b1.eta)
    z_s_10 = price_incentives([mp.mpf(10)], b1.g, b1.eta)[0]
    # closed form for the quadratic running cost with one agent
    cs10_closed = b1.eta**2 * b1.sigma**2 * g1 * mp.mpf(100) / (2 * (g1 + b1.eta))
    cs10 = inventory_cost([mp.mpf(10)], b1.g, b1.eta, b1.sigma)
    assert mp.almosteq(cs10, cs10_closed, rel_eps=mp.mpf(10) ** -45)

    out["n1_baseline"] = {
        "params": {"n_makers": 1, "gamma": "0.01", "varpi": "1", "taker_fee": "0.5",
                   "eta": "1", "sigma": "0.3", "decay": "0.3", "base_arrival": "1.5",
                   "horizon": "600", "tick": "1"},
        "incentive_log_constant": s(b1.log_constant),
        "delta_inf_min_ratio1": s(b1.delta_inf_min(1)),
        "lambda_zero_spread": s(b1.A * mp.exp(-(b1.k / b1.sigma) * b1.c)),
        "spread_offset": s(off1),
        "gamma_offset_z0": s(off1),
        "gamma_offset_z05": s(-mp.mpf("0.5") + off1),
        "arrival_constant": s(b1.arrival_constant()),
        "inventory_cost_q10": s(cs10),
        "inventory_cost_coeff": s(b1.eta**2 * b1.sigma**2 * g1 / (2 * (g1 + b1.eta))),
        "price_incentive_q10": s(z_s_10),
        "risk_share_kappa": s(kappa1),
        "flow_incentive_terminal_q0": s(b1.flow_incentive_terminal_q0()),
        "equilibrium_best_quote_terminal_q0": s(b1.equilibrium_best_quote_terminal_q0()),
        "equilibrium_lambda_terminal_q0": s(b1.equilibrium_lambda_terminal_q0()),
        "hamiltonian_value_factor": s(b1.sigma / (b1.kv + b1.sigma * g1)),
        "taker_cost_static": s(b1.taker_cost_static()),
        "taker_cost_small_ratio": s(b1.taker_cost_small_ratio()),
        "first_best_risk_tilde": s(b1.risk_tilde()),
        "first_best_arrival_constant": s(b1.arrival_constant_first_best()),
        "first_best_target_terminal_q0": s(b1.first_best_target_terminal_q0()),
        "first_best_separation_ratio": s(
            b1.arrival_constant() / b1.arrival_constant_first_best()
        ),
    }

    # ----- two-maker baseline (equal gammas, varpi = 1/2) ----------------
    b2 = Scenario(["0.01", "0.01"], "0.5", "0.5")
    kappa2, mu2 = risk_share_matrix(b2.g, b2.eta)
    q2 = [mp.mpf(10), mp.mpf(0)]
    z2 = price_incentives(q2, b2.g, b2.eta)
    # equal-gamma closed form cross-check: z_i = -q_i - (eta/gamma) * S
    tot = -mp.fsum(q2) / (1 + b2.n * b2.eta / b2.g[0])
    for i in range(2):
        assert mp.almosteq(z2[i], -q2[i] - (b2.eta / b2.g[i]) * tot,
                           rel_eps=mp.mpf(10) ** -45)

    out["n2_baseline"] = {
        "params": {"n_makers": 2, "gamma": "0.01", "varpi": "0.5", "taker_fee": "0.5",
                   "eta": "1", "sigma": "0.3", "decay": "0.3", "base_arrival": "1.5",
                   "horizon": "600", "tick": "1"},
        "incentive_log_constant": s(b2.log_constant),
        "delta_inf_min_ratio1": s(b2.delta_inf_min(1)),
        "delta_inf_min_ratio2": s(b2.delta_inf_min(2)),
        "spread_offset": s(b2.offsets[0]),
        "arrival_constant": s(b2.arrival_constant()),
        "risk_share_kappa": s(kappa2),
        "risk_share_mu": [[s(mu2[i][j]) for j in range(2)] for i in range(2)],
        "price_incentive_q_10_0": [s(z2[0]), s(z2[1])],
        "inventory_cost_q_10_0": s(inventory_cost(q2, b2.g, b2.eta, b2.sigma)),
        "flow_incentive_terminal_q0": s(b2.flow_incentive_terminal_q0()),
        "equilibrium_best_quote_terminal_q0": s(b2.equilibrium_best_quote_terminal_q0()),
        "equilibrium_lambda_terminal_q0": s(b2.equilibrium_lambda_terminal_q0()),
        "hamiltonian_value_factor": s(b2.sigma / (b2.kv + b2.sigma * b2.g[0])),
        "taker_cost_static": s(b2.taker_cost_static()),
        "taker_cost_small_ratio": s(b2.taker_cost_small_ratio()),
    }

    # ----- mixed-gamma two-maker scenario (risk-sharing asymmetry) -------
    m2 = Scenario(["0.01", "0.05"], "0.5", "0.5")
    kappam, mum = risk_share_matrix(m2.g, m2.eta)
    qm = [mp.mpf(3), mp.mpf(-7)]
    zm = price_incentives(qm, m2.g, m2.eta)
    out["n2_mixed_gamma"] = {
        "params": {"n_makers": 2, "gamma": ["0.01", "0.05"], "varpi": "0.5",
                   "taker_fee": "0.5"},
        "risk_share_kappa": s(kappam),
        "risk_share_mu": [[s(mum[i][j]) for j in range(2)] for i in range(2)],
        "price_incentive_q_3_m7": [s(zm[0]), s(zm[1])],
        "inventory_cost_q_3_m7": s(inventory_cost(qm, m2.g, m2.eta, m2.sigma)),
        "arrival_constant": s(m2.arrival_constant()),
        "incentive_log_constant": s(m2.log_constant),
        "spread_offsets": [s(x) for x in m2.offsets],
        "flow_incentive_terminal_q0": s(m2.flow_incentive_terminal_q0()),
    }

    # ----- five-maker trend scenarios ------------------------------------
    for n, key in ((5, "n5_fixed_fee"), (3, "n3_fee_rule")):
        fee = "0.5" if key.endswith("fixed_fee") else s(mp.mpf("0.5") / n)
        sc = Scenario(["0.01"] * n, s(mp.mpf(1) / n), fee)
        out[key] = {
            "params": {"n_makers": n, "gamma": "0.01", "varpi": s(mp.mpf(1) / n),
                       "taker_fee": fee},
            "arrival_constant": s(sc.arrival_constant()),
            "incentive_log_constant": s(sc.log_constant),
            "flow_incentive_terminal_q0": s(sc.flow_incentive_terminal_q0()),
            "equilibrium_best_quote_terminal_q0": s(
                sc.equilibrium_best_quote_terminal_q0()),
            "equilibrium_lambda_terminal_q0": s(sc.equilibrium_lambda_terminal_q0()),
        }

    # ----- welfare-versus-N curve (1/N weights, fixed fee template) ------
    curve = {}
    for n in range(1, 11):
        curve[str(n)] = {k: s(v) for k, v in welfare_curve_point(n).items()}
    scores = {n: mp.mpf(curve[str(n)]["score"]) for n in range(1, 11)}
    argmax = max(scores, key=lambda n: scores[n])
    out["welfare_curve"] = {
        "points": curve,
        "argmax_n": argmax,
    }

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {OUT}")
    print(f"welfare argmax N = {argmax}; "
          f"scores 1..6 = {[mp.nstr(scores[n], 4) for n in range(1, 7)]}")


if __name__ == "__main__":
    main()
