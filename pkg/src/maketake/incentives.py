"""Exchange-side contract: trade incentives, drift, and fee rules.

The optimal contract pays makers three components: a per-execution rebate on
each side (z_a, z_b, common to all makers), a linear inventory-risk transfer
against price moves (z_S, per maker), and a deterministic drift that prices
the maker's risk and claws back the equilibrium rents so each maker is held
exactly at reservation utility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ApproximationOutOfRange, SideBlocked
from .hjb import risk_sharing, z_s_vector
from .intensity import ASK, BID, TIE_EPS, unblocked
from .model import validate
from .nash import fixed_point_delta, hamiltonian_i


def _log_constant(p):
    """(k varpi / (k varpi + eta sigma)) * (1 + eta sigma * sum 1/(kv+sg))."""
    kv = p.k_varpi
    g = np.asarray(p.gamma)
    return (kv / (kv + p.eta * p.sigma)) * (
        1.0 + p.eta * p.sigma * float(np.sum(1.0 / (kv + p.sigma * g)))
    )


def z_star(side, t, q, value, params) -> float:
    """Optimal per-execution rebate on one side at (t, q).

    Balances the flow gained from tighter quotes against the value drop from
    the executing maker's inventory move, priced by the ratio of the current
    value to the sum over eligible executors' post-trade values.  Raises
    SideBlocked when every candidate executor is at the inventory bound.
    """
    p = validate(params)
    members = p.top_set
    lse = value.shift_lse(t, q, side, members)
    if lse == -np.inf:
        raise SideBlocked(
            f"all best-quote makers blocked on side {side} at q={np.asarray(q).tolist()}"
        )
    w = value.w(t, q)
    n = p.n_agents
    return (
        p.c + (w - lse) / p.eta + math.log(_log_constant(p) * len(members)) / p.eta
    ) / n


@dataclass(frozen=True)
class IncentiveField:
    """Callable bundle of the optimal contract's coefficients.

    z_a(t, q) and z_b(t, q) are the per-side trade rebates, z_S(q) the
    inventory-risk transfer vector, y0_hat the certainty equivalents of the
    makers' reservation utilities (the contracts' initial payments).
    """

    z_a: object
    z_b: object
    z_S: object
    y0_hat: tuple

    @classmethod
    def from_value(cls, value, params):
        p = validate(params)
        rs = risk_sharing(p)
        return cls(
            z_a=lambda t, q: z_star(ASK, t, q, value, p),
            z_b=lambda t, q: z_star(BID, t, q, value, p),
            z_S=lambda q: z_s_vector(q, p, rs),
            y0_hat=tuple(-math.log(-r) / g for g, r in zip(p.gamma, p.R)),
        )


def contract_increment(i, dt, dN_a, dN_b, dS, t, q_pre, value, params) -> float:
    """Change of maker i's contract balance over one sub-interval.

    All coefficients are evaluated at the left endpoint (t, q_pre), so the
    increment is predictable: rebates times the executions on each side, the
    risk transfer times the price move, and the drift (risk compensation
    minus the equilibrium expected-utility flow) times elapsed time.
    """
    p = validate(params)
    q_arr = np.asarray(q_pre)
    z = [0.0, 0.0]
    for side in (ASK, BID):
        try:
            z[side] = z_star(side, t, q_arr, value, p)
        except SideBlocked:
            z[side] = 0.0  # side is dark: no executions, no flow utility
    zs = z_s_vector(q_arr, p)

    delta = fixed_point_delta((z[ASK], z[BID]), q_arr, p)
    h_i = hamiltonian_i(
        i, delta.delta[i], np.delete(delta.delta, i, axis=0),
        (z[ASK], z[BID]), q_arr, p,
    )
    g = p.gamma[i]
    drift = 0.5 * g * p.sigma**2 * (zs[i] + q_arr[i]) ** 2 - h_i
    return z[ASK] * dN_a + z[BID] * dN_b + zs[i] * dS + drift * dt


def switching_predicate(i, j_side, t, q, value, params) -> bool:
    """Whether maker i holds (a share of) the best quote on a side at (t, q).

    Decided directly from the equilibrium profile: i's quote ties the side's
    minimum and i can trade the side.  See switching_threshold for the
    closed-form boundary in the rebate.
    """
    p = validate(params)
    q_arr = np.asarray(q)
    if not unblocked(q_arr[i], j_side, p.q_bar):
        return False
    try:
        z = (
            z_star(ASK, t, q_arr, value, p),
            z_star(BID, t, q_arr, value, p),
        )
    except SideBlocked:
        return False
    col = fixed_point_delta(z, q_arr, p).delta[:, j_side]
    return bool(col[i] <= col.min() + TIE_EPS)


def switching_threshold(off_best, off_cover, omega_u) -> float:
    """Rebate level below which the best-branch quote undercuts a competitor
    resting in a cell of weight omega_u.

    With per-maker targets off = log(1 + sigma*gamma/(k*varpi)) / gamma, the
    best-branch maker quotes -z + off_best and the competitor (1/omega_u) *
    (-z + off_cover); the former is lower iff z <= this threshold.
    """
    return (off_cover - omega_u * off_best) / (1.0 - omega_u)


def taker_cost_rule(params, mode="static"):
    """Exchange fee suggested by the maker-rent structure.

    "static" prices the fee so the cheapest expected total taker cost sits
    half a tick above fair value, using the terminal (flat-value) rebate;
    "small-ratio" is its leading-order simplification; "dynamic" returns a
    callable c(t, q, value) that re-prices with the live value-function
    ratios at the current best ask/bid makers.
    """
    p = validate(params)
    n, eta, kv = p.n_agents, p.eta, p.k_varpi
    i_star = max(range(n), key=lambda i: p.gamma[i])
    g = p.gamma[i_star]

    if mode == "static":
        return (
            -p.tick / (2.0 * n)
            - math.log(_log_constant(p)) / (eta * n)
            + math.log(1.0 + p.sigma * g / kv) / (g * n)
        )
    if mode == "small-ratio":
        return (p.sigma / kv - p.tick / 2.0) / n

    if mode == "dynamic":
        def rule(t, q, value):
            q_arr = np.asarray(q)
            w = value.w(t, q_arr)

            def best_shift(side):
                for i in p.top_set:
                    j = value.space.neighbors[value.space.index(q_arr), i, side]
                    if j >= 0:
                        return float(value.w_rows(t)[j])
                raise SideBlocked(f"no executable best maker on side {side}")

            w_a, w_b = best_shift(ASK), best_shift(BID)
            # log(u^2 / (u_ask u_bid)) with u = (-v)^(-alpha)
            log_ratio = -value.alpha * (2.0 * w - w_a - w_b)
            return (
                -p.tick / (2.0 * n)
                - (log_ratio + math.log(_log_constant(p))) / (eta * n)
                + math.log(1.0 + p.sigma * g / kv) / (g * n)
            )

        return rule
    raise ValueError(f"unknown taker cost mode {mode!r}")


def reservation_from_no_contract(params) -> tuple:
    """Certainty equivalents makers earn with no contract (z = 0, no drift).

    Uses the flat-inventory growth approximation of the no-contract value;
    valid for exchangeable makers and mild horizons.  Returns one value per
    maker (all equal).
    """
    p = validate(params)
    if len(set(p.gamma)) != 1:
        raise ApproximationOutOfRange(
            "no-contract reservation approximation needs identical risk aversions"
        )
    g = p.gamma[0]
    kv = p.k_varpi
    n = p.n_agents
    growth = (
        2.0
        * (p.sigma / (kv + p.sigma * g))
        * p.A
        * math.exp(-p.k_over_sigma * (p.c + (p.varpi * n / g) * math.log(1.0 + p.sigma * g / kv)))
    )
    base = 1.0 + 2.0 * growth * p.T
    if base <= 0.0:
        raise ApproximationOutOfRange(f"no-contract growth base {base} <= 0")
    y0 = (kv / p.sigma) * math.log(base)
    return (y0,) * n
