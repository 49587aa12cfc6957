"""First-best benchmark: the exchange controls quotes directly.

When the exchange can dictate spreads instead of incentivizing them, the
makers' individual risk aversions pool into a single effective aversion
gamma_tilde = eta / (1 + eta * sum 1/gamma_i), and the value function solves
the same one-constant backward system with a much smaller flow constant and
a much larger ratio exponent.  Comparing its solution with the contracted
(second-best) one quantifies the moral-hazard friction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hjb import ValueFunction, _integrate_backward, _rhs_factory, build_state_space
from .intensity import ASK, BID
from .model import validate


@dataclass(frozen=True)
class FirstBestParams:
    """Pooled risk aversion and flow constant of the first-best system."""

    gamma_tilde: float
    C_fb: float

    @classmethod
    def from_params(cls, params):
        p = validate(params)
        gt = p.eta / (1.0 + p.eta * p.inv_gamma_sum)
        kv = p.k_varpi
        c_fb = (
            p.A
            * math.exp(-(kv / (p.sigma * gt)) * math.log(1.0 + gt * p.sigma / kv))
            * (gt * p.sigma / (kv + gt * p.sigma))
        )
        return cls(gamma_tilde=gt, C_fb=c_fb)


def solve_first_best(params, dt=None) -> ValueFunction:
    """Backward solve of the first-best exchange value in log space."""
    p = validate(params)
    if dt is None:
        dt = 0.1 if p.n_agents <= 2 else 0.25
    fb = FirstBestParams.from_params(p)
    space = build_state_space(p, reduce_symmetry=None if p.n_agents >= 3 else False)
    alpha = p.k_varpi / (p.sigma * fb.gamma_tilde)

    q = space.states.astype(float)
    cost_arr = 0.5 * p.sigma**2 * fb.gamma_tilde**2 * (q**2).sum(axis=1)

    g = _rhs_factory(fb.C_fb, cost_arr, alpha, space, list(p.top_set))
    times, W = _integrate_backward(g, space.n_states, p.T, dt, 1, np.float64)
    return ValueFunction(times=times, space=space, log_neg_v=W,
                         alpha=alpha, dt=dt, params=p)


def first_best_spreads(t, q, value_fb, params):
    """Spreads the exchange would post itself, (ask, bid), at (t, q)."""
    p = validate(params)
    fb = FirstBestParams.from_params(p)
    gt = fb.gamma_tilde
    kv = p.k_varpi
    w = value_fb.w(t, q)
    out = []
    for side in (ASK, BID):
        lse = value_fb.shift_lse(t, q, side, p.top_set)
        if lse == -np.inf:
            out.append(float("nan"))  # side is dark at the inventory bound
            continue
        out.append((math.log(1.0 + gt * p.sigma / kv) + (lse - w)) / gt)
    return tuple(out)


def compare_first_second_best(params, dt=None, value_sb=None, value_fb=None):
    """Second-best vs first-best values on the shared inventory grid.

    Returns a dict with both flow constants, their ratio (the moral-hazard
    flow wedge), the t = 0 log values at flat inventory, and a per-state
    table of rows (t, q..., v_sb, v_fb) at t = 0; v entries that underflow
    the float range print as -0.0, the w columns carry full precision.
    """
    from .hjb import constants, solve_backward

    p = validate(params)
    if value_sb is None:
        value_sb = solve_backward(p, dt=dt)
    if value_fb is None:
        value_fb = solve_first_best(p, dt=dt)
    fb = FirstBestParams.from_params(p)
    C, _ = constants(p)

    states = value_sb.space.states
    idx_fb = value_fb.space.index(states)
    w_sb0 = value_sb.log_neg_v[0].astype(float)
    w_fb0 = value_fb.log_neg_v[0][idx_fb].astype(float)
    q0 = np.zeros(p.n_agents, dtype=int)
    return {
        "C_second_best": C,
        "C_first_best": fb.C_fb,
        "flow_ratio": C / fb.C_fb,
        "gamma_tilde": fb.gamma_tilde,
        "w_sb_0_flat": value_sb.w(0.0, q0),
        "w_fb_0_flat": value_fb.w(0.0, q0),
        "states": states,
        "w_sb_0": w_sb0,
        "w_fb_0": w_fb0,
    }
