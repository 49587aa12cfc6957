"""Parameter sweeps and venue-sizing diagnostics.

`s_of_n` scores the social value of opening the venue to n makers under the
flat-inventory approximation (maker surplus net of the flow the exchange
gives up), the quantity whose integer argmax recommends how many makers to
admit.  `sweep` re-solves and re-simulates the full model point by point
along one axis and tabulates the aggregates the figures are built from.
"""

from __future__ import annotations

import math
import time

from .errors import ApproximationOutOfRange, ConfigError
from .hjb import solve_backward
from .incentives import reservation_from_no_contract
from .model import baseline_params, validate
from .simulator import run_batch

SWEEP_AXES = ("N", "gamma_new_agent", "varpi_rule", "c_rule")


def s_of_n(template, n) -> float:
    """Approximate net value of running the venue with n equally risk-averse
    makers (maker certainty-equivalent growth minus twice the per-side flow
    weighted by the admission bonus), under the 1/n quoting-weight rule with
    the template's taker fee held fixed.
    """
    p = validate(template)
    if len(set(p.gamma)) != 1:
        raise ApproximationOutOfRange(
            "venue-sizing score needs identical risk aversions"
        )
    if n <= 0:
        raise ConfigError(f"maker count must be positive, got {n}")
    g = p.gamma[0]
    sig, k, c, eta, A = p.sigma, p.k, p.c, p.eta, p.A

    varpi = 1.0 / n
    kv = k * varpi
    off = math.log(1.0 + sig * g / kv) / g
    bonus = (
        math.log((kv / (kv + sig * eta)) * n * (1.0 + n * eta * sig / (kv + sig * g)))
        / eta
    )
    flow = A * math.exp(-(k / sig) * (c * (1.0 - varpi) + varpi * n * off - varpi * bonus))
    growth = (
        2.0 * (sig / (kv + sig * g)) * A * math.exp(-(k / sig) * (c + varpi * n * off))
    )
    welfare = n * growth * (math.exp((kv / sig) * (c + bonus)) - kv / (sig * eta))
    return welfare - 2.0 * flow * bonus


def c_rule_fee(template, n) -> float:
    """Taker fee under the per-maker tick-offset rule: (sigma/k - tick/2)/n."""
    p = validate(template)
    return (p.sigma / p.k - p.tick / 2.0) / n


def point_params(template, axis, value):
    """Parameters for one sweep point.

    N-varying axes rebuild the state-space defaults for the new maker count
    (inventory band, quote cap, 1/N quoting weight) and carry over the
    template's market constants; gamma_new_agent appends one maker to the
    template's pool.
    """
    t = validate(template)
    shared = dict(
        A=t.A, k=t.k, sigma=t.sigma, T=t.T, tick=t.tick, eta=t.eta, S0=t.S0,
    )
    if axis in ("N", "varpi_rule", "c_rule"):
        n = int(value)
        if n != value or n < 1:
            raise ConfigError(f"maker count must be a positive integer, got {value}")
        if len(set(t.gamma)) != 1:
            raise ApproximationOutOfRange(
                f"{axis} sweep needs an equal-gamma template"
            )
        over = dict(shared, gamma=(t.gamma[0],) * n, c=t.c)
        if axis == "varpi_rule":
            over["varpi"] = 1.0 / n
        elif axis == "c_rule":
            over["c"] = c_rule_fee(t, n)
        p = baseline_params(n, **over)
        y0 = reservation_from_no_contract(p)
        R = tuple(-math.exp(-g * y) for g, y in zip(p.gamma, y0))
        return p.with_overrides(R=R), y0[0]
    if axis == "gamma_new_agent":
        n = t.n_agents + 1
        gamma = t.gamma + (float(value),)
        p = baseline_params(n, **dict(shared, gamma=gamma, c=t.c))
        # unequal risk aversions: the no-contract approximation does not
        # apply, so new pools are priced at a unit outside option
        return p, 0.0
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(template, axis, values, n_paths=1000, seed0=0, dt=None,
          dt_price=0.1, mode="auto") -> list:
    """Solve and simulate the model at each value of one axis.

    Returns one dict row per point (axis, value, resolved parameters,
    aggregate statistics with standard errors, solver metadata).  A failing
    point is recorded with status='error' and the sweep continues.
    """
    rows = []
    for value in values:
        row = {
            "axis": axis,
            "value": value,
            "status": "ok",
            "error": "",
            "n_agents": "",
            "c": "",
            "varpi": "",
            "q_bar": "",
            "dt": "",
            "reduced": "",
            "reservation_y0": "",
            "n_paths": n_paths,
            "seed0": seed0,
            "solve_seconds": "",
            "sim_seconds": "",
            "pnl_mean": "",
            "pnl_se": "",
            "spread_mean": "",
            "spread_se": "",
            "flow_mean": "",
            "flow_se": "",
            "best_ask_mean": "",
            "best_bid_mean": "",
            "trading_cost_mean": "",
        }
        try:
            p, y0 = point_params(template, axis, value)
            row.update(
                n_agents=p.n_agents, c=p.c, varpi=p.varpi, q_bar=p.q_bar,
                reservation_y0=y0,
            )
            t0 = time.perf_counter()
            vf = solve_backward(p, dt=dt)
            row["solve_seconds"] = round(time.perf_counter() - t0, 3)
            row["dt"] = vf.dt
            row["reduced"] = int(vf.space.reduced)
            t0 = time.perf_counter()
            _, st = run_batch(p, vf, n_paths, seed0=seed0, dt_price=dt_price,
                              mode=mode)
            row["sim_seconds"] = round(time.perf_counter() - t0, 3)
            row.update(
                pnl_mean=st.mean_exchange_pnl,
                pnl_se=st.se_exchange_pnl,
                spread_mean=st.mean_total_spread,
                spread_se=st.se_total_spread,
                flow_mean=st.mean_flow,
                flow_se=st.se_flow,
                best_ask_mean=st.mean_best_ask,
                best_bid_mean=st.mean_best_bid,
                trading_cost_mean=st.mean_trading_cost,
            )
        except Exception as exc:  # per-point capture: the sweep must go on
            row["status"] = "error"
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
