"""Monte Carlo simulation of the contracted market.

Each path plays the model forward: makers quote the equilibrium response to
the exchange's optimal incentives, market orders arrive as competing
exponential clocks whose rates are frozen over short sub-intervals (ending
at price re-pricing knots or at events), the efficient price diffuses, and
the contract balance of every maker accrues rebates, risk transfers and the
drift that holds them at reservation.

The inner loop exists once, in `_path_core`, written in plain scalar Python
that numba can compile; the compiled kernel and the interpreted fallback
consume identical pre-drawn random pools in a pinned order, so their
trajectories agree bit for bit.  Pools are drawn from two independent
seeded streams (uniforms, normals); if a path exhausts a pool it is re-run
with larger pools whose prefixes are unchanged.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValueFunctionCoverageGap
from .hjb import risk_sharing
from .intensity import ASK, BID
from .model import validate

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    numba = None
    _HAVE_NUMBA = False


# Status codes returned by the kernel.
_OK, _NEED_U, _NEED_Z, _OFF_GRID = 0, 1, 2, 3

# Starting size of the pre-drawn random pools; grown on exhaustion.  Growing
# regenerates the pools from the same seeds, and both generators hand out
# identical prefixes for any pool size, so a re-run retraces the path.
_INITIAL_POOL = 1 << 14


def _path_core(
    n_agents, A, k_over_sigma, sigma, c_fee, T, tick, varpi, q_bar, delta_inf,
    eta, n_cells,
    gamma, offsets, top_mask, mu, omega, hh, zconst,
    times, W, nb, key_sorted, order_sorted, reduced,
    dt_price, q0, S0, xi0,
    u_pool, z_pool,
    out_scal, out_agent, rec,
):
    """Simulate one path; fills out_scal/out_agent/rec, returns a status.

    out_scal: [n_a, n_b, S_T, comp_a, comp_b, tw_ask, tw_bid,
               tcost_sum, clamp_count, 0...]
    out_agent rows: xi, trade_pl, q_final, exec_count_a, exec_count_b
    rec: (n_rows, 6 + 2*n_agents) time series at price knots, or empty.
    """
    base = 2 * q_bar + 1
    n_knots = times.shape[0]

    q = q0.copy()
    xi = xi0.copy()
    pl = np.zeros(n_agents)
    exec_a = np.zeros(n_agents)
    exec_b = np.zeros(n_agents)

    delta = np.zeros((n_agents, 2))
    branch = np.zeros((n_agents, 2), dtype=np.int64)  # 1 best, 2 cover, 0 out
    cell = np.zeros((n_agents, 2), dtype=np.int64)
    lam = np.zeros(2)
    z = np.zeros(2)
    best = np.zeros(2)
    qs = np.zeros(n_agents, dtype=np.int64)
    keybuf = np.zeros(n_agents, dtype=np.int64)

    t = 0.0
    S = S0
    n_a = 0.0
    n_b = 0.0
    comp_a = 0.0
    comp_b = 0.0
    tw_ask = 0.0
    tw_bid = 0.0
    tcost = 0.0
    clamps = 0.0
    u_ptr = 0
    z_ptr = 0
    n_rec = rec.shape[0]
    rec_i = 0

    while t < T - 1e-12:
        # ---- canonical state index ------------------------------------
        for i in range(n_agents):
            qs[i] = q[i]
        if reduced:
            qs.sort()
        key = 0
        for i in range(n_agents):
            key = key * base + (qs[i] + q_bar)
        pos = np.searchsorted(key_sorted, key)
        if pos >= key_sorted.shape[0] or key_sorted[pos] != key:
            return _OFF_GRID
        idx = order_sorted[pos]

        # ---- value interpolation at t ----------------------------------
        k = np.searchsorted(times, t, side="right") - 1
        if k < 0:
            k = 0
        if k > n_knots - 2:
            k = n_knots - 2
        tl = (t - times[k]) / (times[k + 1] - times[k])
        w0 = (1.0 - tl) * W[k, idx] + tl * W[k + 1, idx]

        # ---- incentives and quotes -------------------------------------
        for side in range(2):
            # log-sum-exp over eligible executors' post-trade values
            mx = -np.inf
            for i in range(n_agents):
                if not top_mask[i]:
                    continue
                slot = i
                if reduced:
                    slot = np.searchsorted(qs, q[i])
                j = nb[idx, slot, side]
                if j < 0:
                    continue
                wn = (1.0 - tl) * W[k, j] + tl * W[k + 1, j]
                if wn > mx:
                    mx = wn
            if mx == -np.inf:
                z[side] = 0.0
                lam[side] = 0.0
                for i in range(n_agents):
                    branch[i, side] = 0
                    delta[i, side] = 0.0
                best[side] = 0.0
                dark = True
            else:
                sumexp = 0.0
                for i in range(n_agents):
                    if not top_mask[i]:
                        continue
                    slot = i
                    if reduced:
                        slot = np.searchsorted(qs, q[i])
                    j = nb[idx, slot, side]
                    if j < 0:
                        continue
                    wn = (1.0 - tl) * W[k, j] + tl * W[k + 1, j]
                    sumexp += math.exp(wn - mx)
                lse = mx + math.log(sumexp)
                z[side] = (c_fee + (w0 - lse) / eta + zconst) / n_agents
                dark = False

            if dark:
                continue

            # equilibrium quotes, branch flags, taker cost exponent
            cost = 0.0
            bmin = 1e300
            for i in range(n_agents):
                target = -z[side] + offsets[i]
                unb = q[i] > -q_bar if side == ASK else q[i] < q_bar
                if top_mask[i] and unb:
                    d = target
                    if d > delta_inf:
                        d = delta_inf
                        clamps += 1.0
                    elif d < -delta_inf:
                        d = -delta_inf
                        clamps += 1.0
                    delta[i, side] = d
                    branch[i, side] = 1
                    cost += varpi * d
                    if d < bmin:
                        bmin = d
                else:
                    dd = 0.0
                    br = 0
                    cl = 0
                    for ell in range(1, n_cells + 1):
                        scaled = target / omega[ell - 1]
                        lo = (ell - 1) * tick
                        hi = ell * tick if ell < n_cells else delta_inf
                        if hi > delta_inf:
                            hi = delta_inf
                        if scaled > lo and scaled <= hi:
                            dd = scaled
                            br = 2
                            cl = ell
                            break
                    delta[i, side] = dd
                    branch[i, side] = br
                    cell[i, side] = cl
                    if br == 2:
                        cost += hh[cl - 1] * dd
            best[side] = bmin
            lam[side] = A * math.exp(-k_over_sigma * (c_fee + cost))

        lam_tot = lam[0] + lam[1]

        # ---- clock draw (always consumes one uniform) -------------------
        if u_ptr >= u_pool.shape[0]:
            return _NEED_U
        u1 = u_pool[u_ptr]
        u_ptr += 1
        if lam_tot > 0.0 and u1 > 0.0:
            tau = t - math.log(u1) / lam_tot
        else:
            tau = T + 1.0

        t_knot = (math.floor(t / dt_price + 1e-9) + 1.0) * dt_price
        if t_knot > T:
            t_knot = T
        event = tau < t_knot
        t1 = tau if event else t_knot
        if t1 > T:
            t1 = T
            event = False
        dur = t1 - t

        # ---- price increment --------------------------------------------
        if z_ptr >= z_pool.shape[0]:
            return _NEED_Z
        dS = sigma * math.sqrt(dur) * z_pool[z_ptr]
        z_ptr += 1

        # ---- record at price knots (state seen at time t) ----------------
        if n_rec > 0 and abs(t - round(t / dt_price) * dt_price) < 1e-9:
            if rec_i < n_rec:
                rec[rec_i, 0] = t
                rec[rec_i, 1] = S
                rec[rec_i, 2] = best[0]
                rec[rec_i, 3] = best[1]
                rec[rec_i, 4] = n_a
                rec[rec_i, 5] = n_b
                for i in range(n_agents):
                    rec[rec_i, 6 + i] = q[i]
                    rec[rec_i, 6 + n_agents + i] = xi[i]
                rec_i += 1

        # ---- accruals over [t, t1) --------------------------------------
        comp_a += lam[0] * dur
        comp_b += lam[1] * dur
        tw_ask += best[0] * dur
        tw_bid += best[1] * dur

        zs_sum = 0.0
        for i in range(n_agents):
            zs_i = 0.0
            for j in range(n_agents):
                zs_i -= mu[i, j] * gamma[j] * q[j]
            # expected-utility flow of maker i at the frozen quotes
            h_i = 0.0
            for side in range(2):
                if lam[side] <= 0.0:
                    continue
                br = branch[i, side]
                if br == 1:
                    cash = z[side] + delta[i, side]
                elif br == 2:
                    cash = z[side] + omega[cell[i, side] - 1] * delta[i, side]
                else:
                    cash = z[side]
                h_i += (1.0 - math.exp(-gamma[i] * cash)) / gamma[i] * lam[side]
            drift = 0.5 * gamma[i] * sigma * sigma * (zs_i + q[i]) ** 2 - h_i
            xi[i] += drift * dur + zs_i * dS
            pl[i] += q[i] * dS
            zs_sum += zs_i

        S += dS
        t = t1

        # ---- event -------------------------------------------------------
        if event:
            if u_ptr + 1 >= u_pool.shape[0]:
                return _NEED_U
            u2 = u_pool[u_ptr]
            u_ptr += 1
            u3 = u_pool[u_ptr]
            u_ptr += 1
            side = ASK if u2 * lam_tot < lam[0] else BID
            if side == ASK:
                n_a += 1.0
            else:
                n_b += 1.0
            tcost += c_fee + best[side]

            n_best = 0
            for i in range(n_agents):
                if branch[i, side] == 1:
                    n_best += 1
            pick = int(u3 * n_best)
            if pick >= n_best:
                pick = n_best - 1
            chosen = -1
            seen = 0
            for i in range(n_agents):
                if branch[i, side] == 1:
                    if seen == pick:
                        chosen = i
                        break
                    seen += 1

            for i in range(n_agents):
                xi[i] += z[side]
                if branch[i, side] == 1:
                    pl[i] += delta[i, side]
                elif branch[i, side] == 2:
                    pl[i] += omega[cell[i, side] - 1] * delta[i, side]
            if side == ASK:
                q[chosen] -= 1
                exec_a[chosen] += 1.0
            else:
                q[chosen] += 1
                exec_b[chosen] += 1.0

    # ---- final record row ------------------------------------------------
    if n_rec > 0 and rec_i < n_rec:
        rec[rec_i, 0] = T
        rec[rec_i, 1] = S
        rec[rec_i, 2] = best[0]
        rec[rec_i, 3] = best[1]
        rec[rec_i, 4] = n_a
        rec[rec_i, 5] = n_b
        for i in range(n_agents):
            rec[rec_i, 6 + i] = q[i]
            rec[rec_i, 6 + n_agents + i] = xi[i]
        rec_i += 1

    out_scal[0] = n_a
    out_scal[1] = n_b
    out_scal[2] = S
    out_scal[3] = comp_a
    out_scal[4] = comp_b
    out_scal[5] = tw_ask / T
    out_scal[6] = tw_bid / T
    out_scal[7] = tcost
    out_scal[8] = clamps
    out_scal[9] = float(rec_i)
    for i in range(n_agents):
        out_agent[0, i] = xi[i]
        out_agent[1, i] = pl[i]
        out_agent[2, i] = q[i]
        out_agent[3, i] = exec_a[i]
        out_agent[4, i] = exec_b[i]
    return _OK


if _HAVE_NUMBA:
    _path_core_nb = numba.njit(cache=True, nogil=True)(_path_core)


@dataclass(frozen=True)
class SimPath:
    """One simulated path: terminal state, contract balances, diagnostics."""

    seed: int
    n_a: int
    n_b: int
    S_T: float
    q_T: tuple
    xi: tuple
    trade_pl: tuple
    comp_a: float
    comp_b: float
    tw_best_ask: float
    tw_best_bid: float
    trading_cost_sum: float
    exec_a: tuple
    exec_b: tuple
    clamp_count: int
    record: np.ndarray | None = field(default=None, repr=False)


def _pack_args(p, value):
    vf = value
    space = vf.space
    g = np.asarray(p.gamma)
    kv = p.k_varpi
    offsets = np.log(1.0 + p.sigma * g / kv) / g
    top_mask = np.zeros(p.n_agents, dtype=np.bool_)
    for i in p.top_set:
        top_mask[i] = True
    mu = risk_sharing(p).mu
    cst = (kv / (kv + p.eta * p.sigma)) * (
        1.0 + p.eta * p.sigma * float(np.sum(1.0 / (kv + p.sigma * g)))
    )
    zconst = math.log(cst * len(p.top_set)) / p.eta
    return (
        p.n_agents, p.A, p.k_over_sigma, p.sigma, p.c, p.T, p.tick, p.varpi,
        p.q_bar, p.delta_inf, p.eta, p.K,
        g, offsets, top_mask, mu, np.asarray(p.omega), np.asarray(p.H), zconst,
        vf.times, vf.log_neg_v, space.neighbors,
        space.key_sorted, space.order_sorted, space.reduced,
    )


def simulate_path(params, value, seed, dt_price=0.1, mode="auto",
                  record=False, q0=None, xi0=None) -> SimPath:
    """Simulate one path of the contracted market.

    mode selects the inner loop: "numba" (compiled), "python" (interpreted
    twin, bit-identical), or "auto".  record=True captures a time series at
    the price knots (t, S, best quotes, counts, inventories, balances).
    """
    p = validate(params)
    if value.space.q_bar != p.q_bar or value.space.n_agents != p.n_agents:
        raise ValueFunctionCoverageGap(
            "value function grid does not match params (q_bar or n_agents)"
        )
    if mode == "auto":
        mode = "numba" if _HAVE_NUMBA else "python"
    core = _path_core_nb if mode == "numba" else _path_core

    args = _pack_args(p, value)
    if q0 is None:
        q0 = np.zeros(p.n_agents, dtype=np.int64)
    else:
        q0 = np.asarray(q0, dtype=np.int64)
    if xi0 is None:
        xi0 = np.array(
            [-math.log(-r) / g for g, r in zip(p.gamma, p.R)], dtype=float
        )
    else:
        xi0 = np.asarray(xi0, dtype=float)

    n_rec = int(round(p.T / dt_price)) + 2 if record else 0
    rec = np.zeros((n_rec, 6 + 2 * p.n_agents))

    n_pool = _INITIAL_POOL
    for _attempt in range(8):
        u_pool = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([int(seed), 0]))
        ).random(n_pool)
        z_pool = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([int(seed), 1]))
        ).standard_normal(n_pool)
        out_scal = np.zeros(16)
        out_agent = np.zeros((5, p.n_agents))
        status = core(*args, dt_price, q0.copy(), p.S0, xi0.copy(),
                      u_pool, z_pool, out_scal, out_agent, rec)
        if status == _OK:
            break
        if status == _OFF_GRID:
            raise ValueFunctionCoverageGap(
                f"inventory left the solved band on seed {seed}"
            )
        n_pool *= 4
    else:
        raise RuntimeError(f"random pools kept overflowing on seed {seed}")

    n_rows = int(out_scal[9]) if record else 0
    return SimPath(
        seed=int(seed),
        n_a=int(out_scal[0]),
        n_b=int(out_scal[1]),
        S_T=float(out_scal[2]),
        q_T=tuple(int(v) for v in out_agent[2]),
        xi=tuple(float(v) for v in out_agent[0]),
        trade_pl=tuple(float(v) for v in out_agent[1]),
        comp_a=float(out_scal[3]),
        comp_b=float(out_scal[4]),
        tw_best_ask=float(out_scal[5]),
        tw_best_bid=float(out_scal[6]),
        trading_cost_sum=float(out_scal[7]),
        exec_a=tuple(float(v) for v in out_agent[3]),
        exec_b=tuple(float(v) for v in out_agent[4]),
        clamp_count=int(out_scal[8]),
        record=rec[:n_rows] if record else None,
    )


@dataclass(frozen=True)
class PathStats:
    """Batch aggregates with standard errors (per-path sample statistics)."""

    n_paths: int
    mean_best_ask: float
    mean_best_bid: float
    mean_total_spread: float
    se_total_spread: float
    mean_flow: float
    se_flow: float
    mean_flow_per_agent: tuple
    mean_exchange_pnl: float
    se_exchange_pnl: float
    exch_util_log_mean: float     # log(-E[U_exchange]); U < 0
    exch_util_rel_se: float       # SE(U)/|E[U]|
    agent_util_mean: tuple
    agent_util_se: tuple
    mean_trading_cost: float
    martingale_a_mean: float
    martingale_a_se: float
    martingale_b_mean: float
    martingale_b_se: float
    clamp_total: int


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return m, se


def collect_stats(paths, params) -> PathStats:
    """Aggregate SimPaths into PathStats (deterministic: path order fixed)."""
    p = validate(params)
    g = np.asarray(p.gamma)
    n = len(paths)
    n_a = np.array([s.n_a for s in paths], dtype=float)
    n_b = np.array([s.n_b for s in paths], dtype=float)
    xi = np.array([s.xi for s in paths])
    pltr = np.array([s.trade_pl for s in paths])
    ask = np.array([s.tw_best_ask for s in paths])
    bid = np.array([s.tw_best_bid for s in paths])

    total_spread, se_spread = _mean_se(ask + bid)
    flow, se_flow = _mean_se(n_a + n_b)
    pnl = p.c * (n_a + n_b) - xi.sum(axis=1)
    pnl_m, pnl_se = _mean_se(pnl)

    # exchange utility in log space: U = -exp(-eta * pnl)
    ell = -p.eta * pnl
    emax = ell.max()
    shifted = np.exp(ell - emax)
    util_log_mean = emax + math.log(shifted.mean())
    rel_se = float(shifted.std(ddof=1) / math.sqrt(n) / shifted.mean()) if n > 1 else 0.0

    agent_util = -np.exp(-g * (xi + pltr))
    au_m = tuple(float(v) for v in agent_util.mean(axis=0))
    au_se = tuple(
        float(v) for v in agent_util.std(axis=0, ddof=1) / math.sqrt(n)
    ) if n > 1 else tuple(0.0 for _ in range(p.n_agents))

    mart_a, mart_a_se = _mean_se(n_a - np.array([s.comp_a for s in paths]))
    mart_b, mart_b_se = _mean_se(n_b - np.array([s.comp_b for s in paths]))

    execs = np.array([np.asarray(s.exec_a) + np.asarray(s.exec_b) for s in paths])
    tc = np.array([s.trading_cost_sum for s in paths])
    orders = n_a + n_b
    mean_tc = float(tc.sum() / orders.sum()) if orders.sum() > 0 else 0.0

    return PathStats(
        n_paths=n,
        mean_best_ask=float(ask.mean()),
        mean_best_bid=float(bid.mean()),
        mean_total_spread=total_spread,
        se_total_spread=se_spread,
        mean_flow=flow,
        se_flow=se_flow,
        mean_flow_per_agent=tuple(float(v) for v in execs.mean(axis=0)),
        mean_exchange_pnl=pnl_m,
        se_exchange_pnl=pnl_se,
        exch_util_log_mean=util_log_mean,
        exch_util_rel_se=rel_se,
        agent_util_mean=au_m,
        agent_util_se=au_se,
        mean_trading_cost=mean_tc,
        martingale_a_mean=mart_a,
        martingale_a_se=mart_a_se,
        martingale_b_mean=mart_b,
        martingale_b_se=mart_b_se,
        clamp_total=sum(s.clamp_count for s in paths),
    )


def run_batch(params, value, n_paths, seed0=0, dt_price=0.1, mode="auto"):
    """Simulate n_paths with seeds seed0..seed0+n_paths-1.

    Paths run on a thread pool (the compiled kernel releases the GIL);
    results are aggregated in seed order, so the outcome is independent of
    scheduling.  Returns (list of SimPath, PathStats).
    """
    p = validate(params)
    workers = int(os.environ.get("MAKETAKE_THREADS", 0)) or (os.cpu_count() or 1)
    workers = max(1, min(workers, n_paths))

    if mode == "auto":
        mode = "numba" if _HAVE_NUMBA else "python"
    if mode == "numba":
        # compile once before fanning out
        simulate_path(p, value, seed0, dt_price=dt_price, mode=mode)

    def one(i):
        return simulate_path(p, value, seed0 + i, dt_price=dt_price, mode=mode)

    if workers == 1:
        paths = [one(i) for i in range(n_paths)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            paths = list(ex.map(one, range(n_paths)))
    return paths, collect_stats(paths, p)
