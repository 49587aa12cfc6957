"""Exchange value function: risk sharing, constants, and the backward solve.

After substituting the makers' equilibrium response and the exchange's
optimal incentives, the exchange's exponential-utility value v(t, q) < 0
solves a coupled ODE system over the inventory grid,

    dv/dt = -v * cost(q) + v * C * sum_sides (v / sum_nbr v)^alpha,

where the neighbor sum runs over the highest-risk-aversion makers who can
still trade the side, cost(q) is the quadratic inventory penalty after the
optimal risk transfer, and alpha = k*varpi / (sigma*eta).  v spans hundreds
of orders of magnitude, so everything here works on w = log(-v), where the
system is smooth and O(1) per unit time; terminal data v(T,.) = -1 is w = 0
exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StateSpaceTooLarge, StepRejected, ValueFunctionCoverageGap
from .intensity import ASK, BID
from .model import validate


@dataclass(frozen=True)
class RiskSharingMatrix:
    """Linear map from inventories to the optimal inventory-risk transfer.

    The per-maker transfer is z_S = -mu @ (gamma * q); kappa is the common
    normalizer 1 / (prod gamma + eta * sum_j prod_{k != j} gamma_k).
    """

    mu: np.ndarray
    kappa: float


def risk_sharing(params) -> RiskSharingMatrix:
    """Coefficients of the exchange's optimal inventory-risk transfer.

    Stationarity of the joint quadratic risk cost in the transfer vector
    gives, for each maker i:  gamma_i * (z_S_i + q_i) + eta * sum_k z_S_k = 0.
    """
    p = validate(params)
    g = np.asarray(p.gamma)
    n = p.n_agents
    prod_all = float(np.prod(g))
    prod_excl = np.array([prod_all / g[j] for j in range(n)])
    kappa = 1.0 / (prod_all + p.eta * prod_excl.sum())
    mu = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                others = [k for k in range(n) if k != i]
                mu[i, i] = kappa * (
                    prod_excl[i]
                    + p.eta * sum(prod_excl[i] / g[k] for k in others)
                )
            else:
                mu[i, j] = -p.eta * kappa * prod_all / (g[i] * g[j])
    return RiskSharingMatrix(mu=mu, kappa=kappa)


def z_s_vector(q, params, rs=None):
    """Optimal inventory-risk transfer for inventory q (rows broadcast)."""
    p = validate(params)
    if rs is None:
        rs = risk_sharing(p)
    q_arr = np.asarray(q, dtype=float)
    return -(q_arr * np.asarray(p.gamma)) @ rs.mu.T


def constants(params):
    """(C, cost) of the substituted value equation.

    C scales the per-side flow term; cost(q) is the quadratic inventory
    penalty (vectorized over rows of q) after the optimal risk transfer.
    """
    p = validate(params)
    g = np.asarray(p.gamma)
    kv = p.k_varpi
    eta, sigma = p.eta, p.sigma
    card = len(p.top_set)

    cst = (kv / (kv + eta * sigma)) * (
        1.0 + eta * sigma * float(np.sum(1.0 / (kv + sigma * g)))
    )
    expo = (
        p.c * (1.0 - p.varpi)
        - (p.varpi / eta) * math.log(cst * card)
        + p.varpi * float(np.sum(np.log(1.0 + sigma * g / kv) / g))
    )
    C = (
        p.A
        * math.exp(-p.k_over_sigma * expo)
        * (sigma * eta / (kv + sigma * eta))
        * (1.0 + eta * sigma * float(np.sum(1.0 / (kv + sigma * g))))
    )

    rs = risk_sharing(p)

    def cost(q):
        q_arr = np.atleast_2d(np.asarray(q, dtype=float))
        z = -(q_arr * g) @ rs.mu.T
        per_maker = 0.5 * eta * sigma**2 * ((q_arr + z) ** 2 * g).sum(axis=1)
        pooled = 0.5 * (eta * sigma) ** 2 * z.sum(axis=1) ** 2
        out = per_maker + pooled
        return out if np.asarray(q).ndim > 1 else float(out[0])

    return C, cost


# ---------------------------------------------------------------------------
# Inventory state space

_MAX_STATES = 2_000_000


@dataclass
class StateSpace:
    """Enumerated inventory grid with per-maker execution neighbor tables.

    When makers are exchangeable (equal risk aversions) the grid can be
    reduced to sorted representatives; neighbor slots then act on the sorted
    coordinates, which is equivalent by symmetry of the value function.
    neighbors[s, i, ASK] is the state index after maker-slot i sells one unit
    (-1 when that would leave the band), BID likewise for buying.
    """

    states: np.ndarray
    neighbors: np.ndarray
    reduced: bool
    q_bar: int
    n_agents: int
    key_sorted: np.ndarray = field(repr=False, default=None)
    order_sorted: np.ndarray = field(repr=False, default=None)

    @property
    def n_states(self):
        return self.states.shape[0]

    def _keys(self, q_rows):
        base = 2 * self.q_bar + 1
        k = np.zeros(q_rows.shape[0], dtype=np.int64)
        for i in range(self.n_agents):
            k = k * base + (q_rows[:, i].astype(np.int64) + self.q_bar)
        return k

    def index(self, q):
        """State index of inventory q (any dim); sorts first when reduced."""
        q_rows = np.atleast_2d(np.asarray(q, dtype=np.int64))
        if np.any(np.abs(q_rows) > self.q_bar):
            raise ValueFunctionCoverageGap(
                f"inventory {np.asarray(q).tolist()} outside solved band "
                f"[-{self.q_bar}, {self.q_bar}]"
            )
        if self.reduced:
            q_rows = np.sort(q_rows, axis=1)
        keys = self._keys(q_rows)
        pos = np.searchsorted(self.key_sorted, keys)
        idx = self.order_sorted[pos]
        return idx if np.asarray(q).ndim > 1 else int(idx[0])


def build_state_space(params, reduce_symmetry=None) -> StateSpace:
    """Enumerate inventories in [-q_bar, q_bar]^N and wire neighbor tables."""
    p = validate(params)
    n, q_bar = p.n_agents, p.q_bar
    equal_gamma = len(set(p.gamma)) == 1
    if reduce_symmetry is None:
        reduce_symmetry = n >= 3 and equal_gamma
    if reduce_symmetry and not equal_gamma:
        raise StateSpaceTooLarge(
            "symmetry reduction requires identical risk aversions"
        )

    width = 2 * q_bar + 1
    if reduce_symmetry:
        n_states = math.comb(width + n - 1, n)
        if n_states > _MAX_STATES:
            raise StateSpaceTooLarge(
                f"{n_states} sorted inventory states exceed cap {_MAX_STATES}"
            )
        states = np.fromiter(
            itertools.chain.from_iterable(
                itertools.combinations_with_replacement(range(-q_bar, q_bar + 1), n)
            ),
            dtype=np.int16,
            count=n_states * n,
        ).reshape(n_states, n)
    else:
        if width**n > _MAX_STATES:
            raise StateSpaceTooLarge(
                f"{width**n} inventory states exceed cap {_MAX_STATES}; "
                "equal risk aversions allow reduce_symmetry"
            )
        grids = np.meshgrid(*([np.arange(-q_bar, q_bar + 1)] * n), indexing="ij")
        states = np.stack([gg.ravel() for gg in grids], axis=1).astype(np.int16)

    ss = StateSpace(
        states=states,
        neighbors=None,
        reduced=reduce_symmetry,
        q_bar=q_bar,
        n_agents=n,
    )
    keys = ss._keys(states)
    order = np.argsort(keys)
    ss.key_sorted = keys[order]
    ss.order_sorted = order.astype(np.int64)

    nb = np.full((states.shape[0], n, 2), -1, dtype=np.int64)
    for i in range(n):
        for side, step in ((ASK, -1), (BID, +1)):
            shifted = states.astype(np.int64).copy()
            shifted[:, i] += step
            ok = np.abs(shifted[:, i]) <= q_bar
            rows = shifted[ok]
            if reduce_symmetry:
                rows = np.sort(rows, axis=1)
            pos = np.searchsorted(ss.key_sorted, ss._keys(rows))
            nb[ok, i, side] = ss.order_sorted[pos]
    ss.neighbors = nb
    return ss


# ---------------------------------------------------------------------------
# Value function container


@dataclass
class ValueFunction:
    """Backward-solved exchange value on a time grid.

    log_neg_v[k, s] stores w = log(-v) at times[k] (increasing, last = T)
    and state s; time interpolation is linear in w.  `values` materializes v
    itself, which underflows to -0.0 at early times for two or more makers
    (w below about -745): consumers that need ratios of v must work through
    the log-space accessors.
    """

    times: np.ndarray
    space: StateSpace
    log_neg_v: np.ndarray
    alpha: float
    dt: float
    params: object = field(repr=False, default=None)

    @property
    def states(self):
        return self.space.states

    @property
    def values(self):
        return -np.exp(self.log_neg_v)

    def _bracket(self, t):
        tt = self.times
        if t < tt[0] - 1e-9 or t > tt[-1] + 1e-9:
            raise ValueFunctionCoverageGap(
                f"t={t} outside solved range [{tt[0]}, {tt[-1]}]"
            )
        k = int(np.searchsorted(tt, t, side="right")) - 1
        k = min(max(k, 0), len(tt) - 2)
        lam = (t - tt[k]) / (tt[k + 1] - tt[k])
        return k, min(max(lam, 0.0), 1.0)

    def w_rows(self, t):
        """Full w row at time t (linear interpolation between knots)."""
        k, lam = self._bracket(t)
        if lam == 0.0:
            return self.log_neg_v[k]
        return (1.0 - lam) * self.log_neg_v[k] + lam * self.log_neg_v[k + 1]

    def w(self, t, q):
        row = self.w_rows(t)
        return float(row[self.space.index(q)])

    def v(self, t, q):
        return -math.exp(self.w(t, q))

    def u(self, t, q):
        """Power transform (-v)^(-alpha) that linearizes the value equation."""
        return math.exp(-self.alpha * self.w(t, q))

    def shift_lse(self, t, q, side, members):
        """log of -(sum of v at one-unit executions by the given makers).

        Blocked makers drop out; returns -inf when every candidate is
        blocked (the side is dark).
        """
        idx = self.space.index(q)
        row = self.w_rows(t)
        acc = -np.inf
        for i in members:
            j = self.space.neighbors[idx, i, side]
            if j >= 0:
                acc = np.logaddexp(acc, row[j])
        return float(acc)


# ---------------------------------------------------------------------------
# Backward integration


def _rhs_factory(C, cost_arr, alpha, space, members):
    """ds-derivative of w (s = time to horizon) for the substituted system."""
    cols = [
        [(np.maximum(space.neighbors[:, i, side], 0),
          space.neighbors[:, i, side] >= 0) for i in members]
        for side in (ASK, BID)
    ]

    def g(w):
        flow = np.zeros_like(w)
        for side in (ASK, BID):
            stack = np.stack(
                [np.where(ok, w[safe], -np.inf) for safe, ok in cols[side]],
                axis=1,
            )
            mx = stack.max(axis=1)
            finite = mx > -np.inf
            mx_safe = np.where(finite, mx, 0.0)
            sumexp = np.exp(stack - mx_safe[:, None]).sum(axis=1)
            # rows with every maker blocked have sumexp 0: the side is dark
            d = alpha * (w - mx_safe) - alpha * np.log(np.maximum(sumexp, 1e-300))
            flow += np.where(finite, np.exp(np.where(finite, d, 0.0)), 0.0)
        return cost_arr - C * flow

    return g


def _integrate_backward(g, n_states, T, dt, store_stride, store_dtype):
    """Classical RK4 march of w from the horizon back to t = 0.

    Returns (times ascending, W) with W[k] the w row at times[k]; the first
    and last knots (t = 0 and t = T) are always stored.
    """
    n_steps = max(1, round(T / dt))
    h = T / n_steps
    w = np.zeros(n_states)

    stored = [(T, w.copy())]
    for step in range(1, n_steps + 1):
        k1 = g(w)
        k2 = g(w + 0.5 * h * k1)
        k3 = g(w + 0.5 * h * k2)
        k4 = g(w + h * k3)
        w = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % 200 == 0 and not np.all(np.isfinite(w)):
            raise StepRejected(f"w lost finiteness at step {step} (dt={h})")
        if step % store_stride == 0 or step == n_steps:
            stored.append((T - step * h, w.copy()))
    if not np.all(np.isfinite(w)):
        raise StepRejected(f"w lost finiteness at t=0 (dt={h})")

    stored.reverse()
    times = np.array([t for t, _ in stored])
    W = np.array([row for _, row in stored], dtype=store_dtype)
    return times, W


def solve_backward(params, dt=None, reduce_symmetry=None,
                   store_stride=None, max_store_bytes=256 * 2**20) -> ValueFunction:
    """Solve the substituted exchange value system backward from the horizon.

    dt defaults to 0.1s for up to two makers and 0.25s beyond; on loss of
    finiteness the step is halved and the march restarted (a few times)
    before StepRejected propagates.  Large reduced grids are stored at a
    knot stride and in float32 to respect max_store_bytes.
    """
    p = validate(params)
    if dt is None:
        dt = 0.1 if p.n_agents <= 2 else 0.25
    space = build_state_space(p, reduce_symmetry)
    C, cost = constants(p)
    cost_arr = cost(space.states.astype(float))
    alpha = p.k_varpi / (p.sigma * p.eta)
    members = list(p.top_set)
    g = _rhs_factory(C, cost_arr, alpha, space, members)

    store_dtype = np.float64 if p.n_agents <= 2 else np.float32
    if store_stride is None:
        store_stride = 1
        n_steps = max(1, round(p.T / dt))
        bytes_per_knot = space.n_states * np.dtype(store_dtype).itemsize
        while (n_steps // store_stride + 2) * bytes_per_knot > max_store_bytes:
            store_stride *= 2

    attempt_dt = float(dt)
    last_err = None
    for _ in range(7):
        try:
            times, W = _integrate_backward(
                g, space.n_states, p.T, attempt_dt, store_stride, store_dtype
            )
            return ValueFunction(
                times=times, space=space, log_neg_v=W,
                alpha=alpha, dt=attempt_dt, params=p,
            )
        except StepRejected as err:
            last_err = err
            attempt_dt *= 0.5
    raise last_err
