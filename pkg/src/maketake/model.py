"""Market model parameters and validation.

The model is an exchange plus N market makers quoting bid/ask spreads on a
single asset.  Order flow on each side arrives at an intensity that decays
exponentially in the cost a market taker pays, makers have exponential
utilities with individual risk aversions, and the exchange (also exponential
utility) pays makers a per-trade incentive on top of the spread they earn.

Everything downstream consumes a `ValidatedParams`, produced by `validate`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np

from .errors import (
    ConfigError,
    CoveringMisconfigured,
    EmptyGammaVector,
    NonPositiveParameter,
    ReservationNotNegative,
)

# Spread grids, quotes and cell boundaries are expressed in ticks throughout.


@dataclass(frozen=True)
class ModelParams:
    """Raw model inputs, before validation.

    gamma and R are per-agent vectors (scalars broadcast to all agents).
    H is the vector of flat rebates earned by covering (non-best) quoters,
    one entry per covering cell; if None it defaults to varpi * omega so a
    covering quote keeps the same marginal effect on taker cost as a best
    quote scaled by its cell weight.
    """

    n_agents: int = 1
    A: float = 1.5          # arrival scale at zero taker cost
    k: float = 0.3          # taker-cost decay, in units of sigma
    sigma: float = 0.3      # efficient-price volatility (ticks / sqrt(s))
    c: float = 0.5          # taker fee collected by the exchange
    T: float = 600.0        # horizon in seconds
    tick: float = 1.0
    varpi: float = 1.0      # pass-through of the best spread into taker cost
    K: int = 1              # number of covering cells above the best quote
    omega: tuple = (0.5,)   # covering weights, one per cell, decreasing in (0,1)
    H: tuple | None = None  # covering rebates, one per cell (None -> varpi*omega)
    q_bar: int = 50         # inventory bound per maker
    delta_inf: float = 6.0  # admissible quote bound, in ticks
    eta: float = 1.0        # exchange risk aversion
    gamma: tuple = (0.01,)  # maker risk aversions
    R: tuple = (-1.0,)      # maker reservation utilities (strictly negative)
    S0: float = 100.0       # initial efficient price


def _as_tuple(x, n, name):
    """Broadcast a scalar (or 1-vector) to n entries, or check an n-vector."""
    if np.isscalar(x):
        return (float(x),) * n
    t = tuple(float(v) for v in x)
    if len(t) == 1 and n > 1:
        return t * n
    if len(t) != n:
        raise ConfigError(f"{name} has {len(t)} entries but n_agents={n}")
    return t


@dataclass(frozen=True)
class ValidatedParams:
    """A ModelParams that passed validation, plus derived quantities.

    Derived fields:
      k_over_sigma   k / sigma, the decay rate applied to taker cost
      inv_gamma_sum  sum of 1/gamma_i over makers
      top_set        indices of makers attaining max gamma (ties within eps)
      H              resolved covering rebates (never None here)
    """

    n_agents: int
    A: float
    k: float
    sigma: float
    c: float
    T: float
    tick: float
    varpi: float
    K: int
    omega: tuple
    H: tuple
    q_bar: int
    delta_inf: float
    eta: float
    gamma: tuple
    R: tuple
    S0: float
    k_over_sigma: float = field(default=0.0)
    inv_gamma_sum: float = field(default=0.0)
    top_set: tuple = field(default=())

    @cached_property
    def gamma_arr(self):
        return np.asarray(self.gamma)

    @cached_property
    def omega_arr(self):
        return np.asarray(self.omega)

    @cached_property
    def H_arr(self):
        return np.asarray(self.H)

    @property
    def k_varpi(self):
        return self.k * self.varpi

    def with_overrides(self, **kw):
        """Re-validate after overriding raw fields (returns a new object)."""
        raw = {f.name: getattr(self, f.name) for f in fields(ModelParams)}
        raw.update(kw)
        return validate(ModelParams(**raw))


def validate(params) -> ValidatedParams:
    """Check params and return a ValidatedParams (idempotent).

    Raises NonPositiveParameter / EmptyGammaVector / ReservationNotNegative /
    CoveringMisconfigured as appropriate.
    """
    if isinstance(params, ValidatedParams):
        return params

    n = int(params.n_agents)
    if n < 1:
        raise NonPositiveParameter(f"n_agents must be >= 1, got {n}")

    for name in ("A", "k", "sigma", "T", "tick", "varpi", "delta_inf", "eta"):
        v = float(getattr(params, name))
        if not v > 0.0 or not math.isfinite(v):
            raise NonPositiveParameter(f"{name} must be strictly positive, got {v}")

    if not np.isscalar(params.gamma) and len(params.gamma) == 0:
        raise EmptyGammaVector("gamma is empty")
    gamma = _as_tuple(params.gamma, n, "gamma")
    for g in gamma:
        if not g > 0.0 or not math.isfinite(g):
            raise NonPositiveParameter(f"gamma entries must be positive, got {g}")

    R = _as_tuple(params.R, n, "R")
    for r in R:
        if not r < 0.0:
            raise ReservationNotNegative(f"reservation utilities must be < 0, got {r}")

    q_bar = int(params.q_bar)
    if q_bar < 1:
        raise NonPositiveParameter(f"q_bar must be >= 1, got {q_bar}")

    K = int(params.K)
    if K < 1:
        raise NonPositiveParameter(f"K must be >= 1, got {K}")

    omega = tuple(float(w) for w in params.omega)
    if len(omega) != K:
        raise CoveringMisconfigured(f"omega has {len(omega)} entries, expected K={K}")
    for w in omega:
        if not (0.0 < w < 1.0):
            raise CoveringMisconfigured(f"omega entries must lie in (0,1), got {w}")
    if any(omega[i] < omega[i + 1] for i in range(K - 1)):
        raise CoveringMisconfigured(f"omega must be non-increasing, got {omega}")

    if params.H is None:
        H = tuple(float(params.varpi) * w for w in omega)
    else:
        H = tuple(float(h) for h in params.H)
        if len(H) != K:
            raise CoveringMisconfigured(f"H has {len(H)} entries, expected K={K}")
        if any(h < 0.0 for h in H):
            raise CoveringMisconfigured(f"H entries must be >= 0, got {H}")
        if any(H[i] < H[i + 1] for i in range(K - 1)):
            raise CoveringMisconfigured(f"H must be non-increasing, got {H}")

    tick, delta_inf = float(params.tick), float(params.delta_inf)
    # Cells are ((l-1)*tick, l*tick], the last one stretched to delta_inf;
    # every cell must be non-empty below the quote bound.
    if (K - 1) * tick >= delta_inf:
        raise CoveringMisconfigured(
            f"last covering cell is empty: (K-1)*tick = {(K - 1) * tick} "
            f">= delta_inf = {delta_inf}"
        )

    gmax = max(gamma)
    top = tuple(i for i, g in enumerate(gamma) if g >= gmax * (1.0 - 1e-12))

    return ValidatedParams(
        n_agents=n,
        A=float(params.A),
        k=float(params.k),
        sigma=float(params.sigma),
        c=float(params.c),
        T=float(params.T),
        tick=tick,
        varpi=float(params.varpi),
        K=K,
        omega=omega,
        H=H,
        q_bar=q_bar,
        delta_inf=delta_inf,
        eta=float(params.eta),
        gamma=gamma,
        R=R,
        S0=float(params.S0),
        k_over_sigma=float(params.k) / float(params.sigma),
        inv_gamma_sum=sum(1.0 / g for g in gamma),
        top_set=top,
    )


def delta_inf_bound(params, v_ratio_bound=None) -> float:
    """Quote bound beyond which equilibrium quotes are never clamped.

    Any admissible bound at least this large leaves the equilibrium spreads
    untouched; v_ratio_bound caps the value-function ratio entering the
    exchange's trade incentive (default: n_agents, the flat-value worst case
    is milder, so this is conservative for moderate inventories).
    """
    p = validate(params)
    if v_ratio_bound is None:
        v_ratio_bound = float(p.n_agents)
    n, eta = p.n_agents, p.eta
    kv = p.k_varpi
    cst = (kv / (kv + eta * p.sigma)) * (
        1.0 + eta * p.sigma * sum(1.0 / (kv + p.sigma * g) for g in p.gamma)
    )
    return (
        n * abs(p.c)
        + sum((1.0 / eta + 1.0 / g) * math.log(1.0 + p.sigma * g / kv) for g in p.gamma)
        - (n / eta) * math.log(cst)
        + (n / eta) * abs(math.log(v_ratio_bound))
    )


@dataclass(frozen=True)
class InventoryState:
    """Per-maker inventory vector, bounded by q_bar in absolute value."""

    q: tuple

    def as_array(self):
        return np.asarray(self.q, dtype=np.int64)


def check_inventory(q, params) -> np.ndarray:
    """Coerce q to an int array of length n_agents inside the band."""
    p = validate(params)
    arr = np.atleast_1d(np.asarray(q, dtype=np.int64))
    if arr.shape != (p.n_agents,):
        raise ConfigError(f"inventory has shape {arr.shape}, expected ({p.n_agents},)")
    if np.any(np.abs(arr) > p.q_bar):
        raise ConfigError(f"inventory {arr.tolist()} outside band [-{p.q_bar}, {p.q_bar}]")
    return arr


def baseline_params(n_agents=1, **overrides) -> ValidatedParams:
    """Reference configuration used across tests and the CLI.

    Single maker: the canonical unit-tick setup.  More makers: the best-spread
    pass-through is split (varpi = 1/N) and the inventory band / quote bound
    shrink or grow so that solve times and clamping stay reasonable.
    """
    n = int(n_agents)
    if n == 1:
        q_bar, delta_inf, varpi = 50, 6.0, 1.0
    elif n == 2:
        q_bar, delta_inf, varpi = 25, 8.0, 0.5
    else:
        q_bar, delta_inf, varpi = 10, 30.0, 1.0 / n
    base = dict(
        n_agents=n,
        A=1.5,
        k=0.3,
        sigma=0.3,
        c=0.5,
        T=600.0,
        tick=1.0,
        varpi=varpi,
        K=1,
        omega=(0.5,),
        H=None,
        q_bar=q_bar,
        delta_inf=delta_inf,
        eta=1.0,
        gamma=0.01,
        R=-1.0,
        S0=100.0,
    )
    base.update(overrides)
    return validate(ModelParams(**base))


_MODEL_FIELDS = {f.name for f in fields(ModelParams)}


def params_from_dict(d) -> ValidatedParams:
    """Build ValidatedParams from a plain dict (e.g. parsed JSON config)."""
    unknown = set(d) - _MODEL_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = dict(d)
    for name in ("omega", "H", "gamma", "R"):
        if name in kw and isinstance(kw[name], list):
            kw[name] = tuple(kw[name])
    try:
        raw = ModelParams(**kw)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    return validate(raw)


def load_config(path) -> ValidatedParams:
    """Read a JSON config file into ValidatedParams."""
    try:
        with open(path) as f:
            d = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"config {path} must contain a JSON object")
    return params_from_dict(d)
