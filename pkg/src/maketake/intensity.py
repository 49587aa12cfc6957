"""Order-flow intensities.

Takers on each side of the book pay the exchange fee plus a pass-through of
the best displayed spread; quotes resting above the best inside "covering"
cells add a smaller rebate-weighted amount.  The arrival intensity of market
orders decays exponentially in that total cost.  Executions are only
allocated to makers whose inventory allows them to trade the side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import validate

# Quotes closer than this are treated as tied at the best.
TIE_EPS = 1e-9

ASK, BID = 0, 1


def side_sign(side) -> int:
    """+1 for the ask side (maker sells, inventory down), -1 for the bid."""
    if side in (ASK, "a", "ask"):
        return +1
    if side in (BID, "b", "bid"):
        return -1
    raise ValueError(f"unknown side {side!r}")


def unblocked(q_i, side, q_bar) -> bool:
    """Whether a maker holding q_i may trade the given side.

    Selling (ask) is allowed while q_i > -q_bar, buying (bid) while
    q_i < q_bar, so inventory never leaves the band.
    """
    s = side_sign(side)
    return s * q_i > -q_bar


@dataclass(frozen=True)
class SpreadVector:
    """Quotes of all makers on one side of the book (in ticks)."""

    x: tuple
    side: int  # ASK or BID

    def as_array(self):
        return np.asarray(self.x, dtype=float)


def cell_of(spread, params):
    """Covering cell index (1-based) containing a spread, or None.

    Cell l spans ((l-1)*tick, l*tick]; the last cell stretches to the quote
    bound delta_inf so the cells partition (0, delta_inf].  Non-positive
    spreads and spreads beyond delta_inf belong to no cell.
    """
    p = validate(params)
    s = float(spread)
    if not s > 0.0 or s > p.delta_inf:
        return None
    ell = math.ceil(s / p.tick)
    return min(ell, p.K)


def _cost_and_minners(x_arr, params):
    """Taker cost beyond the exchange fee, and the tied-at-best mask."""
    p = validate(params)
    x = np.asarray(x_arr, dtype=float)
    m = x.min()
    minners = x <= m + TIE_EPS
    cost = p.varpi * float(x[minners].sum())
    for xm in x[~minners]:
        ell = cell_of(xm, p)
        if ell is not None:
            cost += p.H[ell - 1] * xm
    return cost, minners


def lambda_ij(i, x, q, params) -> float:
    """Arrival intensity of executions hitting maker i on one side.

    x is the SpreadVector of all makers' quotes on that side, q the inventory
    vector.  The aggregate flow is split evenly among makers tied at the best
    who are free to trade; if none of the tied makers can trade, flow is zero
    (rather than an error) since the side is effectively dark.
    """
    p = validate(params)
    side = x.side if isinstance(x, SpreadVector) else ASK
    arr = x.as_array() if isinstance(x, SpreadVector) else np.asarray(x, float)
    q_arr = np.asarray(q)
    cost, minners = _cost_and_minners(arr, p)
    alloc = minners & np.array(
        [unblocked(q_arr[m], side, p.q_bar) for m in range(p.n_agents)]
    )
    n_alloc = int(alloc.sum())
    if n_alloc == 0 or not alloc[i]:
        return 0.0
    total = p.A * math.exp(-p.k_over_sigma * (p.c + cost))
    return total / n_alloc


def lambda_aggregate(x, q, params) -> float:
    """Total arrival intensity on one side (sum of lambda_ij over makers)."""
    p = validate(params)
    side = x.side if isinstance(x, SpreadVector) else ASK
    arr = x.as_array() if isinstance(x, SpreadVector) else np.asarray(x, float)
    q_arr = np.asarray(q)
    cost, minners = _cost_and_minners(arr, p)
    can = any(
        minners[m] and unblocked(q_arr[m], side, p.q_bar) for m in range(p.n_agents)
    )
    if not can:
        return 0.0
    return p.A * math.exp(-p.k_over_sigma * (p.c + cost))
