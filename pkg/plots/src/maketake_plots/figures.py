"""Static figures from the market-making laboratory's CSV outputs.

Each figure kind consumes one of the documented CSV schemas (a versioned
comment line, a header row, losslessly formatted floats) and nothing else;
the solver package is never imported.  Rendering is deterministic: the same
CSV bytes produce the same PNG bytes.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


class SchemaMismatch(Exception):
    """A CSV input does not carry a column a figure needs."""


def _read_columns(path, required):
    """Header-keyed string columns from one CSV, comment lines skipped."""
    path = str(path)
    with open(path, newline="") as f:
        body = (line for line in f if not line.startswith("#"))
        rows = [r for r in csv.reader(body) if r]
    if not rows:
        raise SchemaMismatch(f"{path}: empty file, expected column {required[0]!r}")
    header, data = rows[0], rows[1:]
    for name in required:
        if name not in header:
            raise SchemaMismatch(f"{path}: missing column {name!r}")
    if not data:
        raise SchemaMismatch(f"{path}: no rows under column {required[0]!r}")
    return {
        name: [row[header.index(name)] for row in data] for name in required
    }


def _floats(cols, name, path):
    try:
        return np.array([float(v) for v in cols[name]])
    except ValueError:
        raise SchemaMismatch(f"{path}: column {name!r} is not numeric") from None


def _read_sweep(path, value_cols):
    """Usable (status == ok) sweep rows as float arrays, plus the axis name."""
    cols = _read_columns(path, ["axis", "status"] + value_cols)
    keep = [i for i, s in enumerate(cols["status"]) if s == "ok"]
    if not keep:
        raise SchemaMismatch(f"{path}: no rows with 'ok' under column 'status'")
    out = {}
    for name in value_cols:
        arr = _floats({name: [cols[name][i] for i in keep]}, name, path)
        out[name] = arr
    order = np.argsort(out[value_cols[0]])
    return {k: v[order] for k, v in out.items()}, cols["axis"][keep[0]]


def _one(csv_paths, kind):
    if len(csv_paths) != 1:
        raise ValueError(f"figure {kind!r} takes exactly one CSV, got {len(csv_paths)}")
    return csv_paths[0]


def _new_axes():
    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=150)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _fig_spread(csv_paths):
    path = _one(csv_paths, "spread")
    cols = _read_columns(path, ["t", "q_1", "best_ask", "best_bid"])
    q = _floats(cols, "q_1", path)
    total = _floats(cols, "best_ask", path) + _floats(cols, "best_bid", path)
    fig, ax = _new_axes()
    ax.plot(q, total, ".", ms=3, alpha=0.2, color="tab:gray", label="knots")
    levels = np.unique(q)
    means = np.array([total[q == lv].mean() for lv in levels])
    ax.plot(levels, means, "o-", color="tab:blue", label="mean by inventory")
    ax.set_xlabel("maker inventory (units)")
    ax.set_ylabel("total best spread (Tick)")
    ax.set_title("Quoted total spread against inventory")
    ax.legend()
    return fig


def _fig_flow(csv_paths):
    path = _one(csv_paths, "flow")
    cols = _read_columns(path, ["t", "n_a", "n_b"])
    t = _floats(cols, "t", path)
    n_a = _floats(cols, "n_a", path)
    n_b = _floats(cols, "n_b", path)
    fig, ax = _new_axes()
    ax.step(t, n_a, where="post", label="ask side")
    ax.step(t, n_a + n_b, where="post", label="both sides")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("cumulative orders")
    ax.set_title("Order flow along one path")
    ax.legend()
    return fig


def _fig_pnl(csv_paths):
    path = _one(csv_paths, "pnl")
    cols, axis = _read_sweep(path, ["value", "pnl_mean", "pnl_se"])
    fig, ax = _new_axes()
    ax.errorbar(cols["value"], cols["pnl_mean"], yerr=3.0 * cols["pnl_se"],
                fmt="o-", capsize=3)
    ax.set_xlabel(f"sweep value ({axis})")
    ax.set_ylabel("exchange PnL (Tick)")
    ax.set_title("Exchange PnL along the sweep (3 SE bars)")
    return fig


def _fig_trading_cost(csv_paths):
    path = _one(csv_paths, "trading-cost")
    cols, axis = _read_sweep(path, ["value", "trading_cost_mean"])
    fig, ax = _new_axes()
    ax.plot(cols["value"], cols["trading_cost_mean"], "o-")
    ax.set_xlabel(f"sweep value ({axis})")
    ax.set_ylabel("mean cost per taken order (Tick)")
    ax.set_title("Taker's all-in cost along the sweep")
    return fig


_AXIS_LABELS = {"N": "fixed taker fee", "c_rule": "per-maker fee rule"}


def _fig_pnl_vs_n(csv_paths):
    if len(csv_paths) != 2:
        raise ValueError(
            f"figure 'pnl-vs-n' overlays exactly two sweep CSVs, got {len(csv_paths)}"
        )
    fig, ax = _new_axes()
    for path in csv_paths:
        cols, axis = _read_sweep(path, ["value", "pnl_mean", "pnl_se"])
        ax.errorbar(cols["value"], cols["pnl_mean"],
                    yerr=3.0 * cols["pnl_se"], fmt="o-", capsize=3,
                    label=_AXIS_LABELS.get(axis, axis))
    ax.set_xlabel("number of makers")
    ax.set_ylabel("exchange PnL (Tick)")
    ax.set_title("Exchange PnL against the maker count (3 SE bars)")
    ax.legend()
    return fig


FIGURES = {
    "spread": _fig_spread,
    "flow": _fig_flow,
    "pnl": _fig_pnl,
    "trading-cost": _fig_trading_cost,
    "pnl-vs-n": _fig_pnl_vs_n,
}


def build_figure(csv_paths, figure_kind):
    """Matplotlib Figure for one kind; csv_paths is a list of file paths."""
    try:
        builder = FIGURES[figure_kind]
    except KeyError:
        raise ValueError(
            f"unknown figure kind {figure_kind!r}; expected one of {sorted(FIGURES)}"
        ) from None
    return builder(list(csv_paths))


def render(csv_paths, figure_kind, out_path):
    """Write one figure to out_path and return out_path."""
    fig = build_figure(csv_paths, figure_kind)
    meta = {"Software": "maketake-plots"} if str(out_path).endswith(".png") else None
    try:
        fig.savefig(out_path, metadata=meta)
    finally:
        plt.close(fig)
    return out_path
