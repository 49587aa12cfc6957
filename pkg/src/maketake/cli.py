"""Command-line interface: solve, simulate, sweep, compare, calibrate.

All tabular output is CSV with a leading versioned comment line, comma
separator, and 17-significant-digit floats so downstream tooling can
round-trip values losslessly.  Exit codes: 0 success, 1 usage error,
2 numeric failure, 3 configuration error.
"""

from __future__ import annotations

import csv
import json
import math
import sys

import click

from . import errors as err
from .analysis import SWEEP_AXES, s_of_n, sweep
from .firstbest import compare_first_second_best
from .hjb import solve_backward
from .incentives import taker_cost_rule
from .model import baseline_params, load_config, validate
from .simulator import run_batch, simulate_path

CSV_VERSION = "maketake-csv 1"

_CONFIG_ERRORS = (
    err.ConfigError,
    err.NonPositiveParameter,
    err.EmptyGammaVector,
    err.ReservationNotNegative,
    err.CoveringMisconfigured,
    err.NonPositiveKVarpi,
    err.StateSpaceTooLarge,
)
_NUMERIC_ERRORS = (
    err.StepRejected,
    err.NoEquilibriumOnGrid,
    err.ValueFunctionCoverageGap,
    err.SideBlocked,
    err.ApproximationOutOfRange,
    OverflowError,
    FloatingPointError,
    ZeroDivisionError,
)


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path, kind, header, rows):
    with open(path, "w", newline="") as f:
        f.write(f"# {CSV_VERSION} {kind}\n")
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _params(config):
    if config is None:
        return baseline_params(1)
    return load_config(config)


@click.group()
def cli():
    """Make-take fee laboratory: optimal contracts for competing makers."""


@cli.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--dt", type=float, default=None)
@click.option("--out", type=click.Path(), default="value.csv")
def solve(config, dt, out):
    """Solve the exchange's value function and dump it as CSV."""
    p = validate(_params(config))
    vf = solve_backward(p, dt=dt)
    n = p.n_agents
    header = ["t"] + [f"q_{i + 1}" for i in range(n)] + ["v"]

    def rows():
        states = vf.space.states
        for ti, t in enumerate(vf.times):
            w_row = vf.log_neg_v[ti]
            for si in range(states.shape[0]):
                q = states[si]
                yield [float(t), *[int(v) for v in q], -math.exp(float(w_row[si]))]

    _write_csv(out, "value-function", header, rows())
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--dt", type=float, default=None)
@click.option("--paths", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--mode", type=click.Choice(["auto", "numba", "python"]),
              default="auto")
@click.option("--timeseries", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default="simulation.csv")
def simulate(config, dt, paths, seed, mode, timeseries, out):
    """Simulate the contracted market; write aggregate and per-path CSVs."""
    p = validate(_params(config))
    vf = solve_backward(p, dt=dt)
    path_list, st = run_batch(p, vf, paths, seed0=seed, mode=mode)
    n = p.n_agents

    agg_header = (
        ["n_paths", "seed0", "mean_best_ask", "mean_best_bid",
         "mean_total_spread", "se_total_spread", "mean_flow", "se_flow",
         "mean_exchange_pnl", "se_exchange_pnl", "exch_util_log_mean",
         "exch_util_rel_se", "mean_trading_cost", "martingale_a_mean",
         "martingale_a_se", "martingale_b_mean", "martingale_b_se"]
        + [f"flow_agent_{i + 1}" for i in range(n)]
        + [f"agent_util_mean_{i + 1}" for i in range(n)]
        + [f"agent_util_se_{i + 1}" for i in range(n)]
    )
    agg_row = (
        [st.n_paths, seed, st.mean_best_ask, st.mean_best_bid,
         st.mean_total_spread, st.se_total_spread, st.mean_flow, st.se_flow,
         st.mean_exchange_pnl, st.se_exchange_pnl, st.exch_util_log_mean,
         st.exch_util_rel_se, st.mean_trading_cost, st.martingale_a_mean,
         st.martingale_a_se, st.martingale_b_mean, st.martingale_b_se]
        + list(st.mean_flow_per_agent)
        + list(st.agent_util_mean)
        + list(st.agent_util_se)
    )
    _write_csv(out, "simulation-aggregate", agg_header, [agg_row])

    base = out[:-4] if out.endswith(".csv") else out
    paths_out = f"{base}_paths.csv"
    ph = (
        ["seed", "n_a", "n_b", "S_T", "comp_a", "comp_b", "tw_best_ask",
         "tw_best_bid", "trading_cost_sum"]
        + [f"q_{i + 1}" for i in range(n)]
        + [f"xi_{i + 1}" for i in range(n)]
        + [f"trade_pl_{i + 1}" for i in range(n)]
    )
    prows = [
        [s.seed, s.n_a, s.n_b, s.S_T, s.comp_a, s.comp_b, s.tw_best_ask,
         s.tw_best_bid, s.trading_cost_sum]
        + list(s.q_T) + list(s.xi) + list(s.trade_pl)
        for s in path_list
    ]
    _write_csv(paths_out, "simulation-paths", ph, prows)
    click.echo(f"wrote {out} and {paths_out}")

    if timeseries:
        sp = simulate_path(p, vf, seed, mode=mode, record=True)
        ts_out = f"{base}_timeseries.csv"
        th = (["t", "S"] + [f"q_{i + 1}" for i in range(n)]
              + ["best_ask", "best_bid", "n_a", "n_b"]
              + [f"xi_{i + 1}" for i in range(n)])
        trows = []
        for r in sp.record:
            trows.append(
                [r[0], r[1], *[int(r[6 + i]) for i in range(n)],
                 r[2], r[3], int(r[4]), int(r[5]),
                 *[r[6 + n + i] for i in range(n)]]
            )
        _write_csv(ts_out, "simulation-timeseries", th, trows)
        click.echo(f"wrote {ts_out}")


_SWEEP_COLS = [
    "axis", "value", "status", "error", "n_agents", "c", "varpi", "q_bar",
    "dt", "reduced", "reservation_y0", "n_paths", "seed0", "solve_seconds",
    "sim_seconds", "pnl_mean", "pnl_se", "spread_mean", "spread_se",
    "flow_mean", "flow_se", "best_ask_mean", "best_bid_mean",
    "trading_cost_mean",
]


@cli.command(name="sweep")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--axis", type=click.Choice(SWEEP_AXES), required=True)
@click.option("--values", required=True,
              help="comma-separated list, e.g. 1,2,5")
@click.option("--paths", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--dt", type=float, default=None)
@click.option("--mode", type=click.Choice(["auto", "numba", "python"]),
              default="auto")
@click.option("--out", type=click.Path(), default="sweep.csv")
def sweep_cmd(config, axis, values, paths, seed, dt, mode, out):
    """Re-solve and re-simulate along one parameter axis; one CSV row each."""
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.UsageError(f"--values must be numbers: {exc}")
    if not vals:
        raise click.UsageError("--values is empty")
    template = _params(config)
    rows = sweep(template, axis, vals, n_paths=paths, seed0=seed, dt=dt,
                 mode=mode)
    _write_csv(out, "sweep", _SWEEP_COLS,
               [[r[c] for c in _SWEEP_COLS] for r in rows])
    n_err = sum(1 for r in rows if r["status"] != "ok")
    click.echo(f"wrote {out} ({len(rows)} points, {n_err} failed)")


@cli.command(name="first-best")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--dt", type=float, default=None)
@click.option("--out", type=click.Path(), default="first_best.csv")
def first_best(config, dt, out):
    """Compare the contracted exchange with the spread-dictating benchmark."""
    p = validate(_params(config))
    cmp = compare_first_second_best(p, dt=dt)
    header = ["C_second_best", "C_first_best", "flow_ratio", "gamma_tilde",
              "log_neg_v_second_t0_q0", "log_neg_v_first_t0_q0"]
    row = [cmp["C_second_best"], cmp["C_first_best"], cmp["flow_ratio"],
           cmp["gamma_tilde"], cmp["w_sb_0_flat"], cmp["w_fb_0_flat"]]
    _write_csv(out, "first-best-comparison", header, [row])
    click.echo(f"wrote {out}")


@cli.command(name="calibrate-fee")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--mode", type=click.Choice(["static", "small-ratio", "dynamic"]),
              default="small-ratio")
@click.option("--dt", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
def calibrate_fee(config, mode, dt, out):
    """Recommend a taker fee; JSON to stdout or --out."""
    p = validate(_params(config))
    if mode == "dynamic":
        vf = solve_backward(p, dt=dt)
        rule = taker_cost_rule(p, mode)
        c_rec = rule(0.0, (0,) * p.n_agents, vf)
    else:
        c_rec = taker_cost_rule(p, mode)
    doc = {
        "mode": mode,
        "c_recommended": c_rec,
        "inputs": {
            "n_agents": p.n_agents, "A": p.A, "k": p.k, "sigma": p.sigma,
            "c": p.c, "T": p.T, "tick": p.tick, "varpi": p.varpi,
            "eta": p.eta, "gamma": list(p.gamma), "q_bar": p.q_bar,
            "delta_inf": p.delta_inf,
        },
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@cli.command(name="optimal-n")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--values", default=None,
              help="comma-separated maker counts (default 1..10)")
@click.option("--out", type=click.Path(), default="optimal_n.csv")
def optimal_n(config, values, out):
    """Tabulate the venue-sizing score against the maker count."""
    template = _params(config)
    if values is None:
        ns = list(range(1, 11))
    else:
        try:
            ns = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise click.UsageError(f"--values must be numbers: {exc}")
    rows = [[n, s_of_n(template, n)] for n in ns]
    _write_csv(out, "optimal-n", ["n", "score"], rows)
    best = max(rows, key=lambda r: r[1])
    click.echo(f"wrote {out} (argmax n = {best[0]:g})")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:  # --help and friends
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
