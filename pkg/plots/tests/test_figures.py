"""Figure-rendering tests against golden CSVs from the solver CLI."""

import pathlib

import pytest

from maketake_plots import FIGURES, SchemaMismatch, build_figure, render
from maketake_plots.cli import main

DATA = pathlib.Path(__file__).parent / "data"
TS = str(DATA / "timeseries.csv")
SWEEP_FIXED = str(DATA / "sweep_fixed.csv")
SWEEP_RULE = str(DATA / "sweep_rule.csv")

GOLDEN_INPUTS = {
    "spread": [TS],
    "flow": [TS],
    "pnl": [SWEEP_FIXED],
    "trading-cost": [SWEEP_RULE],
    "pnl-vs-n": [SWEEP_FIXED, SWEEP_RULE],
}


@pytest.mark.parametrize("kind", sorted(FIGURES))
def test_every_kind_renders_from_golden_csvs(kind, tmp_path):
    out = tmp_path / f"{kind}.png"
    assert render(GOLDEN_INPUTS[kind], kind, str(out)) == str(out)
    blob = out.read_bytes()
    assert blob[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(blob) > 5000


def test_pnl_vs_n_has_exactly_two_series():
    fig = build_figure([SWEEP_FIXED, SWEEP_RULE], "pnl-vs-n")
    ax = fig.axes[0]
    assert len(ax.containers) == 2
    legend_labels = [t.get_text() for t in ax.get_legend().get_texts()]
    assert legend_labels == ["fixed taker fee", "per-maker fee rule"]


def test_rendering_is_deterministic(tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render([SWEEP_FIXED], "pnl", str(a))
    render([SWEEP_FIXED], "pnl", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        build_figure([TS], "heatmap")


def test_wrong_csv_count_rejected():
    with pytest.raises(ValueError, match="exactly two"):
        build_figure([SWEEP_FIXED], "pnl-vs-n")
    with pytest.raises(ValueError, match="exactly one"):
        build_figure([TS, TS], "spread")


def test_empty_csv_raises_schema_mismatch(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaMismatch, match="'t'"):
        build_figure([str(empty)], "flow")

    header_only = tmp_path / "header_only.csv"
    header_only.write_text("# maketake-csv 1 simulation-timeseries\n"
                           "t,S,q_1,best_ask,best_bid,n_a,n_b,xi_1\n")
    with pytest.raises(SchemaMismatch, match="no rows"):
        build_figure([str(header_only)], "flow")


def test_missing_column_named(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("axis,value,status,pnl_se\nN,1,ok,0.1\n")
    with pytest.raises(SchemaMismatch, match="'pnl_mean'"):
        build_figure([str(bad)], "pnl")


def test_all_rows_failed_raises(tmp_path):
    bad = tmp_path / "failed.csv"
    bad.write_text(
        "axis,value,status,pnl_mean,pnl_se\nN,1,error,,\nN,2,error,,\n"
    )
    with pytest.raises(SchemaMismatch, match="'status'"):
        build_figure([str(bad)], "pnl")


def test_non_numeric_column_named(tmp_path):
    bad = tmp_path / "nan.csv"
    bad.write_text("axis,value,status,pnl_mean,pnl_se\nN,1,ok,high,0.1\n")
    with pytest.raises(SchemaMismatch, match="'pnl_mean'"):
        build_figure([str(bad)], "pnl")


def test_error_rows_are_skipped(tmp_path):
    mixed = tmp_path / "mixed.csv"
    mixed.write_text(
        "axis,value,status,pnl_mean,pnl_se\n"
        "N,1,error,,\nN,2,ok,4.5,0.1\n"
    )
    fig = build_figure([str(mixed)], "pnl")
    line = fig.axes[0].containers[0][0]
    assert list(line.get_xdata()) == [2.0]


def test_cli_round_trip(tmp_path, capsys):
    out = str(tmp_path / "fig.png")
    assert main(["pnl-vs-n", SWEEP_FIXED, SWEEP_RULE, "-o", out]) == 0
    assert f"wrote {out}" in capsys.readouterr().out
    assert pathlib.Path(out).exists()


def test_cli_reports_schema_failures(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["spread", str(empty)]) == 1
    assert "plots:" in capsys.readouterr().err
