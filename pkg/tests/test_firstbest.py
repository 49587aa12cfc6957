"""Spread-dictating benchmark: pooled risk aversion, value, spreads."""

import math

import numpy as np
import pytest

from maketake.firstbest import (
    FirstBestParams,
    compare_first_second_best,
    first_best_spreads,
    solve_first_best,
)
from maketake.model import baseline_params


@pytest.fixture(scope="module")
def fb1(base1):
    return solve_first_best(base1, dt=0.1)


def test_pooled_risk_aversion_frozen(refs, base1):
    fbp = FirstBestParams.from_params(base1)
    assert fbp.gamma_tilde == pytest.approx(
        refs.f("n1_baseline", "first_best_risk_tilde"), rel=1e-12
    )
    assert fbp.C_fb == pytest.approx(
        refs.f("n1_baseline", "first_best_arrival_constant"), rel=1e-12
    )


def test_benchmark_terminal_and_shape(fb1, base1):
    sp = fb1.space
    assert np.all(fb1.w_rows(base1.T) == 0.0)
    w0 = fb1.w_rows(0.0)
    assert w0[sp.index((0,))] == min(w0[sp.index((qq,))] for qq in (-30, 0, 30))


def test_benchmark_spreads_frozen_at_terminal(refs, fb1, base1):
    ask, bid = first_best_spreads(base1.T, (0,), fb1, base1)
    assert ask == pytest.approx(
        refs.f("n1_baseline", "first_best_target_terminal_q0"), rel=1e-10
    )
    assert bid == pytest.approx(ask, rel=1e-12)


def test_benchmark_spreads_skew_with_inventory(fb1, base1):
    ask, bid = first_best_spreads(300.0, (20,), fb1, base1)
    # long book: selling is encouraged, buying discouraged
    assert ask < bid
    ask2, bid2 = first_best_spreads(300.0, (-20,), fb1, base1)
    assert ask2 > bid2


def test_comparison_separates_flow_scales(refs, base1, vf1, fb1):
    cmp = compare_first_second_best(base1, value_sb=vf1, value_fb=fb1)
    assert cmp["flow_ratio"] == pytest.approx(
        refs.f("n1_baseline", "first_best_separation_ratio"), rel=1e-9
    )
    assert cmp["flow_ratio"] > 10.0
    assert cmp["C_second_best"] > cmp["C_first_best"]


def test_benchmark_beats_contracted_exchange_never_by_construction(
    base1, vf1, fb1
):
    # the dictated-spread planner forgoes the makers' rents, so its value
    # sits below the contracted exchange's at flat inventory
    cmp = compare_first_second_best(base1, value_sb=vf1, value_fb=fb1)
    assert cmp["w_fb_0_flat"] > cmp["w_sb_0_flat"]
