"""Optimal make-take fee contracts for competing market makers.

Solver plus simulator for an exchange that designs per-trade and
price-move-indexed compensation for N quoting agents, each holding CARA
preferences over inventory and cash: equilibrium quote responses, the
exchange's value function, the induced optimal contract, a point-process
market simulator, and parameter sweeps.
"""

from . import errors
from .analysis import c_rule_fee, point_params, s_of_n, sweep
from .firstbest import (
    FirstBestParams,
    compare_first_second_best,
    first_best_spreads,
    solve_first_best,
)
from .hjb import (
    RiskSharingMatrix,
    StateSpace,
    ValueFunction,
    build_state_space,
    constants,
    risk_sharing,
    solve_backward,
    z_s_vector,
)
from .incentives import (
    IncentiveField,
    contract_increment,
    reservation_from_no_contract,
    switching_predicate,
    switching_threshold,
    taker_cost_rule,
    z_star,
)
from .intensity import (
    ASK,
    BID,
    SpreadVector,
    cell_of,
    lambda_aggregate,
    lambda_ij,
    side_sign,
    unblocked,
)
from .model import (
    InventoryState,
    ModelParams,
    ValidatedParams,
    baseline_params,
    check_inventory,
    delta_inf_bound,
    load_config,
    params_from_dict,
    validate,
)
from .nash import (
    IncentiveSlice,
    NashCertificate,
    SpreadMatrix,
    fixed_point_delta,
    gamma_offset,
    hamiltonian_i,
    nash_oracle,
)
from .simulator import PathStats, SimPath, collect_stats, run_batch, simulate_path

__version__ = "0.1.0"

__all__ = [
    "ASK",
    "BID",
    "FirstBestParams",
    "IncentiveField",
    "IncentiveSlice",
    "InventoryState",
    "ModelParams",
    "NashCertificate",
    "PathStats",
    "RiskSharingMatrix",
    "SimPath",
    "SpreadMatrix",
    "SpreadVector",
    "StateSpace",
    "ValidatedParams",
    "ValueFunction",
    "baseline_params",
    "build_state_space",
    "c_rule_fee",
    "cell_of",
    "check_inventory",
    "collect_stats",
    "compare_first_second_best",
    "constants",
    "contract_increment",
    "delta_inf_bound",
    "errors",
    "first_best_spreads",
    "fixed_point_delta",
    "gamma_offset",
    "hamiltonian_i",
    "lambda_aggregate",
    "lambda_ij",
    "load_config",
    "nash_oracle",
    "params_from_dict",
    "point_params",
    "reservation_from_no_contract",
    "risk_sharing",
    "run_batch",
    "s_of_n",
    "side_sign",
    "simulate_path",
    "solve_backward",
    "solve_first_best",
    "sweep",
    "switching_predicate",
    "switching_threshold",
    "taker_cost_rule",
    "unblocked",
    "validate",
    "z_s_vector",
    "z_star",
]
