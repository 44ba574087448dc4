"""Joint 3D mapping and power allocation for full-duplex OFDMA cells."""
from .baselines import (
    equal_power,
    exhaustive_search,
    greedy_mapping,
    grid_oracle,
    proposed_mapping_equal_power,
    random_mapping,
)
from .channel import CellConfig, ConfigError, generate_scenario, load_scenario, save_scenario
from .dual_opt import DualOptions, DualState, evaluate_dual, solve_joint, update_duals
from .hungarian import solve_assignment
from .mapping3d import exhaustive_assignment, initial_assignment, optimize_3d
from .model import (
    AllocationResult,
    Assignment3D,
    PairPowers,
    Scenario,
    check_budgets,
    pair_rate,
    total_rate,
)
from .power_kkt import PairCoefficients, solve_pair

__all__ = [
    "AllocationResult", "Assignment3D", "CellConfig", "ConfigError", "DualOptions",
    "DualState", "PairCoefficients", "PairPowers", "Scenario", "check_budgets",
    "equal_power", "evaluate_dual", "exhaustive_assignment", "exhaustive_search",
    "generate_scenario", "greedy_mapping", "grid_oracle", "initial_assignment",
    "load_scenario", "optimize_3d", "pair_rate", "proposed_mapping_equal_power",
    "random_mapping", "save_scenario", "solve_assignment", "solve_joint",
    "solve_pair", "total_rate", "update_duals",
]
