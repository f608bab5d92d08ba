from .config import ExperimentConfig, StrategySpec, config_from_ini, load_experiment_config, parse_grid
from .results import ResultTable, dof_slopes, pareto_frontier, region_contains
from .runner import run_command, run_convergence_trace, run_region, run_ser, run_sweep
from .run_ledger import RunLedger

__all__ = [
    "ExperimentConfig",
    "StrategySpec",
    "config_from_ini",
    "load_experiment_config",
    "parse_grid",
    "ResultTable",
    "dof_slopes",
    "pareto_frontier",
    "region_contains",
    "run_command",
    "run_convergence_trace",
    "run_region",
    "run_ser",
    "run_sweep",
    "RunLedger",
]
