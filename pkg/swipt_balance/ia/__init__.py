"""
Interference-alignment solvers, selectable by name.
"""

from typing import Callable, Dict

from swipt_balance.errors import ConfigError
from swipt_balance.ia.base import (
    IASolution,
    alignment_residual,
    effective_channels,
    interference_leakage,
    matched_decoders,
    mmse_decoders,
    random_unitary,
    rank_deficient_user,
)
from swipt_balance.ia.closed_form import ClosedFormIASolver, solve_subspace_3user
from swipt_balance.ia.leakage import LeakageMinIASolver, solve_leakage_min
from swipt_balance.ia.mmse import MMSEIASolver, solve_mmse

SOLVERS: Dict[str, Callable[..., IASolution]] = {
    "leakage": solve_leakage_min,
    "mmse": solve_mmse,
    "subspace3": solve_subspace_3user,
}


def solve_ia(name: str, cfg, ch, rng_seed=None, **kwargs) -> IASolution:
    """Dispatch to the solver registered under ``name``."""
    if name not in SOLVERS:
        raise ConfigError(f"unknown IA solver '{name}', expected one of {sorted(SOLVERS)}")
    if name == "subspace3":
        return solve_subspace_3user(cfg, ch)
    return SOLVERS[name](cfg, ch, rng_seed=rng_seed, **kwargs)


__all__ = [
    "IASolution",
    "SOLVERS",
    "ClosedFormIASolver",
    "LeakageMinIASolver",
    "MMSEIASolver",
    "alignment_residual",
    "effective_channels",
    "interference_leakage",
    "matched_decoders",
    "mmse_decoders",
    "random_unitary",
    "rank_deficient_user",
    "solve_ia",
    "solve_leakage_min",
    "solve_mmse",
    "solve_subspace_3user",
]
