"""
Precoding strategies compared by the experiments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from swipt_balance.feedback import analog_feedback, quantized_feedback
from swipt_balance.grassmann import Codebook, chordal_distance_sq
from swipt_balance.ia import IASolution
from swipt_balance.model import ChannelSet, SystemConfig
from swipt_balance.numerics import sample_grassmann_batch
from swipt_balance.swipt import (
    MaxEHResult,
    balanced_precoders_iterative,
    balanced_precoders_noniterative,
    max_eh_precoders,
    z_eh,
)
from swipt_balance.experiments.config import ExperimentConfig, StrategySpec

logger = logging.getLogger(__name__)


@dataclass
class TrialContext:
    """Per-trial, per-design-point inputs shared by all strategies."""

    experiment: ExperimentConfig
    cfg: SystemConfig
    ch: ChannelSet
    ia: IASolution
    forward_snr_db: float
    rand_seed: np.random.SeedSequence
    feedback_seed: np.random.SeedSequence
    codebooks: Dict[int, Codebook] = field(default_factory=dict)
    _eh: Optional[MaxEHResult] = None

    @property
    def eh(self) -> MaxEHResult:
        if self._eh is None:
            self._eh = max_eh_precoders(self.cfg, self.ch)
        return self._eh


@dataclass
class StrategyOutcome:
    """Transmit precoders of one strategy and their distance to the IA precoders."""

    precoders: np.ndarray
    realized_z: np.ndarray
    objective_trace: Optional[list] = None


def _distances(ia: IASolution, precoders: np.ndarray) -> np.ndarray:
    return np.array([chordal_distance_sq(ia.precoders[k], precoders[k]) for k in range(ia.K)])


def _ia(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    return StrategyOutcome(ctx.ia.precoders, np.zeros(ctx.ia.K))


def _rand(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    precoders = sample_grassmann_batch(ctx.cfg.K, ctx.cfg.M, ctx.cfg.d, np.random.default_rng(ctx.rand_seed))
    return StrategyOutcome(precoders, _distances(ctx.ia, precoders))


def _max_eh(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    return StrategyOutcome(ctx.eh.precoders, z_eh(ctx.ia, ctx.eh))


def _bal_icd(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    result = balanced_precoders_iterative(
        ctx.cfg,
        ctx.ch,
        ctx.ia,
        param,
        max_iters=ctx.experiment.icd_max_iters,
        tol=ctx.experiment.icd_tol,
        eh=ctx.eh,
    )
    return StrategyOutcome(result.precoders, result.per_user_z, result.objective_trace)


def _bal_cd(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    result = balanced_precoders_noniterative(ctx.cfg, ctx.ch, ctx.ia, param, eh=ctx.eh)
    return StrategyOutcome(result.precoders, result.per_user_z)


def _pqfb(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    outcome = quantized_feedback(ctx.ia, ctx.codebooks[int(param)])
    return StrategyOutcome(outcome.precoders, outcome.realized_z)


def _pafb(spec: StrategySpec, ctx: TrialContext, param: Optional[float]) -> StrategyOutcome:
    outcome = analog_feedback(ctx.ia, param, rng_seed=np.random.default_rng(ctx.feedback_seed))
    return StrategyOutcome(outcome.precoders, outcome.realized_z)


STRATEGIES: Dict[str, Callable[[StrategySpec, TrialContext, Optional[float]], StrategyOutcome]] = {
    "IA": _ia,
    "RAND": _rand,
    "MAX-EH": _max_eh,
    "BAL-ICD": _bal_icd,
    "BAL-CD": _bal_cd,
    "PQFB": _pqfb,
    "PAFB": _pafb,
}


def resolve_param(spec: StrategySpec, experiment: ExperimentConfig, sweep_value: float, forward_snr_db: float):
    """
    Effective parameter of a strategy at one sweep point.

    The swept variable overrides the strategy's own parameter for the family
    it controls (z for BAL-*, bits for PQFB).
    """
    variable = experiment.sweep_variable
    if spec.kind in ("BAL-ICD", "BAL-CD"):
        if variable == "z":
            return float(sweep_value)
        return experiment.z if spec.param is None else spec.param
    if spec.kind == "PQFB":
        if variable == "bits":
            return int(sweep_value)
        return experiment.codebook_bits if spec.param is None else int(spec.param)
    if spec.kind == "PAFB":
        return forward_snr_db if spec.param is None else spec.param
    return None


def apply_strategy(spec: StrategySpec, ctx: TrialContext, param) -> StrategyOutcome:
    return STRATEGIES[spec.kind](spec, ctx, param)
