"""
Monte-Carlo experiment runner.

Every trial owns a seed derived from the master seed. Its channel, IA start,
random precoders, feedback noise and SER symbols come from independent child
seeds, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from swipt_balance.errors import ConfigError
from swipt_balance.feedback import ANALOG_MODEL_LABEL
from swipt_balance.grassmann import Codebook, build_codebook
from swipt_balance.ia import IASolution, mmse_decoders, solve_ia
from swipt_balance.metrics import evaluate, ser_qpsk
from swipt_balance.model import ChannelSet, SystemConfig, realize_channels
from swipt_balance.numerics import trial_seeds
from swipt_balance.swipt import balanced_precoders_iterative
from swipt_balance.experiments.config import ExperimentConfig
from swipt_balance.experiments.results import (
    ResultTable,
    convergence_frame,
    dof_slopes,
    slopes_frame,
    write_frame,
)
from swipt_balance.experiments.run_ledger import RunLedger
from swipt_balance.experiments.strategies import TrialContext, apply_strategy, resolve_param

logger = logging.getLogger(__name__)

DOF_WINDOW_DB = 12.0
SOLVER_NOTES = {
    "mmse": "MMSE-IA stand-in for the reference iterative solver",
    "leakage": "interference leakage minimization",
    "subspace3": "closed-form 3-user eigen-subspace alignment",
}


@dataclass
class TrialSeeds:
    """Child seeds of one trial."""

    trial: int
    seed: int
    channel: np.random.SeedSequence
    ia: np.random.SeedSequence
    rand: np.random.SeedSequence
    feedback: np.random.SeedSequence
    ser: np.random.SeedSequence

    @classmethod
    def derive(cls, trial: int, seed: int) -> "TrialSeeds":
        channel, ia, rand, feedback, ser = np.random.SeedSequence(seed).spawn(5)
        return cls(trial, seed, channel, ia, rand, feedback, ser)


def _map_trials(fn: Callable[[TrialSeeds], List[Dict]], experiment: ExperimentConfig) -> List[Dict]:
    seeds = [TrialSeeds.derive(t, s) for t, s in enumerate(trial_seeds(experiment.seed, experiment.trials))]
    if experiment.threads > 1:
        with ThreadPoolExecutor(max_workers=experiment.threads) as pool:
            chunks = list(pool.map(fn, seeds))
    else:
        chunks = [fn(s) for s in seeds]
    return [row for chunk in chunks for row in chunk]


def _solve(
    experiment: ExperimentConfig,
    cfg: SystemConfig,
    ch: ChannelSet,
    seed: np.random.SeedSequence,
    solver: Optional[str] = None,
) -> IASolution:
    return solve_ia(
        solver or experiment.solver,
        cfg,
        ch,
        rng_seed=np.random.default_rng(seed),
        max_iters=experiment.solver_max_iters,
        tol=experiment.solver_tol,
        initialize_with=experiment.solver_init,
    )


def _snr_db(cfg: SystemConfig) -> float:
    return float(10.0 * np.log10(np.mean(cfg.P) / cfg.sigma2))


def _point_configs(experiment: ExperimentConfig, value: float) -> Tuple[SystemConfig, SystemConfig]:
    """(design, evaluation) system configs at one sweep value."""
    base = experiment.design_system()
    variable = experiment.sweep_variable
    if variable == "snr_db":
        cfg = experiment.system.with_snr_db(value)
        return cfg, cfg
    if variable == "rho":
        # precoders are designed at the configured split and evaluated at the swept one
        return base, base.with_rho(value)
    return base, base


def _codebooks(experiment: ExperimentConfig) -> Dict[int, Codebook]:
    bits = set()
    for spec in experiment.strategies:
        if spec.kind == "PQFB":
            for value in experiment.grid:
                bits.add(int(resolve_param(spec, experiment, value, experiment.snr_db)))
    cfg = experiment.system
    books = {}
    for b in sorted(bits):
        books[b] = build_codebook(cfg.M, cfg.d, b, np.random.SeedSequence([experiment.seed, b]))
        logger.info(f"Built {b}-bit codebook with {len(books[b])} entries")
    return books


def _grid_trial(
    experiment: ExperimentConfig,
    codebooks: Dict[int, Codebook],
    with_ser: bool,
) -> Callable[[TrialSeeds], List[Dict]]:
    strategies = experiment.strategies
    grid = experiment.grid

    def run(seeds: TrialSeeds) -> List[Dict]:
        ch = realize_channels(experiment.system, np.random.default_rng(seeds.channel))
        ser_seeds = seeds.ser.spawn(len(grid) * len(strategies)) if with_ser else None
        solutions: Dict[Tuple, IASolution] = {}
        rows: List[Dict] = []
        for g, value in enumerate(grid):
            design_cfg, eval_cfg = _point_configs(experiment, value)
            forward_snr = _snr_db(design_cfg)
            contexts: Dict[str, TrialContext] = {}
            can_decode = all(r > 0.0 for r in eval_cfg.rho)
            for s, spec in enumerate(strategies):
                solver = spec.solver or experiment.solver
                if solver not in contexts:
                    key = (solver, design_cfg.P, design_cfg.rho) if solver == "mmse" else (solver,)
                    if key not in solutions:
                        solutions[key] = _solve(experiment, design_cfg, ch, seeds.ia, solver)
                    contexts[solver] = TrialContext(
                        experiment=experiment,
                        cfg=design_cfg,
                        ch=ch,
                        ia=solutions[key],
                        forward_snr_db=forward_snr,
                        rand_seed=seeds.rand,
                        feedback_seed=seeds.feedback,
                        codebooks=codebooks,
                    )
                ctx = contexts[solver]
                outcome = apply_strategy(spec, ctx, resolve_param(spec, experiment, value, forward_snr))
                decoders = None
                if can_decode:
                    if experiment.decoders == "ia":
                        decoders = ctx.ia.decoders
                    else:
                        decoders = mmse_decoders(eval_cfg, ch, outcome.precoders)
                record = evaluate(eval_cfg, ch, outcome.precoders, decoders, outcome.realized_z, _snr_db(eval_cfg), seeds.seed)
                row = record.as_row()
                row.update(sweep_value=float(value), strategy=spec.label, trial=seeds.trial)
                if with_ser and can_decode:
                    row["ser"] = ser_qpsk(
                        eval_cfg,
                        ch,
                        outcome.precoders,
                        decoders,
                        n_symbols=experiment.ser_symbols,
                        rng_seed=ser_seeds[g * len(strategies) + s],
                    )
                rows.append(row)
        logger.debug(f"Trial {seeds.trial} done ({len(rows)} rows)")
        return rows

    return run


def _run_grid(experiment: ExperimentConfig, with_ser: bool = False) -> ResultTable:
    labels = [spec.label for spec in experiment.strategies]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate strategies in {labels}")
    logger.info(
        f"Running {experiment.name}: {experiment.system.label}, {experiment.sweep_variable} over "
        f"{len(experiment.grid)} points, {len(labels)} strategies, {experiment.trials} trials"
    )
    records = _map_trials(_grid_trial(experiment, _codebooks(experiment), with_ser), experiment)
    return ResultTable.from_records(records, experiment.sweep_variable, experiment.seed, experiment.grid, labels)


def run_region(experiment: ExperimentConfig) -> ResultTable:
    """
    Rate-energy region over a grid of splitting ratios.

    Rows at rho = 0 carry energy only; rows at rho = 1 harvest nothing.
    """
    if experiment.sweep_variable != "rho":
        raise ConfigError("region runs sweep rho")
    return _run_grid(experiment)


def run_sweep(experiment: ExperimentConfig) -> ResultTable:
    """Trial-averaged metrics at every grid point of the configured sweep."""
    return _run_grid(experiment)


def run_ser(experiment: ExperimentConfig) -> ResultTable:
    """QPSK symbol error rate against transmit SNR, per strategy."""
    if experiment.sweep_variable != "snr_db":
        raise ConfigError("SER runs sweep snr_db")
    return _run_grid(experiment, with_ser=True)


def _system_config(experiment: ExperimentConfig, dims: Tuple[int, int, int, int]) -> SystemConfig:
    base = experiment.design_system()
    M, N, d, K = dims
    return SystemConfig(
        M=M,
        N=N,
        d=d,
        K=K,
        P=float(np.mean(base.P)),
        rho=float(np.mean(base.rho)),
        sigma2=base.sigma2,
        delta2=base.delta2,
        zeta=base.zeta,
        feasibility=base.feasibility,
    )


def _pad(trace: Sequence[float], length: int) -> np.ndarray:
    trace = list(trace)
    return np.array(trace + [trace[-1]] * (length - len(trace)), dtype=float)


def run_convergence_trace(experiment: ExperimentConfig, z_values: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """
    Objective of the iterative balanced design per iteration, summed over
    users and averaged over trials, for every (system, z) pair.
    """
    if z_values is None:
        z_values = experiment.grid if experiment.sweep_variable == "z" else [experiment.z]
    systems = experiment.systems or [
        (experiment.system.M, experiment.system.N, experiment.system.d, experiment.system.K)
    ]
    length = experiment.icd_max_iters + 1
    rows = []
    for dims in systems:
        cfg = _system_config(experiment, dims)
        logger.info(f"Convergence trace for {cfg.label} at z = {list(z_values)}")

        def run(seeds: TrialSeeds, cfg=cfg) -> List[Dict]:
            ch = realize_channels(cfg, np.random.default_rng(seeds.channel))
            ia = _solve(experiment, cfg, ch, seeds.ia)
            out = []
            for z in z_values:
                result = balanced_precoders_iterative(
                    cfg, ch, ia, z, max_iters=experiment.icd_max_iters, tol=experiment.icd_tol
                )
                total = sum(_pad(trace, length) for trace in result.objective_trace)
                out.append({"z": float(z), "trial": seeds.trial, "trace": total})
            return out

        results = _map_trials(run, experiment)
        for z in z_values:
            traces = np.stack([r["trace"] for r in results if r["z"] == float(z)])
            means = traces.mean(axis=0)
            ses = traces.std(axis=0, ddof=1) / np.sqrt(len(traces)) if len(traces) > 1 else np.full(length, np.nan)
            for i in range(length):
                rows.append(
                    {
                        "system": cfg.label,
                        "z": float(z),
                        "iteration": i,
                        "objective_mean": float(means[i]),
                        "objective_se": float(ses[i]),
                        "trials": len(traces),
                        "seed": experiment.seed,
                    }
                )
    return convergence_frame(rows)


def run_labels(experiment: ExperimentConfig) -> Dict[str, str]:
    """Solver and strategy descriptions recorded in the run manifest."""
    labels = {
        "solver": f"{experiment.solver}: {SOLVER_NOTES[experiment.solver]}",
        "decoders": "IA receive filters" if experiment.decoders == "ia" else "MMSE filters fitted per strategy",
    }
    for spec in experiment.strategies:
        label = ANALOG_MODEL_LABEL if spec.kind == "PAFB" else spec.kind
        if spec.solver is not None:
            label = f"{label} with {spec.solver}: {SOLVER_NOTES[spec.solver]}"
        labels[spec.label] = label
    return labels


def save_results(
    experiment: ExperimentConfig,
    command: str,
    frame: pd.DataFrame,
    elapsed_s: float,
    extra: Optional[Dict[str, pd.DataFrame]] = None,
) -> List[Path]:
    """Write the CSV outputs, append the run manifest and render the optional plot."""
    out_dir = Path(experiment.output_dir)
    main_path = write_frame(frame, out_dir / f"{experiment.name}_{command}.csv")
    paths = [main_path]
    for suffix, extra_frame in (extra or {}).items():
        paths.append(write_frame(extra_frame, out_dir / f"{experiment.name}_{command}_{suffix}.csv"))

    if experiment.plot:
        from swipt_balance.experiments.plots import render_plot

        paths.append(render_plot(command, main_path, experiment.plot))

    ledger = RunLedger(str(out_dir))
    ledger.add_run(
        experiment_name=f"{experiment.name}_{command}",
        command=command,
        config=experiment.model_dump(mode="json"),
        seed=experiment.seed,
        trial_seeds=trial_seeds(experiment.seed, experiment.trials),
        labels=run_labels(experiment),
        outputs=[str(p) for p in paths],
        elapsed_s=elapsed_s,
    )
    return paths


def run_command(command: str, experiment: ExperimentConfig) -> List[Path]:
    """Run one CLI command end to end and return the written files."""
    start = time.perf_counter()
    extra: Dict[str, pd.DataFrame] = {}
    if command == "region":
        frame = run_region(experiment).frame
    elif command == "sweep":
        table = run_sweep(experiment)
        frame = table.frame
        if experiment.sweep_variable == "snr_db" and len(experiment.grid) > 1:
            extra["slopes"] = slopes_frame(dof_slopes(table, DOF_WINDOW_DB), DOF_WINDOW_DB)
    elif command == "converge":
        frame = run_convergence_trace(experiment)
    elif command == "ser":
        frame = run_ser(experiment).frame
    else:
        raise ConfigError(f"unknown command '{command}'")
    elapsed = time.perf_counter() - start
    logger.info(f"{command} finished in {elapsed:.1f} s")
    return save_results(experiment, command, frame, elapsed, extra)
