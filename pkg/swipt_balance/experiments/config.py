"""
Experiment configuration: pydantic models plus the INI loader.

An experiment file has three sections::

    [system]
    M = 5
    N = 5
    d = 2
    K = 3
    rho = 0.5
    zeta = 0.5
    delta2 = 0.1

    [experiment]
    name = fig_snr
    solver = mmse
    strategies = IA, BAL-ICD(0.1), BAL-ICD(0.8), PQFB(8)
    trials = 100
    seed = 7
    snr_db = 25

    [sweep]
    variable = snr_db
    grid = 0:40:4

Lists are comma separated; numeric grids also accept ``start:stop:step``
(stop included). A strategy may name its own IA solver, as in
``IA(subspace3)`` or ``BAL-ICD(0.8, mmse)``.
"""

from __future__ import annotations

import configparser
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from swipt_balance.errors import ConfigError
from swipt_balance.model import SystemConfig

logger = logging.getLogger(__name__)

StrategyKind = Literal["IA", "RAND", "MAX-EH", "BAL-ICD", "BAL-CD", "PQFB", "PAFB"]
SolverName = Literal["leakage", "mmse", "subspace3"]
SweepVariable = Literal["snr_db", "z", "rho", "bits"]

SOLVER_NAMES = ("leakage", "mmse", "subspace3")
_STRATEGY_PATTERN = re.compile(r"^\s*(IA|RAND|MAX-EH|BAL-ICD|BAL-CD|PQFB|PAFB)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


class StrategySpec(BaseModel):
    """
    One precoding strategy with its optional parameter (z, bits or feedback
    SNR) and an optional IA solver overriding the experiment's.

    Written as ``KIND``, ``KIND(param)``, ``KIND(solver)`` or
    ``KIND(param, solver)``, e.g. ``IA(mmse)`` or ``BAL-ICD(0.8, subspace3)``.
    """

    model_config = ConfigDict(frozen=True)

    kind: StrategyKind = Field(..., description="Strategy family")
    param: Optional[float] = Field(None, description="z for BAL-*, bits for PQFB, feedback SNR in dB for PAFB")
    solver: Optional[SolverName] = Field(None, description="IA solver for this strategy; experiment solver if unset")

    @model_validator(mode="after")
    def _param_fits_kind(self):
        if self.kind in ("IA", "RAND", "MAX-EH") and self.param is not None:
            raise ValueError(f"{self.kind} takes no parameter")
        if self.kind in ("BAL-ICD", "BAL-CD") and self.param is not None and self.param < 0:
            raise ValueError("balanced strategies need z >= 0")
        if self.kind == "PQFB" and self.param is not None and (self.param < 0 or self.param != int(self.param)):
            raise ValueError("PQFB needs a non-negative integer number of bits")
        return self

    @classmethod
    def parse(cls, text: str) -> "StrategySpec":
        match = _STRATEGY_PATTERN.match(text)
        if not match:
            raise ConfigError(f"cannot parse strategy '{text}'")
        kind, args = match.groups()
        value, solver = None, None
        for arg in (a.strip() for a in (args or "").split(",") if a.strip()):
            if arg in SOLVER_NAMES:
                if solver is not None:
                    raise ConfigError(f"strategy '{text}' names more than one solver")
                solver = arg
                continue
            if value is not None:
                raise ConfigError(f"strategy '{text}' has more than one parameter")
            try:
                value = float(arg)
            except ValueError as e:
                raise ConfigError(f"strategy '{text}' has a parameter that is neither a number nor a solver") from e
        return cls(kind=kind, param=value, solver=solver)

    @property
    def label(self) -> str:
        args = []
        if self.param is not None:
            args.append(str(int(self.param)) if self.kind == "PQFB" else f"{self.param:g}")
        if self.solver is not None:
            args.append(self.solver)
        return f"{self.kind}({', '.join(args)})" if args else self.kind

    def __str__(self) -> str:
        return self.label


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce one Monte-Carlo experiment."""

    model_config = ConfigDict(frozen=True)

    system: SystemConfig = Field(..., description="Interference channel and receiver parameters")
    name: str = Field("experiment", description="Base name of the output files")
    solver: SolverName = Field("mmse", description="IA solver")
    solver_init: Literal["random", "closed_form", "leakage"] = Field(
        "random", description="Initial precoders of the iterative IA solvers"
    )
    solver_max_iters: int = Field(1000, ge=1, description="IA iteration cap")
    solver_tol: float = Field(1e-10, ge=0.0, description="IA convergence tolerance")
    strategies: List[StrategySpec] = Field(
        default_factory=lambda: [StrategySpec(kind="IA")], description="Strategies to evaluate"
    )
    sweep_variable: SweepVariable = Field("snr_db", description="Variable swept by run_sweep")
    grid: List[float] = Field(default_factory=lambda: [25.0], description="Sweep grid, monotone")
    trials: int = Field(100, ge=1, description="Channel realizations per grid point")
    seed: int = Field(0, ge=0, description="Master seed")
    threads: int = Field(1, ge=1, description="Worker threads over trials")
    snr_db: float = Field(25.0, description="Transmit SNR P / sigma^2 in dB when SNR is not swept")
    z: float = Field(0.1, ge=0.0, description="Target chordal distance for BAL-* strategies without a parameter")
    icd_max_iters: int = Field(6, ge=1, description="Iteration cap of the iterative balanced design")
    icd_tol: float = Field(1e-9, ge=0.0, description="Absolute per-step objective improvement that stops the iterative design")
    codebook_bits: int = Field(8, ge=0, le=16, description="Codebook size for PQFB without a parameter")
    ser_symbols: int = Field(10_000, ge=1, description="QPSK symbols per user and stream for SER runs")
    decoders: Literal["mmse", "ia"] = Field(
        "mmse", description="Receive filters for rates: MMSE fitted to the sent precoders, or the IA solution's own"
    )
    systems: List[Tuple[int, int, int, int]] = Field(
        default_factory=list, description="Extra (M, N, d, K) systems for convergence traces"
    )
    output_dir: Path = Field(Path("results"), description="Directory for CSV, manifest and plots")
    plot: Optional[Literal["html", "png"]] = Field(None, description="Optional rendered plot")

    @field_validator("strategies", mode="before")
    @classmethod
    def _parse_strategies(cls, value):
        if isinstance(value, str):
            value = _split_list(value)
        return [StrategySpec.parse(v) if isinstance(v, str) else v for v in value]

    @field_validator("grid")
    @classmethod
    def _monotone_grid(cls, value):
        if not value:
            raise ValueError("sweep grid must not be empty")
        diffs = np.diff(value)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        return value

    @model_validator(mode="after")
    def _grid_fits_variable(self):
        grid = np.asarray(self.grid)
        if self.sweep_variable == "rho" and (np.any(grid < 0.0) or np.any(grid > 1.0)):
            raise ValueError("rho grid must lie in [0, 1]")
        if self.sweep_variable == "z" and np.any(grid < 0.0):
            raise ValueError("z grid must be non-negative")
        if self.sweep_variable == "bits" and np.any((grid < 0) | (grid > 16) | (grid != np.round(grid))):
            raise ValueError("bits grid must hold integers in [0, 16]")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        return self

    def design_system(self) -> SystemConfig:
        """System at the configured transmit SNR."""
        return self.system.with_snr_db(self.snr_db)


def _split_list(text: str) -> List[str]:
    # commas inside parentheses belong to the item
    items, depth, current = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            items.append(current.strip())
            current = ""
        else:
            current += ch
    if current.strip():
        items.append(current.strip())
    return items


def parse_grid(text: str) -> List[float]:
    """Parse ``a, b, c`` or ``start:stop:step`` (stop included)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step == 0:
                raise ConfigError("grid step must be non-zero")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [float(np.round(start + i * step, 12)) for i in range(max(count, 0))]
        return [float(v) for v in _split_list(text)]
    except ValueError as e:
        raise ConfigError(f"cannot parse grid '{text}': {e}") from e


def _parse_systems(text: str) -> List[Tuple[int, int, int, int]]:
    systems = []
    for chunk in text.split(";"):
        if chunk.strip():
            values = tuple(int(v) for v in chunk.split(","))
            if len(values) != 4:
                raise ConfigError(f"system '{chunk}' must be M, N, d, K")
            systems.append(values)
    return systems


def _parse_per_user(text: str) -> Union[float, List[float]]:
    values = [float(v) for v in _split_list(text)]
    return values[0] if len(values) == 1 else values


_SYSTEM_INT_KEYS = ("M", "N", "d", "K")
_SYSTEM_FLOAT_KEYS = ("sigma2", "delta2", "zeta")
_EXPERIMENT_INT_KEYS = ("trials", "seed", "threads", "icd_max_iters", "codebook_bits", "ser_symbols", "solver_max_iters")
_EXPERIMENT_FLOAT_KEYS = ("snr_db", "z", "icd_tol", "solver_tol")
_EXPERIMENT_STR_KEYS = ("name", "solver", "solver_init", "output_dir", "plot", "strategies", "decoders")


def config_from_ini(text: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Build an ExperimentConfig from INI text; ``overrides`` replace experiment keys."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    if "system" not in parser:
        raise ConfigError("config needs a [system] section")

    try:
        system: Dict[str, Any] = {}
        for key, value in parser["system"].items():
            if key in _SYSTEM_INT_KEYS:
                system[key] = int(value)
            elif key in _SYSTEM_FLOAT_KEYS:
                system[key] = float(value)
            elif key in ("P", "rho"):
                system[key] = _parse_per_user(value)
            elif key == "feasibility":
                system[key] = value.strip()
            else:
                raise ConfigError(f"unknown [system] key '{key}'")

        experiment: Dict[str, Any] = {}
        if "experiment" in parser:
            for key, value in parser["experiment"].items():
                if key in _EXPERIMENT_INT_KEYS:
                    experiment[key] = int(value)
                elif key in _EXPERIMENT_FLOAT_KEYS:
                    experiment[key] = float(value)
                elif key in _EXPERIMENT_STR_KEYS:
                    experiment[key] = value.strip() or None
                elif key == "systems":
                    experiment[key] = _parse_systems(value)
                else:
                    raise ConfigError(f"unknown [experiment] key '{key}'")

        if "sweep" in parser:
            for key, value in parser["sweep"].items():
                if key == "variable":
                    experiment["sweep_variable"] = value.strip()
                elif key == "grid":
                    experiment["grid"] = parse_grid(value)
                else:
                    raise ConfigError(f"unknown [sweep] key '{key}'")
    except ValueError as e:
        raise ConfigError(f"bad value in config: {e}") from e

    for key, value in (overrides or {}).items():
        if value is not None:
            experiment[key] = value
    return ExperimentConfig(system=SystemConfig(**system), **experiment)


def load_experiment_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    config = config_from_ini(path.read_text(encoding="utf-8"), overrides)
    logger.info(f"Loaded experiment '{config.name}' from {path}")
    return config
