"""
Aggregated result tables, CSV output and post-processing helpers.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
METRIC_COLUMNS = ("sum_rate", "total_energy", "rlub", "realized_z", "ser")
KEY_COLUMNS = ("sweep_variable", "sweep_value", "strategy", "trials", "seed")


class ResultTable:
    """One row per (sweep_value, strategy) with trial means and standard errors."""

    def __init__(self, frame: pd.DataFrame):
        self.frame = frame

    @classmethod
    def from_records(
        cls,
        records: Iterable[Dict],
        sweep_variable: str,
        seed: int,
        grid: Sequence[float],
        strategies: Sequence[str],
    ) -> "ResultTable":
        """
        Aggregate per-trial records (dicts with sweep_value, strategy, trial and
        the metric columns) into means and standard errors.

        Rows follow grid order, then strategy order, regardless of the order in
        which trials finished.
        """
        raw = pd.DataFrame(list(records))
        for column in METRIC_COLUMNS:
            if column not in raw:
                raw[column] = np.nan
        raw = raw.sort_values(["sweep_value", "strategy", "trial"], kind="mergesort")

        rows: List[Dict] = []
        for value in grid:
            for strategy in strategies:
                subset = raw[(raw["sweep_value"] == value) & (raw["strategy"] == strategy)]
                row: Dict = {
                    "sweep_variable": sweep_variable,
                    "sweep_value": float(value),
                    "strategy": strategy,
                    "trials": int(subset["trial"].nunique()),
                    "seed": int(seed),
                }
                for column in METRIC_COLUMNS:
                    values = subset[column].to_numpy(dtype=float)
                    values = values[~np.isnan(values)]
                    row[f"{column}_mean"] = float(np.mean(values)) if values.size else np.nan
                    row[f"{column}_se"] = (
                        float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else np.nan
                    )
                rows.append(row)
        return cls(pd.DataFrame(rows, columns=list(KEY_COLUMNS) + _metric_columns()))

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "ResultTable":
        return cls(pd.read_csv(path))

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
        logger.info(f"Wrote {len(self.frame)} rows to {path}")
        return path

    def strategy(self, label: str) -> pd.DataFrame:
        return self.frame[self.frame["strategy"] == label].reset_index(drop=True)

    @property
    def strategies(self) -> List[str]:
        return list(dict.fromkeys(self.frame["strategy"]))

    def __len__(self) -> int:
        return len(self.frame)


def _metric_columns() -> List[str]:
    columns = []
    for column in METRIC_COLUMNS:
        columns += [f"{column}_mean", f"{column}_se"]
    return columns


def dof_slopes(table: ResultTable, window_db: float = 12.0) -> Dict[str, float]:
    """
    Least-squares slope of mean sum rate against log2(SNR) over the top
    ``window_db`` of an SNR sweep, per strategy (bits/s/Hz per 3 dB).
    """
    frame = table.frame
    if frame.empty or frame["sweep_variable"].iloc[0] != "snr_db":
        raise ValueError("DoF slopes need an snr_db sweep")
    slopes = {}
    for strategy in table.strategies:
        rows = table.strategy(strategy)
        top = rows["sweep_value"].max()
        window = rows[rows["sweep_value"] >= top - window_db - 1e-9]
        x = window["sweep_value"].to_numpy() / (10.0 * np.log10(2.0))
        y = window["sum_rate_mean"].to_numpy()
        if len(x) < 2:
            slopes[strategy] = float("nan")
            continue
        slopes[strategy] = float(np.polyfit(x, y, 1)[0])
    return slopes


def slopes_frame(slopes: Dict[str, float], window_db: float) -> pd.DataFrame:
    return pd.DataFrame(
        {"strategy": list(slopes), "window_db": window_db, "dof_slope": list(slopes.values())}
    )


def pareto_frontier(rates: Sequence[float], energies: Sequence[float]) -> np.ndarray:
    """
    Non-dominated (rate, energy) points sorted by increasing energy.

    A point is dominated when another has rate and energy at least as large
    and one of them strictly larger.
    """
    points = np.column_stack([np.asarray(rates, float), np.asarray(energies, float)])
    points = points[~np.isnan(points).any(axis=1)]
    order = np.lexsort((-points[:, 0], -points[:, 1]))
    frontier = []
    best_rate = -np.inf
    for rate, energy in points[order]:
        if rate > best_rate:
            frontier.append((rate, energy))
            best_rate = rate
    return np.array(frontier[::-1]).reshape(-1, 2)


def frontier_rate_at(frontier: np.ndarray, energy: float) -> float:
    """Best rate reachable with at least ``energy`` by time-sharing frontier points."""
    if frontier.size == 0 or energy > frontier[-1, 1]:
        return -np.inf
    rates, energies = frontier[:, 0], frontier[:, 1]
    if energy <= energies[0]:
        return float(rates[0])
    return float(np.interp(energy, energies, rates))


def region_contains(
    outer: np.ndarray,
    inner: np.ndarray,
    rate_slack: Union[float, Sequence[float]] = 0.0,
    energy_slack: float = 0.0,
) -> bool:
    """
    True when every inner (rate, energy) point lies inside the time-sharing
    region below the outer frontier, up to the given slacks.
    """
    outer = np.asarray(outer, float).reshape(-1, 2)
    inner = np.asarray(inner, float).reshape(-1, 2)
    frontier = pareto_frontier(outer[:, 0], outer[:, 1])
    slack = np.broadcast_to(np.asarray(rate_slack, float), (inner.shape[0],))
    for (rate, energy), s in zip(inner, slack):
        if np.isnan(rate) or np.isnan(energy):
            continue
        reachable = frontier_rate_at(frontier, max(energy - energy_slack, 0.0))
        if rate > reachable + s:
            return False
    return True


def region_points(table: ResultTable, strategy: str) -> np.ndarray:
    rows = table.strategy(strategy)
    return rows[["sum_rate_mean", "total_energy_mean"]].to_numpy(dtype=float)


def convergence_frame(rows: List[Dict]) -> pd.DataFrame:
    frame = pd.DataFrame(rows)
    frame["relative_change"] = frame.groupby(["system", "z"], sort=False)["objective_mean"].transform(
        lambda s: s.diff().abs() / s.shift().abs()
    )
    return frame


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path
