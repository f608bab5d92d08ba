"""
Plot rendering from experiment CSV files.

HTML output uses plotly with the dark template, PNG output uses matplotlib
(Agg backend) with the seaborn theme. Both read nothing but the CSV.
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import pandas as pd

from swipt_balance.errors import ConfigError

logger = logging.getLogger(__name__)

LINE_COLORS = ["#FF69B4", "#00BFFF", "#ADFF2F", "#FFD700", "#FF7F50", "#BA55D3", "#40E0D0", "#F5F5F5"]

# command -> (x column, y column, x title, y title, log y)
AXES: Dict[str, Tuple[str, str, str, str, bool]] = {
    "region": ("sum_rate_mean", "total_energy_mean", "Sum rate (bits/s/Hz)", "Harvested energy", False),
    "sweep": ("sweep_value", "sum_rate_mean", "{variable}", "Sum rate (bits/s/Hz)", False),
    "converge": ("iteration", "objective_mean", "Iteration", "Objective", False),
    "ser": ("sweep_value", "ser_mean", "SNR (dB)", "Symbol error rate", True),
}


def _series(command: str, frame: pd.DataFrame) -> List[Tuple[str, pd.DataFrame]]:
    if command == "converge":
        return [(f"{system}, z={z:g}", rows) for (system, z), rows in frame.groupby(["system", "z"], sort=False)]
    series = [(strategy, rows) for strategy, rows in frame.groupby("strategy", sort=False)]
    if command == "region":
        # rho = 0 rows have no rate
        series = [(name, rows.dropna(subset=["sum_rate_mean"])) for name, rows in series]
    return series


def _axes(command: str, frame: pd.DataFrame) -> Tuple[str, str, str, str, bool]:
    if command not in AXES:
        raise ConfigError(f"no plot layout for '{command}'")
    x, y, x_title, y_title, log_y = AXES[command]
    if "{variable}" in x_title:
        x_title = str(frame["sweep_variable"].iloc[0])
    return x, y, x_title, y_title, log_y


def render_html(command: str, frame: pd.DataFrame, path: Path, title: str) -> Path:
    import plotly.graph_objs as go

    x, y, x_title, y_title, log_y = _axes(command, frame)
    fig = go.Figure()
    for i, (name, rows) in enumerate(_series(command, frame)):
        fig.add_trace(
            go.Scatter(
                x=rows[x],
                y=rows[y],
                mode="lines+markers",
                name=name,
                line=dict(color=LINE_COLORS[i % len(LINE_COLORS)]),
            )
        )
    fig.update_layout(
        template="plotly_dark",
        title=title,
        xaxis_title=x_title,
        yaxis_title=y_title,
        font=dict(family="Arial", size=16),
    )
    if log_y:
        fig.update_yaxes(type="log")
    fig.write_html(str(path), include_plotlyjs="cdn")
    return path


def render_png(command: str, frame: pd.DataFrame, path: Path, title: str) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import seaborn as sns

    sns.set_theme()
    x, y, x_title, y_title, log_y = _axes(command, frame)
    fig, ax = plt.subplots(figsize=(8, 5))
    for name, rows in _series(command, frame):
        ax.plot(rows[x], rows[y], marker="o", label=name)
    ax.set_xlabel(x_title)
    ax.set_ylabel(y_title)
    ax.set_title(title)
    if log_y:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_plot(command: str, csv_path: Union[str, Path], kind: str) -> Path:
    """Render ``csv_path`` next to itself as ``.html`` or ``.png``."""
    csv_path = Path(csv_path)
    frame = pd.read_csv(csv_path)
    if frame.empty:
        raise ConfigError(f"{csv_path} has no rows to plot")
    title = csv_path.stem
    if kind == "html":
        path = render_html(command, frame, csv_path.with_suffix(".html"), title)
    elif kind == "png":
        path = render_png(command, frame, csv_path.with_suffix(".png"), title)
    else:
        raise ConfigError(f"unknown plot format '{kind}'")
    logger.info(f"Rendered {kind} plot to {path}")
    return path
