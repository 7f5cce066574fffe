import logging
from collections import defaultdict
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.experiments.config import ExperimentKind  # noqa: E402
from src.experiments.results import read_table, traces_path  # noqa: E402

logger = logging.getLogger(__name__)


def _summaries(rows: list[dict[str, Any]], *required: str) -> list[dict[str, Any]]:
    return [
        row for row in rows
        if row["row_kind"] == "summary" and all(row.get(name) is not None for name in required)
    ]


def _group_id(row: dict[str, Any], drop: str) -> str:
    """Config id without the part starting with `drop`, used as a curve label."""
    return "|".join(part for part in row["config_id"].split("|") if not part.startswith(drop))


def _plot_rate_sweep(ax, rows, traces) -> None:
    curves = defaultdict(list)
    for row in _summaries(rows, "kappa", "e1"):
        curves[_group_id(row, "kappa=")].append((row["kappa"], row["e1"], row["e1_stderr"] or 0.0))
    for label, points in sorted(curves.items()):
        kappa, e1, se = map(np.array, zip(*sorted(points)))
        ax.errorbar(kappa, e1, yerr=2.0 * se, marker="o", capsize=3, label=label)
    if curves:
        kappa, e1, _ = zip(*sorted(next(iter(sorted(curves.items())))[1]))
        guide = e1[-1] * np.sqrt(np.array(kappa) / kappa[-1])
        ax.plot(kappa, guide, "k--", alpha=0.5, label="slope 1/2")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("batch step kappa")
    ax.set_ylabel("mean E1(T)")


def _plot_long_time(ax, rows, traces) -> None:
    curves = defaultdict(list)
    for row in _summaries(rows, "horizon", "e1"):
        curves[_group_id(row, "T=")].append((row["horizon"], row["e1"], row["e1_stderr"] or 0.0))
    for label, points in sorted(curves.items()):
        t, e1, se = map(np.array, zip(*sorted(points)))
        ax.errorbar(t, e1, yerr=2.0 * se, marker="o", capsize=3, label=label)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("time T")
    ax.set_ylabel("mean E1(T)")


def _plot_cost_bench(ax, rows, traces) -> None:
    curves = defaultdict(list)
    for row in rows:
        if row["row_kind"] == "run" and row.get("wall_clock") is not None:
            curves[row["mode"]].append((row["n_particles"], row["wall_clock"]))
    if not curves:
        raise ValueError("cost table has no wall-clock values; rerun without --no-timing")
    for mode, points in sorted(curves.items()):
        n, clock = zip(*sorted(points))
        ax.plot(n, clock, marker="o", label=mode)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("particles N")
    ax.set_ylabel("wall clock (s)")


def _plot_moment_bound(ax, rows, traces) -> None:
    if traces is None:
        raise ValueError("moment traces not found next to the table")
    ax.plot(traces["times"], traces["mean_abs_position"], label="mean |X| over seeds")
    ax.set_xlabel("time t")
    ax.set_ylabel("mean |X|")


def _plot_cucker_smale(path: Path, rows, traces) -> None:
    if traces is None:
        raise ValueError("velocity traces not found next to the table")
    scenarios = traces["scenarios"]
    fig, axes = plt.subplots(len(scenarios), 3, figsize=(14, 3.2 * len(scenarios)), squeeze=False)
    for k, (sigma, rate) in enumerate(scenarios):
        title = f"sigma={sigma:g}, lambda={rate:g}"
        for col, mode in enumerate(("full", "rbm")):
            prefix = f"scenario{k}_{mode}"
            ax = axes[k, col]
            ax.plot(traces[f"{prefix}_times"], traces[f"{prefix}_velocities"], linewidth=0.8)
            ax.set_title(f"{mode}: {title}")
            ax.set_xlabel("time t")
            ax.set_ylabel("velocity")
            ax.grid(True, alpha=0.3)
        ax = axes[k, 2]
        for mode in ("full", "rbm"):
            prefix = f"scenario{k}_{mode}"
            ax.semilogy(traces[f"{prefix}_times"], np.maximum(traces[f"{prefix}_dv"], 1e-300), label=f"D_v {mode}")
        ax.set_title(f"velocity diameter: {title}")
        ax.set_xlabel("time t")
        ax.legend()
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


_PLOTTERS = {
    ExperimentKind.RATE_SWEEP: _plot_rate_sweep,
    ExperimentKind.LONG_TIME: _plot_long_time,
    ExperimentKind.COST_BENCH: _plot_cost_bench,
    ExperimentKind.MOMENT_BOUND: _plot_moment_bound,
}


def load_traces(table: Path) -> dict[str, np.ndarray] | None:
    path = traces_path(table)
    if not path.exists():
        return None
    with np.load(path) as data:
        return {name: data[name] for name in data.files}


def plot_results(kind: ExperimentKind, table: str | Path, out: str | Path) -> Path:
    """Render an emitted result table (and its traces, if any) to an image file."""
    table, out = Path(table), Path(out)
    if not table.exists():
        raise FileNotFoundError(f"result table {table} does not exist; run the experiment first")
    rows = read_table(table)
    traces = load_traces(table)
    out.parent.mkdir(parents=True, exist_ok=True)

    if kind is ExperimentKind.CUCKER_SMALE:
        _plot_cucker_smale(out, rows, traces)
    else:
        fig, ax = plt.subplots(figsize=(8, 5))
        _PLOTTERS[kind](ax, rows, traces)
        ax.set_title(kind.value.replace("_", " "))
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(out, dpi=120)
        plt.close(fig)

    logger.info("Plot written to %s", out)
    return out
