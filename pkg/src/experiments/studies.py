import logging
import math
from collections import defaultdict
from dataclasses import replace
from typing import Any, Callable

import numpy as np
from scipy.stats import spearmanr

from src.dynamics.runner import initial_ensemble, run, run_coupled, velocity_snapshot
from src.dynamics.state import Mode, SimulationConfig
from src.experiments.config import ExperimentConfig, ExperimentKind
from src.experiments.pool import RunTask, execute
from src.experiments.results import ResultTable
from src.forces.kernels import check_contractivity
from src.metrics.errors import (
    fit_loglog_slope,
    fit_power_with_offset,
    flocking_diameters,
    mean_abs_position,
)
from src.noise.levy import CompoundPoisson, LevyNoiseSpec
from src.utils.config import ConfigError

logger = logging.getLogger(__name__)

# rows may carry arrays under this key; studies pop it before filing the row
_EXTRA = "_extra"


def _require(cfg: ExperimentConfig, kind: ExperimentKind) -> None:
    if cfg.kind is not kind:
        raise ConfigError(f"expected a {kind.value} experiment, got {cfg.kind.value}")
    cfg.validate()
    if not cfg.base.second_order:
        for potential in dict.fromkeys(cfg.potential_values):
            check_contractivity(potential, cfg.base.kernel)


def _grid_columns(sim: SimulationConfig) -> dict[str, Any]:
    return {
        "n_particles": sim.n_particles,
        "batch_size": sim.batch_size,
        "kappa": sim.batch_step,
        "tau": sim.fine_step,
        "horizon": sim.horizon,
        "confinement_a": sim.potential.a,
    }


def _mean_stderr(values) -> tuple[float, float | None]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), None
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _finite_or_none(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def _file_rows(table: ResultTable, rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
    """Add rows to the table and return their popped extras, in row order."""
    extras = []
    for row in rows:
        extras.append(row.pop(_EXTRA, None))
        table.add_row(**row)
    return extras


def _coupled_worker(task: RunTask) -> list[dict[str, Any]]:
    """One coupled run, reported at each of task.params['report_times'].

    Kernel-evaluation counts are the exact cumulative counts up to the reported
    time; the wall clock is prorated the same way.
    """
    sim = task.cfg
    series = run_coupled(sim)
    n_windows = len(series.times)
    rows = []
    for t in task.params.get("report_times", (sim.horizon,)):
        k = series.at(t)
        share = (k + 1) / n_windows
        rows.append({
            **_grid_columns(sim),
            **task.labels,
            "config_id": f"{task.config_id}|T={t:g}",
            "mode": Mode.COUPLED.value,
            "seed": sim.seed,
            "horizon": float(t),
            "e1": float(series.e1[k]),
            "e2": None if series.e2 is None else float(series.e2[k]),
            "w1": None if series.w1 is None else float(series.w1[k]),
            "kernel_eval_count": series.kernel_eval_count * (k + 1) // n_windows,
            "wall_clock": series.wall_clock * share,
        })
    return rows


def run_rate_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Coupled runs over potential x N x T x kappa x seed; mean E1 per kappa and a log-log slope per (a, N, T)."""
    _require(cfg, ExperimentKind.RATE_SWEEP)
    tasks = []
    for pot in cfg.potential_values:
        for n in cfg.n_values:
            for horizon in cfg.horizon_values:
                for kappa in cfg.kappa_values:
                    sim = replace(cfg.base, potential=pot, n_particles=n, horizon=horizon,
                                  batch_step=kappa, mode=Mode.COUPLED)
                    config_id = f"a={pot.a:g}|N={n:05d}|kappa={kappa:.8g}"
                    tasks.extend(
                        RunTask(config_id, seed, replace(sim, seed=seed))
                        for seed in cfg.seeds
                    )
    logger.info("Rate sweep: %d coupled run(s)", len(tasks))

    table = ResultTable(cfg.kind.value)
    rows = execute(tasks, _coupled_worker, threads)
    _file_rows(table, rows)

    by_point = defaultdict(list)
    for row in rows:
        by_point[row["config_id"]].append(row)

    for pot in cfg.potential_values:
        for n in cfg.n_values:
            for horizon in cfg.horizon_values:
                kappas, means = [], []
                for kappa in cfg.kappa_values:
                    group = by_point[f"a={pot.a:g}|N={n:05d}|kappa={kappa:.8g}|T={horizon:g}"]
                    e1, stderr = _mean_stderr([r["e1"] for r in group])
                    table.add_summary(
                        config_id=group[0]["config_id"], mode=Mode.COUPLED.value,
                        **{k: group[0][k] for k in ("n_particles", "batch_size", "kappa", "tau",
                                                    "horizon", "confinement_a")},
                        e1=e1, e1_stderr=stderr,
                        w1=None if group[0]["w1"] is None else float(np.mean([r["w1"] for r in group])),
                    )
                    kappas.append(kappa)
                    means.append(e1)

                if len(kappas) < 2:
                    logger.info("a=%g N=%d T=%g: one kappa value, no slope fitted", pot.a, n, horizon)
                    continue
                if min(means) <= 0.0:
                    logger.warning("a=%g N=%d T=%g: zero mean error, slope undefined", pot.a, n, horizon)
                    continue
                slope, _ = fit_loglog_slope(kappas, means)
                table.add_summary(
                    config_id=f"a={pot.a:g}|N={n:05d}|T={horizon:g}|slope", mode=Mode.COUPLED.value,
                    n_particles=n, batch_size=cfg.base.batch_size, tau=cfg.base.fine_step,
                    horizon=horizon, confinement_a=pot.a, slope=slope,
                )
                logger.info("a=%g N=%d T=%g: log-log slope %.3f", pot.a, n, horizon, slope)
    return table


def run_long_time(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """One coupled run per seed to max(T), read out at every T in the sweep."""
    _require(cfg, ExperimentKind.LONG_TIME)
    report_times = tuple(sorted(cfg.horizon_values))
    t_max = report_times[-1]
    tasks = []
    for pot in cfg.potential_values:
        for n in cfg.n_values:
            for kappa in cfg.kappa_values:
                sim = replace(cfg.base, potential=pot, n_particles=n, horizon=t_max,
                              batch_step=kappa, mode=Mode.COUPLED)
                config_id = f"a={pot.a:g}|N={n:05d}|kappa={kappa:.8g}"
                tasks.extend(
                    RunTask(config_id, seed, replace(sim, seed=seed),
                            params={"report_times": report_times})
                    for seed in cfg.seeds
                )
    logger.info("Long-time study: %d coupled run(s) to T=%g", len(tasks), t_max)

    table = ResultTable(cfg.kind.value)
    rows = execute(tasks, _coupled_worker, threads)
    _file_rows(table, rows)

    by_point = defaultdict(list)
    for row in rows:
        by_point[row["config_id"]].append(row)

    for task in tasks[::cfg.n_seeds]:
        means = []
        for t in report_times:
            group = by_point[f"{task.config_id}|T={t:g}"]
            e1, stderr = _mean_stderr([r["e1"] for r in group])
            means.append(e1)
            table.add_summary(
                config_id=group[0]["config_id"], mode=Mode.COUPLED.value,
                **{k: group[0][k] for k in ("n_particles", "batch_size", "kappa", "tau",
                                            "horizon", "confinement_a")},
                e1=e1, e1_stderr=stderr,
            )

        ratio = means[-1] / means[0] if means[0] > 0.0 else None
        rho = None
        if len(means) > 1 and np.ptp(means) > 0.0:
            rho, _ = spearmanr(report_times, means)
            rho = _finite_or_none(rho)
        table.add_summary(
            config_id=f"{task.config_id}|trend", mode=Mode.COUPLED.value,
            **_grid_columns(task.cfg), ratio=ratio, spearman=rho,
        )
        logger.info("%s: E1(%g)/E1(%g)=%s, spearman=%s", task.config_id, t_max, report_times[0],
                    "n/a" if ratio is None else f"{ratio:.3f}", "n/a" if rho is None else f"{rho:.3f}")
    return table


def run_cost_bench(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Time Full and RBM runs per N on one seed; fit exponents of evaluations and wall clock.

    Runs are sequential regardless of `threads` so the timings do not compete for cores.
    With timing on, each run is repeated `timing_repeats` times and the fastest
    wall clock kept. The wall-clock exponent is e in t(N) = c0 + c1 N^e.
    """
    _require(cfg, ExperimentKind.COST_BENCH)
    if threads > 1:
        logger.info("Cost benchmark runs sequentially, ignoring threads=%d", threads)
    repeats = cfg.timing_repeats if cfg.include_timing else 1
    table = ResultTable(cfg.kind.value)
    points: dict[Mode, list[tuple[int, int, float]]] = {Mode.FULL: [], Mode.RBM: []}

    for n in cfg.n_values:
        sim = replace(cfg.base, n_particles=n)
        initial = initial_ensemble(sim)
        for mode in (Mode.FULL, Mode.RBM):
            records = [run(replace(sim, mode=mode), initial=initial) for _ in range(repeats)]
            count = records[0].kernel_eval_count
            clock = min(record.wall_clock for record in records)
            table.add_row(
                config_id=f"{mode.value}|N={n:05d}", mode=mode.value, seed=sim.seed,
                **_grid_columns(sim),
                kernel_eval_count=count, wall_clock=clock,
            )
            points[mode].append((n, count, clock))
            logger.info("%s N=%d: %d kernel evaluations in %.3fs (best of %d)", mode.value, n,
                        count, clock, repeats)

    for mode, measured in points.items():
        if len(measured) < 2:
            continue
        ns, counts, clocks = zip(*measured)
        columns = {"mode": mode.value, "batch_size": cfg.base.batch_size, "kappa": cfg.base.batch_step,
                   "tau": cfg.base.fine_step, "horizon": cfg.base.horizon}
        if min(counts) > 0:
            slope, _ = fit_loglog_slope(ns, counts)
            table.add_summary(config_id=f"{mode.value}|kernel_eval_exponent", slope=slope, **columns)
        # timing-derived rows would break byte-identical output
        if not cfg.include_timing:
            continue
        raw_slope, _ = fit_loglog_slope(ns, clocks)
        if len(measured) < 3:
            logger.warning("%s: %d sizes cannot separate overhead from growth, reporting the log-log slope",
                           mode.value, len(measured))
            table.add_summary(config_id=f"{mode.value}|wall_clock_exponent", slope=raw_slope, **columns)
            continue
        exponent, overhead, _ = fit_power_with_offset(ns, clocks)
        table.add_summary(config_id=f"{mode.value}|wall_clock_exponent", slope=exponent, **columns)
        logger.info("%s: wall-clock exponent %.3f (log-log slope %.3f, fixed cost %.3gs per run)",
                    mode.value, exponent, raw_slope, overhead)
    return table


def scenario_noise(sigma: float, rate_lambda: float) -> LevyNoiseSpec:
    """Brownian part sigma plus standard-normal jumps at rate lambda."""
    jumps = CompoundPoisson(rate_lambda=rate_lambda) if rate_lambda > 0.0 else None
    return LevyNoiseSpec(drift_b=0.0, gaussian_sigma=sigma, jump_part=jumps)


def _flocking_worker(task: RunTask) -> list[dict[str, Any]]:
    sim = task.cfg
    initial = initial_ensemble(sim)
    dx0, dv0 = flocking_diameters(initial)
    threshold = task.params["threshold"]
    rows = []
    for mode in (Mode.FULL, Mode.RBM):
        record = run(replace(sim, mode=mode), observers=(flocking_diameters, velocity_snapshot),
                     initial=initial)
        diameters = np.vstack([(dx0, dv0), np.array(record.observations[0])])
        dx_final, dv_final = diameters[-1]
        row = {
            **_grid_columns(sim),
            **task.labels,
            "config_id": f"{task.config_id}|{mode.value}",
            "mode": mode.value,
            "seed": sim.seed,
            "dx_final": float(dx_final),
            "dv_final": float(dv_final),
            "verdict": bool(dv_final < threshold * dv0),
            "kernel_eval_count": record.kernel_eval_count,
            "wall_clock": record.wall_clock,
        }
        if task.params.get("keep_traces"):
            row[_EXTRA] = {
                "times": np.concatenate([[0.0], record.times]),
                "dx": diameters[:, 0],
                "dv": diameters[:, 1],
                "velocities": np.vstack([initial.velocities[:, 0], np.array(record.observations[1])]),
            }
        rows.append(row)
    return rows


def run_cucker_smale(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Full and RBM Cucker-Smale runs per noise scenario; flocking verdict by majority over seeds."""
    _require(cfg, ExperimentKind.CUCKER_SMALE)
    if not cfg.base.second_order:
        raise ConfigError(f"cucker_smale needs a velocity kernel, got {cfg.base.kernel.describe()}")

    tasks = []
    for k, (sigma, rate) in enumerate(cfg.scenarios):
        sim = replace(cfg.base, noise=scenario_noise(sigma, rate))
        label = f"sigma={sigma:g},lambda={rate:g}"
        tasks.extend(
            RunTask(
                f"scenario={k}|{label}", seed, replace(sim, seed=seed),
                labels={"scenario": label},
                params={"threshold": cfg.flocking_threshold, "keep_traces": seed == cfg.seeds[0]},
            )
            for seed in cfg.seeds
        )
    logger.info("Cucker-Smale study: %d scenario(s) x %d seed(s)", len(cfg.scenarios), cfg.n_seeds)

    table = ResultTable(cfg.kind.value)
    rows = execute(tasks, _flocking_worker, threads)
    for row, extra in zip(rows, _file_rows(table, rows)):
        if extra is None:
            continue
        prefix = f"{row['config_id'].split('|')[0].replace('=', '')}_{row['mode']}"
        for name, values in extra.items():
            table.traces[f"{prefix}_{name}"] = values
    table.traces["scenarios"] = np.array(cfg.scenarios, dtype=float)

    by_group = defaultdict(list)
    for row in table.rows:
        by_group[row["config_id"]].append(row)
    for k, (sigma, rate) in enumerate(cfg.scenarios):
        verdicts = {}
        for mode in (Mode.FULL, Mode.RBM):
            group = by_group[f"scenario={k}|sigma={sigma:g},lambda={rate:g}|{mode.value}"]
            flocked = sum(r["verdict"] for r in group)
            verdicts[mode] = 2 * flocked > len(group)
            table.add_summary(
                config_id=group[0]["config_id"], mode=mode.value, scenario=group[0]["scenario"],
                **{c: group[0][c] for c in ("n_particles", "batch_size", "kappa", "tau", "horizon",
                                            "confinement_a")},
                dx_final=float(np.mean([r["dx_final"] for r in group])),
                dv_final=float(np.mean([r["dv_final"] for r in group])),
                verdict=verdicts[mode],
            )
        logger.info("sigma=%g lambda=%g: full %s, rbm %s", sigma, rate,
                    "flocking" if verdicts[Mode.FULL] else "unflocking",
                    "flocking" if verdicts[Mode.RBM] else "unflocking")
        if verdicts[Mode.FULL] != verdicts[Mode.RBM]:
            logger.warning("sigma=%g lambda=%g: full and random-batch verdicts disagree", sigma, rate)
    return table


def _moment_worker(task: RunTask) -> list[dict[str, Any]]:
    sim = task.cfg
    initial = initial_ensemble(sim)
    record = run(sim, observers=(mean_abs_position,), initial=initial)
    times = np.concatenate([[0.0], record.times])
    moments = np.array([mean_abs_position(initial), *record.observations[0]])
    reference = moments[int(np.argmin(np.abs(times - 1.0)))]
    return [{
        **_grid_columns(sim),
        "config_id": task.config_id,
        "mode": sim.mode.value,
        "seed": sim.seed,
        "ratio": float(moments.max() / reference),
        "kernel_eval_count": record.kernel_eval_count,
        "wall_clock": record.wall_clock,
        _EXTRA: {"times": times, "moments": moments},
    }]


def run_moment_bound(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """RBM runs recording mean |X| at t = 0 and every batch boundary; ratio of its maximum to its value at t = 1."""
    _require(cfg, ExperimentKind.MOMENT_BOUND)
    sim = replace(cfg.base, mode=Mode.RBM)
    if sim.horizon < 1.0:
        raise ConfigError(f"moment_bound needs horizon >= 1, got {sim.horizon}")
    config_id = f"a={sim.potential.a:g}|N={sim.n_particles:05d}|T={sim.horizon:g}"
    tasks = [RunTask(config_id, seed, replace(sim, seed=seed)) for seed in cfg.seeds]

    table = ResultTable(cfg.kind.value)
    extras = _file_rows(table, execute(tasks, _moment_worker, threads))
    times = extras[0]["times"]
    mean_trace = np.mean([extra["moments"] for extra in extras], axis=0)
    ratio = float(mean_trace.max() / mean_trace[int(np.argmin(np.abs(times - 1.0)))])
    table.traces["times"] = times
    table.traces["mean_abs_position"] = mean_trace
    table.add_summary(config_id=f"{config_id}|bound", mode=sim.mode.value, **_grid_columns(sim), ratio=ratio)
    logger.info("Moment bound: max mean|X| / mean|X|(1) = %.3f over %d seed(s)", ratio, cfg.n_seeds)
    return table


RUNNERS: dict[ExperimentKind, Callable[[ExperimentConfig, int], ResultTable]] = {
    ExperimentKind.RATE_SWEEP: run_rate_sweep,
    ExperimentKind.LONG_TIME: run_long_time,
    ExperimentKind.COST_BENCH: run_cost_bench,
    ExperimentKind.CUCKER_SMALE: run_cucker_smale,
    ExperimentKind.MOMENT_BOUND: run_moment_bound,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    logger.info("Running %s experiment (%d seed(s), threads=%d)", cfg.kind.value, cfg.n_seeds, threads)
    return RUNNERS[cfg.kind](cfg, threads)
