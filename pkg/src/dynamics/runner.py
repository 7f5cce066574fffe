import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from src.batching.partition import BatchPartition, random_partition
from src.dynamics.integrators import CostCounter, step_cucker_smale, step_full, step_rbm
from src.dynamics.state import Mode, ParticleEnsemble, SimulationConfig
from src.initial_states.laws import sample_initial
from src.metrics.errors import (
    ErrorSeries,
    coupled_error_e1,
    coupled_error_e2,
    flocking_diameters,
    wasserstein_1d,
)
from src.noise.levy import NoiseIncrementBlock, sample_increments
from src.utils.rng import STREAM_BATCH, STREAM_INITIAL, STREAM_NOISE, STREAM_VELOCITY, substream

logger = logging.getLogger(__name__)

NOISE_CHUNK = 64

Observer = Callable[[ParticleEnsemble], Any]


@dataclass
class RunRecord:
    final: ParticleEnsemble
    times: np.ndarray
    observations: list[list]
    kernel_eval_count: int
    wall_clock: float


def velocity_snapshot(state: ParticleEnsemble) -> np.ndarray:
    """Observer returning a copy of the first velocity coordinate of every particle."""
    return state.velocities[:, 0].copy()


def initial_ensemble(cfg: SimulationConfig) -> ParticleEnsemble:
    """Draw the t = 0 state from the config's initial laws on dedicated substreams."""
    n, d = cfg.n_particles, cfg.dim
    positions = sample_initial(cfg.initial_law, n * d, substream(cfg.seed, STREAM_INITIAL), cfg.mh)
    velocities = None
    if cfg.second_order:
        velocities = sample_initial(
            cfg.velocity_law, n * d, substream(cfg.seed, STREAM_VELOCITY), cfg.mh,
        ).reshape(n, d)
    return ParticleEnsemble(positions.reshape(n, d), velocities)


class NoiseSchedule:
    """Noise increments addressed by fine-step index.

    Steps are drawn NOISE_CHUNK at a time from substream (seed, noise, k // NOISE_CHUNK);
    particle i of step k is row i of that step's slice. Nothing here depends on
    the batch schedule, so every dynamics run on the same config sees the same path.
    """

    def __init__(self, cfg: SimulationConfig):
        self._cfg = cfg
        self._chunk_index = -1
        self._chunk: np.ndarray | None = None

    def block(self, step: int) -> NoiseIncrementBlock:
        chunk_index, offset = divmod(step, NOISE_CHUNK)
        if chunk_index != self._chunk_index:
            cfg = self._cfg
            rng = substream(cfg.seed, STREAM_NOISE, chunk_index)
            shape = (NOISE_CHUNK, cfg.n_particles, cfg.dim)
            self._chunk = sample_increments(cfg.noise, shape, cfg.fine_step, rng)
            self._chunk_index = chunk_index
        return NoiseIncrementBlock(increments=self._chunk[offset], dt=self._cfg.fine_step)


def noise_block(cfg: SimulationConfig, step: int) -> NoiseIncrementBlock:
    """Noise for fine step `step`; depends only on (seed, step), never on the batch schedule."""
    return NoiseSchedule(cfg).block(step)


def _advance(state: ParticleEnsemble, cfg: SimulationConfig, block: NoiseIncrementBlock,
             partition: BatchPartition | None, counter: CostCounter) -> ParticleEnsemble:
    if cfg.second_order:
        return step_cucker_smale(state, cfg, block, partition, counter)
    if partition is None:
        return step_full(state, cfg, block, counter)
    return step_rbm(state, cfg, partition, block, counter)


def _prepare(cfg: SimulationConfig, initial: ParticleEnsemble | None) -> ParticleEnsemble:
    cfg.validate()
    state = initial.copy() if initial is not None else initial_ensemble(cfg)
    if state.n != cfg.n_particles or state.dim != cfg.dim:
        raise ValueError(
            f"initial state is {state.n} x {state.dim}, config asks for {cfg.n_particles} x {cfg.dim}"
        )
    return state


def run(cfg: SimulationConfig, observers: Sequence[Observer] = (),
        initial: ParticleEnsemble | None = None) -> RunRecord:
    """Integrate to the horizon in Full or RBM mode, calling observers at every batch boundary."""
    if cfg.mode is Mode.COUPLED:
        raise ValueError("coupled configs go through run_coupled")
    state = _prepare(cfg, initial)
    batch_rng = substream(cfg.seed, STREAM_BATCH)
    counter = CostCounter()
    noise = NoiseSchedule(cfg)
    spw = cfg.steps_per_window
    times, observations = [], [[] for _ in observers]

    logger.info(
        "Run start: mode=%s N=%d p=%d tau=%.3g kappa=%.3g T=%.3g seed=%d",
        cfg.mode.value, cfg.n_particles, cfg.batch_size, cfg.fine_step, cfg.batch_step,
        cfg.horizon, cfg.seed,
    )
    t0 = time.perf_counter()
    for m in range(cfg.n_windows):
        partition = None
        if cfg.mode is Mode.RBM:
            partition = random_partition(cfg.n_particles, cfg.batch_size, batch_rng)
        for s in range(spw):
            state = _advance(state, cfg, noise.block(m * spw + s), partition, counter)
        times.append((m + 1) * cfg.batch_step)
        for observer, series in zip(observers, observations):
            series.append(observer(state))
        logger.debug("Window %d/%d done (t=%.4g)", m + 1, cfg.n_windows, times[-1])
    wall_clock = time.perf_counter() - t0

    logger.info("Run finished in %.2fs (%d kernel evaluations)", wall_clock, counter.kernel_evals)
    return RunRecord(
        final=state,
        times=np.array(times),
        observations=observations,
        kernel_eval_count=counter.kernel_evals,
        wall_clock=wall_clock,
    )


def run_coupled(cfg: SimulationConfig, initial: ParticleEnsemble | None = None) -> ErrorSeries:
    """Advance full and random-batch ensembles on the same noise path and record their gap."""
    if cfg.mode is not Mode.COUPLED:
        raise ValueError(f"run_coupled needs mode=coupled, got {cfg.mode.value}")
    full = _prepare(cfg, initial)
    rbm = full.copy()
    batch_rng = substream(cfg.seed, STREAM_BATCH)
    counter = CostCounter()
    noise = NoiseSchedule(cfg)
    spw = cfg.steps_per_window
    one_dim = cfg.dim == 1

    times, e1, e2, w1, dz, dx, dv = [], [], [], [], [], [], []
    gap = np.zeros_like(full.positions)

    logger.info(
        "Coupled run start: N=%d p=%d tau=%.3g kappa=%.3g T=%.3g seed=%d",
        cfg.n_particles, cfg.batch_size, cfg.fine_step, cfg.batch_step, cfg.horizon, cfg.seed,
    )
    t0 = time.perf_counter()
    for m in range(cfg.n_windows):
        partition = random_partition(cfg.n_particles, cfg.batch_size, batch_rng)
        for s in range(spw):
            block = noise.block(m * spw + s)
            full = _advance(full, cfg, block, None, counter)
            rbm = _advance(rbm, cfg, block, partition, counter)

        times.append((m + 1) * cfg.batch_step)
        e1.append(coupled_error_e1(full, rbm))
        if cfg.record_e2:
            e2.append(coupled_error_e2(full, rbm))
        if one_dim:
            w1.append(wasserstein_1d(full.positions, rbm.positions))
        new_gap = full.positions - rbm.positions
        dz.append(float(np.mean(np.sqrt(np.sum((new_gap - gap) ** 2, axis=1)))))
        gap = new_gap
        if cfg.second_order:
            dx_full, dv_full = flocking_diameters(full)
            dx_rbm, dv_rbm = flocking_diameters(rbm)
            dx.append((dx_full, dx_rbm))
            dv.append((dv_full, dv_rbm))
    wall_clock = time.perf_counter() - t0

    logger.info(
        "Coupled run finished in %.2fs: E1(T)=%.4g (%d kernel evaluations)",
        wall_clock, e1[-1], counter.kernel_evals,
    )
    return ErrorSeries(
        times=np.array(times),
        e1=np.array(e1),
        e2=np.array(e2) if cfg.record_e2 else None,
        w1=np.array(w1) if one_dim else None,
        dz=np.array(dz),
        dx=np.array(dx) if cfg.second_order else None,
        dv=np.array(dv) if cfg.second_order else None,
        kernel_eval_count=counter.kernel_evals,
        wall_clock=wall_clock,
        extra={"final_full": full, "final_rbm": rbm},
    )
