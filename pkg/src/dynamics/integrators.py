"""Forward Euler steps for the full, random-batch and Cucker-Smale dynamics.

Every step reads the pre-step state and writes fresh arrays, so the full and
random-batch ensembles of a coupled run never alias each other.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.batching.forces import batch_mean_forces
from src.batching.partition import BatchPartition
from src.dynamics.state import ParticleEnsemble, SimulationConfig
from src.forces.kernels import full_mean_forces
from src.noise.levy import NoiseIncrementBlock

logger = logging.getLogger(__name__)


@dataclass
class CostCounter:
    """Exact number of pairwise kernel evaluations (self-pairs excluded)."""

    kernel_evals: int = 0

    def add(self, n_particles: int, partners: int) -> None:
        self.kernel_evals += n_particles * partners


def _check_block(state: ParticleEnsemble, cfg: SimulationConfig, block: NoiseIncrementBlock) -> None:
    if not math.isclose(block.dt, cfg.fine_step, rel_tol=1e-12):
        raise ValueError(f"noise block covers dt={block.dt!r}, the fine step is {cfg.fine_step!r}")
    if block.increments.shape != state.positions.shape:
        raise ValueError(
            f"noise block has shape {block.increments.shape}, ensemble has {state.positions.shape}"
        )


def _first_order(state: ParticleEnsemble, cfg: SimulationConfig, forces: np.ndarray,
                 block: NoiseIncrementBlock) -> ParticleEnsemble:
    drift = forces - cfg.potential.gradient(state.positions)
    positions = state.positions + cfg.fine_step * drift + block.increments
    new = ParticleEnsemble(positions, None, t=state.t + cfg.fine_step, step=state.step + 1)
    new.check_finite()
    return new


def step_full(state: ParticleEnsemble, cfg: SimulationConfig, noise_block: NoiseIncrementBlock,
              counter: CostCounter | None = None) -> ParticleEnsemble:
    """x_i <- x_i + tau (-grad V(x_i) + (1/(N-1)) sum_{j != i} K(x_j - x_i)) + dL_i."""
    if cfg.second_order:
        raise ValueError(f"{cfg.kernel.describe()} acts on velocities; use step_cucker_smale")
    _check_block(state, cfg, noise_block)
    if counter is not None:
        counter.add(state.n, state.n - 1)
    return _first_order(state, cfg, full_mean_forces(state, cfg.kernel), noise_block)


def step_rbm(state: ParticleEnsemble, cfg: SimulationConfig, partition: BatchPartition,
             noise_block: NoiseIncrementBlock, counter: CostCounter | None = None) -> ParticleEnsemble:
    """Same as step_full with the interaction restricted to batch-mates, normalized by p - 1."""
    if cfg.second_order:
        raise ValueError(f"{cfg.kernel.describe()} acts on velocities; use step_cucker_smale")
    _check_block(state, cfg, noise_block)
    if counter is not None:
        counter.add(state.n, partition.p - 1)
    return _first_order(state, cfg, batch_mean_forces(partition, state, cfg.kernel), noise_block)


def step_cucker_smale(state: ParticleEnsemble, cfg: SimulationConfig, noise_block: NoiseIncrementBlock,
                      partition: BatchPartition | None = None,
                      counter: CostCounter | None = None) -> ParticleEnsemble:
    """One Euler step of the stochastic Cucker-Smale system.

    x_i <- x_i + tau v_i
    v_i <- v_i + tau theta A_i + (v_i - v_c) dL_i

    A_i is (1/N) sum_j Phi(|x_j - x_i|)(v_j - v_i) without a partition and the
    batch average over p - 1 mates with one. v_c is the pre-step mean velocity.
    """
    if state.velocities is None:
        raise ValueError("Cucker-Smale steps need velocities")
    if not cfg.second_order:
        raise ValueError(f"{cfg.kernel.describe()} does not act on velocities")
    _check_block(state, cfg, noise_block)
    x, v = state.positions, state.velocities
    if partition is None:
        alignment = full_mean_forces(state, cfg.kernel, normalization=float(state.n))
        partners = state.n - 1
    else:
        alignment = batch_mean_forces(partition, state, cfg.kernel)
        partners = partition.p - 1
    if counter is not None:
        counter.add(state.n, partners)

    # shifted mean: equal velocities give v - v_c == 0 exactly
    v_c = v[0] + np.mean(v - v[0], axis=0)
    velocities = v + cfg.fine_step * cfg.theta * alignment + (v - v_c) * noise_block.increments
    positions = x + cfg.fine_step * v
    new = ParticleEnsemble(positions, velocities, t=state.t + cfg.fine_step, step=state.step + 1)
    new.check_finite()
    return new
