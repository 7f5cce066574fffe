import numpy as np

from src.batching.partition import BatchPartition
from src.forces.kernels import InteractionKernel, group_interaction_sums


def _check_partition(partition: BatchPartition, ensemble) -> None:
    if partition.n != ensemble.n:
        raise ValueError(f"partition covers {partition.n} particles, ensemble has {ensemble.n}")


def batch_mean_forces(partition: BatchPartition, ensemble, kernel: InteractionKernel,
                      normalization: float | None = None) -> np.ndarray:
    """Batch-restricted mean interaction on every particle, (1/(p-1)) over batch-mates by default."""
    _check_partition(partition, ensemble)
    members = partition.members
    vel = None if ensemble.velocities is None else ensemble.velocities[members]
    sums = group_interaction_sums(kernel, ensemble.positions[members], vel)
    norm = float(partition.p - 1) if normalization is None else normalization
    forces = np.empty_like(ensemble.positions)
    forces[members] = sums / norm
    return forces


def batch_mean_force(i: int, partition: BatchPartition, ensemble, kernel: InteractionKernel) -> np.ndarray:
    """(1/(p-1)) sum over batch-mates j != i of K(x_j - x_i)."""
    _check_partition(partition, ensemble)
    mates = partition.batch_of(i)
    mates = mates[mates != i]
    dx = ensemble.positions[mates] - ensemble.positions[i]
    dv = None
    if ensemble.velocities is not None:
        dv = ensemble.velocities[mates] - ensemble.velocities[i]
    return kernel.interaction(dx, dv).sum(axis=0) / (partition.p - 1)
