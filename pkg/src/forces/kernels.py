import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class InteractionKernel(ABC):
    """Pairwise interaction term plus the regularity constants the error theory assumes.

    `interaction(dx, dv)` receives x_j - x_i (and v_j - v_i) on the trailing
    axis and returns the contribution of j to particle i.
    """

    name: str = "kernel"
    acts_on_velocity: bool = False

    @property
    @abstractmethod
    def bound(self) -> float:
        """M_K, a bound on |K|."""

    @property
    @abstractmethod
    def lipschitz(self) -> float:
        """L_K, a Lipschitz constant of K."""

    @abstractmethod
    def interaction(self, dx: np.ndarray, dv: np.ndarray | None = None) -> np.ndarray:
        ...

    @abstractmethod
    def describe(self) -> str:
        ...


@dataclass(frozen=True)
class ZeroKernel(InteractionKernel):
    name = "zero"

    @property
    def bound(self) -> float:
        return 0.0

    @property
    def lipschitz(self) -> float:
        return 0.0

    def interaction(self, dx, dv=None):
        return np.zeros_like(dx)

    def describe(self) -> str:
        return "zero"


@dataclass(frozen=True)
class SmoothBoundedKernel(InteractionKernel):
    """K(x) = x / (1 + |x|^2): odd, bounded by 1/2, 1-Lipschitz."""

    name = "smooth_bounded"

    @property
    def bound(self) -> float:
        return 0.5

    @property
    def lipschitz(self) -> float:
        return 1.0

    def interaction(self, dx, dv=None):
        return dx / (1.0 + np.sum(dx * dx, axis=-1, keepdims=True))

    def describe(self) -> str:
        return "smooth_bounded"


@dataclass(frozen=True)
class CuckerSmaleKernel(InteractionKernel):
    """Velocity alignment Phi(|x_j - x_i|) (v_j - v_i) with Phi(r) = (1 + r^2)^-beta."""

    beta: float = 5.0
    name = "cucker_smale"
    acts_on_velocity = True

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def bound(self) -> float:
        return 1.0

    @property
    def lipschitz(self) -> float:
        # max |Phi'(r)|, attained at r^2 = 1 / (2 beta + 1)
        r2 = 1.0 / (2.0 * self.beta + 1.0)
        return 2.0 * self.beta * math.sqrt(r2) * (1.0 + r2) ** (-self.beta - 1.0)

    def weight(self, r):
        return (1.0 + np.square(r)) ** (-self.beta)

    def interaction(self, dx, dv=None):
        if dv is None:
            raise ValueError("the Cucker-Smale kernel needs velocity differences")
        r = np.sqrt(np.sum(dx * dx, axis=-1, keepdims=True))
        return self.weight(r) * dv

    def describe(self) -> str:
        return f"cucker_smale:beta={self.beta!r}"


def group_interaction_sums(kernel: InteractionKernel, positions: np.ndarray,
                           velocities: np.ndarray | None = None) -> np.ndarray:
    """Sum of the pairwise terms inside each group, excluding self-pairs.

    positions has shape (groups, members, d); so does the result.
    """
    dx = positions[:, None, :, :] - positions[:, :, None, :]
    dv = None
    if velocities is not None:
        dv = velocities[:, None, :, :] - velocities[:, :, None, :]
    terms = kernel.interaction(dx, dv)
    diag = np.arange(positions.shape[1])
    terms[:, diag, diag] = 0.0
    return terms.sum(axis=2)


def full_mean_forces(ensemble, kernel: InteractionKernel, normalization: float | None = None) -> np.ndarray:
    """Mean interaction on every particle, (1/(N-1)) sum_{j != i} by default."""
    n = ensemble.n
    if n < 2:
        return np.zeros_like(ensemble.positions)
    norm = float(n - 1) if normalization is None else normalization
    vel = None if ensemble.velocities is None else ensemble.velocities[None]
    return group_interaction_sums(kernel, ensemble.positions[None], vel)[0] / norm


def full_mean_force(i: int, ensemble, kernel: InteractionKernel) -> np.ndarray:
    """(1/(N-1)) sum_{j != i} K(x_j - x_i) for a single particle."""
    n = ensemble.n
    if not 0 <= i < n:
        raise IndexError(f"particle index {i} out of range for N={n}")
    if n < 2:
        return np.zeros(ensemble.dim)
    others = np.arange(n) != i
    dx = ensemble.positions[others] - ensemble.positions[i]
    dv = None
    if ensemble.velocities is not None:
        dv = ensemble.velocities[others] - ensemble.velocities[i]
    return kernel.interaction(dx, dv).sum(axis=0) / (n - 1)


def check_contractivity(potential, kernel: InteractionKernel) -> bool:
    """Return whether lambda_V > 2 L_K, logging a warning when it fails."""
    margin = potential.convexity - 2.0 * kernel.lipschitz
    if kernel.lipschitz > 0.0 and margin <= 0.0:
        logger.warning(
            "lambda_V - 2 L_K = %.3g <= 0 for %s with %s; uniform-in-time bounds are not guaranteed",
            margin, potential.describe(), kernel.describe(),
        )
        return False
    return True


def parse_kernel(name: str) -> InteractionKernel:
    """Parse 'smooth_bounded', 'cucker_smale:beta=<r>' or 'zero'."""
    family, _, body = name.strip().partition(":")
    if family == "zero":
        return ZeroKernel()
    if family == "smooth_bounded":
        return SmoothBoundedKernel()
    if family == "cucker_smale":
        key, sep, value = body.partition("=")
        if not sep:
            return CuckerSmaleKernel()
        if key.strip() != "beta":
            raise ValueError(f"expected 'cucker_smale:beta=<r>', got '{name}'")
        return CuckerSmaleKernel(beta=float(value))
    raise ValueError(f"Unknown kernel '{name}'")
