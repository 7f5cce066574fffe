import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.forces.kernels import InteractionKernel
from src.forces.potentials import ConfiningPotential
from src.initial_states.laws import InitialLaw, MetropolisSettings, Semicircle
from src.noise.levy import LevyNoiseSpec

logger = logging.getLogger(__name__)

_GRID_TOL = 1e-9


class NonFiniteStateError(FloatingPointError):
    """Raised when an integrator produces NaN or Inf."""

    def __init__(self, step: int, particle: int, component: str = "positions"):
        self.step = step
        self.particle = particle
        self.component = component
        super().__init__(
            f"non-finite {component} at step {step}, particle {particle}; "
            "the fine step is probably too large for the noise"
        )


class Mode(str, Enum):
    FULL = "full"
    RBM = "rbm"
    COUPLED = "coupled"


@dataclass
class ParticleEnsemble:
    """Particle positions (N x d), optional velocities, and the time they hold at."""

    positions: np.ndarray
    velocities: np.ndarray | None = None
    t: float = 0.0
    step: int = 0

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        # bare vectors are 1-d particle clouds
        self.positions = positions.reshape(-1, 1) if positions.ndim == 1 else positions
        if self.positions.ndim != 2:
            raise ValueError(f"positions must be an N x d array, got shape {positions.shape}")
        if self.velocities is not None:
            self.velocities = np.asarray(self.velocities, dtype=float).reshape(self.positions.shape)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def second_order(self) -> bool:
        return self.velocities is not None

    def copy(self) -> "ParticleEnsemble":
        vel = None if self.velocities is None else self.velocities.copy()
        return ParticleEnsemble(self.positions.copy(), vel, self.t, self.step)

    def check_finite(self) -> None:
        for component in ("positions", "velocities"):
            values = getattr(self, component)
            if values is None:
                continue
            bad = ~np.isfinite(values).all(axis=1)
            if bad.any():
                raise NonFiniteStateError(self.step, int(np.argmax(bad)), component)


def _multiple_of(big: float, small: float) -> int | None:
    ratio = big / small
    count = round(ratio)
    if count < 1 or abs(ratio - count) > _GRID_TOL * max(1.0, ratio):
        return None
    return count


@dataclass(frozen=True)
class SimulationConfig:
    n_particles: int
    batch_size: int
    fine_step: float
    batch_step: float
    horizon: float
    potential: ConfiningPotential
    kernel: InteractionKernel
    noise: LevyNoiseSpec
    seed: int = 0
    mode: Mode = Mode.RBM
    dim: int = 1
    initial_law: InitialLaw = field(default_factory=lambda: Semicircle(2.0))
    velocity_law: InitialLaw | None = None
    theta: float = 1.0
    mh: MetropolisSettings = field(default_factory=MetropolisSettings)
    record_e2: bool = True

    @property
    def second_order(self) -> bool:
        return self.kernel.acts_on_velocity

    @property
    def steps_per_window(self) -> int:
        return _multiple_of(self.batch_step, self.fine_step)

    @property
    def n_windows(self) -> int:
        return _multiple_of(self.horizon, self.batch_step)

    @property
    def n_steps(self) -> int:
        return self.steps_per_window * self.n_windows

    def validate(self) -> None:
        """Check the grid and batching invariants; raise ValueError on the first violation."""
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be positive, got {self.n_particles}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        for name in ("fine_step", "batch_step", "horizon"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.steps_per_window is None:
            raise ValueError(
                f"batch_step={self.batch_step!r} is not an integer multiple of fine_step={self.fine_step!r}"
            )
        if self.n_windows is None:
            raise ValueError(
                f"horizon={self.horizon!r} is not an integer multiple of batch_step={self.batch_step!r}"
            )
        if self.mode is not Mode.FULL:
            if self.batch_size < 2 or self.batch_size > self.n_particles:
                raise ValueError(f"batch_size must satisfy 2 <= p <= N, got p={self.batch_size}")
            if self.n_particles % self.batch_size:
                raise ValueError(f"batch_size={self.batch_size} does not divide n_particles={self.n_particles}")
        if self.second_order and self.velocity_law is None:
            raise ValueError("a velocity kernel needs a velocity_law for the initial velocities")
