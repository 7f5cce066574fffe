import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from src.dynamics.state import Mode, SimulationConfig
from src.forces.potentials import ConfiningPotential
from src.utils.config import ConfigError

logger = logging.getLogger(__name__)

# (sigma, lambda) pairs of the four noise settings of the flocking study
DEFAULT_SCENARIOS = ((1.0, 0.1), (1.0, 0.0), (0.0, 0.1), (0.0, 0.0))


class ExperimentKind(str, Enum):
    RATE_SWEEP = "rate_sweep"
    LONG_TIME = "long_time"
    COST_BENCH = "cost_bench"
    CUCKER_SMALE = "cucker_smale"
    MOMENT_BOUND = "moment_bound"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    base: SimulationConfig
    kappa_values: tuple[float, ...]
    n_values: tuple[int, ...]
    horizon_values: tuple[float, ...]
    potential_values: tuple[ConfiningPotential, ...]
    scenarios: tuple[tuple[float, float], ...] = DEFAULT_SCENARIOS
    n_seeds: int = 20
    output: Path | None = None
    emit_format: str = "csv"
    flocking_threshold: float = 0.05
    include_timing: bool = True
    timing_repeats: int = 3

    @property
    def seeds(self) -> range:
        return range(self.base.seed, self.base.seed + self.n_seeds)

    def validate(self) -> None:
        """Check sweep lists against the base config grid; raise ConfigError on failure."""
        for name in ("kappa_values", "n_values", "horizon_values", "potential_values", "scenarios"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if self.n_seeds < 1:
            raise ConfigError(f"n_seeds must be positive, got {self.n_seeds}")
        if self.timing_repeats < 1:
            raise ConfigError(f"timing_repeats must be positive, got {self.timing_repeats}")
        if self.emit_format not in ("csv", "json"):
            raise ConfigError(f"output_format must be csv or json, got '{self.emit_format}'")
        if not 0.0 < self.flocking_threshold < 1.0:
            raise ConfigError(f"flocking_threshold must lie in (0, 1), got {self.flocking_threshold}")

        # coupled validation covers the batch-size checks every kind relies on
        for kappa in self.kappa_values:
            for n in self.n_values:
                for horizon in self.horizon_values:
                    candidate = replace(self.base, batch_step=kappa, n_particles=n,
                                        horizon=horizon, mode=Mode.COUPLED)
                    try:
                        candidate.validate()
                    except ValueError as e:
                        raise ConfigError(f"kappa={kappa!r}, N={n}, T={horizon!r}: {e}") from e
