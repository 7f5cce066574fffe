import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlphaStable:
    """Rotationally invariant alpha-stable jumps with symbol -scale^alpha |u|^alpha."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.scale <= 0.0:
            raise ValueError(f"stable scale must be positive, got {self.scale}")
        if self.alpha <= 1.0:
            logger.warning(
                "alpha=%.3f is at or below 1; convergence guarantees only cover alpha in (1, 2)",
                self.alpha,
            )


@dataclass(frozen=True)
class CompoundPoisson:
    """Jumps at Poisson rate `rate_lambda` with Normal(0, jump_sdev^2) sizes."""

    rate_lambda: float
    jump_sdev: float = 1.0

    def __post_init__(self):
        if self.rate_lambda < 0.0:
            raise ValueError(f"rate_lambda must be nonnegative, got {self.rate_lambda}")
        if self.jump_sdev <= 0.0:
            raise ValueError(f"jump_sdev must be positive, got {self.jump_sdev}")


JumpPart = AlphaStable | CompoundPoisson | None


@dataclass(frozen=True)
class LevyNoiseSpec:
    """Levy triplet: drift b, Brownian sigma and one optional jump family."""

    drift_b: float = 0.0
    gaussian_sigma: float = 0.0
    jump_part: JumpPart = None

    def __post_init__(self):
        if self.gaussian_sigma < 0.0:
            raise ValueError(f"gaussian_sigma must be nonnegative, got {self.gaussian_sigma}")

    @property
    def is_degenerate(self) -> bool:
        jumps = self.jump_part
        no_jumps = jumps is None or (isinstance(jumps, CompoundPoisson) and jumps.rate_lambda == 0.0)
        return self.drift_b == 0.0 and self.gaussian_sigma == 0.0 and no_jumps

    def characteristic_function(self, u: float, t: float = 1.0) -> complex:
        """Closed-form E[exp(i u L(t))] of one coordinate."""
        exponent = 1j * u * self.drift_b - 0.5 * self.gaussian_sigma ** 2 * u ** 2
        jumps = self.jump_part
        if isinstance(jumps, AlphaStable):
            exponent -= (jumps.scale * abs(u)) ** jumps.alpha
        elif isinstance(jumps, CompoundPoisson):
            exponent += jumps.rate_lambda * (math.exp(-0.5 * (jumps.jump_sdev * u) ** 2) - 1.0)
        return complex(np.exp(t * exponent))


@dataclass
class NoiseIncrementBlock:
    """Increments L^i(t + dt) - L^i(t), one row per particle."""

    increments: np.ndarray
    dt: float


def _check_dt(dt: float) -> None:
    if dt < 0.0 or not math.isfinite(dt):
        raise ValueError(f"time step must be finite and nonnegative, got {dt}")


def sample_alpha_stable_increment(alpha: float, dt: float, rng: np.random.Generator,
                                  size=None):
    """Draw dt^(1/alpha) * S with S standard symmetric stable, E exp(iuS) = exp(-|u|^alpha).

    Chambers-Mallows-Stuck with beta = 0: a uniform angle on (-pi/2, pi/2) and
    a unit exponential. alpha = 2 is the Gaussian member, Normal(0, 2).
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    _check_dt(dt)
    phi = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=size)
    w = rng.standard_exponential(size=size)
    unit = (
        np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
    )
    sample = dt ** (1.0 / alpha) * unit
    return float(sample) if size is None else sample


def sample_compound_poisson_increment(rate_lambda: float, jump_sdev: float, dt: float,
                                      rng: np.random.Generator, size=None):
    """Sum of M ~ Poisson(rate_lambda * dt) independent Normal(0, jump_sdev^2) jumps.

    Given M, the sum is Normal(0, M * jump_sdev^2), which is drawn directly.
    """
    if rate_lambda < 0.0:
        raise ValueError(f"rate_lambda must be nonnegative, got {rate_lambda}")
    if jump_sdev <= 0.0:
        raise ValueError(f"jump_sdev must be positive, got {jump_sdev}")
    _check_dt(dt)
    if rate_lambda == 0.0:
        return 0.0 if size is None else np.zeros(size)
    counts = rng.poisson(rate_lambda * dt, size=size)
    sample = jump_sdev * np.sqrt(counts) * rng.standard_normal(size=size)
    return float(sample) if size is None else sample


def sample_increments(spec: LevyNoiseSpec, shape: tuple[int, ...], dt: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Increments of the triplet over dt for an array of independent coordinates.

    The last axis holds the coordinates of one particle.
    """
    _check_dt(dt)
    increments = np.full(shape, spec.drift_b * dt)
    if spec.gaussian_sigma > 0.0:
        increments += spec.gaussian_sigma * math.sqrt(dt) * rng.standard_normal(shape)

    jumps = spec.jump_part
    if isinstance(jumps, AlphaStable):
        if shape[-1] != 1:
            raise ValueError(f"alpha-stable jumps are only supported in dimension 1, got dim={shape[-1]}")
        increments += jumps.scale * sample_alpha_stable_increment(jumps.alpha, dt, rng, size=shape)
    elif isinstance(jumps, CompoundPoisson) and jumps.rate_lambda > 0.0:
        increments += sample_compound_poisson_increment(
            jumps.rate_lambda, jumps.jump_sdev, dt, rng, size=shape,
        )
    return increments


def sample_increment_block(spec: LevyNoiseSpec, n_particles: int, dim: int, dt: float,
                           rng: np.random.Generator) -> NoiseIncrementBlock:
    """Assemble drift, Brownian and jump parts for every particle and coordinate."""
    if n_particles < 1:
        raise ValueError(f"n_particles must be at least 1, got {n_particles}")
    if dim < 1:
        raise ValueError(f"dim must be at least 1, got {dim}")
    return NoiseIncrementBlock(increments=sample_increments(spec, (n_particles, dim), dt, rng), dt=dt)


def empirical_char_function(samples, u: float) -> complex:
    """Return (1/n) sum_k exp(i u x_k)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("empirical characteristic function needs at least one sample")
    return complex(np.mean(np.cos(u * samples)), np.mean(np.sin(u * samples)))


def _parse_params(body: str) -> dict[str, float]:
    params = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got '{item}'")
        params[key.strip()] = float(value)
    return params


def parse_jump_part(name: str) -> JumpPart:
    """Parse 'none', 'alpha_stable:alpha=1.5,scale=1' or 'compound_poisson:rate=0.1,sdev=1'."""
    family, _, body = name.strip().partition(":")
    params = _parse_params(body)
    if family == "none":
        return None
    if family == "alpha_stable":
        return AlphaStable(alpha=params["alpha"], scale=params.get("scale", 1.0))
    if family == "compound_poisson":
        rate = params["rate"]
        if rate == 0.0:
            return None
        return CompoundPoisson(rate_lambda=rate, jump_sdev=params.get("sdev", 1.0))
    raise ValueError(f"Unknown jump family '{family}'")
