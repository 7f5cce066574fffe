import logging
import math
import threading
from dataclasses import dataclass

import numpy as np
from cachetools import LRUCache, cached
from scipy import integrate

logger = logging.getLogger(__name__)

_TABLE_POINTS = 1 << 14
_table_lock = threading.Lock()


@dataclass(frozen=True)
class MetropolisSettings:
    """Random-walk Metropolis-Hastings tuning for the semicircle law."""

    step: float = 0.5
    burn_in: int = 1000
    thinning: int = 10

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError(f"proposal step must be positive, got {self.step}")
        if self.burn_in < 0 or self.thinning < 1:
            raise ValueError(f"need burn_in >= 0 and thinning >= 1, got {self.burn_in}, {self.thinning}")


@dataclass(frozen=True)
class Semicircle:
    """Density sqrt(radius^2 - x^2) * 2 / (pi radius^2) on [-radius, radius]."""

    radius: float = 2.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def describe(self) -> str:
        return f"semicircle:r={self.radius!r}"


@dataclass(frozen=True)
class ScaledSemicircle:
    """Law with density proportional to rho0(scale * x), rho0 the radius-2 semicircle."""

    scale: float

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def describe(self) -> str:
        return f"semicircle_scaled:s={self.scale!r}"


@dataclass(frozen=True)
class PointMass:
    x: float = 0.0

    def describe(self) -> str:
        return f"point:x={self.x!r}"


@dataclass(frozen=True)
class UniformBox:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"uniform law needs lo < hi, got {self.lo}, {self.hi}")

    def describe(self) -> str:
        return f"uniform:{self.lo!r},{self.hi!r}"


InitialLaw = Semicircle | ScaledSemicircle | PointMass | UniformBox


def semicircle_density(x, radius: float = 2.0):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= radius
    root = np.sqrt(np.clip(radius * radius - x * x, 0.0, None))
    return np.where(inside, root * 2.0 / (math.pi * radius * radius), 0.0)


def semicircle_cdf(x: float, radius: float = 2.0) -> float:
    """CDF by adaptive quadrature of the density."""
    if x <= -radius:
        return 0.0
    if x >= radius:
        return 1.0
    value, _ = integrate.quad(lambda s: float(semicircle_density(s, radius)), -radius, x)
    return value


@cached(cache=LRUCache(maxsize=16), lock=_table_lock)
def _inverse_cdf_table(radius: float, points: int = _TABLE_POINTS) -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(-radius, radius, points)
    cdf = integrate.cumulative_trapezoid(semicircle_density(grid, radius), grid, initial=0.0)
    cdf /= cdf[-1]
    grid.setflags(write=False)
    cdf.setflags(write=False)
    logger.debug("Built semicircle quadrature table (radius=%.3g, points=%d)", radius, points)
    return grid, cdf


def sample_semicircle_exact(n: int, rng: np.random.Generator, radius: float = 2.0) -> np.ndarray:
    """Inverse-CDF sampling through a cached quadrature table."""
    grid, cdf = _inverse_cdf_table(float(radius))
    return np.interp(rng.uniform(size=n), cdf, grid)


def _metropolis_semicircle(n: int, radius: float, rng: np.random.Generator,
                           settings: MetropolisSettings) -> np.ndarray:
    total = settings.burn_in + n * settings.thinning
    steps = (settings.step * rng.standard_normal(total)).tolist()
    log_u = np.log(rng.uniform(size=total)).tolist()
    r2 = radius * radius
    x, log_p = 0.0, 0.5 * math.log(r2)
    out = np.empty(n)
    kept = 0
    for k in range(total):
        y = x + steps[k]
        if abs(y) < radius:
            log_q = 0.5 * math.log(r2 - y * y)
            if log_u[k] < log_q - log_p:
                x, log_p = y, log_q
        if k >= settings.burn_in and (k - settings.burn_in) % settings.thinning == settings.thinning - 1:
            out[kept] = x
            kept += 1
    return out


def sample_initial(law: InitialLaw, n: int, rng: np.random.Generator,
                   mh: MetropolisSettings | None = None) -> np.ndarray:
    """Draw n initial coordinates; semicircle laws go through one Metropolis-Hastings chain."""
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    mh = mh or MetropolisSettings()
    if isinstance(law, Semicircle):
        return _metropolis_semicircle(n, law.radius, rng, mh)
    if isinstance(law, ScaledSemicircle):
        return _metropolis_semicircle(n, 2.0, rng, mh) / law.scale
    if isinstance(law, PointMass):
        return np.full(n, float(law.x))
    if isinstance(law, UniformBox):
        return rng.uniform(law.lo, law.hi, size=n)
    raise TypeError(f"Unsupported initial law {law!r}")


def parse_initial_law(name: str) -> InitialLaw:
    """Parse 'semicircle:r=2', 'semicircle_scaled:s=0.1', 'point:x=<r>' or 'uniform:lo,hi'."""
    family, _, body = name.strip().partition(":")
    key, sep, value = body.partition("=")
    if family == "semicircle":
        return Semicircle(float(value) if sep else 2.0)
    if family == "semicircle_scaled" and key.strip() == "s":
        return ScaledSemicircle(float(value))
    if family == "point":
        return PointMass(float(value) if sep else 0.0)
    if family == "uniform":
        lo, _, hi = body.partition(",")
        return UniformBox(float(lo), float(hi))
    raise ValueError(f"Unknown initial law '{name}'")
