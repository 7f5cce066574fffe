import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadraticPotential:
    """V(x) = a |x|^2 / 2, so grad V(x) = a x."""

    a: float = 0.0
    name: str = "quadratic"

    def __post_init__(self):
        if self.a < 0.0:
            raise ValueError(f"confinement strength a must be nonnegative, got {self.a}")

    @property
    def convexity(self) -> float:
        """lambda_V, the strong-convexity modulus."""
        return self.a

    @property
    def lipschitz(self) -> float:
        """L_V, the Lipschitz constant of grad V."""
        return self.a

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.a * np.asarray(x, dtype=float)

    def describe(self) -> str:
        return f"quadratic:a={self.a!r}" if self.a else "none"


ConfiningPotential = QuadraticPotential


def grad_potential(pot: ConfiningPotential, x) -> np.ndarray:
    return pot.gradient(x)


def parse_potential(name: str) -> ConfiningPotential:
    """Parse 'none' or 'quadratic:a=<r>'."""
    family, _, body = name.strip().partition(":")
    if family == "none":
        return QuadraticPotential(0.0)
    if family == "quadratic":
        key, sep, value = body.partition("=")
        if key.strip() != "a" or not sep:
            raise ValueError(f"expected 'quadratic:a=<r>', got '{name}'")
        return QuadraticPotential(float(value))
    raise ValueError(f"Unknown potential '{name}'")
