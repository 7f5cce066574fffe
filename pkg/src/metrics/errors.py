import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar, nnls
from scipy.spatial.distance import pdist

logger = logging.getLogger(__name__)


@dataclass
class ErrorSeries:
    """Coupled-run diagnostics sampled at every batch boundary t_m, m = 1..T/kappa.

    dx and dv, when present, have two columns: full dynamics, then random batch.
    """

    times: np.ndarray
    e1: np.ndarray
    e2: np.ndarray | None = None
    w1: np.ndarray | None = None
    dz: np.ndarray | None = None
    dx: np.ndarray | None = None
    dv: np.ndarray | None = None
    kernel_eval_count: int = 0
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        length = len(self.times)
        for name in ("e1", "e2", "w1", "dz", "dx", "dv"):
            values = getattr(self, name)
            if values is not None and len(values) != length:
                raise ValueError(f"ErrorSeries.{name} has {len(values)} entries, times has {length}")
        if np.any(np.asarray(self.e1) < 0.0):
            raise ValueError("coupled errors must be nonnegative")

    def at(self, t: float) -> int:
        """Index of the boundary closest to time t."""
        return int(np.argmin(np.abs(self.times - t)))


def _as_cloud(ensemble_or_array) -> np.ndarray:
    values = getattr(ensemble_or_array, "positions", ensemble_or_array)
    values = np.asarray(values, dtype=float)
    return values.reshape(-1, 1) if values.ndim == 1 else values


def _paired_distances(full, rbm) -> np.ndarray:
    a, b = _as_cloud(full), _as_cloud(rbm)
    if a.shape != b.shape:
        raise ValueError(f"ensembles differ in shape: {a.shape} vs {b.shape}")
    t_full, t_rbm = getattr(full, "t", None), getattr(rbm, "t", None)
    if t_full is not None and t_rbm is not None and not np.isclose(t_full, t_rbm):
        raise ValueError(f"ensembles are at different times: {t_full} vs {t_rbm}")
    return np.sqrt(np.sum((a - b) ** 2, axis=1))


def coupled_error_e1(full, rbm) -> float:
    """(1/N) sum_i |x_i^full - x_i^rbm|."""
    return float(np.mean(_paired_distances(full, rbm)))


def coupled_error_e2(full, rbm) -> float:
    """Root mean square of the per-particle coupled distances."""
    return float(np.sqrt(np.mean(_paired_distances(full, rbm) ** 2)))


def wasserstein_1d(samples_a, samples_b, order: int = 1) -> float:
    """W_p between two equal-size empirical measures on the line, by sorted pairing."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    a = np.sort(np.asarray(samples_a, dtype=float).ravel())
    b = np.sort(np.asarray(samples_b, dtype=float).ravel())
    if a.size != b.size:
        raise ValueError(f"sample sizes differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("wasserstein_1d needs at least one sample")
    gaps = np.abs(a - b)
    if order == 1:
        return float(np.mean(gaps))
    return float(np.sqrt(np.mean(gaps * gaps)))


def _diameter(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    if values.shape[1] == 1:
        return float(values.max() - values.min())
    return float(pdist(values).max())


def flocking_diameters(ensemble) -> tuple[float, float]:
    """(D_x, D_v): largest pairwise distance between positions and between velocities."""
    if ensemble.velocities is None:
        raise ValueError("flocking diameters need velocities")
    return _diameter(ensemble.positions), _diameter(ensemble.velocities)


def mean_abs_position(ensemble) -> float:
    """Empirical first moment (1/N) sum_i |x_i|."""
    return float(np.mean(np.sqrt(np.sum(ensemble.positions ** 2, axis=1))))


def fit_loglog_slope(xs, ys) -> tuple[float, float]:
    """Least-squares line through (log x, log y); returns (slope, intercept)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"need two equal-length 1-d arrays, got {xs.shape} and {ys.shape}")
    if xs.size < 2:
        raise ValueError("a slope needs at least two points")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("log-log fit needs strictly positive values")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(intercept)


def fit_power_with_offset(xs, ys, exponent_range: tuple[float, float] = (0.25, 4.0)) -> tuple[float, float, float]:
    """Fit y = c0 + c1 * x**e with c0, c1 >= 0 in relative least squares; returns (e, c0, c1).

    c0 absorbs a size-independent cost, so e is the growth exponent of the
    size-dependent part alone. For each trial e the coefficients come from
    non-negative least squares; e itself is picked on a grid and refined.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"need two equal-length 1-d arrays, got {xs.shape} and {ys.shape}")
    if xs.size < 3:
        raise ValueError("an offset power fit needs at least three points")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("power fit needs strictly positive values")
    lo, hi = exponent_range

    def solve(e: float) -> tuple[np.ndarray, float]:
        design = np.column_stack([np.ones_like(xs), xs ** e]) / ys[:, None]
        coef, residual = nnls(design, np.ones_like(ys))
        return coef, residual ** 2

    grid = np.linspace(lo, hi, 151)
    best = int(np.argmin([solve(e)[1] for e in grid]))
    left, right = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
    result = minimize_scalar(lambda e: solve(e)[1], bounds=(left, right), method="bounded",
                             options={"xatol": 1e-8})
    exponent = float(result.x) if result.fun <= solve(grid[best])[1] else float(grid[best])
    (c0, c1), _ = solve(exponent)
    return exponent, float(c0), float(c1)
