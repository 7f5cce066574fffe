"""Sampler health check for levy-rbm.

Draws large samples from every noise and initial-state sampler and compares
them with their closed-form laws.

Usage:
  python -m scripts.check_samplers [--samples 1000000] [--seed 0]
"""

from __future__ import annotations

import argparse
import sys

_DEPS_AVAILABLE = True
try:
    import numpy as np
    from scipy import stats

    from src.initial_states.laws import (
        MetropolisSettings,
        Semicircle,
        sample_initial,
        sample_semicircle_exact,
        semicircle_cdf,
    )
    from src.noise.levy import (
        AlphaStable,
        LevyNoiseSpec,
        empirical_char_function,
        sample_alpha_stable_increment,
        sample_compound_poisson_increment,
    )
    from src.utils.rng import STREAM_INITIAL, STREAM_NOISE, substream
except ImportError:
    _DEPS_AVAILABLE = False

_CHAR_TOL = 0.01
_VARIANCE_TOL = 0.02
_KS_TOL = 0.01


def check_alpha_stable(n: int, seed: int) -> bool:
    spec = LevyNoiseSpec(jump_part=AlphaStable(alpha=1.5))
    samples = sample_alpha_stable_increment(1.5, 1.0, substream(seed, STREAM_NOISE), size=n)
    ok = True
    for u in (0.25, 0.5, 1.0, 2.0):
        gap = abs(empirical_char_function(samples, u) - spec.characteristic_function(u))
        verdict = "OK" if gap <= _CHAR_TOL else "FAILED"
        print(f"  u={u:<4}  |phi_hat - exp(-|u|^1.5)| = {gap:.4f}  {verdict}")
        ok &= gap <= _CHAR_TOL
    return ok


def check_compound_poisson(n: int, seed: int) -> bool:
    rate, sdev, dt = 2.0, 1.0, 1.0
    samples = sample_compound_poisson_increment(rate, sdev, dt, substream(seed, STREAM_NOISE, 1), size=n)
    expected = rate * dt * sdev ** 2
    rel = abs(np.var(samples) - expected) / expected
    print(f"  variance {np.var(samples):.4f} vs lambda t E[J^2] = {expected:.4f} (rel. error {rel:.4f})")
    return rel <= _VARIANCE_TOL


def check_semicircle(n: int, seed: int) -> bool:
    cdf = np.vectorize(semicircle_cdf)
    ok = True
    draws = {
        "metropolis-hastings": sample_initial(Semicircle(2.0), n, substream(seed, STREAM_INITIAL),
                                              MetropolisSettings()),
        "inverse cdf": sample_semicircle_exact(n, substream(seed, STREAM_INITIAL, 1)),
    }
    for name, samples in draws.items():
        ks = stats.kstest(samples, cdf).statistic
        verdict = "OK" if ks < _KS_TOL else "FAILED"
        print(f"  {name:<20} KS = {ks:.4f}  {verdict}")
        ok &= ks < _KS_TOL
    return ok


def main():
    if not _DEPS_AVAILABLE:
        print("Missing dependencies. Install with: pip install -r requirements.txt")
        sys.exit(1)

    parser = argparse.ArgumentParser(description="levy-rbm sampler health check")
    parser.add_argument("--samples", type=int, default=1_000_000, help="Noise samples per check")
    parser.add_argument("--seed", type=int, default=0, help="Base seed")
    args = parser.parse_args()

    failed = []

    # Step 1: alpha-stable characteristic function
    print(f"Checking alpha-stable increments ({args.samples} samples)...")
    if not check_alpha_stable(args.samples, args.seed):
        failed.append("alpha-stable")

    # Step 2: compound Poisson second moment
    print(f"Checking compound Poisson increments ({args.samples} samples)...")
    if not check_compound_poisson(args.samples, args.seed):
        failed.append("compound Poisson")

    # Step 3: semicircle initial law
    n_initial = max(args.samples // 10, 1)
    print(f"Checking semicircle samplers ({n_initial} samples)...")
    if not check_semicircle(n_initial, args.seed):
        failed.append("semicircle")

    print()
    if failed:
        print(f"ERROR: sampler check failed for: {', '.join(failed)}")
        sys.exit(1)
    print("All samplers look good.")
    print("Run an experiment with: python -m src.main rate-sweep --config config/experiments/rate_sweep.yaml")


if __name__ == "__main__":
    main()
