"""Randomized pool generators shared by the property and acceptance suites."""

from __future__ import annotations

import math

import numpy as np

from daub import DaubConfig, IdealProblem, SyntheticCurveSpec


def random_exact_problem(rng: np.random.Generator) -> IdealProblem:
    """Random noiseless pool whose thresholds sit past the bootstrap region.

    Asymptotes are kept within a narrow band so no learner's bound can fall
    below the pool's target accuracy while it is still being bootstrapped
    (bootstrap allocations are made before any bound exists, so the
    allocation bounds only hold when thresholds exceed the bootstrap sizes).
    """
    M = int(rng.integers(2, 42))
    r = float(rng.choice([1.5, 2.0]))
    b = int(rng.integers(4, 17))
    # N drawn from the geometric grid itself: the selected-cost bound
    # assumes the final step is a full ratio-r step, which a cap at an
    # off-grid N would truncate
    target = int(rng.integers(5_000, 40_001))
    N = b
    while N < target:
        N = math.ceil(r * N)
    specs = {}
    for i in range(M):
        family = rng.choice(["inverse", "power_law"])
        specs[f"L{i:02d}"] = SyntheticCurveSpec(
            family=str(family),
            a=float(rng.uniform(0.88, 0.95)),
            c=float(rng.uniform(5.0, 50.0)),
            alpha=float(rng.uniform(0.5, 1.0)) if family == "power_law" else 1.0,
            overfit_m0=1.0,
        )
    config = DaubConfig(r=r, b=b, N=N, delta=0.01)
    return IdealProblem(specs, config)


def desk_scale_pool(rng: np.random.Generator, *, noise_sigma: float = 0.0) -> dict:
    """41-learner inverse-family pool for the large-scale selection runs.

    Scales are capped so every suboptimal learner's derivative has fallen to
    delta/N well before the final schedule step.
    """
    specs = {}
    for i in range(41):
        specs[f"L{i:02d}"] = SyntheticCurveSpec(
            family="inverse",
            a=float(rng.uniform(0.60, 0.95)),
            c=float(rng.uniform(5.0, 100.0)),
            noise_sigma=noise_sigma,
        )
    return specs
