"""Bound estimation: monotone repair, slope regression, projected upper bounds.

All functions here are stateless; the scheduler owns per-learner state and
feeds in the (already repaired) history window.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import DegenerateInputError

__all__ = [
    "monotone_repair",
    "regression_slope",
    "projected_bound",
    "combined_bound",
    "clamp_nonincreasing",
    "ideal_derivative",
]

BOUND_SENTINEL = math.inf  # "no bound emitted yet"


def monotone_repair(prev_val_acc: float, cur_val_acc: float) -> tuple[float, float]:
    """Repair a monotonicity glitch between two consecutive validation accuracies.

    If the newer value dropped below the older one, both are replaced by
    their mean; otherwise they pass through unchanged. The output pair is
    always non-decreasing and preserves the sum of the inputs.
    """
    if cur_val_acc >= prev_val_acc:
        return prev_val_acc, cur_val_acc
    mid = 0.5 * (prev_val_acc + cur_val_acc)
    return mid, mid


def regression_slope(points: Sequence[tuple[int, float]]) -> float:
    """Ordinary least-squares slope through the given (n, accuracy) points.

    Exact for collinear inputs. Abscissae must be strictly increasing.
    """
    if len(points) < 2:
        raise DegenerateInputError("slope regression needs at least two points")
    xs = [float(n) for n, _ in points]
    ys = [float(v) for _, v in points]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise DegenerateInputError(f"abscissae must be strictly increasing, got {xs}")
    x_mean = sum(xs) / len(xs)
    y_mean = sum(ys) / len(ys)
    sxx = sum((x - x_mean) ** 2 for x in xs)
    sxy = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    return sxy / sxx


def projected_bound(val_acc_at_n: float, slope: float, n: int, N: int) -> float:
    """Linear projection of the validation accuracy out to the full-train size.

    Deliberately not clamped to [0, 1]: the combination with the training
    accuracy caps it, and clamping here would hide slope pathologies.
    """
    if not (0 <= n <= N):
        raise ValueError(f"need 0 <= n <= N, got n={n}, N={N}")
    return val_acc_at_n + (N - n) * slope


def combined_bound(train_acc_at_n: float, projected: float) -> float:
    """The operative upper bound: min of training accuracy and projection."""
    return min(train_acc_at_n, projected)


def clamp_nonincreasing(previous_bound: float, new_bound: float) -> float:
    """Force the per-learner bound stream to be non-increasing over time.

    Pass ``BOUND_SENTINEL`` (+inf) as the previous bound for the first value.
    """
    return min(previous_bound, new_bound)


def ideal_derivative(f: Callable[[int], float], n: int, s: int) -> float:
    """One-sided discrete derivative (f(n) - f(n-s)) / s; exact mode only."""
    if s < 1:
        raise ValueError(f"step s must be a positive integer, got {s}")
    if n - s < 1:
        raise ValueError(f"derivative needs n - s >= 1, got n={n}, s={s}")
    return (f(n) - f(n - s)) / s
