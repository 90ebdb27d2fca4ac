"""Domain types and cost/regret accounting for cost-sensitive data allocation.

The objects here are plain values: an allocation run produces an
:class:`AllocationSequence` and a :class:`RunReport`, and everything else
(regret, suboptimality, solution validation) is a pure function of those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping

from .errors import ConfigError, IncompleteCostError

__all__ = [
    "DaubConfig",
    "CurveSample",
    "LearnerState",
    "AllocationSequence",
    "RunReport",
    "TraceRecord",
    "ValidationVerdict",
    "cost_of_sequence",
    "classify_suboptimal",
    "regret",
    "validate_solution",
]


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class DaubConfig:
    """Run parameters: geometric ratio, base size, full-train size, gap.

    ``s`` is the derivative step used only in exact (idealized) mode.
    ``d_factor`` is the cost-overhead constant r/(r-1) that the allocation
    loop actually achieves; it is derived, not user-supplied.
    """

    r: float
    b: int
    N: int
    delta: float = 0.01
    s: int = 1

    def __post_init__(self) -> None:
        _check_finite("r", self.r)
        if self.r <= 1:
            raise ConfigError(f"ratio r must exceed 1, got {self.r}")
        if self.b < 1:
            raise ConfigError(f"base size b must be a positive integer, got {self.b}")
        if self.N < 1:
            raise ConfigError(f"full-train size N must be a positive integer, got {self.N}")
        if self.b * self.r * self.r > self.N:
            raise ConfigError(
                f"parameter constraint b*r^2 <= N violated: "
                f"{self.b}*{self.r}^2 = {self.b * self.r * self.r} > {self.N}"
            )
        if not (0 < self.delta <= 1):
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")
        if self.s < 1:
            raise ConfigError(f"derivative step s must be a positive integer, got {self.s}")

    @property
    def d_factor(self) -> float:
        return self.r / (self.r - 1.0)


@dataclass(frozen=True)
class CurveSample:
    """One training evaluation: (n, training accuracy, validation accuracy, cost)."""

    n: int
    train_acc: float
    val_acc: float
    cost: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"sample size n must be positive, got {self.n}")
        for name, v in (("train_acc", self.train_acc), ("val_acc", self.val_acc)):
            _check_finite(name, v)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        _check_finite("cost", self.cost)
        if self.cost < 0:
            raise ValueError(f"cost must be nonnegative, got {self.cost}")

    @property
    def error(self) -> float:
        return 1.0 - self.val_acc

    def with_val_acc(self, val_acc: float) -> "CurveSample":
        return replace(self, val_acc=val_acc)


@dataclass
class LearnerState:
    """Per-learner history of (repaired) samples, current allocation and bound."""

    id: str
    history: dict[int, CurveSample] = field(default_factory=dict)
    n_current: int = 0
    u_current: float = math.inf  # sentinel until the first bound is computed
    active: bool = True

    def record(self, sample: CurveSample) -> None:
        if self.history and sample.n <= self.n_current:
            raise ValueError(
                f"history sizes must be strictly increasing: {sample.n} after {self.n_current}"
            )
        self.history[sample.n] = sample
        self.n_current = sample.n

    def last_samples(self, k: int) -> list[CurveSample]:
        return list(self.history.values())[-k:]


class AllocationSequence:
    """Ordered (learner, n) allocation pairs with per-learner views."""

    def __init__(self, entries: Iterable[tuple[str, int]] = ()) -> None:
        self._entries: list[tuple[str, int]] = []
        self._last_n: dict[str, int] = {}
        for learner, n in entries:
            self.append(learner, n)

    def append(self, learner: str, n: int) -> None:
        if n < 1:
            raise ValueError(f"allocation size must be positive, got {n}")
        last = self._last_n.get(learner)
        if last is not None and n <= last:
            raise ValueError(
                f"per-learner allocations must strictly increase: "
                f"({learner}, {n}) after ({learner}, {last})"
            )
        self._entries.append((learner, n))
        self._last_n[learner] = n

    @property
    def entries(self) -> tuple[tuple[str, int], ...]:
        return tuple(self._entries)

    def induced(self, learner: str) -> tuple[int, ...]:
        return tuple(n for i, n in self._entries if i == learner)

    def learners(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for i, _ in self._entries:
            seen.setdefault(i)
        return tuple(seen)

    def total_allocated(self, learner: str) -> int:
        return sum(self.induced(learner))

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self._entries)

    def __contains__(self, pair: tuple[str, int]) -> bool:
        return pair in self._entries

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AllocationSequence) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"AllocationSequence({self._entries!r})"


@dataclass(frozen=True)
class TraceRecord:
    """One trace line: what was trained and what the estimator saw."""

    iter: int
    learner: str
    n: int
    train_acc: float
    val_acc: float
    bound: float
    cost: float


@dataclass
class RunReport:
    """Outcome of an allocation run."""

    selected: str
    sequence: AllocationSequence
    records: list[TraceRecord]
    per_learner_cost: dict[str, float]
    total_cost: float
    selected_cost: float
    failures: dict[str, str] = field(default_factory=dict)
    regret: float | None = None
    loss: float | None = None

    def final_accuracy(self, learner: str | None = None) -> float:
        """Validation accuracy at the largest n recorded for ``learner``."""
        learner = learner if learner is not None else self.selected
        best = None
        for rec in self.records:
            if rec.learner == learner and (best is None or rec.n > best.n):
                best = rec
        if best is None:
            raise KeyError(learner)
        return best.val_acc


# ---------------------------------------------------------------------------
# Accounting operations


CostFn = Callable[[str, int], float]


def cost_of_sequence(
    seq: AllocationSequence, costs: CostFn | Mapping[tuple[str, int], float]
) -> tuple[float, dict[str, float]]:
    """Total cost of a sequence and the per-learner subtotals.

    ``costs`` maps an (learner, n) pair to its cost, either as a callable
    or as a mapping; a missing pair raises :class:`IncompleteCostError`.
    """
    lookup: CostFn
    if callable(costs):
        lookup = costs
    else:
        mapping = costs

        def lookup(learner: str, n: int) -> float:
            return mapping[(learner, n)]

    subtotals: dict[str, float] = {}
    for learner, n in seq:
        try:
            c = lookup(learner, n)
        except KeyError as exc:
            raise IncompleteCostError(f"no cost defined for ({learner}, {n})") from exc
        subtotals[learner] = subtotals.get(learner, 0.0) + c
    return sum(subtotals.values()), subtotals


def classify_suboptimal(final_accuracies: Mapping[str, float], delta: float) -> set[str]:
    """Learners whose accuracy trails the pool maximum by at least ``delta``.

    Suboptimality is measured against the maximum value, so every argmax
    learner is optimal by construction.
    """
    if not final_accuracies:
        raise ValueError("final_accuracies must be non-empty")
    if not (0 < delta <= 1):
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    for learner, acc in final_accuracies.items():
        _check_finite(f"accuracy of {learner}", acc)
    best = max(final_accuracies.values())
    return {j for j, acc in final_accuracies.items() if best - acc >= delta}


def regret(
    seq: AllocationSequence,
    costs: CostFn | Mapping[tuple[str, int], float],
    suboptimal: set[str],
) -> float:
    """Cumulative cost of every allocation made to a suboptimal learner."""
    _, subtotals = cost_of_sequence(seq, costs)
    return sum(c for learner, c in subtotals.items() if learner in suboptimal)


@dataclass(frozen=True)
class ValidationVerdict:
    """Which of the solution conditions hold for a finished run."""

    contains_final_allocation: bool
    selection_optimal: bool | None  # None when no oracle accuracies were given
    selected_cost_bounded: bool

    @property
    def ok(self) -> bool:
        return (
            self.contains_final_allocation
            and self.selection_optimal is not False
            and self.selected_cost_bounded
        )

    def failed_conditions(self) -> list[str]:
        failed = []
        if not self.contains_final_allocation:
            failed.append("sequence lacks (selected, N)")
        if self.selection_optimal is False:
            failed.append("selected learner is suboptimal under the oracle")
        if not self.selected_cost_bounded:
            failed.append("selected learner's cost exceeds d_factor * c(N)")
        return failed


def validate_solution(
    report: RunReport,
    config: DaubConfig,
    oracle_accuracies: Mapping[str, float] | None = None,
    *,
    slack: float = 1e-9,
) -> ValidationVerdict:
    """Check the solution conditions that are decidable on a single run.

    The asymptotic regret condition is a trend over N, not a per-run
    predicate, and is reported elsewhere.
    """
    contains = (report.selected, config.N) in report.sequence

    optimal: bool | None = None
    if oracle_accuracies is not None:
        suboptimal = classify_suboptimal(oracle_accuracies, config.delta)
        optimal = report.selected not in suboptimal

    # Cost of the single full-size training, read off the trace.
    c_full = None
    for rec in report.records:
        if rec.learner == report.selected and rec.n == config.N:
            c_full = rec.cost
    if c_full is None:
        bounded = False
    else:
        bounded = report.selected_cost <= config.d_factor * c_full + slack

    return ValidationVerdict(contains, optimal, bounded)
