"""The allocation loop and baseline strategies.

``run_daub`` implements the bound-driven loop: bootstrap every learner at
the first three schedule sizes, then repeatedly grow the learner with the
highest projected upper bound until one reaches the full training size.
Baselines (full training, fixed fraction, round-synchronous elimination)
share the same trace/report machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .bounds import (
    clamp_nonincreasing,
    combined_bound,
    ideal_derivative,
    monotone_repair,
    projected_bound,
    regression_slope,
)
from .core import AllocationSequence, CurveSample, DaubConfig, LearnerState, RunReport, TraceRecord
from .errors import ConfigError, LearnerFailure, RunError
from .learners import LearnerAdapter

__all__ = [
    "schedule_sizes",
    "RegressionBoundPolicy",
    "IdealBoundPolicy",
    "next_learner",
    "run_daub",
    "run_full_training",
    "run_fixed_fraction",
    "run_elimination",
]


def schedule_sizes(b: int, r: float, N: int) -> list[int]:
    """Geometric allocation sizes b, ceil(r*b), ... capped at N."""
    if b < 1:
        raise ConfigError(f"base size b must be a positive integer, got {b}")
    if r <= 1:
        raise ConfigError(f"ratio r must exceed 1, got {r}")
    if b * r * r > N:
        raise ConfigError(f"parameter constraint b*r^2 <= N violated (b={b}, r={r}, N={N})")
    sizes = [b]
    while sizes[-1] < N:
        sizes.append(min(math.ceil(r * sizes[-1]), N))
    return sizes


# ---------------------------------------------------------------------------
# Bound policies


class RegressionBoundPolicy:
    """Observation-driven bound: OLS slope over the three newest history points."""

    def __init__(self, use_train_cap: bool = True) -> None:
        self.use_train_cap = use_train_cap

    def bound(self, learner: LearnerAdapter, state: LearnerState, config: DaubConfig) -> float:
        window = state.last_samples(3)
        newest = window[-1]
        slope = regression_slope([(s.n, s.val_acc) for s in window])
        proj = projected_bound(newest.val_acc, slope, newest.n, config.N)
        if self.use_train_cap:
            return combined_bound(newest.train_acc, proj)
        return proj


class IdealBoundPolicy:
    """Exact-mode bound: true accuracy plus one-sided discrete derivative.

    The derivative step is ``config.s``, shrunk near the left edge where a
    full step would leave the domain. This is the same function the
    threshold scans evaluate, so run behavior and scan thresholds agree.
    """

    def __init__(self, use_train_cap: bool = True) -> None:
        self.use_train_cap = use_train_cap

    def bound(self, learner, state: LearnerState, config: DaubConfig) -> float:
        n = state.n_current
        if n < 2:
            raise ValueError("exact-mode bound needs n >= 2")
        s_eff = min(config.s, n - 1)
        d = ideal_derivative(learner.exact_accuracy, n, s_eff)
        proj = projected_bound(learner.exact_accuracy(n), d, n, config.N)
        if self.use_train_cap:
            return combined_bound(learner.exact_train_accuracy(n), proj)
        return proj


# ---------------------------------------------------------------------------
# Run bookkeeping


@dataclass
class _Run:
    sequence: AllocationSequence = field(default_factory=AllocationSequence)
    records: list[TraceRecord] = field(default_factory=list)
    per_learner_cost: dict[str, float] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)

    def train(
        self,
        learner: LearnerAdapter,
        state: LearnerState,
        n: int,
        seed: int,
        bound: float | None = None,
    ) -> CurveSample:
        """Train, repair the newest history pair, and append to the trace.

        The allocation is appended only after a successful training call, so
        every pair in the report was actually trained.
        """
        sample = learner.train_eval(n, seed)
        if sample.n != n:
            raise LearnerFailure(f"{learner.id} returned a sample for n={sample.n}, requested {n}")
        if state.history:
            prev = state.last_samples(1)[0]
            repaired_prev, repaired_cur = monotone_repair(prev.val_acc, sample.val_acc)
            if repaired_prev != prev.val_acc:
                state.history[prev.n] = prev.with_val_acc(repaired_prev)
                sample = sample.with_val_acc(repaired_cur)
        state.record(sample)
        self.sequence.append(learner.id, n)
        self.records.append(
            TraceRecord(
                iter=len(self.records) + 1,
                learner=learner.id,
                n=n,
                train_acc=sample.train_acc,
                val_acc=sample.val_acc,
                bound=bound,
                cost=sample.cost,
            )
        )
        self.per_learner_cost[learner.id] = self.per_learner_cost.get(learner.id, 0.0) + sample.cost
        return sample

    def set_bound(self, state: LearnerState, value: float) -> None:
        clamped = min(max(value, 0.0), 1.0)
        state.u_current = clamp_nonincreasing(state.u_current, clamped)
        # annotate the newest trace record for this learner
        for idx in range(len(self.records) - 1, -1, -1):
            if self.records[idx].learner == state.id:
                rec = self.records[idx]
                self.records[idx] = TraceRecord(
                    rec.iter, rec.learner, rec.n, rec.train_acc, rec.val_acc,
                    state.u_current, rec.cost,
                )
                break

    def fail(self, state: LearnerState, exc: Exception) -> None:
        state.active = False
        self.failures[state.id] = str(exc)

    def report(self, selected: str) -> RunReport:
        total = sum(self.per_learner_cost.values())
        return RunReport(
            selected=selected,
            sequence=self.sequence,
            records=self.records,
            per_learner_cost=dict(self.per_learner_cost),
            total_cost=total,
            selected_cost=self.per_learner_cost.get(selected, 0.0),
            failures=dict(self.failures),
        )


def next_learner(
    states: Sequence[LearnerState], order: dict[str, int], N: int
) -> LearnerState | None:
    """Active learner below the cap with the maximal bound.

    Ties break deterministically: least-trained first, then pool order.
    """
    candidates = [st for st in states if st.active and st.n_current < N]
    if not candidates:
        return None
    return max(candidates, key=lambda st: (st.u_current, -st.n_current, -order[st.id]))


def _check_pool(learners: Sequence[LearnerAdapter]) -> None:
    if not learners:
        raise RunError("learner pool is empty")
    ids = [lr.id for lr in learners]
    if len(set(ids)) != len(ids):
        raise RunError(f"duplicate learner ids in pool: {ids}")


# ---------------------------------------------------------------------------
# Strategies


def run_daub(
    learners: Sequence[LearnerAdapter],
    config: DaubConfig,
    *,
    seed: int = 0,
    policy: RegressionBoundPolicy | IdealBoundPolicy | None = None,
) -> RunReport:
    """Bound-driven allocation: returns the first learner to reach size N."""
    _check_pool(learners)
    policy = policy if policy is not None else RegressionBoundPolicy()
    sizes = schedule_sizes(config.b, config.r, config.N)
    run = _Run()
    states = {lr.id: LearnerState(id=lr.id) for lr in learners}
    order = {lr.id: idx for idx, lr in enumerate(learners)}
    level = {lr.id: 2 for lr in learners}  # schedule index of n_current

    # Bootstrap: three information-free allocations per learner, in pool order.
    selected: str | None = None
    for lr in learners:
        state = states[lr.id]
        try:
            for k in range(3):
                run.train(lr, state, sizes[k], seed)
            run.set_bound(state, policy.bound(lr, state, config))
        except LearnerFailure as exc:
            run.fail(state, exc)
            continue
        if state.n_current == config.N and selected is None:
            selected = lr.id

    if all(not st.active for st in states.values()):
        raise RunError(f"every learner failed during bootstrap: {run.failures}")
    if selected is not None:  # degenerate schedule where the third size is already N
        return run.report(selected)

    by_id = {lr.id: lr for lr in learners}
    while True:
        j = next_learner(list(states.values()), order, config.N)
        if j is None:
            raise RunError(f"no learner reached N={config.N}; failures: {run.failures}")
        lr = by_id[j.id]
        n_next = sizes[level[j.id] + 1]
        try:
            run.train(lr, j, n_next, seed)
        except LearnerFailure as exc:
            run.fail(j, exc)
            continue
        level[j.id] += 1
        run.set_bound(j, policy.bound(lr, j, config))
        if n_next == config.N:
            return run.report(j.id)


def run_full_training(
    learners: Sequence[LearnerAdapter], N: int, *, seed: int = 0
) -> RunReport:
    """Brute force: train everything on N and select the validation argmax."""
    _check_pool(learners)
    run = _Run()
    finals: dict[str, float] = {}
    for lr in learners:
        state = LearnerState(id=lr.id)
        try:
            sample = run.train(lr, state, N, seed)
        except LearnerFailure as exc:
            run.fail(state, exc)
            continue
        finals[lr.id] = sample.val_acc
    if not finals:
        raise RunError(f"every learner failed: {run.failures}")
    selected = max(finals, key=lambda i: finals[i])
    return run.report(selected)


def run_fixed_fraction(
    learners: Sequence[LearnerAdapter], n: int, N: int, *, seed: int = 0
) -> RunReport:
    """Train everything on n, pick the argmax, train only it on N."""
    _check_pool(learners)
    if n > N:
        raise ConfigError(f"fixed fraction n={n} exceeds N={N}")
    run = _Run()
    states = {lr.id: LearnerState(id=lr.id) for lr in learners}
    finals: dict[str, float] = {}
    for lr in learners:
        try:
            sample = run.train(lr, states[lr.id], n, seed)
        except LearnerFailure as exc:
            run.fail(states[lr.id], exc)
            continue
        finals[lr.id] = sample.val_acc
    if not finals:
        raise RunError(f"every learner failed: {run.failures}")
    selected = max(finals, key=lambda i: finals[i])
    if n < N:
        by_id = {lr.id: lr for lr in learners}
        try:
            run.train(by_id[selected], states[selected], N, seed)
        except LearnerFailure as exc:
            run.fail(states[selected], exc)
            raise RunError(f"winner {selected} failed at full size: {exc}") from exc
    return run.report(selected)


def run_elimination(
    learners: Sequence[LearnerAdapter],
    config: DaubConfig,
    *,
    seed: int = 0,
    policy: RegressionBoundPolicy | IdealBoundPolicy | None = None,
) -> RunReport:
    """Round-synchronous baseline: train all survivors each round, drop the dominated.

    A learner is dropped permanently once its bound falls below some
    survivor's current accuracy. Unlike the bound-driven loop this can
    over-allocate, since drop decisions must be conservative.
    """
    _check_pool(learners)
    policy = policy if policy is not None else RegressionBoundPolicy()
    sizes = schedule_sizes(config.b, config.r, config.N)
    run = _Run()
    states = {lr.id: LearnerState(id=lr.id) for lr in learners}
    by_id = {lr.id: lr for lr in learners}

    for round_idx, n in enumerate(sizes):
        survivors = [st for st in states.values() if st.active]
        if not survivors:
            raise RunError(f"every learner failed or was dropped: {run.failures}")
        vals: dict[str, float] = {}
        for st in list(survivors):
            lr = by_id[st.id]
            try:
                sample = run.train(lr, st, n, seed)
            except LearnerFailure as exc:
                run.fail(st, exc)
                continue
            vals[st.id] = sample.val_acc
            if round_idx >= 2:
                run.set_bound(st, policy.bound(lr, st, config))
        if not vals:
            raise RunError(f"every learner failed: {run.failures}")
        if round_idx >= 2:
            best_val = max(vals.values())
            for st in states.values():
                if st.active and st.id in vals and st.u_current < best_val:
                    st.active = False

    finals = {
        st.id: st.last_samples(1)[0].val_acc
        for st in states.values()
        if st.n_current == config.N
    }
    if not finals:
        raise RunError("no learner completed the final round")
    selected = max(finals, key=lambda i: finals[i])
    return run.report(selected)
