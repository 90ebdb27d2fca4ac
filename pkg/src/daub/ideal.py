"""Exact-mode machinery: threshold scans, bound verifiers, adversarial instances.

Everything here works on noiseless synthetic curves where the true accuracy
function is available, so allocation and cost bounds can be checked exactly
(integer/rational arithmetic on allocations, tiny float slack on accuracies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import DaubConfig, RunReport, classify_suboptimal
from .errors import InstanceError
from .learners import SyntheticCurveSpec, SyntheticLearner
from .scheduler import IdealBoundPolicy, run_daub

__all__ = [
    "GAMMA",
    "IdealProblem",
    "ThresholdRecord",
    "Verdict",
    "DaubStarResult",
    "exact_bound_values",
    "compute_n_star",
    "compute_n_delta",
    "well_behaved_scan",
    "run_daub_star",
    "verify_ub_validity",
    "regret_trend",
    "LowerBoundInstance",
    "lower_bound_instance",
]

GAMMA = (math.sqrt(5.0) - 1.0) / 2.0  # largest value with gamma^2 <= 1 - gamma

ACC_SLACK = 1e-9  # float slack on accuracy-valued inequalities


@dataclass(frozen=True)
class Verdict:
    """One checked inequality: name, subject, outcome, and a short detail."""

    name: str
    learner: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ThresholdRecord:
    learner: str
    n_star: int
    n_delta: int


# ---------------------------------------------------------------------------
# Exact bound and threshold scans


def exact_bound_values(
    spec: SyntheticCurveSpec,
    N: int,
    s: int,
    *,
    use_train_cap: bool = True,
) -> np.ndarray:
    """The exact-mode upper bound u(l) for every l in [1, N].

    Same function the scheduler's ideal policy evaluates at schedule points:
    min of training accuracy and f(l) + (N-l) * one-sided derivative with
    step min(s, l-1), clamped into [0, 1]. Index k holds u(k+1).
    """
    ell = np.arange(1, N + 1, dtype=float)
    f = np.asarray(spec.accuracy(ell))
    d = np.empty(N)
    if N >= 2:
        prev = np.maximum(ell[1:] - s, 1.0)
        step = ell[1:] - prev
        d[1:] = (f[1:] - np.asarray(spec.accuracy(prev))) / step
        d[0] = d[1]
    else:
        d[0] = 0.0
    g = f + (N - ell) * d
    if use_train_cap:
        u = np.minimum(np.asarray(spec.train_accuracy(ell)), g)
    else:
        u = g
    return np.clip(u, 0.0, 1.0)


def compute_n_star(
    u: np.ndarray | Callable[[int], float], f_star: float, N: int
) -> int:
    """First size where the bound drops below the target accuracy (else N).

    Exhaustive scan; no monotonicity assumption on ``u``.
    """
    if callable(u):
        values = np.array([u(ell) for ell in range(1, N + 1)])
    else:
        values = np.asarray(u)
        if values.shape != (N,):
            raise ValueError(f"expected {N} bound values, got shape {values.shape}")
    below = values < f_star
    if not below.any():
        return N
    return int(np.argmax(below)) + 1


def compute_n_delta(
    f: SyntheticCurveSpec | Callable[[np.ndarray], np.ndarray],
    delta: float,
    N: int,
    s: int,
) -> int:
    """First size where the discrete derivative falls to delta/N (else N)."""
    if s < 1:
        raise ValueError(f"step s must be positive, got {s}")
    acc = f.accuracy if hasattr(f, "accuracy") else f
    ell = np.arange(s + 1, N + 1, dtype=float)
    if ell.size == 0:
        return N
    deriv = (np.asarray(acc(ell)) - np.asarray(acc(ell - s))) / s
    threshold = delta / N
    if deriv[-1] > threshold:  # definitional branch: f'(N) > delta/N
        return N
    hits = deriv <= threshold
    return int(np.argmax(hits)) + s + 1


def well_behaved_scan(
    f: SyntheticCurveSpec | Callable[[np.ndarray], np.ndarray],
    n_max: int,
    *,
    slack: float = 1e-12,
) -> tuple[bool, int | None]:
    """Check non-decreasing values and non-increasing unit-step derivative.

    Returns (ok, first violating n). The slack absorbs float rounding only.
    """
    acc = f.accuracy if hasattr(f, "accuracy") else f
    values = np.asarray(acc(np.arange(1, n_max + 1, dtype=float)))
    diffs = np.diff(values)
    bad_monotone = np.nonzero(diffs < -slack)[0]
    if bad_monotone.size:
        return False, int(bad_monotone[0]) + 2
    bad_concave = np.nonzero(np.diff(diffs) > slack)[0]
    if bad_concave.size:
        return False, int(bad_concave[0]) + 3
    return True, None


# ---------------------------------------------------------------------------
# Exact-mode runs and guarantee verdicts


@dataclass
class IdealProblem:
    """A noiseless pool plus run parameters, with the oracle answer attached."""

    specs: Mapping[str, SyntheticCurveSpec]
    config: DaubConfig
    f_star: float = field(init=False)
    i_star: str = field(init=False)

    def __post_init__(self) -> None:
        if not self.specs:
            raise InstanceError("ideal problem needs at least one learner")
        for name, spec in self.specs.items():
            if spec.noise_sigma != 0:
                raise InstanceError(f"learner {name} is noisy; exact mode needs sigma = 0")
        finals = {name: spec.accuracy(self.config.N) for name, spec in self.specs.items()}
        self.i_star = max(finals, key=lambda k: finals[k])
        self.f_star = finals[self.i_star]

    def learners(self) -> list[SyntheticLearner]:
        return [SyntheticLearner(name, spec) for name, spec in self.specs.items()]

    def oracle_accuracies(self) -> dict[str, float]:
        return {name: spec.accuracy(self.config.N) for name, spec in self.specs.items()}


@dataclass
class DaubStarResult:
    report: RunReport
    thresholds: list[ThresholdRecord]
    verdicts: list[Verdict]

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def failed(self) -> list[Verdict]:
        return [v for v in self.verdicts if not v.passed]


def _cost_bound_verdict(
    name: str,
    learner: str,
    spec: SyntheticCurveSpec,
    actual_cost: float,
    at_size: Fraction,
    r: Fraction,
) -> Verdict:
    """Check actual_cost <= r/(r-1) * c(at_size), exactly when the cost is linear."""
    factor = r / (r - 1)
    if spec.cost_exponent == 1.0:
        bound = factor * Fraction(spec.cost_scale) * at_size
        ok = Fraction(actual_cost) <= bound
        detail = f"cost {actual_cost} vs bound {float(bound):.6g}"
    else:
        bound = float(factor) * spec.cost_scale * float(at_size) ** spec.cost_exponent
        ok = actual_cost <= bound * (1 + 1e-12)
        detail = f"cost {actual_cost:.6g} vs bound {bound:.6g}"
    return Verdict(name, learner, bool(ok), detail)


def run_daub_star(problem: IdealProblem, *, use_train_cap: bool = True) -> DaubStarResult:
    """Run the loop with exact bounds, then check every allocation/cost bound.

    Verified per learner j: per-step allocation < r*n*_j, total allocation
    < r^2/(r-1) * n*_j, cost(S_j) <= r/(r-1) * c_j(r*n*_j), and for
    suboptimal j additionally n*_j <= n^d_j and the matching cost bound at
    r*n^d_j. For the selected learner: cost <= r/(r-1) * c(N).
    """
    config = problem.config
    report = run_daub(
        problem.learners(), config, policy=IdealBoundPolicy(use_train_cap=use_train_cap)
    )
    r = Fraction(config.r)
    factor_total = r * r / (r - 1)

    suboptimal = classify_suboptimal(problem.oracle_accuracies(), config.delta)
    thresholds: list[ThresholdRecord] = []
    verdicts: list[Verdict] = []

    for name, spec in problem.specs.items():
        u = exact_bound_values(spec, config.N, config.s, use_train_cap=use_train_cap)
        n_star = compute_n_star(u, problem.f_star, config.N)
        n_delta = compute_n_delta(spec, config.delta, config.N, config.s)
        thresholds.append(ThresholdRecord(name, n_star, n_delta))

        alloc = report.sequence.induced(name)
        if not alloc:
            continue
        max_step = max(alloc)
        total = sum(alloc)
        verdicts.append(
            Verdict(
                "per_step_allocation",
                name,
                Fraction(max_step) < r * n_star,
                f"max step {max_step} vs r*n_star {float(r * n_star):.6g}",
            )
        )
        verdicts.append(
            Verdict(
                "total_allocation",
                name,
                Fraction(total) < factor_total * n_star,
                f"total {total} vs r^2/(r-1)*n_star {float(factor_total * n_star):.6g}",
            )
        )
        verdicts.append(
            _cost_bound_verdict(
                "cost_vs_n_star",
                name,
                spec,
                report.per_learner_cost[name],
                r * n_star,
                r,
            )
        )
        if name in suboptimal:
            verdicts.append(
                Verdict(
                    "n_star_le_n_delta",
                    name,
                    n_star <= n_delta,
                    f"n_star {n_star} vs n_delta {n_delta}",
                )
            )
            verdicts.append(
                _cost_bound_verdict(
                    "cost_vs_n_delta",
                    name,
                    spec,
                    report.per_learner_cost[name],
                    r * n_delta,
                    r,
                )
            )

    verdicts.append(
        _cost_bound_verdict(
            "selected_cost_vs_N",
            report.selected,
            problem.specs[report.selected],
            report.selected_cost,
            Fraction(config.N),
            r,
        )
    )
    verdicts.append(
        Verdict(
            "selected_is_optimal",
            report.selected,
            report.selected not in suboptimal,
            f"selected {report.selected}, suboptimal set size {len(suboptimal)}",
        )
    )

    report.regret = sum(
        c for name, c in report.per_learner_cost.items() if name in suboptimal
    )
    report.loss = problem.f_star - problem.specs[report.selected].accuracy(config.N)
    return DaubStarResult(report, thresholds, verdicts)


def verify_ub_validity(
    spec: SyntheticCurveSpec,
    N: int,
    s: int,
    *,
    b: int = 1,
    r: float = 2.0,
    use_train_cap: bool = True,
    slack: float = ACC_SLACK,
) -> list[Verdict]:
    """Check bound >= f(N) and bound non-increasing at every schedule point."""
    from .scheduler import schedule_sizes

    sizes = schedule_sizes(b, r, N)
    u = exact_bound_values(spec, N, s, use_train_cap=use_train_cap)
    at_sizes = u[np.asarray(sizes) - 1]
    f_N = min(max(spec.accuracy(N), 0.0), 1.0)
    valid = bool(np.all(at_sizes >= f_N - slack))
    first_bad = None if valid else sizes[int(np.argmax(at_sizes < f_N - slack))]
    monotone = bool(np.all(np.diff(at_sizes) <= slack))
    first_inc = None if monotone else sizes[int(np.argmax(np.diff(at_sizes) > slack)) + 1]
    return [
        Verdict("bound_dominates_final_accuracy", spec.family, valid,
                f"min bound {at_sizes.min():.9f} vs f(N) {f_N:.9f}"
                + (f"; first violation at n={first_bad}" if first_bad else "")),
        Verdict("bound_non_increasing", spec.family, monotone,
                f"first increase at n={first_inc}" if first_inc else "monotone"),
    ]


def regret_trend(
    problem_for_N: Callable[[int], IdealProblem],
    N_grid: Sequence[int],
    *,
    use_train_cap: bool = True,
) -> list[dict]:
    """Regret / (M * selected cost) across an N grid; the asymptotic proxy.

    A single N proves nothing about an asymptotic claim; what this reports
    is whether the ratio falls monotonically over the provided grid.
    """
    rows = []
    for N in N_grid:
        problem = problem_for_N(N)
        result = run_daub_star(problem, use_train_cap=use_train_cap)
        M = len(problem.specs)
        denom = M * result.report.selected_cost
        rows.append(
            {
                "N": N,
                "regret": result.report.regret,
                "m_times_selected_cost": denom,
                "ratio": (result.report.regret / denom) if denom else math.nan,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Adversarial lower-bound construction


@dataclass
class LowerBoundInstance:
    """The indistinguishable curve pair from the tightness argument.

    ``f_continuing`` keeps improving after the shared prefix (ending
    Delta above), while ``f_flattened`` freezes at the prefix value; no
    observation at n <= gamma_n_delta separates them.
    """

    delta: float
    N: int
    c: float
    s: int
    n_delta_continuous: float
    n_delta: int  # discrete scan on the base curve
    gamma_n_delta: int
    d: float
    verdicts: list[Verdict]

    def base(self, n):
        n = np.asarray(n, dtype=float)
        out = 1.0 - self.c * self.delta / n
        return float(out) if out.ndim == 0 else out

    def f_continuing(self, n):
        n = np.asarray(n, dtype=float)
        m = self.gamma_n_delta
        n2 = self.n_delta_continuous
        rate_mid = self.d * self.delta / self.N
        rate_tail = self.delta / self.N
        out = np.where(
            n <= m,
            self.base(np.maximum(n, 1.0)),
            self.base(m)
            + (np.minimum(n, n2) - m) * rate_mid
            + np.maximum(n - n2, 0.0) * rate_tail,
        )
        return float(out) if out.ndim == 0 else out

    def f_flattened(self, n):
        n = np.asarray(n, dtype=float)
        m = self.gamma_n_delta
        out = np.where(n <= m, self.base(np.maximum(n, 1.0)), self.base(m))
        return float(out) if out.ndim == 0 else out

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def lower_bound_instance(delta: float, N: int, c: float, *, s: int = 1) -> LowerBoundInstance:
    """Build the adversarial pair f(n) = 1 - c*delta/n with the altered tail.

    The prefix junction sits at floor(gamma * sqrt(cN)) with the tail slope
    d*delta/N, d = 1/gamma^2; the two curves agree exactly up to the
    junction and differ by at least delta at N.
    """
    if not (0 < delta <= 1):
        raise InstanceError(f"delta must lie in (0, 1], got {delta}")
    if c <= 0:
        raise InstanceError(f"scale c must be positive, got {c}")
    if math.sqrt(c * N) > N:
        raise InstanceError(f"need sqrt(c*N) <= N, got c={c}, N={N}")

    n2 = math.sqrt(c * N)
    m = math.floor(GAMMA * n2)
    if m < 2:
        raise InstanceError(f"junction floor(gamma*sqrt(cN)) = {m} is too small")
    d = 1.0 / (GAMMA * GAMMA)

    def base(n):
        n = np.asarray(n, dtype=float)
        return 1.0 - c * delta / n

    n_delta = compute_n_delta(base, delta, N, s)

    inst = LowerBoundInstance(
        delta=delta, N=N, c=c, s=s,
        n_delta_continuous=n2, n_delta=n_delta, gamma_n_delta=m, d=d,
        verdicts=[],
    )

    grid = np.arange(1, N + 1, dtype=float)
    cont = np.asarray(inst.f_continuing(grid))
    flat = np.asarray(inst.f_flattened(grid))

    prefix_identical = bool(np.all(cont[:m] == flat[:m]))
    gap = float(cont[-1] - flat[-1])
    wb_cont, bad_cont = well_behaved_scan(inst.f_continuing, N)
    wb_flat, bad_flat = well_behaved_scan(inst.f_flattened, N)
    base_deriv_at_n_delta = (base(n_delta) - base(n_delta - s)) / s
    d_condition = abs(1.0 / d - (1.0 - GAMMA))

    inst.verdicts = [
        Verdict("prefix_identical", "pair", prefix_identical,
                f"first {m} values bit-identical: {prefix_identical}"),
        Verdict("gap_at_N", "pair", gap >= delta - ACC_SLACK,
                f"gap {gap:.9f} vs delta {delta}"),
        Verdict("continuing_well_behaved", "continuing", wb_cont,
                "" if wb_cont else f"violation at n={bad_cont}"),
        Verdict("flattened_well_behaved", "flattened", wb_flat,
                "" if wb_flat else f"violation at n={bad_flat}"),
        Verdict("derivative_at_n_delta", "base",
                bool(base_deriv_at_n_delta <= delta / N + ACC_SLACK),
                f"f'(n_delta) {base_deriv_at_n_delta:.3e} vs delta/N {delta / N:.3e}"),
        Verdict("d_matches_golden_ratio", "pair", d_condition <= 1e-12,
                f"|1/d - (1 - gamma)| = {d_condition:.3e}"),
    ]
    return inst
