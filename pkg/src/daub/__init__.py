"""Cost-sensitive training-data allocation across a pool of learners.

Grow the most promising learner geometrically, ranking learners by a
projected upper bound on their full-training accuracy, so that clearly
suboptimal learners receive only a vanishing share of the training budget.
"""

from .bounds import (
    clamp_nonincreasing,
    combined_bound,
    ideal_derivative,
    monotone_repair,
    projected_bound,
    regression_slope,
)
from .core import (
    AllocationSequence,
    CurveSample,
    DaubConfig,
    LearnerState,
    RunReport,
    TraceRecord,
    classify_suboptimal,
    cost_of_sequence,
    regret,
    validate_solution,
)
from .ideal import (
    GAMMA,
    DaubStarResult,
    IdealProblem,
    LowerBoundInstance,
    compute_n_delta,
    compute_n_star,
    exact_bound_values,
    lower_bound_instance,
    regret_trend,
    run_daub_star,
    verify_ub_validity,
    well_behaved_scan,
)
from .learners import (
    ExternalLearner,
    ReplayLearner,
    ReplayTable,
    SyntheticCurveSpec,
    SyntheticLearner,
    WorkerProcess,
    load_replay_manifest,
    make_crossing_pair,
)
from .scheduler import (
    IdealBoundPolicy,
    RegressionBoundPolicy,
    next_learner,
    run_daub,
    run_elimination,
    run_fixed_fraction,
    run_full_training,
    schedule_sizes,
)

__version__ = "0.1.0"
