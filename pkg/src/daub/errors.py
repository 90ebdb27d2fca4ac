"""Exception hierarchy shared across the package."""


class DaubError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DaubError):
    """Invalid run parameters (ratio, base size, cap, ...)."""


class DegenerateInputError(DaubError):
    """Numerically degenerate input, e.g. repeated regression abscissae."""


class IncompleteCostError(DaubError):
    """A cost value is missing for an (learner, n) allocation pair."""


class LearnerFailure(DaubError):
    """A learner crashed, timed out, or otherwise failed to train."""


class ProtocolError(DaubError):
    """Malformed or unexpected message from an external trainer worker."""


class OutOfRangeError(DaubError):
    """Query outside the recorded range of a replay table."""


class InstanceError(DaubError):
    """Adversarial instance parameters outside their admissible range."""


class RunError(DaubError):
    """An allocation run could not be completed (e.g. every learner failed)."""
