"""Exception types shared across the package."""


class TreedboError(Exception):
    """Base class for all library errors."""


class InvalidHyperparameterError(TreedboError, ValueError):
    """A hyper-parameter is non-finite or outside its admissible range."""


class IllConditionedKernelError(TreedboError):
    """Cholesky factorisation failed even after jitter escalation.

    Carries the last jitter value tried so callers can report it.
    """

    def __init__(self, message: str, jitter: float):
        super().__init__(f"{message} (final jitter tried: {jitter:.3e})")
        self.jitter = jitter


class ChainInitError(TreedboError):
    """Slice sampler asked to start from a state with -inf log density."""


class UnfittedLeafError(TreedboError):
    """Acquisition evaluated on a leaf whose GP ensemble has not been fitted."""


class PoolExhausted(TreedboError):
    """No unqueried candidate rows remain; the run must terminate."""


class ObjectiveEvaluationError(TreedboError):
    """The black-box objective returned a non-finite value."""


class PoolLoadError(TreedboError):
    """CSV pool ingestion failed (missing columns, empty file, no usable rows)."""
