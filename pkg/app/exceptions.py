# Exception Hierarchy


class EpinetError(Exception):
    """
    Base exception class for epinet-specific errors.

    All custom exceptions for the toolkit inherit from this class,
    allowing for unified error handling at the command-line boundary.
    """
    pass


class ValidationError(EpinetError):
    """
    Raised when input validation fails.

    Triggered when model parameters, fractions, population mixes or utility
    shape parameters do not meet the required criteria.
    """
    pass


class ConfigurationError(EpinetError):
    """
    Raised when toolkit or scenario configuration is invalid.

    Covers bad environment settings, unreadable scenario files, unknown
    scenario keys and unsupported sweep layouts.
    """
    pass


class OperationError(EpinetError):
    """
    Raised when a computation fails.

    Used for solver failures and for any analysis that cannot produce a
    meaningful result for the given inputs.
    """
    pass


class PreconditionError(OperationError):
    """
    Raised when a mathematical precondition of an analysis is unmet.

    Examples are a utility without a negative third derivative handed to the
    strategic protection analysis, or a starting state equal to the
    equilibrium in the convergence-time bounds.
    """
    pass


class TrivialRegimeError(PreconditionError):
    """
    Raised when the inputs fall into the trivial regime of a result.

    The typical case is a peak action W at or below the critical action, where
    the epidemic always dies out and no endemic equilibrium exists.
    """
    pass


class ConvergenceError(OperationError):
    """
    Raised when a root finder or integrator does not converge.
    """
    pass
