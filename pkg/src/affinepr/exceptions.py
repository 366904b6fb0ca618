"""Exception hierarchy shared by the library and the CLI."""


class AffinePRError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(AffinePRError, ValueError):
    """Raised on bad shapes, dimensions or parameter values."""


class SolverBreakdown(AffinePRError, RuntimeError):
    """The Newton system could not be solved, even after regularization."""

    def __init__(self, message, iteration=None, rcond=None):
        super().__init__(message)
        self.iteration = iteration
        self.rcond = rcond


class ConditionViolated(AffinePRError, ValueError):
    """A closed-form result was requested outside its hypotheses."""


class CheckFailure(AffinePRError):
    """An oracle check found a violation."""
