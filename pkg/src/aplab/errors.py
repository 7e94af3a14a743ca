"""Exception hierarchy shared by all modules."""


class AplabError(Exception):
    """Base class for every error raised by aplab."""


class ModulusMismatch(AplabError, ValueError):
    pass


class KernelError(AplabError, RuntimeError):
    """Exact and floating convolution disagree: a kernel bug, never data."""


class NoRegularDilate(AplabError, RuntimeError):
    pass


class HypothesisNotMet(AplabError, ValueError):
    """A lemma's checkable hypothesis fails on the given input."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class MeasuredFailure(AplabError, RuntimeError):
    """A constructive step ran but its measured conclusion fell short."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class PipelineFailure(AplabError, RuntimeError):
    def __init__(self, message, trace=None, cause=None):
        super().__init__(message)
        self.trace = trace or []
        self.cause = cause
