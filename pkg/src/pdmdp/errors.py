"""Exception hierarchy shared by the solver modules."""


class PdMdpError(Exception):
    """Base class for every error raised by :mod:`pdmdp`."""


class InvalidInstance(PdMdpError, ValueError):
    """An MDP instance violates a structural invariant."""


class ValidationError(InvalidInstance):
    """A loaded instance file failed validation.

    ``row`` holds ``(action, state)`` and ``row_sum`` the offending sum when
    the failure is a non-stochastic transition row.
    """

    def __init__(self, message, row=None, row_sum=None):
        super().__init__(message)
        self.row = row
        self.row_sum = row_sum


class ParseError(PdMdpError, ValueError):
    """An instance file is not valid JSON."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SingularMatrix(PdMdpError, ArithmeticError):
    pass


class PreconditionViolated(PdMdpError, ValueError):
    pass


class InfeasibleInput(PdMdpError, ValueError):
    """A value vector violates a dual constraint by more than the tolerance."""


class UnboundedStep(PdMdpError, ArithmeticError):
    """No constraint limits the step along the given direction."""


class DuplicatePair(PdMdpError, RuntimeError):
    """The entering state-action pair is already active."""


class IterationCapExceeded(PdMdpError, RuntimeError):
    pass


class StallDetected(PdMdpError, RuntimeError):
    pass


class StateAlreadyTight(PdMdpError, ValueError):
    pass


class NotConverged(PdMdpError, RuntimeError):
    """An iterative variant hit its sweep cap before reaching the tolerance.

    The best iterate and its Bellman residual are kept on the exception.
    """

    def __init__(self, message, v, residual, sweeps):
        super().__init__(message)
        self.v = v
        self.residual = residual
        self.sweeps = sweeps


class InvalidStateSet(PdMdpError, ValueError):
    pass


class DecompositionMismatch(PdMdpError, RuntimeError):
    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


class LemmaViolation(PdMdpError, AssertionError):
    """A runtime check of one of the algorithm's structural lemmas failed."""

    def __init__(self, message, iteration=None, pair=None, witness=None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration
        self.pair = pair
        self.witness = witness


class IoError(PdMdpError, OSError):
    pass
