"""Exception hierarchy shared by all modules."""


class EscapeError(Exception):
    """Base class for errors raised by ztescape."""


class ParameterError(EscapeError, ValueError):
    """A physical or numerical parameter lies outside its domain."""


class PreconditionError(EscapeError, ValueError):
    """Input data violates an operation's precondition (e.g. unnormalized density)."""


class NumericalError(EscapeError, RuntimeError):
    """A numerical procedure failed (no bracket, no convergence, non-finite state)."""


class RangeError(EscapeError, OverflowError):
    """Argument is in a range where the evaluation would overflow or diverge."""
