class SepairError(Exception):
    """Base class for library errors; `exit_code` is what the CLI returns."""

    exit_code = 1


class InputFormatError(SepairError):
    """Malformed input file or value."""

    exit_code = 2


class PreconditionError(SepairError):
    """An operation was called outside its domain."""

    exit_code = 3


class NotSeparatedError(PreconditionError):
    pass


class NotAProjectionError(PreconditionError):
    pass


class NotIdempotentError(PreconditionError):
    pass


class NormNotLessThanOneError(PreconditionError):
    pass


class NotAnnihilatingError(PreconditionError):
    pass


class LambdaZeroError(PreconditionError):
    pass


class PreconditionFailedError(PreconditionError):
    pass


class X0InLError(PreconditionError):
    pass


class NotAStateError(PreconditionError):
    pass


class ShapeMismatchError(PreconditionError):
    pass


class InternalInconsistencyError(SepairError):
    """Two independent computations of the same fact disagree."""

    exit_code = 4
