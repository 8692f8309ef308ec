"""Exception types shared across flowguard."""


class FlowguardError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(FlowguardError, ValueError):
    pass


class ContractError(FlowguardError, ValueError):
    """A documented precondition of an operation was violated."""


class ConfigError(FlowguardError, ValueError):
    pass


class NumericError(FlowguardError, ArithmeticError):
    """Non-finite values appeared where finite ones are required.

    ``block`` carries the index of the offending flow layer when known.
    """

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class FormatError(FlowguardError, ValueError):
    """A binary file violated its format; ``offset`` is the byte position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TruncationError(FormatError):
    pass


class TrainingError(FlowguardError, RuntimeError):
    """Training hit a non-finite loss."""

    def __init__(self, iteration, last_finite_loss):
        super().__init__(
            f"non-finite loss at iteration {iteration}; "
            f"last finite loss was {last_finite_loss!r}"
        )
        self.iteration = iteration
        self.last_finite_loss = last_finite_loss


class DomainError(ContractError):
    """A derived quantity fell outside the domain where a formula holds."""
