"""Exception hierarchy shared by all modules."""


class BlockInvError(Exception):
    """Base class for every error raised by this package."""


class SingularTile(BlockInvError, ArithmeticError):
    """A pivot fell below the singularity tolerance during elimination."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class DimensionMismatch(BlockInvError, ValueError):
    pass


class OddGrid(BlockInvError, ValueError):
    pass


class BadBlockSize(BlockInvError, ValueError):
    pass


class NonPowerOfTwo(BlockInvError, ValueError):
    pass


class InvalidParams(BlockInvError, ValueError):
    pass


class InsufficientData(BlockInvError, ValueError):
    pass


class BadSpec(BlockInvError, ValueError):
    pass


class FormatError(BlockInvError, OSError):
    """Malformed or truncated matrix file."""
