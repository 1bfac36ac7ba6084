"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or invalid user input (bad matrix, bad document, bad flag)."""


class PreconditionError(ValueError):
    """An operation was called outside its documented precondition."""


class NumericError(RuntimeError):
    """A numerical routine failed (decomposition breakdown, pivot collapse)."""


class NumericInconsistency(RuntimeError):
    """A quantity guaranteed positive on its support fell below tolerance."""
