"""Shared exception types.

The CLI maps these onto exit codes: InputError (and subclasses) -> 2,
InfeasibleError / ComplexityError -> 3.
"""


class InputError(ValueError):
    """Malformed data, violated precondition, or mismatched supports."""


class AbsoluteContinuityError(InputError):
    """A measure puts mass on an atom where the reference measure has none."""


class InfeasibleError(RuntimeError):
    """The requested constraint system or tail event admits no solution."""


class ComplexityError(RuntimeError):
    """The computation would exceed the enumeration or grid budget."""
