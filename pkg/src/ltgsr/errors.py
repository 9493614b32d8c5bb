"""Exception types shared across the package.

Plain argument/shape violations raise ValueError directly; the classes here
cover failure modes a caller may want to catch separately.
"""


class DegenerateInputError(ValueError):
    """Input carries no usable signal (e.g. constant image fed to registration)."""


class RegistrationFailedError(RuntimeError):
    """Estimated overlap between the two images is too small to crop."""


class CostGuardError(RuntimeError):
    """A deliberately slow oracle was invoked on an input above its size guard."""


class TrainingDivergedError(RuntimeError):
    """A loss became non-finite during optimization."""


class InvalidStateError(RuntimeError):
    """Operation requires state the object does not have (e.g. an untrained checkpoint)."""
