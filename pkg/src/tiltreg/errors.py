"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class SpecificationError(ValueError):
    """A model specification or data schema is invalid."""


class InferenceError(RuntimeError):
    """Inference quantities could not be computed at the fitted point."""
