"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the model."""


class ModelInconsistencyError(ValueError):
    """The substitute capacitor fails to over-estimate the real one."""


class NumericalFailure(RuntimeError):
    """Integration produced a non-finite value."""
