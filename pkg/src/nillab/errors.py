"""Shared exception types."""


class BudgetError(RuntimeError):
    """A requested computation exceeds the configured cost ceiling."""


class CertificationError(ValueError):
    """A rotation or shear parameter is not in the certified irrationality set."""


class SpaceMismatchError(ValueError):
    """Two empirical measures live on different spaces."""
