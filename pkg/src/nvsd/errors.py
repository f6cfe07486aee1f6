"""Exception hierarchy shared by all nvsd modules."""


class NVSDError(Exception):
    """Base class for every error raised by nvsd."""


class InvalidSampleError(NVSDError, ValueError):
    """Paired sample is too short, ragged, or contains non-finite values."""


class DegenerateResponseError(NVSDError, ValueError):
    """Response has zero spread where a positive spread is required."""


class DegenerateInputError(NVSDError, ValueError):
    """A predictor (or response) is constant where a test needs variation."""


class FitError(NVSDError, ValueError):
    """A smoother or additive model cannot be fit to the given data."""


class SchemaError(NVSDError, KeyError):
    """Required column missing, or a serialized document has the wrong shape."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class EmptySelectionError(NVSDError, ValueError):
    """An operation needs at least one selected variable."""


class IngestError(NVSDError, ValueError):
    """Input file cannot be turned into a valid dataset."""


class DecompositionError(NVSDError, ValueError):
    """Correlation matrix is not symmetric positive definite."""
