"""Exception types shared across the toolkit."""


class RepurposeError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(RepurposeError):
    """A flat file does not conform to its expected TSV schema."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class UnknownCompoundError(RepurposeError):
    """A compound id was referenced that is not part of the corpus/model."""


class UnknownTargetError(RepurposeError):
    """A target id was queried that has no activity record in the corpus."""


class UnknownSourceError(RepurposeError):
    """A label source was queried that no ingested label row carries."""


class NoRelevantCompoundsError(RepurposeError):
    """The activity filter for a reference set matched no compounds."""


class NoInteractionsError(RepurposeError):
    """No activity record survived the interaction-matrix filters."""


class FactorizationError(RepurposeError):
    """Training failed (bad rank, mismatched similarity, non-finite values)."""


class EvalError(RepurposeError):
    """An evaluation protocol constraint cannot be satisfied."""
