"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, data and audit
problems exit 2, training problems exit 3.
"""


class LinkkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LinkkitError):
    """A domain record violates one of its invariants."""


class SchemaError(LinkkitError):
    """A persisted file does not conform to its documented schema."""


class DataError(LinkkitError):
    """Dataset-level problem: empty corpus, zero true links, count mismatch."""


class AuditError(LinkkitError):
    """A split plan failed the temporal leakage audit."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IngestionError(LinkkitError):
    """Fetching from GitHub/Jira failed after retries or was misconfigured."""


class TrainingError(LinkkitError):
    """Model fine-tuning or prediction failed."""
