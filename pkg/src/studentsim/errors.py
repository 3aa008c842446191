"""Exception hierarchy shared across the pipeline.

Exit-code conventions used by the CLI: config errors exit 2, backend
(gateway) errors exit 3, parse/storage errors exit 4, any other stage
failure exits 1.
"""

from __future__ import annotations


class StudentSimError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(StudentSimError):
    """Invalid catalog, run configuration, or missing referenced path."""

    exit_code = 2


class ProfileValidationError(StudentSimError):
    """A profile failed validation where a valid profile was required."""

    def __init__(self, violations) -> None:
        super().__init__("; ".join(v.message for v in violations.entries))
        self.violations = violations


class GatewayError(StudentSimError):
    """Base class for chat/embedding backend failures."""

    exit_code = 3


class TransientError(GatewayError):
    """Transport-level failure (timeout, connection refused) after retries."""


class BackendError(GatewayError):
    """Backend answered but unusably: non-2xx status or malformed payload."""


class ScorerParseError(StudentSimError):
    """No schema-valid JSON object could be extracted from scorer output."""

    exit_code = 4


class ScoringError(StudentSimError):
    """A profile could not be scored; the pipeline records and continues.

    Carries the partial transcript when a behavior dialogue failed mid-run.
    """

    def __init__(self, message: str, partial_transcript=None) -> None:
        super().__init__(message)
        self.partial_transcript = partial_transcript


class AnalysisError(StudentSimError):
    """Undefined analysis result, e.g. feature importance on constant targets."""


class StorageError(StudentSimError):
    """Malformed persisted artifact; message names the offending line."""

    exit_code = 4
