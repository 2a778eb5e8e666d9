"""Exception hierarchy for the SUTA toolkit."""

from typing import Optional


class SutaError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(SutaError, ValueError):
    """A caller broke a documented precondition (shapes, ranges, options)."""


class DataError(SutaError):
    """Input data cannot be used (bad transcript, infeasible target, empty reference)."""

    def __init__(self, message: str, record_id: Optional[str] = None):
        self.record_id = record_id
        if record_id is not None:
            message = f"{message} [record: {record_id}]"
        super().__init__(message)


class FormatError(DataError):
    """A corpus or checkpoint file is malformed, truncated or from another version."""


def error_record(error: BaseException, command: str) -> dict:
    """
    Build the machine-readable error record printed by the CLI.

    Args:
        error: The exception that aborted the command
        command: CLI subcommand name

    Returns:
        JSON-serializable error description
    """
    record = {
        "command": command,
        "error": type(error).__name__,
        "message": str(error),
    }
    record_id = getattr(error, "record_id", None)
    if record_id is not None:
        record["record_id"] = record_id
    return record
