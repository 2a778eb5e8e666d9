"""Utility modules for the SUTA toolkit."""

from .logger import get_logger, setup_logging
from .config import load_config, get_env
from .errors import ContractViolation, DataError, FormatError, SutaError
from .hashing import array_digest, file_digest

__all__ = [
    "get_logger",
    "setup_logging",
    "load_config",
    "get_env",
    "SutaError",
    "ContractViolation",
    "DataError",
    "FormatError",
    "array_digest",
    "file_digest",
]
