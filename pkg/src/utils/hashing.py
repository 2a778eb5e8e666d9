"""Content digests for parameter sets and result files."""

import hashlib
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np


def array_digest(arrays: Mapping[str, np.ndarray], names: Optional[Iterable[str]] = None) -> str:
    """
    SHA-256 over named arrays, in sorted name order.

    Each entry contributes its name, shape and little-endian float64 bytes,
    so two digests match only for bit-identical values.

    Args:
        arrays: Mapping of name to array
        names: Subset of names to include (default: all)

    Returns:
        Hex digest
    """
    hasher = hashlib.sha256()
    selected = sorted(arrays if names is None else names)
    for name in selected:
        values = np.ascontiguousarray(arrays[name], dtype="<f8")
        hasher.update(name.encode("utf-8"))
        hasher.update(repr(values.shape).encode("ascii"))
        hasher.update(values.tobytes())
    return hasher.hexdigest()


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
