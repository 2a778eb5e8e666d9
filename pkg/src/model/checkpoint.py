"""Versioned binary checkpoints.

Layout (all integers little-endian):
    8 bytes  magic b"SUTACKPT"
    uint16   format version
    uint32   header length, then a UTF-8 JSON header
             {"config": {...}, "params": [{"name": ..., "shape": [r, c]}, ...]}
    payload  each parameter's values as row-major <f8, in header order
"""

import json
import struct
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from ..utils.errors import DataError, FormatError
from ..utils.logger import get_logger
from .config import ModelConfig
from .network import ModelState, parameter_shapes

logger = get_logger(__name__)

MAGIC = b"SUTACKPT"
VERSION = 1


def save_checkpoint(path: Path, model: ModelState) -> Path:
    """
    Write a model checkpoint (trainable flags are not stored).

    Args:
        path: Destination file
        model: Model to save

    Returns:
        The written path
    """
    path = Path(path)
    header = {
        "config": model.config.model_dump(),
        "params": [{"name": n, "shape": list(v.shape)} for n, v in model.params.items()],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HI", VERSION, len(header_bytes)))
        f.write(header_bytes)
        for values in model.params.values():
            f.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    tmp.replace(path)

    logger.info(f"Saved checkpoint {path} ({model.num_parameters()} parameters)")
    return path


def load_checkpoint(path: Path) -> ModelState:
    """
    Read a checkpoint written by `save_checkpoint`.

    Raises:
        DataError: If the file does not exist
        FormatError: On a bad magic, unknown version, a parameter table that
            does not match the stored config, truncated payload or
            trailing bytes; names the offending parameter where possible
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Checkpoint file not found: {path}")
    data = path.read_bytes()
    prefix = len(MAGIC) + struct.calcsize("<HI")
    if len(data) < prefix or data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path} is not a model checkpoint")
    version, header_len = struct.unpack_from("<HI", data, len(MAGIC))
    if version != VERSION:
        raise FormatError(f"{path}: checkpoint version {version}, expected {VERSION}")

    try:
        header = json.loads(data[prefix:prefix + header_len].decode("utf-8"))
        config = ModelConfig(**header["config"])
        entries = [(str(e["name"]), tuple(int(n) for n in e["shape"])) for e in header["params"]]
    except (ValueError, KeyError, TypeError) as e:
        raise FormatError(f"{path}: unreadable checkpoint header ({e})") from e

    _check_parameter_table(path, config, entries)

    offset = prefix + header_len
    params: Dict[str, np.ndarray] = {}
    for name, shape in entries:
        nbytes = 8 * int(np.prod(shape))
        if offset + nbytes > len(data):
            raise FormatError(f"{path}: truncated payload", record_id=name)
        params[name] = np.frombuffer(data, dtype="<f8", count=nbytes // 8, offset=offset).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after payload")

    logger.debug(f"Loaded checkpoint {path}")
    return ModelState(config=config, params=params)


def _check_parameter_table(path: Path, config: ModelConfig, entries: List[Tuple[str, tuple]]) -> None:
    """Raise FormatError unless the header lists exactly the parameters `config` implies."""
    expected = parameter_shapes(config)
    seen = set()
    for name, shape in entries:
        if name not in expected:
            raise FormatError(f"{path}: unexpected parameter", record_id=name)
        if name in seen:
            raise FormatError(f"{path}: duplicate parameter", record_id=name)
        if shape != expected[name]:
            raise FormatError(f"{path}: shape {shape}, config implies {expected[name]}", record_id=name)
        seen.add(name)
    missing = [name for name in expected if name not in seen]
    if missing:
        raise FormatError(f"{path}: {len(missing)} parameter(s) missing", record_id=missing[0])
