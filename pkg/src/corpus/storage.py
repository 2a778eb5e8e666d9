"""Corpus files: versioned little-endian binary container plus a text sidecar.

Layout:
    8 bytes  magic b"SUTACORP"
    uint16   format version
    uint32   utterance count
    per utterance:
        uint32   header length, then UTF-8 JSON
                 {"id", "rows", "cols", "transcript", "domain_tag"}
        payload  rows·cols row-major <f8 values
"""

import json
import struct
from pathlib import Path

import numpy as np

from ..eval.transcript import Transcript, check_vocabulary
from ..utils.errors import DataError, FormatError
from ..utils.logger import get_logger
from .generator import Corpus, Utterance

logger = get_logger(__name__)

MAGIC = b"SUTACORP"
VERSION = 1


def sidecar_path(path: Path) -> Path:
    return Path(str(path) + ".txt")


def save_corpus(path: Path, corpus: Corpus) -> Path:
    """
    Write a corpus and its `id<TAB>transcript` sidecar.

    Args:
        path: Destination file
        corpus: Utterances to save

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HI", VERSION, len(corpus)))
        for utterance in corpus:
            rows, cols = utterance.features.shape
            header = json.dumps({
                "id": utterance.id,
                "rows": rows,
                "cols": cols,
                "transcript": utterance.transcript.text,
                "domain_tag": utterance.domain_tag,
            }, sort_keys=True).encode("utf-8")
            f.write(struct.pack("<I", len(header)))
            f.write(header)
            f.write(np.ascontiguousarray(utterance.features, dtype="<f8").tobytes())
    tmp.replace(path)

    sidecar_path(path).write_text(
        "".join(f"{u.id}\t{u.transcript.text}\n" for u in corpus), encoding="utf-8"
    )
    logger.info(f"Saved {len(corpus)} utterances to {path}")
    return path


def load_corpus(path: Path) -> Corpus:
    """
    Read a corpus written by `save_corpus`; all or nothing.

    Raises:
        DataError: If the file does not exist, or a transcript holds a symbol
            outside the model vocabulary (names the utterance id)
        FormatError: On bad magic/version, truncation or trailing bytes,
            naming the offending record id when known
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Corpus file not found: {path}")
    data = path.read_bytes()

    prefix = len(MAGIC) + struct.calcsize("<HI")
    if len(data) < prefix or data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path} is not a corpus file")
    version, count = struct.unpack_from("<HI", data, len(MAGIC))
    if version != VERSION:
        raise FormatError(f"{path}: corpus version {version}, expected {VERSION}")

    offset = prefix
    corpus: Corpus = []
    for index in range(count):
        record_id = f"#{index}"
        if offset + 4 > len(data):
            raise FormatError(f"{path}: truncated before record header", record_id=record_id)
        (header_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        try:
            header = json.loads(data[offset:offset + header_len].decode("utf-8"))
            record_id = header["id"]
            rows, cols = int(header["rows"]), int(header["cols"])
            text = str(header["transcript"])
            domain_tag = header["domain_tag"]
        except (ValueError, KeyError, TypeError) as e:
            raise FormatError(f"{path}: unreadable record header ({e})", record_id=record_id) from e
        check_vocabulary([(record_id, text)])
        transcript = Transcript.from_text(text)
        offset += header_len

        nbytes = 8 * rows * cols
        if offset + nbytes > len(data):
            raise FormatError(f"{path}: truncated feature payload", record_id=record_id)
        features = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset)
        offset += nbytes
        corpus.append(Utterance(
            id=record_id,
            features=features.reshape(rows, cols).astype(np.float64),
            transcript=transcript,
            domain_tag=domain_tag,
        ))

    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after last record")

    logger.debug(f"Loaded {len(corpus)} utterances from {path}")
    return corpus
