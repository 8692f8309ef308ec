"""FGD1 dataset files and delimited-text import.

Layout::

    b"FGD1" | version (1 byte) | header length (uint32 LE) | header (UTF-8 JSON)
    | samples, row-major little-endian | labels (uint8 each, optional)

The header carries tag, seed, d, n, label presence, payload precision and any
generator metadata.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from flowguard.data.generators import DatasetHandle
from flowguard.errors import FormatError, TruncationError

MAGIC = b"FGD1"
VERSION = 1
_DTYPES = {"single": np.dtype("<f4"), "double": np.dtype("<f8")}


def dumps_dataset(handle, precision=None):
    samples = np.asarray(handle.samples)
    if precision is None:
        precision = "double" if samples.dtype == np.float64 else "single"
    dtype = _DTYPES[precision]
    labels = handle.labels
    if labels is not None and (np.min(labels, initial=0) < 0 or np.max(labels, initial=0) > 255):
        raise FormatError("labels must fit in one byte (0..255)")
    header = {
        "tag": handle.tag, "seed": int(handle.seed), "n": int(handle.n), "d": int(handle.d),
        "labels": labels is not None, "precision": precision, "meta": handle.meta,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, bytes([VERSION]), struct.pack("<I", len(blob)), blob,
             np.ascontiguousarray(samples, dtype=dtype).tobytes()]
    if labels is not None:
        parts.append(np.asarray(labels, dtype=np.uint8).tobytes())
    return b"".join(parts)


def loads_dataset(blob):
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {bytes(blob[:4])!r}, expected {MAGIC!r}", offset=0)
    if len(blob) < 9:
        raise TruncationError("file ends inside the fixed preamble", offset=len(blob))
    if blob[4] != VERSION:
        raise FormatError(f"unsupported version {blob[4]}", offset=4)
    (hlen,) = struct.unpack_from("<I", blob, 5)
    if len(blob) < 9 + hlen:
        raise TruncationError(f"header declares {hlen} bytes", offset=9)
    try:
        header = json.loads(blob[9:9 + hlen].decode("utf-8"))
        n, d = int(header["n"]), int(header["d"])
        dtype = _DTYPES[header.get("precision", "single")]
        has_labels = bool(header["labels"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"unreadable header: {exc}", offset=9) from exc
    offset = 9 + hlen
    need = n * d * dtype.itemsize + (n if has_labels else 0)
    if len(blob) - offset < need:
        raise TruncationError(
            f"header declares n={n}, d={d} ({need} payload bytes) but {len(blob) - offset} remain",
            offset=offset,
        )
    if len(blob) - offset > need:
        raise FormatError(f"{len(blob) - offset - need} trailing bytes", offset=offset + need)
    samples = np.frombuffer(blob, dtype=dtype, count=n * d, offset=offset).reshape(n, d)
    samples = samples.astype(dtype.newbyteorder("="))
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype=np.uint8, count=n, offset=offset + n * d * dtype.itemsize)
        labels = labels.astype(np.int64)
    return DatasetHandle(samples, header["tag"], header["seed"], labels, header.get("meta", {}))


def save_dataset(handle, path, precision=None):
    Path(path).write_bytes(dumps_dataset(handle, precision))


def load_dataset(path):
    return loads_dataset(Path(path).read_bytes())


def load_text(path, tag="indist:text", delimiter=","):
    """One sample per row; blank lines and ``#`` comments are skipped."""
    x = np.loadtxt(path, delimiter=delimiter, ndmin=2, comments="#")
    return DatasetHandle(x, tag, 0)


def read_any(path):
    """Load an FGD1 file, falling back to delimited text."""
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        return loads_dataset(raw)
    return load_text(path)
