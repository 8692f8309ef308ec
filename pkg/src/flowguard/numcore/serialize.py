"""FGW1 weight files.

Layout::

    b"FGW1" | version (1 byte) | header length (uint32 LE) | header (UTF-8 JSON)
    | raw little-endian payloads in header order

The header lists ``{"name", "shape", "precision"}`` per parameter and may carry
a free-form ``meta`` section (flow checkpoints put their architecture there).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from flowguard.errors import FormatError, TruncationError

MAGIC = b"FGW1"
VERSION = 1
_DTYPES = {"single": np.dtype("<f4"), "double": np.dtype("<f8")}


def precision_of(array):
    kind = np.asarray(array).dtype
    if kind == np.float32:
        return "single"
    if kind == np.float64:
        return "double"
    raise FormatError(f"unsupported dtype {kind}; only float32/float64 can be stored")


def dumps_weights(params, meta=None):
    entries, payload = [], []
    for name, value in params.items():
        arr = np.asarray(value)
        prec = precision_of(arr)
        entries.append({"name": name, "shape": list(arr.shape), "precision": prec})
        payload.append(np.ascontiguousarray(arr, dtype=_DTYPES[prec]).tobytes())
    header = json.dumps(
        {"params": entries, "meta": meta or {}}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    return b"".join([MAGIC, bytes([VERSION]), struct.pack("<I", len(header)), header, *payload])


def loads_weights(blob):
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise FormatError(f"bad magic {bytes(blob[:4])!r}, expected {MAGIC!r}", offset=0)
    if len(blob) < 9:
        raise TruncationError("file ends inside the fixed preamble", offset=len(blob))
    if blob[4] != VERSION:
        raise FormatError(f"unsupported version {blob[4]}", offset=4)
    (hlen,) = struct.unpack_from("<I", blob, 5)
    start = 9
    if len(blob) < start + hlen:
        raise TruncationError(
            f"header declares {hlen} bytes but only {len(blob) - start} remain", offset=start
        )
    try:
        header = json.loads(blob[start:start + hlen].decode("utf-8"))
        entries = header["params"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"unreadable header: {exc}", offset=start) from exc
    offset = start + hlen
    params = {}
    for entry in entries:
        try:
            dtype = _DTYPES[entry["precision"]]
            shape = tuple(int(n) for n in entry["shape"])
            name = entry["name"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed header entry {entry!r}", offset=start) from exc
        if any(n < 0 for n in shape):
            raise FormatError(f"negative extent in shape {shape} for {name!r}", offset=start)
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = count * dtype.itemsize
        if len(blob) < offset + nbytes:
            have = (len(blob) - offset) // dtype.itemsize
            raise TruncationError(
                f"parameter {name!r} declares {count} elements but the payload holds {have}",
                offset=offset,
            )
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=offset).reshape(shape)
        params[name] = arr.astype(dtype.newbyteorder("="), copy=True)
        offset += nbytes
    if offset != len(blob):
        raise FormatError(f"{len(blob) - offset} trailing bytes after payload", offset=offset)
    return params, header.get("meta", {})


def save_weights(params, path, meta=None):
    Path(path).write_bytes(dumps_weights(params, meta))


def load_weights(path):
    """Return ``(params, meta)`` read from an FGW1 file."""
    return loads_weights(Path(path).read_bytes())
