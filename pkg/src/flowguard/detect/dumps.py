"""Score dumps: one delimited-text record per (sample, detector).

Columns: ``sample_id,dataset,detector,score,failed``. Scores are written with
``repr`` so a dump reads back bit-exactly; failures are written as ``inf``.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from flowguard.errors import FormatError

COLUMNS = ("sample_id", "dataset", "detector", "score", "failed")


def render_dump(scores, dataset):
    """``scores`` maps detector name to an (n,) array; records are sample-major."""
    names = sorted(scores)
    arrays = [np.asarray(scores[k], dtype=np.float64) for k in names]
    n = len(arrays[0]) if arrays else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for i in range(n):
        for name, arr in zip(names, arrays):
            v = float(arr[i])
            failed = not np.isfinite(v)
            writer.writerow([i, dataset, name, "inf" if failed else repr(v), int(failed)])
    return buf.getvalue()


def write_dump(scores, dataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_dump(scores, dataset))


def read_dump(path):
    """Returns ``(dataset_tag, {detector: scores})`` with scores in sample order."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != COLUMNS:
        raise FormatError(f"{path}: header must be {','.join(COLUMNS)}")
    tags, table = set(), {}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(COLUMNS):
            raise FormatError(f"{path}:{line}: expected {len(COLUMNS)} fields, got {len(row)}")
        sid, tag, name, score, failed = row
        tags.add(tag)
        try:
            value = float("inf") if failed == "1" else float(score)
            table.setdefault(name, {})[int(sid)] = value
        except ValueError:
            raise FormatError(f"{path}:{line}: malformed record {row}") from None
    if len(tags) > 1:
        raise FormatError(f"{path}: mixes dataset tags {sorted(tags)}")
    out = {}
    for name, by_id in table.items():
        ids = sorted(by_id)
        if ids != list(range(len(ids))):
            raise FormatError(f"{path}: detector {name} has gaps in sample ids")
        out[name] = np.array([by_id[i] for i in ids])
    return (tags.pop() if tags else ""), out
