"""Evaluation report assembly and its text serialization.

Layout::

    # flowguard evaluation report
    key: value            (metadata, sorted by key)

    [metrics]
    detector,auroc,aupr,tau,tpr,fpr,n_indist,n_ood
    ...

    [histogram <detector>]
    bin_left,bin_right,count_indist,count_ood
    ...
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from flowguard.errors import ContractError, FormatError
from flowguard.eval.metrics import aupr, auroc
from flowguard.eval.threshold import pick_threshold, rates_at

HEADER = "# flowguard evaluation report"
HIST_COLUMNS = "bin_left,bin_right,count_indist,count_ood"


def histogram(in_scores, ood_scores, bins=30):
    """Shared-edge histogram. Non-finite scores land in the last bin."""
    a = np.asarray(in_scores, dtype=np.float64).ravel()
    b = np.asarray(ood_scores, dtype=np.float64).ravel()
    both = np.concatenate([a, b])
    finite = both[np.isfinite(both)]
    if finite.size == 0:
        lo, hi = -0.5, 0.5
    else:
        lo, hi = float(finite.min()), float(finite.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)

    def counts(s):
        s = np.where(np.isfinite(s), s, hi)
        return np.histogram(np.clip(s, lo, hi), edges)[0]

    return edges, counts(a), counts(b)


@dataclass
class DetectorMetrics:
    auroc: float
    aupr: float
    tau: float
    tpr: float
    fpr: float
    edges: np.ndarray
    counts_indist: np.ndarray
    counts_ood: np.ndarray

    @property
    def n_indist(self):
        return int(self.counts_indist.sum())

    @property
    def n_ood(self):
        return int(self.counts_ood.sum())


@dataclass
class EvalReport:
    detectors: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def evaluate_scores(in_scores, ood_scores, target_tpr=0.95, bins=30, metadata=None):
    """Build an :class:`EvalReport` from ``{detector: scores}`` maps."""
    if set(in_scores) != set(ood_scores):
        diff = sorted(set(in_scores) ^ set(ood_scores))
        raise ContractError(f"detector sets differ: {', '.join(diff)}")
    report = EvalReport(metadata=dict(metadata or {}))
    report.metadata.setdefault("target_tpr", target_tpr)
    for name in sorted(in_scores):
        a, b = in_scores[name], ood_scores[name]
        tau = pick_threshold(a, target_tpr)
        tpr, fpr = rates_at(tau, a, b)
        edges, ca, cb = histogram(a, b, bins)
        report.detectors[name] = DetectorMetrics(auroc(a, b), aupr(a, b), tau, tpr, fpr,
                                                 edges, ca, cb)
    return report


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def histogram_rows(m):
    rows = [HIST_COLUMNS]
    for i in range(len(m.counts_indist)):
        rows.append(f"{_fmt(m.edges[i])},{_fmt(m.edges[i + 1])},"
                    f"{int(m.counts_indist[i])},{int(m.counts_ood[i])}")
    return rows


def render_report(report):
    if not report.detectors:
        raise FormatError("report has no detectors")
    lines = [HEADER]
    for key in sorted(report.metadata):
        value = _fmt(report.metadata[key]).replace("\n", " ")
        lines.append(f"{key}: {value}")
    lines.append(f"detectors: {','.join(sorted(report.detectors))}")
    lines += ["", "[metrics]", "detector,auroc,aupr,tau,tpr,fpr,n_indist,n_ood"]
    for name in sorted(report.detectors):
        m = report.detectors[name]
        lines.append(",".join([name, *(_fmt(float(v)) for v in (m.auroc, m.aupr, m.tau, m.tpr, m.fpr)),
                               str(m.n_indist), str(m.n_ood)]))
    for name in sorted(report.detectors):
        lines += ["", f"[histogram {name}]", *histogram_rows(report.detectors[name])]
    return "\n".join(lines) + "\n"


def emit_report(report, path):
    text = render_report(report)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_histogram_csv(metrics, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(histogram_rows(metrics)) + "\n")


def read_metrics(path):
    """Parse the ``[metrics]`` table of a report back into ``{detector: {column: value}}``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != HEADER:
        raise FormatError(f"{path} is not a flowguard report", offset=0)
    try:
        start = lines.index("[metrics]") + 1
    except ValueError:
        raise FormatError(f"{path} has no [metrics] section") from None
    cols = lines[start].split(",")
    out = {}
    for line in lines[start + 1:]:
        if not line:
            break
        vals = line.split(",")
        out[vals[0]] = {c: float(v) for c, v in zip(cols[1:], vals[1:])}
    return out
