"""Penalty-strength (lambda) and radial-shift (xi') sweeps."""

from __future__ import annotations

import numpy as np

from flowguard.detect.scores import PenaltyConfig, score_pre, score_re, shifted_reconstruction
from flowguard.errors import ContractError
from flowguard.eval.metrics import auroc

DEFAULT_LAMBDAS = (0.0, 10.0, 50.0, 100.0, 500.0, 1000.0)
# xi' from -10.8 to 10.8 in steps of 0.2
DEFAULT_XI_GRID = tuple(round(0.2 * k, 10) for k in range(-54, 55))


def _samples(data):
    return np.atleast_2d(np.asarray(getattr(data, "samples", data), dtype=np.float64))


def sweep_penalty(model, data, xi_grid=DEFAULT_XI_GRID, precision="single"):
    """Curves ``R'(xi')`` of shape (n, len(xi_grid)).

    Every grid point shifts each latent code radially by the same ``xi'``.
    """
    x = _samples(data)
    grid = np.asarray(xi_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ContractError("xi grid must be a nonempty 1-D sequence")
    return np.stack([shifted_reconstruction(model, x, xi, precision) for xi in grid], axis=1)


def outward_pairs(xi_grid):
    """Index pairs ``(inner, outer)`` of grid neighbours on the same side of zero."""
    grid = np.asarray(xi_grid, dtype=np.float64)
    pairs = []
    for i in range(grid.size - 1):
        a, b = grid[i], grid[i + 1]
        if a >= 0 and b >= 0:
            pairs.append((i, i + 1))
        elif a <= 0 and b <= 0:
            pairs.append((i + 1, i))
    return pairs


def monotone_fraction(curves, xi_grid=DEFAULT_XI_GRID):
    """Per-sample fraction of outward neighbour pairs where R' does not decrease."""
    curves = np.atleast_2d(curves)
    pairs = outward_pairs(xi_grid)
    if not pairs:
        raise ContractError("xi grid has no adjacent same-sign pairs")
    inner = curves[:, [p[0] for p in pairs]]
    outer = curves[:, [p[1] for p in pairs]]
    return np.mean(outer >= inner, axis=1)


def sweep_lambda(model, in_data, ood_data, lambdas=DEFAULT_LAMBDAS, precision="single"):
    """PRE AUROC for each penalty coefficient, as ``[(lam, auroc), ...]``."""
    x_in, x_ood = _samples(in_data), _samples(ood_data)
    if len(x_in) == 0 or len(x_ood) == 0:
        raise ContractError("lambda sweep needs nonempty in-dist and OOD sets")
    rows = []
    for lam in lambdas:
        cfg = PenaltyConfig(float(lam))
        rows.append((float(lam), auroc(score_pre(model, x_in, cfg, precision),
                                       score_pre(model, x_ood, cfg, precision))))
    return rows


def re_auroc(model, in_data, ood_data, precision="single"):
    return auroc(score_re(model, _samples(in_data), precision),
                 score_re(model, _samples(ood_data), precision))


def write_lambda_table(rows, path):
    lines = ["lambda,auroc"] + [f"{lam!r},{value!r}" for lam, value in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_penalty_curves(curves, path, xi_grid=DEFAULT_XI_GRID):
    """Long-format delimited text: ``sample_id,xi,r_prime``."""
    curves = np.atleast_2d(curves)
    lines = ["sample_id,xi,r_prime"]
    for i, row in enumerate(curves):
        lines.extend(f"{i},{float(xi)!r},{float(r)!r}" for xi, r in zip(xi_grid, row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
