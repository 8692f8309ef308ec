from flowguard.eval.annulus import (
    annulus_stats,
    cancel_latent,
    gaussian_norms,
    norm_cancellation_set,
    partitioned_norms,
)
from flowguard.eval.metrics import aupr, auroc
from flowguard.eval.report import (
    DetectorMetrics,
    EvalReport,
    emit_report,
    evaluate_scores,
    histogram,
    read_metrics,
    render_report,
    write_histogram_csv,
)
from flowguard.eval.sweeps import (
    DEFAULT_LAMBDAS,
    DEFAULT_XI_GRID,
    monotone_fraction,
    sweep_lambda,
    sweep_penalty,
    write_lambda_table,
    write_penalty_curves,
)
from flowguard.eval.tailbound import TailBound, epsilon_from_bits, tail_bound
from flowguard.eval.threshold import pick_threshold, rates_at

__all__ = [
    "DEFAULT_LAMBDAS", "DEFAULT_XI_GRID", "DetectorMetrics", "EvalReport", "TailBound",
    "annulus_stats", "aupr", "auroc", "cancel_latent", "emit_report", "epsilon_from_bits",
    "evaluate_scores", "gaussian_norms", "histogram", "monotone_fraction",
    "norm_cancellation_set", "partitioned_norms", "pick_threshold", "rates_at", "read_metrics",
    "render_report", "sweep_lambda", "sweep_penalty", "tail_bound", "write_histogram_csv",
    "write_lambda_table", "write_penalty_curves",
]
