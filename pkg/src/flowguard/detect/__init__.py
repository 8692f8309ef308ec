from flowguard.detect.dispatch import parse_detectors, score_all
from flowguard.detect.dumps import read_dump, render_dump, write_dump
from flowguard.detect.ensemble import MEMBER_VARIANTS, DetectorEnsemble, train_ensemble
from flowguard.detect.estimator import FlowOODDetector
from flowguard.detect.scores import (
    DETECTORS,
    FAILURE,
    PenaltyConfig,
    compressed_bits,
    decide,
    deflate_bits,
    msp_from_logits,
    penalty_xi,
    radial_direction,
    score_ae,
    score_comp,
    score_ll,
    score_llr,
    score_msp,
    score_pre,
    score_re,
    score_ttl,
    score_waic,
    shifted_reconstruction,
    softmax,
    ttl_from_latent,
    waic_from_logps,
)

__all__ = [
    "DETECTORS", "FAILURE", "MEMBER_VARIANTS", "DetectorEnsemble", "FlowOODDetector",
    "PenaltyConfig", "compressed_bits", "decide", "deflate_bits", "msp_from_logits",
    "parse_detectors", "penalty_xi", "radial_direction", "read_dump", "render_dump",
    "score_ae", "score_all", "score_comp", "score_ll", "score_llr", "score_msp", "score_pre",
    "score_re", "score_ttl", "score_waic", "shifted_reconstruction", "softmax",
    "train_ensemble", "ttl_from_latent", "waic_from_logps", "write_dump",
]
