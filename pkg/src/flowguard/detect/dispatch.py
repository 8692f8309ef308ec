"""Score a batch with a list of named detectors."""

from __future__ import annotations

from flowguard.detect import scores as S
from flowguard.errors import ConfigError, DimensionError

# detector -> components it needs
REQUIRES = {
    "ll": ("flow",), "ttl": ("flow",), "re": ("flow",), "pre": ("flow",),
    "waic": ("ensemble",), "llr": ("flow", "background"), "comp": ("flow",),
    "msp": ("classifier",), "ae": ("autoencoder",),
}


def parse_detectors(spec):
    names = [s.strip() for s in spec.split(",")] if isinstance(spec, str) else list(spec)
    names = [n for n in names if n]
    if not names:
        raise ConfigError("no detectors requested")
    unknown = [n for n in names if n not in S.DETECTORS]
    if unknown:
        raise ConfigError(
            f"unknown detector {', '.join(unknown)}; supported: {', '.join(S.DETECTORS)}"
        )
    return names


def _width(component):
    return getattr(component, "d", None) or getattr(component, "n_features_in_", None)


def score_all(detectors, x, lam=50.0, precision="single", **components):
    """``{detector: scores}`` for the requested detectors.

    ``components`` may hold ``flow``, ``background``, ``ensemble``,
    ``classifier`` and ``autoencoder``; only the ones a detector needs are used.
    """
    names = parse_detectors(detectors)
    for name in names:
        for need in REQUIRES[name]:
            comp = components.get(need)
            if comp is None:
                raise ConfigError(f"detector {name} needs a {need} (not provided)")
            width = _width(comp)
            if width is not None and width != x.shape[1]:
                raise DimensionError(
                    f"{need} expects dimension {width} but the data has dimension {x.shape[1]}"
                )
    flow = components.get("flow")
    funcs = {
        "ll": lambda: S.score_ll(flow, x),
        "ttl": lambda: S.score_ttl(flow, x),
        "re": lambda: S.score_re(flow, x, precision),
        "pre": lambda: S.score_pre(flow, x, S.PenaltyConfig(lam), precision),
        "waic": lambda: S.score_waic(components["ensemble"], x),
        "llr": lambda: S.score_llr(flow, components["background"], x),
        "comp": lambda: S.score_comp(flow, x),
        "msp": lambda: S.score_msp(components["classifier"], x),
        "ae": lambda: S.score_ae(components["autoencoder"], x),
    }
    return {name: funcs[name]() for name in names}
