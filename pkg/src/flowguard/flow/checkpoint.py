"""Flow checkpoints: FGW1 weight files with the architecture in the header."""

from __future__ import annotations

from flowguard.errors import FormatError
from flowguard.flow.model import model_from_arch
from flowguard.numcore.serialize import load_weights, save_weights


def save_flow(model, path):
    save_weights(model.params, path, meta={"kind": "flow", "arch": model.arch()})


def load_flow(path):
    params, meta = load_weights(path)
    if meta.get("kind") != "flow":
        raise FormatError(f"{path} is not a flow checkpoint (kind={meta.get('kind')!r})")
    return model_from_arch(meta["arch"], params)
