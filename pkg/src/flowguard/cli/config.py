"""INI run configuration with a fixed schema.

Precedence, lowest first: schema defaults, ``--config`` file, the
``FLOWGUARD_SEED`` environment variable, ``--set section.key=value``
overrides, then command-specific flags.
"""

from __future__ import annotations

import configparser
import io
import os

from flowguard.errors import ConfigError
from flowguard.numcore.rng import Rng

SEED_ENV = "FLOWGUARD_SEED"


def _opt(kind):
    def parse(text):
        return None if text.strip().lower() in ("", "none") else kind(text)

    parse.__name__ = f"optional_{kind.__name__}"
    return parse


def _bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


# section -> key -> (parser, default)
SCHEMA = {
    "run": {"seed": (int, 0), "out": (str, "runs"), "precision": (str, "single")},
    "data": {
        "indist": (str, "ring"), "d": (int, 16), "n_train": (int, 2048), "n_test": (int, 512),
        "ood": (str, "uniform"), "kappa": (int, 1),
        "path": (_opt(str), None), "test_path": (_opt(str), None), "ood_path": (_opt(str), None),
    },
    "flow": {
        "n_blocks": (int, 8), "hidden_width": (int, 64), "hidden_layers": (int, 2),
        "scaling": (str, "half_sigmoid"), "mix_every": (int, 2), "actnorm": (_bool, True),
        "factor_out_after": (_opt(int), None), "activation": (str, "tanh"),
    },
    "train": {
        "iterations": (int, 1500), "batch_size": (int, 256), "lr": (float, 1e-3),
        "lr_late": (float, 3e-4), "lr_switch": (int, 1000),
    },
    "classifier": {
        "hidden": (_ints, (64, 64)), "n_iter": (int, 500), "batch_size": (int, 128),
        "lr": (float, 1e-2), "activation": (str, "relu"),
    },
    "ae": {
        "bottleneck": (int, 4), "hidden": (_ints, (64,)), "n_iter": (int, 1000),
        "batch_size": (int, 128), "lr": (float, 3e-3),
    },
    "detect": {"detectors": (str, "ll,ttl,re,pre"), "lam": (float, 50.0)},
    "attack": {
        "epsilon": (float, 0.05), "iterations": (int, 100), "step_size": (_opt(float), None),
        "random_start": (_bool, False),
    },
    "eval": {
        "target_tpr": (float, 0.95), "bins": (int, 30),
        "lambdas": (_floats, (0.0, 10.0, 50.0, 100.0, 500.0, 1000.0)),
        "split": (_opt(_ints), None), "penalty_samples": (int, 256),
    },
    "analysis": {
        "d": (_opt(int), None), "s": (_opt(float), None), "epsilon": (_opt(float), None),
        "draws": (int, 0),
    },
}


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


class RunConfig:
    """Typed view over the schema: ``cfg["train"]["iterations"]``."""

    def __init__(self):
        self.values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}

    def __getitem__(self, section):
        return self.values[section]

    def set(self, dotted, text, origin="--set"):
        section, sep, key = dotted.partition(".")
        if not sep:
            raise ConfigError(f"{origin}: expected section.key, got {dotted!r}")
        self._assign(section, key, text, origin)

    def _assign(self, section, key, text, origin):
        if section not in SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"{origin}: unknown key {section}.{key}")
        parser = SCHEMA[section][key][0]
        try:
            self.values[section][key] = parser(str(text))
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for {section}.{key}: {exc}") from None

    def override(self, section, key, value):
        """Assign an already-typed value (command-line flags)."""
        if value is not None:
            self.values[section][key] = value

    def load_file(self, path):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"--config: file not found: {path}") from None
        except configparser.Error as exc:
            raise ConfigError(f"--config: cannot parse {path}: {exc}") from None
        for section in parser.sections():
            for key, text in parser.items(section):
                self._assign(section, key, text, str(path))

    def render(self):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section, keys in self.values.items():
            parser[section] = {k: _format(v) for k, v in keys.items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def seed_for(self, name):
        """Integer seed for one consumer, split from the root seed."""
        return Rng(self.values["run"]["seed"]).child(name).derive_seed()


def resolve(config_path=None, sets=(), env=None):
    env = os.environ if env is None else env
    cfg = RunConfig()
    if config_path:
        cfg.load_file(config_path)
    if env.get(SEED_ENV):
        cfg.set("run.seed", env[SEED_ENV], origin=SEED_ENV)
    for item in sets:
        dotted, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"--set: expected section.key=value, got {item!r}")
        cfg.set(dotted.strip(), text.strip())
    return cfg
