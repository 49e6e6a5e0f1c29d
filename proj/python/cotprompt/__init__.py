"""Chain-of-thought prompt tuning on synthetic vision-language tasks.

Thin wrapper over the C++ core. Configs are dicts (or JSON text); reports
come back as dicts.
"""

import json

from . import _core
from ._core import Error, Model, harmonic_mean, metrics_csv_header

__all__ = [
    "Error",
    "Model",
    "ablate",
    "config_hash",
    "default_config",
    "evaluate",
    "gradcheck",
    "harmonic_mean",
    "metrics_csv_header",
    "normalize_config",
    "train",
]


def _text(config):
    if config is None:
        return "{}"
    return config if isinstance(config, str) else json.dumps(config)


def default_config():
    return json.loads(_core.default_config())


def normalize_config(config):
    return json.loads(_core.normalize_config(_text(config)))


def config_hash(config=None):
    return _core.config_hash(_text(config))


def train(config=None):
    """Train and evaluate; returns (report, checkpoint_text)."""
    report, checkpoint = _core.train(_text(config))
    return json.loads(report), checkpoint


def evaluate(checkpoint, config=None):
    return json.loads(_core.evaluate(_text(config), checkpoint))


def gradcheck(config=None, seed=1, step=1e-5, tolerance=1e-4):
    return json.loads(_core.gradcheck(_text(config), seed, step, tolerance))


def ablate(kind, config=None, values=()):
    """Returns (metrics_csv, delta_csv, audits)."""
    csv, delta, audits = _core.ablate(kind, _text(config), list(values))
    return csv, delta, json.loads(audits)
