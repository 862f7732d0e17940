"""Python bindings for the tripod C++ core."""

import json

from ._core import (
    ConfigError,
    NumericalError,
    SelectionError,
    Trainer as _Trainer,
    TripodError,
    __version__,
    bench,
    config_hash,
    default_config,
    enumerate_dataset,
    evaluate_checkpoint,
    evaluate_codes,
    fsq_grid,
    fsq_quantize,
    make_oracle_checkpoint,
    multiinformation,
    normalize_config,
    normalized_hessian_ratio,
    plugin_mi,
    psnr,
    run_suite,
    silverman_factor,
    suite_names,
)
from ._core import train as _train


def config(**overrides):
    """Default config with overrides, as a validated dict."""
    c = json.loads(default_config())
    c.update(overrides)
    return json.loads(normalize_config(json.dumps(c)))


def _as_json(cfg):
    return cfg if isinstance(cfg, str) else json.dumps(cfg)


class Trainer(_Trainer):
    def __init__(self, cfg):
        super().__init__(_as_json(cfg))


def train(cfg):
    """Run training to completion and return the summary as a dict."""
    return json.loads(_train(_as_json(cfg)))


__all__ = [
    "ConfigError",
    "NumericalError",
    "SelectionError",
    "Trainer",
    "TripodError",
    "__version__",
    "bench",
    "config",
    "config_hash",
    "default_config",
    "enumerate_dataset",
    "evaluate_checkpoint",
    "evaluate_codes",
    "fsq_grid",
    "fsq_quantize",
    "make_oracle_checkpoint",
    "multiinformation",
    "normalize_config",
    "normalized_hessian_ratio",
    "plugin_mi",
    "psnr",
    "run_suite",
    "silverman_factor",
    "suite_names",
    "train",
]
