"""Python front end for the fbfkit C++ core.

Points are plain 1-D numpy arrays. Configs for run_experiment and friends are
dicts with the same layout as the CLI's JSON files, or a path to one.
"""

import json
import os

from ._fbfkit import (
    SUMMARY_SCHEMA_VERSION,
    Box,
    CapabilityError,
    ConfigError,
    DegenerateSetError,
    DimensionError,
    DivergenceError,
    Error,
    FitError,
    NonFiniteError,
    ParameterError,
    Problem,
    ZeroOperatorError,
    fit_rate,
    gap,
    lipschitz_estimate,
    problem_from_json,
    run,
    spectral_norm,
    toy_problem,
)
from . import _fbfkit as _impl

__version__ = "0.1.0"


def _config(cfg):
    if isinstance(cfg, (str, os.PathLike)):
        with open(cfg) as f:
            return json.load(f)
    return cfg


def run_experiment(config, seed=0, out=""):
    return _impl.run_experiment(_config(config), seed, out)


def expectation_sweep(config, seed=0, out=""):
    return _impl.expectation_sweep(_config(config), seed, out)


def compare(configs, seed=0, out=""):
    return _impl.compare_methods([_config(c) for c in configs], seed, out)


__all__ = [
    "Box", "Problem", "toy_problem", "problem_from_json", "run", "gap", "fit_rate",
    "lipschitz_estimate", "spectral_norm", "run_experiment", "expectation_sweep", "compare",
    "Error", "ConfigError", "DivergenceError", "FitError", "DimensionError", "ParameterError",
    "CapabilityError", "NonFiniteError", "DegenerateSetError", "ZeroOperatorError",
    "SUMMARY_SCHEMA_VERSION",
]
