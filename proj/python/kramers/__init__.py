"""Small-mass limit of Langevin dynamics with state-dependent friction."""

import json

from ._core import (
    ConfigError,
    DomainError,
    HorizonTooShort,
    KramersError,
    Model,
    ParameterDomain,
    SingularSystem,
    builtin_model_names,
    estimate_exceedance,
    estimate_exit_probability,
    expm,
    integral_lyapunov,
    simulate_coupled,
    solve_lyapunov,
    wilson_interval,
)
from ._core import make_model as _make_model

__all__ = [
    "ConfigError",
    "DomainError",
    "HorizonTooShort",
    "KramersError",
    "Model",
    "ParameterDomain",
    "SingularSystem",
    "builtin_model_names",
    "estimate_exceedance",
    "estimate_exit_probability",
    "expm",
    "integral_lyapunov",
    "lyapunov_check",
    "make_model",
    "model_params",
    "simulate_coupled",
    "solve_lyapunov",
    "wilson_interval",
]


def make_model(name, **params):
    """Built-in model by name, e.g. make_model("wall-gravity", kappa=20.0)."""
    return _make_model(name, json.dumps(params))


def model_params(model):
    return json.loads(model.params_json)


def lyapunov_check(model):
    """p1/p2 report for the model's potential as a dict."""
    return json.loads(model.lyapunov_check_json())
