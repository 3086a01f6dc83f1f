"""
Registry of built-in drift (g) and diffusion (h) families.

Scenario files select a family by name and give its parameters; the registry
turns that into the callbacks a ProblemSpec needs. Diffusion callbacks return a
(d, J) matrix whose column j multiplies the increment of noise mode j. Every
callback also accepts a stack of states (P, d) and then returns (P, d) or
(P, d, J); constant results may keep their unstacked shape.
"""

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Family:
    """
    A parameterized function family.

    Attributes:
        name: Registry key used in scenario files
        factory: (params, dim, modes) -> callback
        defaults: Accepted parameters with their default values
        description: One line for --help style listings
    """

    name: str
    factory: Callable[[dict[str, float], int, int], Callable]
    defaults: Mapping[str, float] = field(default_factory=dict)
    description: str = ""

    def build(self, params: Mapping[str, float], dim: int, modes: int) -> Callable:
        unknown = sorted(set(params) - set(self.defaults))
        if unknown:
            raise ConfigError(
                f"Unknown parameters for family '{self.name}': {unknown}",
                [f"accepted parameters: {sorted(self.defaults)}"],
            )
        merged = {**self.defaults, **params}
        return self.factory(merged, dim, modes)


def _unit(dim: int, mode: float) -> np.ndarray:
    if not (float(mode).is_integer() and 0 <= mode < dim):
        raise ConfigError(f"mode must be an integer in [0, {dim - 1}], got {mode}")
    e = np.zeros(dim)
    e[int(mode)] = 1.0
    return e


# Drift families


def _zero_drift(p, dim, modes):
    zero = np.zeros(dim)
    return lambda t, y: zero


def _linear_drift(p, dim, modes):
    gain = p["gain"]
    return lambda t, y: gain * y


def _affine_drift(p, dim, modes):
    direction = _unit(dim, p["mode"])
    amplitude, frequency, offset = p["amplitude"], p["frequency"], p["offset"]

    def g(t, y):
        return amplitude * np.cos(frequency * t) * direction + y / (t + offset)

    return g


def _saturation_drift(p, dim, modes):
    scale = p["scale"]
    return lambda t, y: scale * y / (1.0 + np.abs(y))


def _trig_forcing(p, dim, modes):
    direction = _unit(dim, p["mode"])
    amplitude, frequency, gain = p["amplitude"], p["frequency"], p["gain"]
    return lambda t, y: amplitude * np.sin(frequency * t) * direction + gain * np.sin(y)


# Diffusion families


def _zero_diffusion(p, dim, modes):
    zero = np.zeros((dim, modes))
    return lambda t, y: zero


def _diagonal(values: np.ndarray, dim: int, modes: int) -> np.ndarray:
    # values has shape (..., dim); the result (..., dim, modes)
    out = np.zeros((*values.shape[:-1], dim, modes))
    n = min(dim, modes)
    out[..., np.arange(n), np.arange(n)] = values[..., :n]
    return out


def _constant_diffusion(p, dim, modes):
    matrix = _diagonal(np.full(dim, p["sigma"]), dim, modes)
    return lambda t, y: matrix


def _multiplicative_diffusion(p, dim, modes):
    sigma = p["sigma"]
    return lambda t, y: _diagonal(sigma * y, dim, modes)


def _tanh_diffusion(p, dim, modes):
    sigma = p["sigma"]
    return lambda t, y: _diagonal(sigma * np.tanh(y), dim, modes)


def _saturation_first_mode(p, dim, modes):
    scale, weight = p["scale"], p["time_weight"]
    first = _unit(dim, 0)

    def h(t, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros((*y.shape[:-1], dim, modes))
        out[..., 0] = scale * (weight / (1.0 + np.exp(t)) * first + np.abs(y) / (1.0 + np.abs(y)))
        return out

    return h


DRIFT_FAMILIES: dict[str, Family] = {
    f.name: f
    for f in (
        Family("zero", _zero_drift, {}, "g = 0"),
        Family("linear", _linear_drift, {"gain": 0.0}, "g = gain * y"),
        Family(
            "affine_drift",
            _affine_drift,
            {"amplitude": 0.4, "frequency": 1.0, "mode": 0.0, "offset": 5.0},
            "g = amplitude cos(frequency t) e_mode + y / (t + offset)",
        ),
        Family("saturation", _saturation_drift, {"scale": 1.0}, "g = scale * y / (1 + |y|)"),
        Family(
            "trig_forcing",
            _trig_forcing,
            {"amplitude": 1.0, "frequency": 1.0, "mode": 0.0, "gain": 0.0},
            "g = amplitude sin(frequency t) e_mode + gain sin(y)",
        ),
    )
}

DIFFUSION_FAMILIES: dict[str, Family] = {
    f.name: f
    for f in (
        Family("zero", _zero_diffusion, {}, "h = 0"),
        Family("constant", _constant_diffusion, {"sigma": 1.0}, "h = sigma on the diagonal"),
        Family(
            "multiplicative", _multiplicative_diffusion, {"sigma": 1.0}, "h_ii = sigma * y_i"
        ),
        Family("tanh", _tanh_diffusion, {"sigma": 0.1}, "h_ii = sigma * tanh(y_i)"),
        Family(
            "saturation_first_mode",
            _saturation_first_mode,
            {"scale": 0.2, "time_weight": 2.0},
            "column 0 = scale (time_weight / (1 + e^t) e_0 + |y| / (1 + |y|))",
        ),
    )
}


def build_drift(name: str, params: Mapping[str, float], dim: int, modes: int) -> Callable:
    if name not in DRIFT_FAMILIES:
        raise ConfigError(f"Unknown drift family '{name}'", [f"known: {sorted(DRIFT_FAMILIES)}"])
    return DRIFT_FAMILIES[name].build(params, dim, modes)


def build_diffusion(name: str, params: Mapping[str, float], dim: int, modes: int) -> Callable:
    if name not in DIFFUSION_FAMILIES:
        raise ConfigError(
            f"Unknown diffusion family '{name}'", [f"known: {sorted(DIFFUSION_FAMILIES)}"]
        )
    return DIFFUSION_FAMILIES[name].build(params, dim, modes)
