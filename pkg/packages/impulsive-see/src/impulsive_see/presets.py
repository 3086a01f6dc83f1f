"""
Built-in scenarios.

dirichlet_heat_impulse is the controlled advection-diffusion example on (0, 1)
with one impulse at t = 1/2; the others are small scenarios with closed-form or
hand-computable answers.
"""

from collections.abc import Callable

from .config import (
    AdmissibleConfig,
    ControlConfig,
    DiffusionConfig,
    DriftConfig,
    ImpulseConfig,
    LipschitzConfig,
    MatrixConfig,
    NoiseConfig,
    OptimizerConfig,
    ScenarioConfig,
    SimulationConfig,
    SpectrumConfig,
    VectorConfig,
)
from .errors import ConfigError

# sin(pi x) is 1/sqrt(2) times the first normalized sine mode.
SINE_FIRST_MODE_COEFFICIENT = 0.7071067811865476


def dirichlet_heat_impulse() -> ScenarioConfig:
    return ScenarioConfig(
        name="dirichlet_heat_impulse",
        description=(
            "dy = (y_xx - y/4 + u + g(t,y)) dt + h(t,y) dW on (0,1) with Dirichlet "
            "conditions, truncated to 32 sine modes, one jump y(1/2+) = 2 y(1/2-) + sin(pi x). "
            "Posed in first-order abstract form. The scalar diffusion acts on the first "
            "noise mode only."
        ),
        horizon=1.0,
        spectrum=SpectrumConfig(family="dirichlet_advection", dim=32),
        noise=NoiseConfig(family="power_law", modes=16, scale=1.0, decay=2.0),
        g=DriftConfig(
            family="affine_drift",
            params={"amplitude": 0.4, "frequency": 1.0, "mode": 0.0, "offset": 5.0},
        ),
        h=DiffusionConfig(family="saturation_first_mode", params={"scale": 0.2, "time_weight": 2.0}),
        B=MatrixConfig(kind="identity"),
        y0=VectorConfig(kind="zero"),
        impulses=[
            ImpulseConfig(
                time=0.5,
                D=MatrixConfig(kind="identity"),
                E=MatrixConfig(kind="identity"),
                v=VectorConfig(kind="unit", mode=0, amplitude=SINE_FIRST_MODE_COEFFICIENT),
            )
        ],
        lipschitz=LipschitzConfig(L_g=0.4, L_h=0.4, Lt_g=0.04, Lt_h=0.04),
        control=ControlConfig(intervals=16, admissible=AdmissibleConfig(kind="box", lower=-1.0, upper=1.0)),
        simulation=SimulationConfig(dt=0.01, n_paths=10000),
        optimizer=OptimizerConfig(budget=500, cost_paths=16),
    )


def scalar_ou() -> ScenarioConfig:
    return ScenarioConfig(
        name="scalar_ou",
        description="dy = -y dt + dW, y0 = 0: Ornstein-Uhlenbeck with Var y(T) = (1 - e^{-2T}) / 2.",
        horizon=2.0,
        spectrum=SpectrumConfig(family="explicit", dim=1, mu=[-1.0]),
        noise=NoiseConfig(family="explicit", modes=1, eigenvalues=[1.0]),
        h=DiffusionConfig(family="constant", params={"sigma": 1.0}),
        B=MatrixConfig(kind="zero"),
        lipschitz=LipschitzConfig(L_h=1.0),
        control=ControlConfig(intervals=1),
        simulation=SimulationConfig(dt=0.02, n_paths=10000),
    )


def scalar_lq() -> ScenarioConfig:
    return ScenarioConfig(
        name="scalar_lq",
        description="dy = (-y + u) dt + 0.5 dW, y0 = 1, cost E int y^2 + u^2 dt over u in [-1, 1].",
        horizon=1.0,
        spectrum=SpectrumConfig(family="explicit", dim=1, mu=[-1.0]),
        noise=NoiseConfig(family="explicit", modes=1, eigenvalues=[1.0]),
        h=DiffusionConfig(family="constant", params={"sigma": 0.5}),
        B=MatrixConfig(kind="identity"),
        y0=VectorConfig(kind="unit", mode=0, amplitude=1.0),
        lipschitz=LipschitzConfig(L_h=0.25),
        control=ControlConfig(intervals=4, admissible=AdmissibleConfig(kind="box", lower=-1.0, upper=1.0)),
        simulation=SimulationConfig(dt=0.01, n_paths=1000),
        optimizer=OptimizerConfig(budget=600, a0=1.0, c0=0.1, cost_paths=32),
    )


def contraction_toy() -> ScenarioConfig:
    return ScenarioConfig(
        name="contraction_toy",
        description=(
            "Four heat modes, T = 1/4, g = y/10, h = tanh(y)/10, one impulse with D = 0. "
            "Both Lipschitz constants are 1/100 and N = 1, so k = 0.085."
        ),
        horizon=0.25,
        spectrum=SpectrumConfig(family="heat", dim=4),
        noise=NoiseConfig(family="power_law", modes=4, scale=1.0, decay=2.0),
        g=DriftConfig(family="linear", params={"gain": 0.1}),
        h=DiffusionConfig(family="tanh", params={"sigma": 0.1}),
        B=MatrixConfig(kind="identity"),
        y0=VectorConfig(kind="explicit", values=[1.0, 0.5, 0.25, 0.125]),
        impulses=[
            ImpulseConfig(
                time=0.125,
                D=MatrixConfig(kind="zero"),
                E=MatrixConfig(kind="identity"),
                v=VectorConfig(kind="unit", mode=0, amplitude=0.5),
            )
        ],
        lipschitz=LipschitzConfig(L_g=0.01, L_h=0.01, Lt_g=0.01, Lt_h=0.01),
        control=ControlConfig(intervals=4, admissible=AdmissibleConfig(kind="ball", radius=1.0)),
        simulation=SimulationConfig(dt=0.0125, n_paths=1000, picard_paths=256, picard_tol=1e-8),
    )


PRESETS: dict[str, Callable[[], ScenarioConfig]] = {
    "dirichlet_heat_impulse": dirichlet_heat_impulse,
    "scalar_ou": scalar_ou,
    "scalar_lq": scalar_lq,
    "contraction_toy": contraction_toy,
}


def get_preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}'", [f"available: {', '.join(PRESETS)}"])
    return PRESETS[name]()
