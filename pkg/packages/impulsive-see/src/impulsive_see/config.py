"""
Scenario configuration - the JSON schema of a problem and the builders that turn it
into library objects.

Every model forbids unknown keys. Validation failures are collected and reported
together, one line per offending key path.
"""

import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .control import (
    DEFAULT_BUDGET,
    DEFAULT_INTERVALS,
    AdmissibleSet,
    ControlSignal,
    RunningCost,
    SPSASettings,
    quadratic_cost,
)
from .dynamics import ImpulseEvent, ProblemSpec
from .errors import ConfigError, DimensionMismatchError
from .families import DIFFUSION_FAMILIES, DRIFT_FAMILIES, build_diffusion, build_drift
from .picard import DEFAULT_PICARD_PATHS
from .qwiener import DEFAULT_NOISE_MODES, NoiseSpec, power_law_spectrum, time_grid
from .spectral_core import DEFAULT_DIMENSION, SemigroupSpec, dirichlet_advection_spectrum, heat_spectrum
from .wellposedness import LipschitzBundle

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MatrixConfig(_Strict):
    """
    A linear operator in declarative form.

    identity/zero/scaled_identity need no data; diagonal takes `diagonal`, dense takes
    `rows`. Non-square identities put ones on the leading diagonal.
    """

    kind: Literal["identity", "zero", "scaled_identity", "diagonal", "dense"] = "identity"
    scale: float = 1.0
    diagonal: list[float] | None = None
    rows: list[list[float]] | None = None

    @model_validator(mode="after")
    def _data_present(self):
        if self.kind == "diagonal" and not self.diagonal:
            raise ValueError("kind 'diagonal' needs a non-empty 'diagonal' list")
        if self.kind == "dense":
            if not self.rows:
                raise ValueError("kind 'dense' needs 'rows'")
            if len({len(r) for r in self.rows}) != 1:
                raise ValueError("all 'rows' of a dense matrix must have the same length")
        return self

    def build(self, n_rows: int, n_cols: int) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(n_rows, n_cols)
        if self.kind == "zero":
            return np.zeros((n_rows, n_cols))
        if self.kind == "scaled_identity":
            return self.scale * np.eye(n_rows, n_cols)
        if self.kind == "diagonal":
            n = min(n_rows, n_cols)
            if len(self.diagonal) != n:
                raise DimensionMismatchError("diagonal matrix", n, len(self.diagonal))
            out = np.zeros((n_rows, n_cols))
            out[np.arange(n), np.arange(n)] = self.diagonal
            return out
        dense = np.asarray(self.rows, dtype=np.float64)
        if dense.shape != (n_rows, n_cols):
            raise DimensionMismatchError("dense matrix", (n_rows, n_cols), dense.shape)
        return dense


class VectorConfig(_Strict):
    """A vector: all zeros, amplitude times a coordinate vector, or explicit values."""

    kind: Literal["zero", "unit", "explicit"] = "zero"
    mode: int = Field(0, ge=0)
    amplitude: float = 1.0
    values: list[float] | None = None

    @model_validator(mode="after")
    def _values_present(self):
        if self.kind == "explicit" and not self.values:
            raise ValueError("kind 'explicit' needs a non-empty 'values' list")
        return self

    def build(self, dim: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(dim)
        if self.kind == "unit":
            if self.mode >= dim:
                raise DimensionMismatchError("unit vector mode", dim, self.mode)
            out = np.zeros(dim)
            out[self.mode] = self.amplitude
            return out
        if len(self.values) != dim:
            raise DimensionMismatchError("explicit vector", dim, len(self.values))
        return np.asarray(self.values, dtype=np.float64)


class SpectrumConfig(_Strict):
    family: Literal["dirichlet_advection", "heat", "explicit"] = "dirichlet_advection"
    dim: int = Field(DEFAULT_DIMENSION, ge=1)
    diffusivity: float = Field(1.0, gt=0)
    mu: list[float] | None = None
    bound_M: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _explicit_mu(self):
        if self.family == "explicit":
            if not self.mu:
                raise ValueError("family 'explicit' needs a non-empty 'mu' list")
            if len(self.mu) != self.dim:
                raise ValueError(f"'mu' has {len(self.mu)} entries but dim = {self.dim}")
        return self

    def build(self) -> SemigroupSpec:
        if self.family == "dirichlet_advection":
            mu = dirichlet_advection_spectrum(self.dim)
        elif self.family == "heat":
            mu = heat_spectrum(self.dim, self.diffusivity)
        else:
            mu = np.asarray(self.mu, dtype=np.float64)
        return SemigroupSpec(mu=mu, bound_M=self.bound_M)


class NoiseConfig(_Strict):
    """Q eigenvalues: lambda_j = scale / j^decay, or an explicit list."""

    family: Literal["power_law", "explicit"] = "power_law"
    modes: int = Field(DEFAULT_NOISE_MODES, ge=1)
    scale: float = Field(1.0, ge=0)
    decay: float = 2.0
    eigenvalues: list[float] | None = None

    @model_validator(mode="after")
    def _explicit_eigenvalues(self):
        if self.family == "explicit":
            if not self.eigenvalues:
                raise ValueError("family 'explicit' needs a non-empty 'eigenvalues' list")
            if len(self.eigenvalues) != self.modes:
                raise ValueError(f"'eigenvalues' has {len(self.eigenvalues)} entries but modes = {self.modes}")
        return self

    def build(self) -> NoiseSpec:
        if self.family == "explicit":
            return NoiseSpec(np.asarray(self.eigenvalues, dtype=np.float64))
        return NoiseSpec(power_law_spectrum(self.modes, self.scale, self.decay))


def _check_params(family: str, params: dict[str, float], registry) -> None:
    unknown = sorted(set(params) - set(registry[family].defaults))
    if unknown:
        raise ValueError(f"unknown parameters {unknown} for family '{family}'")


class DriftConfig(_Strict):
    family: str = "zero"
    params: dict[str, float] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known(cls, v: str) -> str:
        if v not in DRIFT_FAMILIES:
            raise ValueError(f"unknown drift family '{v}' (known: {', '.join(sorted(DRIFT_FAMILIES))})")
        return v

    @model_validator(mode="after")
    def _params(self):
        _check_params(self.family, self.params, DRIFT_FAMILIES)
        return self


class DiffusionConfig(_Strict):
    family: str = "zero"
    params: dict[str, float] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known(cls, v: str) -> str:
        if v not in DIFFUSION_FAMILIES:
            raise ValueError(
                f"unknown diffusion family '{v}' (known: {', '.join(sorted(DIFFUSION_FAMILIES))})"
            )
        return v

    @model_validator(mode="after")
    def _params(self):
        _check_params(self.family, self.params, DIFFUSION_FAMILIES)
        return self


class ImpulseConfig(_Strict):
    time: float
    D: MatrixConfig = Field(default_factory=MatrixConfig)
    E: MatrixConfig = Field(default_factory=MatrixConfig)
    v: VectorConfig = Field(default_factory=VectorConfig)


class LipschitzConfig(_Strict):
    """Squared-form growth (L) and Lipschitz (Lt) constants claimed for g and h."""

    L_g: float = Field(0.0, ge=0)
    L_h: float = Field(0.0, ge=0)
    Lt_g: float = Field(0.0, ge=0)
    Lt_h: float = Field(0.0, ge=0)


class AdmissibleConfig(_Strict):
    kind: Literal["box", "ball"] = "box"
    lower: float = -1.0
    upper: float = 1.0
    center: float = 0.0
    radius: float = Field(1.0, ge=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.kind == "box" and self.lower > self.upper:
            raise ValueError(f"box needs lower <= upper, got {self.lower} > {self.upper}")
        return self


class ControlConfig(_Strict):
    intervals: int = Field(DEFAULT_INTERVALS, ge=1)
    initial: float = 0.0
    admissible: AdmissibleConfig = Field(default_factory=AdmissibleConfig)


class CostConfig(_Strict):
    """l(t, y, u) = state_weight ||y||^2 + control_weight ||u||^2."""

    family: Literal["quadratic"] = "quadratic"
    state_weight: float = Field(1.0, ge=0)
    control_weight: float = Field(1.0, gt=0)


class SimulationConfig(_Strict):
    dt: float = Field(0.01, gt=0)
    seed: int = Field(0, ge=0)
    n_paths: int = Field(1000, ge=1)
    picard_paths: int = Field(DEFAULT_PICARD_PATHS, ge=1)
    picard_tol: float = Field(1e-8, gt=0)
    picard_max_iter: int = Field(50, ge=1)
    audit_samples: int = Field(1000, ge=1)
    audit_radius: float = Field(4.0, gt=0)


class OptimizerConfig(_Strict):
    budget: int = Field(DEFAULT_BUDGET, ge=1)
    a0: float = Field(0.2, gt=0)
    c0: float = Field(0.1, gt=0)
    A: float = Field(10.0, ge=0)
    alpha: float = Field(0.602, gt=0)
    gamma: float = Field(0.101, gt=0)
    cost_paths: int = Field(32, ge=2)


class ScenarioConfig(_Strict):
    """
    A complete controlled impulsive problem with its numerical settings.

    `control_dim` defaults to the state dimension. Impulse input vectors `v` live in
    the control space, so E is built with shape (d, control_dim).
    """

    name: str = "scenario"
    description: str = ""
    horizon: float = Field(1.0, gt=0)
    spectrum: SpectrumConfig = Field(default_factory=SpectrumConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    g: DriftConfig = Field(default_factory=DriftConfig)
    h: DiffusionConfig = Field(default_factory=DiffusionConfig)
    B: MatrixConfig = Field(default_factory=MatrixConfig)
    control_dim: int | None = Field(None, ge=1)
    y0: VectorConfig = Field(default_factory=VectorConfig)
    impulses: list[ImpulseConfig] = Field(default_factory=list)
    lipschitz: LipschitzConfig = Field(default_factory=LipschitzConfig)
    control: ControlConfig = Field(default_factory=ControlConfig)
    cost: CostConfig = Field(default_factory=CostConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)

    @model_validator(mode="after")
    def _schedule(self):
        problems = []
        previous = 0.0
        for k, imp in enumerate(self.impulses):
            if not 0.0 < imp.time < self.horizon:
                problems.append(
                    f"impulses.{k}.time: impulse time outside (0,T) "
                    f"(time = {imp.time}, horizon = {self.horizon})"
                )
            elif imp.time <= previous:
                problems.append(f"impulses.{k}.time: impulse times must increase strictly")
            previous = max(previous, imp.time)
        mode = self.g.params.get("mode")
        if mode is not None and not (float(mode).is_integer() and 0 <= mode < self.state_dim):
            problems.append(f"g.params.mode: must be an integer in [0, {self.state_dim - 1}], got {mode}")
        if problems:
            raise ValueError("\n".join(problems))
        return self

    @property
    def state_dim(self) -> int:
        return self.spectrum.dim

    @property
    def input_dim(self) -> int:
        return self.control_dim or self.spectrum.dim


def _violations(error: ValidationError) -> list[str]:
    lines = []
    for err in error.errors():
        path = ".".join(str(p) for p in err["loc"])
        message = err["msg"].removeprefix("Value error, ")
        for line in message.splitlines():
            lines.append(f"{path}: {line}" if path else line)
    return lines


def parse_config(data: object, source: str = "<data>") -> ScenarioConfig:
    """Validate an already-decoded JSON document."""
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid scenario configuration in {source}", _violations(e)) from e


def load_config(path: str | Path) -> ScenarioConfig:
    """
    Read and validate a scenario file.

    Raises:
        ConfigError: Unreadable or empty file, malformed JSON (with line and column),
            or schema violations (every offending key listed)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    if not text.strip():
        raise ConfigError(f"Config file {path} is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Config file {path} is not valid JSON", [f"line {e.lineno}, column {e.colno}: {e.msg}"]
        ) from e
    config = parse_config(data, source=str(path))
    logger.debug("Loaded scenario '%s' from %s", config.name, path)
    return config


def dump_config(config: ScenarioConfig) -> str:
    return config.model_dump_json(indent=2)


# Builders


def build_problem(config: ScenarioConfig) -> ProblemSpec:
    d, m = config.state_dim, config.input_dim
    noise = config.noise.build()
    impulses = tuple(
        ImpulseEvent(t=imp.time, D=imp.D.build(d, d), E=imp.E.build(d, m), v=imp.v.build(m))
        for imp in config.impulses
    )
    return ProblemSpec(
        sg=config.spectrum.build(),
        B=config.B.build(d, m),
        impulses=impulses,
        g=build_drift(config.g.family, config.g.params, d, noise.modes),
        h=build_diffusion(config.h.family, config.h.params, d, noise.modes),
        noise=noise,
        horizon=config.horizon,
        y0=config.y0.build(d),
        vectorized=True,
    )


def build_lipschitz(config: ScenarioConfig) -> LipschitzBundle:
    lip = config.lipschitz
    return LipschitzBundle(L_g=lip.L_g, L_h=lip.L_h, Lt_g=lip.Lt_g, Lt_h=lip.Lt_h)


def build_admissible(config: ScenarioConfig) -> AdmissibleSet:
    ad, m = config.control.admissible, config.input_dim
    if ad.kind == "box":
        return AdmissibleSet.box(np.full(m, ad.lower), np.full(m, ad.upper))
    return AdmissibleSet.ball(np.full(m, ad.center), ad.radius)


def build_initial_control(config: ScenarioConfig) -> ControlSignal:
    return ControlSignal.constant(
        config.horizon, config.input_dim, config.control.initial, config.control.intervals
    )


def build_running_cost(config: ScenarioConfig) -> RunningCost:
    return quadratic_cost(config.cost.state_weight, config.cost.control_weight)


def build_spsa_settings(config: ScenarioConfig) -> SPSASettings:
    opt = config.optimizer
    return SPSASettings(
        a0=opt.a0, c0=opt.c0, A=opt.A, alpha=opt.alpha, gamma=opt.gamma, cost_paths=opt.cost_paths
    )


def build_grid(config: ScenarioConfig, dt: float | None = None) -> np.ndarray:
    """Uniform grid refined with every impulse time and control breakpoint."""
    breakpoints = np.linspace(0.0, config.horizon, config.control.intervals + 1)
    events = np.concatenate([[imp.time for imp in config.impulses], breakpoints])
    return time_grid(config.horizon, dt or config.simulation.dt, events)
