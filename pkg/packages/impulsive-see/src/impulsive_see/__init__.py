"""
impulsive-see - impulsive stochastic evolution equations in a spectral basis.

This package simulates controlled semilinear stochastic evolution equations with
fixed-time impulses, checks the constants of the existence and uniqueness
theorems, runs the Picard iteration and searches for optimal controls.
"""

__version__ = "0.1.0"

from .control import AdmissibleSet, ControlSignal, RunningCost, cost, optimize, quadratic_cost
from .dynamics import ImpulseEvent, Path, ProblemSpec, monte_carlo, propagate_ensemble, simulate_path
from .errors import ConfigError, ImpulsiveSEEError
from .picard import contraction_ratio, picard_solve
from .qwiener import NoiseSpec, sample_increments, time_grid
from .spectral_core import SemigroupSpec, semigroup_apply
from .wellposedness import LipschitzBundle, check_all, theorem1_check, theorem2_check

__all__ = [
    "AdmissibleSet",
    "ConfigError",
    "ControlSignal",
    "ImpulseEvent",
    "ImpulsiveSEEError",
    "LipschitzBundle",
    "NoiseSpec",
    "Path",
    "ProblemSpec",
    "RunningCost",
    "SemigroupSpec",
    "check_all",
    "contraction_ratio",
    "cost",
    "monte_carlo",
    "optimize",
    "picard_solve",
    "propagate_ensemble",
    "quadratic_cost",
    "sample_increments",
    "semigroup_apply",
    "simulate_path",
    "theorem1_check",
    "theorem2_check",
    "time_grid",
]
