"""
Shared fixtures: small problems with known answers.
"""

import numpy as np
import pytest

from impulsive_see.config import build_problem
from impulsive_see.dynamics import ImpulseEvent, ProblemSpec
from impulsive_see.presets import contraction_toy, dirichlet_heat_impulse
from impulsive_see.qwiener import NoiseSpec
from impulsive_see.spectral_core import SemigroupSpec


def _zero_drift(t, y):
    return np.zeros_like(y)


@pytest.fixture
def ou_spec():
    """dy = -y dt + dW on [0, 2], y0 = 0"""
    return ProblemSpec(
        sg=SemigroupSpec(np.array([-1.0])),
        B=np.zeros((1, 1)),
        impulses=(),
        g=_zero_drift,
        h=lambda t, y: np.ones((1, 1)),
        noise=NoiseSpec(np.array([1.0])),
        horizon=2.0,
        y0=np.zeros(1),
    )


@pytest.fixture
def deterministic_jump_spec():
    """dy = -y dt, y0 = 1, one jump y(1/2+) = 2 y(1/2-) + 0.5"""
    return ProblemSpec(
        sg=SemigroupSpec(np.array([-1.0])),
        B=np.ones((1, 1)),
        impulses=(ImpulseEvent(t=0.5, D=[[1.0]], E=[[1.0]], v=[0.5]),),
        g=_zero_drift,
        h=lambda t, y: np.zeros((1, 1)),
        noise=NoiseSpec(np.array([1.0])),
        horizon=1.0,
        y0=np.ones(1),
    )


@pytest.fixture
def heat_example_spec():
    """The built-in application example as a ProblemSpec"""
    return build_problem(dirichlet_heat_impulse())


@pytest.fixture
def contraction_spec():
    """Four heat modes on [0, 1/4] with k = 0.085"""
    return build_problem(contraction_toy())
