"""
Q-Wiener noise - truncated Karhunen-Loeve increments and an Ito isometry check.

W(t) = sum_j sqrt(lambda_j) W_j(t) e_j with independent scalar Brownian motions
W_j. A NoisePath stores the increments of every retained mode on a time grid.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatchError, ImpulsiveSEEError, ScheduleError
from .parallel import DEFAULT_THREADS, parallel_map
from .streams import NOISE_STREAM, path_generator

logger = logging.getLogger(__name__)

DEFAULT_NOISE_MODES = 16
# Two grid nodes closer than this (relative to the horizon) are merged.
GRID_MERGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class NoiseSpec:
    """
    Covariance eigenvalues of Q.

    Attributes:
        lam: Nonnegative eigenvalues, one per noise mode
    """

    lam: npt.NDArray[np.float64]

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=np.float64)
        if lam.ndim != 1 or lam.size < 1:
            raise DimensionMismatchError("noise eigenvalues", (1,), lam.shape)
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ImpulsiveSEEError("Noise eigenvalues must be finite and nonnegative")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def modes(self) -> int:
        return int(self.lam.size)

    @property
    def trace(self) -> float:
        """Tr(Q) = sum of the eigenvalues."""
        return float(np.sum(self.lam))


@dataclass(frozen=True)
class NoisePath:
    """
    Brownian increments of one realization.

    Attributes:
        grid: Strictly increasing times from 0 to T
        dW: Increments, shape (len(grid) - 1, modes)
        seed: Seed the path was drawn from
        path_index: Index of the path within its seed
    """

    grid: npt.NDArray[np.float64]
    dW: npt.NDArray[np.float64]
    seed: int = 0
    path_index: int = 0

    def __post_init__(self):
        if self.dW.ndim != 2 or self.dW.shape[0] != self.grid.size - 1:
            raise DimensionMismatchError(
                "noise increments", (self.grid.size - 1, -1), self.dW.shape
            )

    @property
    def steps(self) -> int:
        return int(self.dW.shape[0])


def power_law_spectrum(modes: int = DEFAULT_NOISE_MODES, scale: float = 1.0, decay: float = 2.0):
    """Eigenvalues scale * j^(-decay), j = 1..modes (trace class for decay > 1)."""
    j = np.arange(1, modes + 1, dtype=np.float64)
    return scale * j ** (-decay)


def validate_grid(grid: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Check that grid starts at 0 and increases strictly."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size < 2:
        raise ScheduleError("Time grid needs at least two nodes")
    if g[0] != 0.0:
        raise ScheduleError(f"Time grid must start at 0, starts at {g[0]}")
    if not np.all(np.diff(g) > 0):
        raise ScheduleError("Time grid must be strictly increasing")
    return g


def time_grid(horizon: float, dt: float, events: npt.ArrayLike = ()) -> npt.NDArray[np.float64]:
    """
    Uniform grid on [0, horizon] refined so every event time is a node.

    Args:
        horizon: Final time T
        dt: Target step
        events: Times that must appear exactly (impulses, control breakpoints)

    Returns:
        Strictly increasing grid containing 0, T and every event
    """
    if horizon <= 0 or dt <= 0:
        raise ScheduleError(f"horizon and dt must be positive, got {horizon}, {dt}")
    n = max(1, int(np.ceil(horizon / dt - 1e-9)))
    uniform = np.linspace(0.0, horizon, n + 1)
    exact = np.unique(np.asarray(events, dtype=np.float64))
    exact = exact[(exact > 0) & (exact < horizon)]
    tol = GRID_MERGE_TOLERANCE * horizon
    if exact.size:
        # Uniform nodes sitting on top of an event are replaced by the event itself.
        gap = np.min(np.abs(uniform[:, None] - exact[None, :]), axis=1)
        uniform = uniform[(gap > tol) | (uniform == 0.0) | (uniform == horizon)]
    merged = np.union1d(uniform, exact)
    merged[0], merged[-1] = 0.0, horizon
    return merged


def sample_increments(ns: NoiseSpec, grid: npt.ArrayLike, seed: int, path_index: int) -> NoisePath:
    """
    Draw the increments of one noise realization.

    Increment dW[n, j] is Gaussian with mean 0 and variance lam_j (grid[n+1] - grid[n]);
    the draw depends only on (seed, path_index).
    """
    g = validate_grid(grid)
    rng = path_generator(seed, path_index, NOISE_STREAM)
    z = rng.standard_normal((g.size - 1, ns.modes))
    dW = z * np.sqrt(np.diff(g)[:, None] * ns.lam[None, :])
    return NoisePath(grid=g, dW=dW, seed=seed, path_index=path_index)


def coarsen_increments(dW: np.ndarray, factor: int) -> np.ndarray:
    """Sum blocks of `factor` consecutive increments along the step axis (second to last)."""
    steps = dW.shape[-2]
    if factor < 1 or steps % factor:
        raise ScheduleError(f"Cannot coarsen {steps} steps by a factor of {factor}")
    return dW.reshape(*dW.shape[:-2], steps // factor, factor, dW.shape[-1]).sum(axis=-2)


def coarsen(noise: NoisePath, factor: int) -> NoisePath:
    """
    Sum blocks of `factor` consecutive increments.

    The coarse path is the same Brownian path observed on every factor-th node.
    """
    return NoisePath(
        grid=noise.grid[::factor].copy(),
        dW=coarsen_increments(noise.dW, factor), seed=noise.seed, path_index=noise.path_index
    )


@dataclass(frozen=True)
class ItoIsometryReport:
    """Monte-Carlo second moment of a stochastic integral against its analytic value."""

    mc_estimate: float
    analytic: float
    standard_error: float
    z_score: float
    n_paths: int


def ito_isometry_check(
    ns: NoiseSpec,
    grid: npt.ArrayLike,
    integrand: npt.ArrayLike,
    n_paths: int,
    seed: int,
    threads: int = DEFAULT_THREADS,
) -> ItoIsometryReport:
    """
    Compare E||sum_n chi_n dW_n||^2 with sum_n ||chi_n||^2_{L2_0} dt_n.

    Args:
        ns: Noise covariance
        grid: Time grid
        integrand: Deterministic integrand, either one value per step (applied to every
            mode) or an array of shape (steps, modes) of per-mode coefficients
        n_paths: Monte-Carlo sample size, at least 100
        seed: Seed for the noise paths
        threads: Worker count

    Returns:
        ItoIsometryReport with z_score = |mc - analytic| / standard error
    """
    g = validate_grid(grid)
    steps = g.size - 1
    if n_paths < 100:
        raise ImpulsiveSEEError(f"ito_isometry_check needs at least 100 paths, got {n_paths}")
    chi = np.asarray(integrand, dtype=np.float64)
    if chi.ndim == 0:
        chi = np.full((steps, ns.modes), float(chi))
    elif chi.ndim == 1:
        if chi.size != steps:
            raise DimensionMismatchError("integrand", (steps,), chi.shape)
        chi = np.repeat(chi[:, None], ns.modes, axis=1)
    elif chi.shape != (steps, ns.modes):
        raise DimensionMismatchError("integrand", (steps, ns.modes), chi.shape)

    analytic = float(np.sum(chi**2 * np.diff(g)[:, None] * ns.lam[None, :]))

    def squared_integral(path_index: int) -> float:
        noise = sample_increments(ns, g, seed, path_index)
        per_mode = np.sum(chi * noise.dW, axis=0)
        return float(per_mode @ per_mode)

    samples = np.array(parallel_map(squared_integral, range(n_paths), threads))
    mc = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n_paths))
    if se > 0:
        z = abs(mc - analytic) / se
    else:
        z = 0.0 if mc == analytic else float("inf")
    logger.debug("Ito isometry: mc=%.6g analytic=%.6g z=%.3f", mc, analytic, z)
    return ItoIsometryReport(
        mc_estimate=mc, analytic=analytic, standard_error=se, z_score=z, n_paths=n_paths
    )
