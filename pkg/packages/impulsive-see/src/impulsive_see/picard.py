"""
Picard iteration - successive approximation y <- F1 y + F2 y of the discretized
mild-solution equation, with the empirical contraction ratio.

Distances are measured in the discrete PC norm: the supremum over grid nodes
(and post-jump states) of the ensemble mean of ||y_new - y_old||^2.
"""

import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .dynamics import Path, ProblemSpec, propagate
from .errors import ImpulsiveSEEError, ScheduleError
from .parallel import DEFAULT_THREADS, parallel_map
from .qwiener import NoisePath

logger = logging.getLogger(__name__)

DEFAULT_PICARD_PATHS = 256


@dataclass
class PicardResult:
    """
    Outcome of picard_solve.

    Attributes:
        paths: Last iterate, one path per noise realization
        iterate_distances: d(y^{n+1}, y^n) for every sweep
        converged: Whether the last distance fell below tol
        iterations: Number of sweeps performed
    """

    paths: list[Path]
    iterate_distances: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0


def _apply_solution_map(spec, control, noise_ensemble, previous, i: int) -> Path:
    return propagate(spec, control, noise_ensemble[i], frozen=previous[i])


def pc_distance(new: list[Path], old: list[Path]) -> float:
    """sup over nodes of the ensemble mean squared difference."""
    diffs = np.stack(
        [np.sum((a.all_states() - b.all_states()) ** 2, axis=1) for a, b in zip(new, old, strict=True)]
    )
    return float(np.max(np.mean(diffs, axis=0)))


def picard_solve(
    spec: ProblemSpec,
    control,
    noise_ensemble: list[NoisePath],
    tol: float,
    max_iter: int,
    threads: int = DEFAULT_THREADS,
) -> PicardResult:
    """
    Iterate the solution map from the constant path y(t) = y0.

    Each sweep evaluates g and h on the previous iterate (frozen arguments) for every
    noise realization, then measures the ensemble PC distance to the previous
    iterate. Reaching max_iter without convergence is reported, not raised.

    Args:
        spec: Problem description
        control: Control signal (None for u = 0)
        noise_ensemble: Noise realizations sharing one grid
        tol: Stop when the distance drops below tol
        max_iter: Maximum number of sweeps (at least 1)
        threads: Worker count for a sweep
    """
    if tol <= 0:
        raise ImpulsiveSEEError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ImpulsiveSEEError(f"max_iter must be at least 1, got {max_iter}")
    if not noise_ensemble:
        raise ImpulsiveSEEError("picard_solve needs at least one noise path")
    grid = noise_ensemble[0].grid
    if any(n.grid.shape != grid.shape or not np.array_equal(n.grid, grid) for n in noise_ensemble):
        raise ScheduleError("All noise paths of a Picard ensemble must share one grid")

    iterate = [Path.constant(spec, grid) for _ in noise_ensemble]
    result = PicardResult(paths=iterate)
    indices = range(len(noise_ensemble))
    for sweep in range(1, max_iter + 1):
        previous = iterate
        iterate = parallel_map(
            partial(_apply_solution_map, spec, control, noise_ensemble, previous), indices, threads
        )
        distance = pc_distance(iterate, previous)
        result.iterate_distances.append(distance)
        result.iterations = sweep
        result.paths = iterate
        logger.debug("Picard sweep %d: distance %.3e", sweep, distance)
        if distance < tol:
            result.converged = True
            break

    if result.converged:
        logger.info("Picard converged in %d sweeps", result.iterations)
    else:
        logger.warning(
            "Picard did not converge in %d sweeps (last distance %.3e)",
            max_iter,
            result.iterate_distances[-1],
        )
    return result


@dataclass(frozen=True)
class ContractionReport:
    ratios: list[float]
    tail_max: float


def contraction_ratio(iterate_distances: list[float]) -> ContractionReport:
    """
    Ratios d_{n+1} / d_n, skipping zero denominators, and their maximum over the
    second half of the sequence.
    """
    if len(iterate_distances) < 3:
        raise ImpulsiveSEEError("contraction_ratio needs at least 3 recorded distances")
    ratios = [
        float(b / a) for a, b in zip(iterate_distances[:-1], iterate_distances[1:], strict=True) if a > 0
    ]
    if not ratios:
        return ContractionReport(ratios=[], tail_max=0.0)
    tail = ratios[len(ratios) // 2 :]
    return ContractionReport(ratios=ratios, tail_max=float(max(tail)))
