"""
Control - piecewise-constant controls, admissible sets, the Lagrange cost and its
minimization.

The cost J(u) = E int_0^T l(t, y(t), u(t)) dt is estimated by Monte Carlo with
common random numbers: path i always sees the noise drawn from (seed, i), whatever
control is being evaluated. That makes J a deterministic function of the control
for a fixed seed, which the continuous-dependence check and the simultaneous
perturbation search both rely on.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

try:
    from enum import StrEnum
except ImportError:  # Python 3.10
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str.__str__(self)

import numpy as np
import numpy.typing as npt

from .dynamics import ProblemSpec, ensemble_blocks, noise_block, propagate_ensemble, simulate_path
from .errors import CostEvaluationError, DimensionMismatchError, ImpulsiveSEEError, ScheduleError
from .parallel import DEFAULT_THREADS, parallel_map
from .qwiener import sample_increments, validate_grid
from .spectral_core import SpectralState
from .streams import AUDIT_STREAM, PERTURBATION_STREAM, path_generator
from .wellposedness import LipschitzBundle, composition_constants

logger = logging.getLogger(__name__)

DEFAULT_INTERVALS = 16
DEFAULT_BUDGET = 2000
CONVEXITY_SLACK = 1e-9


@dataclass(frozen=True)
class ControlSignal:
    """
    Piecewise-constant control u(t) = values[i] on [breakpoints[i], breakpoints[i+1]).

    Attributes:
        breakpoints: Strictly increasing times from 0 to T
        values: One row of control coefficients per interval, shape (intervals, m)
    """

    breakpoints: npt.NDArray[np.float64]
    values: npt.NDArray[np.float64]

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if b.ndim != 1 or b.size < 2 or b[0] != 0.0 or not np.all(np.diff(b) > 0):
            raise ScheduleError("Control breakpoints must increase strictly from 0")
        if v.ndim != 2 or v.shape[0] != b.size - 1:
            raise DimensionMismatchError("control values", (b.size - 1, -1), v.shape)
        if not np.all(np.isfinite(v)):
            raise ImpulsiveSEEError("Control values must be finite")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(
        cls, horizon: float, dim: int, value: npt.ArrayLike = 0.0, intervals: int = DEFAULT_INTERVALS
    ) -> "ControlSignal":
        """Control with uniform breakpoints and the same value on every interval."""
        row = np.broadcast_to(np.asarray(value, dtype=np.float64), (dim,))
        return cls(np.linspace(0.0, horizon, intervals + 1), np.tile(row, (intervals, 1)))

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def intervals(self) -> int:
        return int(self.values.shape[0])

    def sample(self, times: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Control values at the given times, shape (len(times), m)."""
        t = np.asarray(times, dtype=np.float64)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return self.values[np.clip(idx, 0, self.intervals - 1)]

    def value_at(self, t: float) -> npt.NDArray[np.float64]:
        return self.sample(np.array([t]))[0]

    def with_values(self, values: npt.ArrayLike) -> "ControlSignal":
        return ControlSignal(self.breakpoints, np.reshape(values, self.values.shape))

    def l2_distance_sq(self, other: "ControlSignal") -> float:
        """int_0^T ||u - w||^2 dt (exact for piecewise-constant signals)."""
        if self.dim != other.dim:
            raise DimensionMismatchError("control", self.dim, other.dim)
        knots = np.union1d(self.breakpoints, other.breakpoints)
        mids = 0.5 * (knots[:-1] + knots[1:])
        diff = self.sample(mids) - other.sample(mids)
        return float(np.sum(np.sum(diff**2, axis=1) * np.diff(knots)))

    def energy(self) -> float:
        """int_0^T ||u||^2 dt."""
        return float(np.sum(np.sum(self.values**2, axis=1) * np.diff(self.breakpoints)))


class AdmissibleKind(StrEnum):
    """Families of admissible value sets"""

    BOX = "box"
    BALL = "ball"


@dataclass(frozen=True)
class AdmissibleSet:
    """
    Closed bounded convex set Y of allowed control values.

    A box uses lower/upper; a ball uses center/radius.
    """

    kind: AdmissibleKind
    lower: npt.NDArray[np.float64] | None = None
    upper: npt.NDArray[np.float64] | None = None
    center: npt.NDArray[np.float64] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind == AdmissibleKind.BOX:
            if self.lower is None or self.upper is None:
                raise ImpulsiveSEEError("A box admissible set needs lower and upper bounds")
            lo = np.asarray(self.lower, dtype=np.float64)
            hi = np.asarray(self.upper, dtype=np.float64)
            if lo.shape != hi.shape or np.any(lo > hi) or not np.all(np.isfinite(lo + hi)):
                raise ImpulsiveSEEError("Box bounds must be finite with lower <= upper")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        else:
            if self.center is None or self.radius is None or not self.radius >= 0:
                raise ImpulsiveSEEError("A ball admissible set needs a center and a radius >= 0")
            object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))

    @classmethod
    def box(cls, lower: npt.ArrayLike, upper: npt.ArrayLike) -> "AdmissibleSet":
        return cls(AdmissibleKind.BOX, lower=np.asarray(lower), upper=np.asarray(upper))

    @classmethod
    def ball(cls, center: npt.ArrayLike, radius: float) -> "AdmissibleSet":
        return cls(AdmissibleKind.BALL, center=np.asarray(center), radius=float(radius))

    @property
    def is_singleton(self) -> bool:
        if self.kind == AdmissibleKind.BOX:
            return bool(np.all(self.lower == self.upper))
        return self.radius == 0

    def project_values(self, values: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Euclidean projection of each row onto Y."""
        v = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if self.kind == AdmissibleKind.BOX:
            return np.clip(v, self.lower, self.upper)
        offset = v - self.center
        norms = np.linalg.norm(offset, axis=1, keepdims=True)
        scale = np.where(norms > self.radius, self.radius / np.where(norms > 0, norms, 1.0), 1.0)
        return self.center + offset * scale

    def contains(self, values: npt.ArrayLike, tol: float = 1e-12) -> bool:
        v = np.atleast_2d(np.asarray(values, dtype=np.float64))
        return bool(np.all(np.abs(self.project_values(v) - v) <= tol * (1 + np.abs(v))))


def project(ad: AdmissibleSet, control: ControlSignal) -> ControlSignal:
    """Project every interval value onto the admissible set."""
    return control.with_values(ad.project_values(control.values))


RunningCostFunction = Callable[[float, SpectralState, npt.NDArray[np.float64]], float]


@dataclass(frozen=True)
class RunningCost:
    """
    Integrand l(t, y, u) of the cost with its coercivity data.

    Attributes:
        l: Running cost
        xi: Integrable lower-bound function of time
        d1: State coefficient of the coercivity bound (>= 0)
        d2: Control coefficient of the coercivity bound (> 0)
    """

    l: RunningCostFunction  # noqa: E741
    xi: Callable[[float], float] = field(default=lambda t: 0.0)
    d1: float = 0.0
    d2: float = 1.0

    def __post_init__(self):
        if self.d1 < 0 or self.d2 <= 0:
            raise ImpulsiveSEEError(f"Coercivity needs d1 >= 0 and d2 > 0, got {self.d1}, {self.d2}")


def quadratic_cost(state_weight: float = 1.0, control_weight: float = 1.0) -> RunningCost:
    """l = a ||y||^2 + b ||u||^2 with the matching coercivity constants."""

    def l(t: float, y: SpectralState, u: npt.NDArray[np.float64]) -> float:  # noqa: E743
        return float(state_weight * (y @ y) + control_weight * (u @ u))

    return RunningCost(l=l, d1=state_weight, d2=control_weight)


@dataclass(frozen=True)
class CostEstimate:
    J_estimate: float
    standard_error: float
    per_path: npt.NDArray[np.float64]


def cost(
    spec: ProblemSpec,
    control: ControlSignal,
    rc: RunningCost,
    n_paths: int,
    seed: int,
    grid: npt.ArrayLike,
    threads: int = DEFAULT_THREADS,
) -> CostEstimate:
    """
    Monte-Carlo estimate of J(u) with left-endpoint quadrature along each path.

    Raises:
        CostEvaluationError: l is not finite at some sampled point
    """
    if n_paths < 2:
        raise ImpulsiveSEEError(f"cost needs at least 2 paths, got {n_paths}")
    g = validate_grid(grid)
    nodes = g[:-1]
    dt = np.diff(g)
    u_nodes = control.sample(nodes)

    def block_cost(paths: range) -> np.ndarray:
        block = propagate_ensemble(spec, control, g, noise_block(spec, g, seed, paths))
        # At an impulse node step n starts from y(t_n+), and so does the integrand.
        restart = block.restart_states()
        totals = np.zeros(len(paths))
        for row, path_index in enumerate(paths):
            for n, t in enumerate(nodes):
                value = rc.l(float(t), restart[row, n], u_nodes[n])
                if not np.isfinite(value):
                    raise CostEvaluationError(float(t), path_index, float(value))
                totals[row] += value * dt[n]
        return totals

    blocks = ensemble_blocks(n_paths, nodes.size, max(spec.dim, spec.noise_modes))
    per_path = np.concatenate(parallel_map(block_cost, blocks, threads))
    return CostEstimate(
        J_estimate=float(np.mean(per_path)),
        standard_error=float(np.std(per_path, ddof=1) / np.sqrt(n_paths)),
        per_path=per_path,
    )


def _sample_ball(rng: np.random.Generator, dim: int, radius_sq: float) -> np.ndarray:
    direction = rng.standard_normal(dim)
    direction /= max(np.linalg.norm(direction), 1e-300)
    return direction * np.sqrt(radius_sq) * rng.uniform() ** (1.0 / dim)


@dataclass
class CoercivityAudit:
    samples: int
    violations: list[dict[str, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def audit_A4(
    rc: RunningCost, spec: ProblemSpec, n_samples: int, seed: int, radius: float = 4.0
) -> CoercivityAudit:
    """
    Check l(t, y, u) >= xi(t) + d1 ||y||^2 + d2 ||u||^2 at random points.

    The pointwise inequality implies the expectation form of the coercivity assumption.
    States and controls are drawn from balls with squared radius `radius`.
    """
    if n_samples < 1:
        raise ImpulsiveSEEError("audit_A4 needs at least one sample")
    rng = path_generator(seed, 0, AUDIT_STREAM)
    report = CoercivityAudit(samples=n_samples)
    for _ in range(n_samples):
        t = float(rng.uniform(0.0, spec.horizon))
        y = _sample_ball(rng, spec.dim, radius)
        u = _sample_ball(rng, spec.control_dim, radius)
        lhs = rc.l(t, y, u)
        rhs = rc.xi(t) + rc.d1 * float(y @ y) + rc.d2 * float(u @ u)
        if lhs < rhs - 1e-12 * (1 + abs(rhs)):
            report.violations.append({"t": t, "l": float(lhs), "bound": float(rhs)})
    if report.violations:
        logger.warning("Coercivity audit: %d of %d samples violate", len(report.violations), n_samples)
    return report


def audit_A3(
    rc: RunningCost,
    spec: ProblemSpec,
    ad: AdmissibleSet,
    n_samples: int,
    seed: int,
    radius: float = 4.0,
) -> CoercivityAudit:
    """Midpoint convexity of l in u: l(t,y,(u+w)/2) <= (l(t,y,u) + l(t,y,w))/2 + 1e-9."""
    rng = path_generator(seed, 1, AUDIT_STREAM)
    report = CoercivityAudit(samples=n_samples)
    for _ in range(n_samples):
        t = float(rng.uniform(0.0, spec.horizon))
        y = _sample_ball(rng, spec.dim, radius)
        u, w = ad.project_values(
            np.stack([_sample_ball(rng, spec.control_dim, radius) for _ in range(2)])
        )
        mid = rc.l(t, y, 0.5 * (u + w))
        chord = 0.5 * (rc.l(t, y, u) + rc.l(t, y, w))
        if mid > chord + CONVEXITY_SLACK:
            report.violations.append({"t": t, "midpoint": float(mid), "chord": float(chord)})
    return report


class DependenceStatus(StrEnum):
    """Outcome of a continuous-dependence check"""

    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INAPPLICABLE = "inapplicable"


@dataclass(frozen=True)
class ContinuousDependenceReport:
    lhs_pc_sq: float
    lhs_standard_error: float
    control_dist_sq: float
    C_star: float | None
    bound_satisfied: bool | None
    status: DependenceStatus
    detail: str


def continuous_dependence(
    spec: ProblemSpec,
    lb: LipschitzBundle,
    u1: ControlSignal,
    u2: ControlSignal,
    n_paths: int,
    seed: int,
    grid: npt.ArrayLike,
    threads: int = DEFAULT_THREADS,
    slack_se: float = 3.0,
) -> ContinuousDependenceReport:
    """
    Compare sup_t E||y^{u1} - y^{u2}||^2 with C* int ||u1 - u2||^2.

    Both solutions share the noise of every path. The bound is declared inapplicable
    when either denominator of C* is not positive.
    """
    T = spec.horizon
    M = spec.sg.bound(T)
    N = composition_constants(spec).N
    B_norm = float(np.linalg.norm(spec.B, 2))
    lip = T**2 * lb.Lt_g + T * lb.Lt_h
    den1 = 1.0 - 3.0 * M**2 * lip
    den2 = 1.0 - 6.0 * M**2 * (N + 1.0) * lip
    dist = u1.l2_distance_sq(u2)
    g = validate_grid(grid)

    def difference(path_index: int) -> np.ndarray:
        noise = sample_increments(spec.noise, g, seed, path_index)
        a = simulate_path(spec, u1, noise).all_states()
        b = simulate_path(spec, u2, noise).all_states()
        return np.sum((a - b) ** 2, axis=1)

    sq = np.stack(parallel_map(difference, range(n_paths), threads))
    mean = np.mean(sq, axis=0)
    worst = int(np.argmax(mean))
    lhs = float(mean[worst])
    se = float(np.std(sq[:, worst], ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0

    if den1 <= 0 or den2 <= 0:
        return ContinuousDependenceReport(
            lhs_pc_sq=lhs,
            lhs_standard_error=se,
            control_dist_sq=dist,
            C_star=None,
            bound_satisfied=None,
            status=DependenceStatus.INAPPLICABLE,
            detail=(
                f"Theorem bound inapplicable: 1 - 3M^2(T^2 Lt_g + T Lt_h) = {den1:.6g}, "
                f"1 - 6M^2(N+1)(T^2 Lt_g + T Lt_h) = {den2:.6g}"
            ),
        )

    c_star = max(3.0 * M**2 * B_norm**2 / den1, 6.0 * M**2 * T * (N + 1.0) * B_norm**2 / den2)
    ok = lhs <= c_star * dist + slack_se * se + 1e-14
    return ContinuousDependenceReport(
        lhs_pc_sq=lhs,
        lhs_standard_error=se,
        control_dist_sq=dist,
        C_star=c_star,
        bound_satisfied=ok,
        status=DependenceStatus.SATISFIED if ok else DependenceStatus.VIOLATED,
        detail=f"lhs = {lhs:.6g}, C* dist = {c_star * dist:.6g}, slack = {slack_se * se:.3g}",
    )


@dataclass(frozen=True)
class SPSASettings:
    """
    Gain schedule a_n = a0 / (n + A)^alpha, c_n = c0 / n^gamma (n = 1, 2, ...).
    """

    a0: float = 0.2
    c0: float = 0.1
    A: float = 10.0
    alpha: float = 0.602
    gamma: float = 0.101
    cost_paths: int = 32


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    evaluations: int
    J_best: float
    J_current: float
    step_norm: float


@dataclass(frozen=True)
class OptimizationResult:
    u_star: ControlSignal
    J_star: float
    J_star_standard_error: float
    evaluations: int
    history: list[HistoryEntry]


def optimize(
    spec: ProblemSpec,
    rc: RunningCost,
    ad: AdmissibleSet,
    u_init: ControlSignal,
    budget: int,
    seed: int,
    grid: npt.ArrayLike,
    settings: SPSASettings | None = None,
    threads: int = DEFAULT_THREADS,
) -> OptimizationResult:
    """
    Projected simultaneous-perturbation search for a minimizer of J over Y.

    Every cost evaluation uses the same noise paths. Each iteration spends two
    evaluations on the gradient estimate and one on the new iterate; the
    best-so-far control is returned when the budget runs out. Ties keep the
    earlier control.

    Args:
        spec: Problem description
        rc: Running cost
        ad: Admissible value set
        u_init: Starting control (projected onto Y first)
        budget: Maximum number of cost evaluations, at least 1
        seed: Noise and perturbation seed
        grid: Integration grid
        settings: Gains and Monte-Carlo size
        threads: Worker count for each cost evaluation
    """
    if budget < 1:
        raise ImpulsiveSEEError(f"budget must be at least 1, got {budget}")
    settings = settings or SPSASettings()
    g = validate_grid(grid)

    def evaluate(control: ControlSignal):
        return cost(spec, control, rc, settings.cost_paths, seed, g, threads)

    current = project(ad, u_init)
    first = evaluate(current)
    evaluations = 1
    best, best_J, best_se = current, first.J_estimate, first.standard_error
    history = [HistoryEntry(0, evaluations, best_J, best_J, 0.0)]
    if ad.is_singleton:
        return OptimizationResult(best, best_J, best_se, evaluations, history)

    theta = current.values.ravel().copy()
    n = 0
    while evaluations + 3 <= budget:
        n += 1
        a_n = settings.a0 / (n + settings.A) ** settings.alpha
        c_n = settings.c0 / n**settings.gamma
        delta = path_generator(seed, n, PERTURBATION_STREAM).choice([-1.0, 1.0], size=theta.size)
        plus = project(ad, current.with_values(theta + c_n * delta))
        minus = project(ad, current.with_values(theta - c_n * delta))
        J_plus = evaluate(plus).J_estimate
        J_minus = evaluate(minus).J_estimate
        spread = plus.values.ravel() - minus.values.ravel()
        safe = np.where(np.abs(spread) > 1e-15, spread, 1.0)
        gradient = np.where(np.abs(spread) > 1e-15, (J_plus - J_minus) / safe, 0.0)

        candidate = project(ad, current.with_values(theta - a_n * gradient))
        estimate = evaluate(candidate)
        evaluations += 3
        new_theta = candidate.values.ravel().copy()
        step = float(np.linalg.norm(new_theta - theta))
        theta, current = new_theta, candidate
        if estimate.J_estimate < best_J:
            best, best_J, best_se = candidate, estimate.J_estimate, estimate.standard_error
        history.append(HistoryEntry(n, evaluations, best_J, estimate.J_estimate, step))
        logger.debug("SPSA iteration %d: J = %.6g, best = %.6g", n, estimate.J_estimate, best_J)

    logger.info("Optimization finished after %d evaluations, J* = %.6g", evaluations, best_J)
    return OptimizationResult(best, best_J, best_se, evaluations, history)
