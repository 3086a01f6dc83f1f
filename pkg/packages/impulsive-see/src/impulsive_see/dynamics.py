"""
Dynamics - pathwise mild solutions of the impulsive stochastic evolution equation.

Between impulse times the state follows the exponential Euler recursion

    y_{n+1} = T(dt_n) [ y_n + (B u(t_n) + g(t_n, y_n)) dt_n + h(t_n, y_n) dW_n ],

which is the left-endpoint quadrature of the variation-of-constants formula.
At an impulse time t_k the stored state is the left limit y(t_k-) and the
integration restarts from y(t_k+) = (I + D_k) y(t_k-) + E_k v_k.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
from scipy import stats

from .errors import DimensionMismatchError, ImpulsiveSEEError, ScheduleError
from .parallel import DEFAULT_THREADS, parallel_map
from .qwiener import (
    NoisePath,
    NoiseSpec,
    coarsen_increments,
    sample_increments,
    time_grid,
    validate_grid,
)
from .spectral_core import SemigroupSpec, SpectralState, as_state, operator_bound

if TYPE_CHECKING:
    from .control import ControlSignal

logger = logging.getLogger(__name__)

DriftFunction = Callable[[float, SpectralState], SpectralState]
DiffusionFunction = Callable[[float, SpectralState], npt.NDArray[np.float64]]

# Relative tolerance used to recognise an impulse time on a grid.
NODE_TOLERANCE = 1e-12

# Upper bound on paths x steps x max(d, J) held by one ensemble block.
MAX_BLOCK_VALUES = 2**22


@dataclass(frozen=True)
class ImpulseEvent:
    """
    One scheduled jump y(t+) = (I + D) y(t-) + E v.

    Attributes:
        t: Impulse time, strictly inside (0, T)
        D: State jump operator, shape (d, d)
        E: Input operator, shape (d, m)
        v: Impulse input in the control space, shape (m,)
    """

    t: float
    D: npt.NDArray[np.float64]
    E: npt.NDArray[np.float64]
    v: npt.NDArray[np.float64]

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, dtype=np.float64))
        E = np.atleast_2d(np.asarray(self.E, dtype=np.float64))
        v = np.atleast_1d(np.asarray(self.v, dtype=np.float64))
        if D.shape[0] != D.shape[1]:
            raise DimensionMismatchError("impulse D", (D.shape[0], D.shape[0]), D.shape)
        if E.shape != (D.shape[0], v.size):
            raise DimensionMismatchError("impulse E", (D.shape[0], v.size), E.shape)
        for name, arr in (("D", D), ("E", E), ("v", v)):
            if not np.all(np.isfinite(arr)):
                raise ImpulsiveSEEError(f"Impulse at t = {self.t}: {name} must be finite")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "v", v)

    @property
    def input_vector(self) -> SpectralState:
        """E v."""
        return self.E @ self.v


@dataclass(frozen=True)
class ProblemSpec:
    """
    Full description of the controlled impulsive system.

    Attributes:
        sg: Generator spectrum and bound
        B: Control operator, shape (d, m)
        impulses: Jumps ordered by time
        g: Drift nonlinearity (t, y) -> H
        h: Diffusion (t, y) -> (d, J) coefficient matrix acting on noise modes
        noise: Covariance of the Q-Wiener process
        horizon: Final time T
        y0: Initial state
        vectorized: g and h accept a stack of states of shape (P, d) and return (P, d)
            and (P, d, J); otherwise ensembles call them one row at a time
    """

    sg: SemigroupSpec
    B: npt.NDArray[np.float64]
    impulses: tuple[ImpulseEvent, ...]
    g: DriftFunction
    h: DiffusionFunction
    noise: NoiseSpec
    horizon: float
    y0: SpectralState
    vectorized: bool = False

    def __post_init__(self):
        d = self.sg.dim
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        if B.shape[0] != d:
            raise DimensionMismatchError("control operator B", (d, B.shape[1]), B.shape)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "y0", as_state(self.y0, d))
        object.__setattr__(self, "impulses", tuple(self.impulses))

        if not self.horizon > 0:
            raise ScheduleError(f"Horizon must be positive, got {self.horizon}")
        previous = 0.0
        for k, ev in enumerate(self.impulses, start=1):
            if not (0.0 < ev.t < self.horizon):
                raise ScheduleError(
                    f"Impulse {k}: impulse time outside (0,T) (t = {ev.t}, T = {self.horizon})"
                )
            if ev.t <= previous:
                raise ScheduleError(f"Impulse {k}: times must increase strictly ({ev.t} <= {previous})")
            if ev.D.shape[0] != d or ev.E.shape[1] != ev.v.size:
                raise DimensionMismatchError(f"impulse {k} D", (d, d), ev.D.shape)
            previous = ev.t

        if self.sg.bound_M is not None:
            exact = operator_bound(self.sg, self.horizon)
            if self.sg.bound_M < exact * (1 - 1e-12):
                raise ImpulsiveSEEError(
                    f"Declared bound M = {self.sg.bound_M} is below sup ||T(t)|| = {exact} on [0, T]"
                )

    @property
    def dim(self) -> int:
        return self.sg.dim

    @property
    def control_dim(self) -> int:
        return int(self.B.shape[1])

    @property
    def noise_modes(self) -> int:
        return self.noise.modes

    @property
    def impulse_times(self) -> npt.NDArray[np.float64]:
        return np.array([ev.t for ev in self.impulses], dtype=np.float64)


@dataclass
class Path:
    """
    One simulated trajectory.

    Attributes:
        grid: Time nodes (every impulse time is a node)
        states: State per node; impulse nodes hold the left limit y(t_k-)
        plus_states: Post-jump states y(t_k+), keyed by impulse number k (1-based)
        impulse_nodes: Grid index of each impulse, in order
    """

    grid: npt.NDArray[np.float64]
    states: npt.NDArray[np.float64]
    plus_states: dict[int, SpectralState] = field(default_factory=dict)
    impulse_nodes: tuple[int, ...] = ()

    @property
    def final(self) -> SpectralState:
        return self.states[-1]

    def restart_states(self) -> npt.NDArray[np.float64]:
        """States each step starts from: left limits replaced by right limits at jumps."""
        out = self.states.copy()
        for k, node in enumerate(self.impulse_nodes, start=1):
            out[node] = self.plus_states[k]
        return out

    def all_states(self) -> npt.NDArray[np.float64]:
        """Every node state followed by the post-jump states, for sup-over-time norms."""
        if not self.plus_states:
            return self.states
        extra = np.array([self.plus_states[k] for k in sorted(self.plus_states)])
        return np.vstack([self.states, extra])

    @classmethod
    def constant(cls, spec: ProblemSpec, grid: npt.NDArray[np.float64]) -> "Path":
        """The path y(t) = y0 on both sides of every jump."""
        nodes = locate_impulses(spec, grid)
        states = np.tile(spec.y0, (grid.size, 1))
        plus = {k: spec.y0.copy() for k in range(1, len(nodes) + 1)}
        return cls(grid=grid, states=states, plus_states=plus, impulse_nodes=nodes)


def locate_impulses(spec: ProblemSpec, grid: npt.NDArray[np.float64]) -> tuple[int, ...]:
    """Grid index of every impulse time; raises if one is missing."""
    nodes = []
    tol = NODE_TOLERANCE * spec.horizon
    for k, ev in enumerate(spec.impulses, start=1):
        n = int(np.searchsorted(grid, ev.t))
        candidates = [i for i in (n - 1, n) if 0 <= i < grid.size and abs(grid[i] - ev.t) <= tol]
        if not candidates:
            raise ScheduleError(
                f"Grid does not contain impulse time t_{k} = {ev.t}. "
                "Build the grid with qwiener.time_grid(horizon, dt, events=impulse_times)."
            )
        nodes.append(candidates[0])
    return tuple(nodes)


def apply_impulse(y_minus: SpectralState, ev: ImpulseEvent) -> SpectralState:
    """Return (I + D) y_minus + E v."""
    y_minus = np.asarray(y_minus, dtype=np.float64)
    if y_minus.shape != (ev.D.shape[0],):
        raise DimensionMismatchError("pre-jump state", (ev.D.shape[0],), y_minus.shape)
    return y_minus + ev.D @ y_minus + ev.input_vector


def _euler_update(decay, y, forcing, dt, diffusion):
    return decay * (y + forcing * dt + diffusion)


def step_exponential_euler(
    spec: ProblemSpec,
    t: float,
    dt: float,
    u_t: npt.ArrayLike | None,
    y: SpectralState,
    dW_row: npt.ArrayLike,
) -> SpectralState:
    """
    One step of the exponential Euler scheme.

    Args:
        spec: Problem description
        t: Left endpoint of the step
        dt: Step length
        u_t: Control value at t (None for no control)
        y: State at t
        dW_row: Noise increments of the step, one per mode

    Returns:
        T(dt) [y + (B u_t + g(t, y)) dt + h(t, y) dW]
    """
    if dt <= 0:
        raise ScheduleError(f"Step length must be positive, got {dt}")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (spec.dim,):
        raise DimensionMismatchError("state", (spec.dim,), y.shape)
    dW = np.asarray(dW_row, dtype=np.float64)
    if dW.shape != (spec.noise_modes,):
        raise DimensionMismatchError("noise increment", (spec.noise_modes,), dW.shape)
    forcing = np.asarray(spec.g(t, y), dtype=np.float64)
    if u_t is not None:
        u = np.asarray(u_t, dtype=np.float64)
        if u.shape != (spec.control_dim,):
            raise DimensionMismatchError("control value", (spec.control_dim,), u.shape)
        forcing = forcing + spec.B @ u
    diffusion = np.asarray(spec.h(t, y), dtype=np.float64) @ dW
    return _euler_update(np.exp(spec.sg.mu * dt), y, forcing, dt, diffusion)


def _control_forcing(spec: ProblemSpec, control: "ControlSignal | None", nodes) -> np.ndarray:
    """B u(t_n) at every left endpoint, shape (steps, d)."""
    if control is None:
        return np.zeros((nodes.size, spec.dim))
    if abs(control.horizon - spec.horizon) > NODE_TOLERANCE * spec.horizon:
        raise ScheduleError(f"Control ends at {control.horizon}, horizon is {spec.horizon}")
    values = control.sample(nodes)
    if values.shape[1] != spec.control_dim:
        raise DimensionMismatchError("control", (nodes.size, spec.control_dim), values.shape)
    return values @ spec.B.T


def _check_noise(spec: ProblemSpec, noise: NoisePath) -> None:
    if noise.dW.shape[1] != spec.noise_modes:
        raise DimensionMismatchError("noise modes", spec.noise_modes, noise.dW.shape[1])
    if abs(noise.grid[-1] - spec.horizon) > NODE_TOLERANCE * spec.horizon:
        raise ScheduleError(f"Noise grid ends at {noise.grid[-1]}, horizon is {spec.horizon}")


def propagate(
    spec: ProblemSpec,
    control: "ControlSignal | None",
    noise: NoisePath,
    frozen: Path | None = None,
) -> Path:
    """
    Run the mild-form recursion along one noise path.

    Args:
        spec: Problem description
        control: Piecewise-constant control, or None for u = 0
        noise: Increments on the integration grid
        frozen: When given, g and h are evaluated on this path instead of the running
            state, which is one application of the solution map F = F1 + F2

    Returns:
        Path with left limits at impulse nodes and the post-jump states
    """
    _check_noise(spec, noise)
    grid = noise.grid
    nodes = locate_impulses(spec, grid)
    jump_at = {node: k for k, node in enumerate(nodes, start=1)}
    dt = np.diff(grid)
    decay = np.exp(np.outer(dt, spec.sg.mu))
    control_forcing = _control_forcing(spec, control, grid[:-1])
    arguments = frozen.restart_states() if frozen is not None else None
    if arguments is not None and arguments.shape != (grid.size, spec.dim):
        raise DimensionMismatchError("frozen iterate", (grid.size, spec.dim), arguments.shape)

    states = np.empty((grid.size, spec.dim))
    states[0] = spec.y0
    plus: dict[int, SpectralState] = {}
    current = spec.y0.copy()
    for n in range(dt.size):
        k = jump_at.get(n)
        if k is not None:
            current = apply_impulse(states[n], spec.impulses[k - 1])
            plus[k] = current
        arg = current if arguments is None else arguments[n]
        t = float(grid[n])
        forcing = control_forcing[n] + spec.g(t, arg)
        diffusion = spec.h(t, arg) @ noise.dW[n]
        current = _euler_update(decay[n], current, forcing, dt[n], diffusion)
        states[n + 1] = current
    return Path(grid=grid, states=states, plus_states=plus, impulse_nodes=nodes)


def simulate_path(spec: ProblemSpec, control: "ControlSignal | None", noise: NoisePath) -> Path:
    """Simulate the mild solution along one noise realization."""
    return propagate(spec, control, noise)


@dataclass
class PathBlock:
    """
    A block of trajectories stepped together on one grid.

    Attributes:
        grid: Time nodes shared by every path
        states: Shape (P, N+1, d); impulse nodes hold the left limits
        plus_states: Post-jump states of every path, shape (P, d), keyed by k
        impulse_nodes: Grid index of each impulse, in order
    """

    grid: npt.NDArray[np.float64]
    states: npt.NDArray[np.float64]
    plus_states: dict[int, npt.NDArray[np.float64]] = field(default_factory=dict)
    impulse_nodes: tuple[int, ...] = ()

    @property
    def n_paths(self) -> int:
        return int(self.states.shape[0])

    def restart_states(self) -> npt.NDArray[np.float64]:
        out = self.states.copy()
        for k, node in enumerate(self.impulse_nodes, start=1):
            out[:, node] = self.plus_states[k]
        return out

    def path(self, row: int) -> Path:
        """Row `row` as a single Path."""
        plus = {k: v[row].copy() for k, v in self.plus_states.items()}
        return Path(
            grid=self.grid,
            states=self.states[row].copy(),
            plus_states=plus,
            impulse_nodes=self.impulse_nodes,
        )


def _evaluate_drift(spec: ProblemSpec, t: float, ys: np.ndarray) -> np.ndarray:
    if spec.vectorized:
        return np.broadcast_to(np.asarray(spec.g(t, ys), dtype=np.float64), ys.shape)
    return np.array([spec.g(t, y) for y in ys], dtype=np.float64).reshape(ys.shape)


def _evaluate_noise_term(spec: ProblemSpec, t: float, ys: np.ndarray, dW: np.ndarray) -> np.ndarray:
    if spec.vectorized:
        h = np.asarray(spec.h(t, ys), dtype=np.float64)
        if h.ndim == 2:
            return dW @ h.T
        return np.einsum("pdj,pj->pd", h, dW)
    return np.array([spec.h(t, y) @ w for y, w in zip(ys, dW, strict=True)]).reshape(ys.shape)


def propagate_ensemble(
    spec: ProblemSpec,
    control: "ControlSignal | None",
    grid: npt.ArrayLike,
    dW: npt.ArrayLike,
) -> PathBlock:
    """
    Run the mild-form recursion on P paths at once.

    Row p of the result follows the same recursion as propagate() on the noise
    dW[p]; only the order of floating-point operations may differ.

    Args:
        spec: Problem description
        control: Piecewise-constant control, or None for u = 0
        grid: Integration grid, every impulse time a node
        dW: Increments, shape (P, N, J)
    """
    g = validate_grid(grid)
    if abs(g[-1] - spec.horizon) > NODE_TOLERANCE * spec.horizon:
        raise ScheduleError(f"Noise grid ends at {g[-1]}, horizon is {spec.horizon}")
    increments = np.asarray(dW, dtype=np.float64)
    steps = g.size - 1
    if increments.ndim != 3 or increments.shape[1:] != (steps, spec.noise_modes):
        raise DimensionMismatchError(
            "noise block", (increments.shape[0], steps, spec.noise_modes), increments.shape
        )
    nodes = locate_impulses(spec, g)
    jump_at = {node: k for k, node in enumerate(nodes, start=1)}
    dt = np.diff(g)
    decay = np.exp(np.outer(dt, spec.sg.mu))
    control_forcing = _control_forcing(spec, control, g[:-1])

    n_paths = increments.shape[0]
    states = np.empty((n_paths, g.size, spec.dim))
    states[:, 0] = spec.y0
    plus: dict[int, np.ndarray] = {}
    current = np.tile(spec.y0, (n_paths, 1))
    for n in range(steps):
        k = jump_at.get(n)
        if k is not None:
            ev = spec.impulses[k - 1]
            current = current + current @ ev.D.T + ev.input_vector
            plus[k] = current
        t = float(g[n])
        forcing = control_forcing[n] + _evaluate_drift(spec, t, current)
        diffusion = _evaluate_noise_term(spec, t, current, increments[:, n])
        current = _euler_update(decay[n], current, forcing, dt[n], diffusion)
        states[:, n + 1] = current
    return PathBlock(grid=g, states=states, plus_states=plus, impulse_nodes=nodes)


def ensemble_blocks(n_paths: int, steps: int, width: int) -> list[range]:
    """
    Split path indices 0..n_paths-1 into consecutive blocks.

    The split depends only on the problem size, never on the worker count, so every
    path is computed the same way however many threads run the blocks.
    """
    size = max(1, MAX_BLOCK_VALUES // max(1, steps * width))
    return [range(start, min(start + size, n_paths)) for start in range(0, n_paths, size)]


def noise_block(spec: ProblemSpec, grid: npt.ArrayLike, seed: int, paths: range) -> np.ndarray:
    """Increments of the given paths stacked to shape (P, N, J); path i is drawn from (seed, i)."""
    return np.stack([sample_increments(spec.noise, grid, seed, i).dW for i in paths])


def closed_form_plus_state(
    spec: ProblemSpec,
    control: "ControlSignal | None",
    noise: NoisePath,
    k: int,
    path: Path | None = None,
) -> SpectralState:
    """
    Evaluate y(t_k+) from the unrolled product formula.

    The five contributions (initial state, control, drift and noise integrals, and
    the impulse inputs) are each pushed through the chain of semigroup factors and
    (I + D_j). g and h are evaluated on the simulated path, so the result agrees with
    Path.plus_states[k] up to rounding.

    Args:
        spec: Problem description
        control: Control signal (None for u = 0)
        noise: The noise path used by the simulation
        k: Impulse number, 1 <= k <= number of impulses
        path: Precomputed simulate_path output on the same noise, if available
    """
    if not 1 <= k <= len(spec.impulses):
        raise IndexError(f"Impulse index {k} out of range 1..{len(spec.impulses)}")
    if path is None:
        path = simulate_path(spec, control, noise)
    grid = noise.grid
    dt = np.diff(grid)
    mu = spec.sg.mu
    nodes = (0, *path.impulse_nodes)
    times = grid[list(nodes)]
    restart = path.restart_states()
    control_forcing = _control_forcing(spec, control, grid[:-1])
    eye = np.eye(spec.dim)

    def jump(j: int) -> np.ndarray:
        return eye + spec.impulses[j - 1].D

    def carry(x: np.ndarray, first: int) -> np.ndarray:
        # prod_{j=k}^{first} (I + D_j) T(t_j - t_{j-1}) applied to x
        for j in range(first, k + 1):
            x = jump(j) @ (np.exp(mu * (times[j] - times[j - 1])) * x)
        return x

    total = carry(spec.y0.copy(), 1)

    for i in range(1, k + 1):
        segment = np.arange(nodes[i - 1], nodes[i])
        kernel = np.exp(np.outer(times[i] - grid[segment], mu))
        drift = np.array([spec.g(float(grid[n]), restart[n]) for n in segment])
        noise_terms = np.array([spec.h(float(grid[n]), restart[n]) @ noise.dW[n] for n in segment])
        weights = dt[segment][:, None]
        integrals = (
            np.sum(kernel * control_forcing[segment] * weights, axis=0),
            np.sum(kernel * drift * weights, axis=0),
            np.sum(kernel * noise_terms, axis=0),
        )
        for integral in integrals:
            total = total + carry(jump(i) @ integral, i + 1)

    for i in range(2, k + 1):
        total = total + carry(spec.impulses[i - 2].input_vector, i)
    return total + spec.impulses[k - 1].input_vector


@dataclass(frozen=True)
class EnsembleReport:
    """
    Mean-square statistics of a Monte-Carlo ensemble.

    Attributes:
        grid: Time nodes
        mean_sq_norm: (1/n) sum_i ||y_i(t)||^2 at every node (left limits at jumps)
        standard_error: Standard error of mean_sq_norm per node
        plus_mean_sq_norm: Same statistic for the post-jump states, keyed by k
        sup_mean_sq_norm: sup over nodes and post-jump states, the squared PC norm
        path_seeds: (seed, path_index) of every path
        final_states: Final state of every path, shape (n_paths, d)
    """

    grid: npt.NDArray[np.float64]
    mean_sq_norm: npt.NDArray[np.float64]
    standard_error: npt.NDArray[np.float64]
    plus_mean_sq_norm: dict[int, float]
    sup_mean_sq_norm: float
    path_seeds: list[tuple[int, int]]
    final_states: npt.NDArray[np.float64]


def monte_carlo(
    spec: ProblemSpec,
    control: "ControlSignal | None",
    n_paths: int,
    seed: int,
    grid: npt.ArrayLike,
    threads: int = DEFAULT_THREADS,
) -> EnsembleReport:
    """
    Simulate n_paths independent realizations and aggregate ||y(t)||^2.

    Path i uses the noise drawn from (seed, i). Paths are stepped in blocks fixed by
    the problem size and reduced in path order, so the report does not depend on the
    number of threads.
    """
    if n_paths < 1:
        raise ImpulsiveSEEError(f"n_paths must be at least 1, got {n_paths}")
    g = validate_grid(grid)
    blocks = ensemble_blocks(n_paths, g.size - 1, max(spec.dim, spec.noise_modes))

    def run(paths: range):
        block = propagate_ensemble(spec, control, g, noise_block(spec, g, seed, paths))
        sq = np.sum(block.states**2, axis=2)
        plus = np.zeros((block.n_paths, len(block.plus_states)))
        for k, value in block.plus_states.items():
            plus[:, k - 1] = np.sum(value**2, axis=1)
        return sq, plus, block.states[:, -1]

    results = parallel_map(run, blocks, threads)
    sq = np.concatenate([r[0] for r in results])
    plus = np.concatenate([r[1] for r in results])
    mean_sq = np.mean(sq, axis=0)
    if n_paths > 1:
        se = np.std(sq, axis=0, ddof=1) / np.sqrt(n_paths)
        # Equal samples have no spread; np.std can still return rounding noise.
        se[np.ptp(sq, axis=0) == 0.0] = 0.0
    else:
        se = np.zeros_like(mean_sq)
    plus_mean = {k: float(v) for k, v in enumerate(np.mean(plus, axis=0), start=1)}
    sup = max([float(np.max(mean_sq)), *plus_mean.values()])
    logger.info("Ensemble of %d paths done in %d blocks, sup_t E||y||^2 = %.6g", n_paths, len(blocks), sup)
    return EnsembleReport(
        grid=g,
        mean_sq_norm=mean_sq,
        standard_error=se,
        plus_mean_sq_norm=plus_mean,
        sup_mean_sq_norm=sup,
        path_seeds=[(seed, i) for i in range(n_paths)],
        final_states=np.concatenate([r[2] for r in results]),
    )


@dataclass(frozen=True)
class StrongOrderReport:
    """Root-mean-square final-time errors against a fine reference and the fitted order."""

    dts: npt.NDArray[np.float64]
    rms_errors: npt.NDArray[np.float64]
    order: float
    intercept: float


def strong_order(
    spec: ProblemSpec,
    control: "ControlSignal | None",
    coarse_levels: Sequence[int],
    reference_level: int,
    n_paths: int,
    seed: int,
    threads: int = DEFAULT_THREADS,
) -> StrongOrderReport:
    """
    Estimate the strong order of the scheme with shared Brownian paths.

    Step sizes are horizon * 2^-level. Coarse runs reuse the reference increments
    summed over blocks, so each error compares two approximations of one path.

    Args:
        spec: Problem description; impulse times must be reference-grid nodes
        control: Control signal (None for u = 0)
        coarse_levels: Levels of the coarse runs
        reference_level: Level of the reference run (finer than every coarse level)
        n_paths: Number of sample paths
        seed: Noise seed
        threads: Worker count
    """
    levels = sorted(coarse_levels)
    if not levels or levels[-1] >= reference_level:
        raise ScheduleError("Reference level must be finer than every coarse level")
    if n_paths < 1:
        raise ImpulsiveSEEError(f"n_paths must be at least 1, got {n_paths}")
    steps = 2**reference_level
    fine = time_grid(spec.horizon, spec.horizon / steps, spec.impulse_times)
    if fine.size != steps + 1:
        raise ScheduleError("Impulse times must lie on the dyadic reference grid")
    blocks = ensemble_blocks(n_paths, steps, max(spec.dim, spec.noise_modes))

    def errors(paths: range) -> np.ndarray:
        dW = noise_block(spec, fine, seed, paths)
        reference = propagate_ensemble(spec, control, fine, dW).states[:, -1]
        out = []
        for level in levels:
            factor = 2 ** (reference_level - level)
            coarse = propagate_ensemble(spec, control, fine[::factor], coarsen_increments(dW, factor))
            out.append(np.sum((coarse.states[:, -1] - reference) ** 2, axis=1))
        return np.stack(out, axis=1)

    sq = np.concatenate(parallel_map(errors, blocks, threads))
    rms = np.sqrt(np.mean(sq, axis=0))
    dts = spec.horizon / 2.0 ** np.array(levels, dtype=np.float64)
    fit = stats.linregress(np.log2(dts), np.log2(rms))
    logger.info("Observed strong order %.3f over dt = %s", fit.slope, dts)
    return StrongOrderReport(dts=dts, rms_errors=rms, order=float(fit.slope), intercept=float(fit.intercept))
