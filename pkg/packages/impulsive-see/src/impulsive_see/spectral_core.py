"""
Spectral Core - the truncated Hilbert space, the diagonal generator and its semigroup.

States are coefficient vectors in an orthonormal eigenbasis of A, so the
semigroup acts entrywise: T(t)y has coefficients exp(mu_k t) y_k.
"""

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatchError, ImpulsiveSEEError

SpectralState = npt.NDArray[np.float64]

DEFAULT_DIMENSION = 32


def as_state(values: npt.ArrayLike, dim: int | None = None) -> SpectralState:
    """
    Convert values to a validated state vector.

    Args:
        values: Coefficients in the eigenbasis
        dim: Required truncation dimension, if known

    Returns:
        A 1-D float64 array
    """
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1 or y.size < 1:
        raise DimensionMismatchError("state", (dim or 1,), y.shape)
    if dim is not None and y.size != dim:
        raise DimensionMismatchError("state", (dim,), y.shape)
    if not np.all(np.isfinite(y)):
        raise ImpulsiveSEEError("State coefficients must be finite (found NaN or Inf)")
    return y


@dataclass(frozen=True)
class SemigroupSpec:
    """
    Diagonal generator A and the uniform bound of its semigroup.

    Attributes:
        mu: Eigenvalues of A (one per retained mode)
        bound_M: Declared bound on ||T(t)||; None means "use the exact supremum"
    """

    mu: npt.NDArray[np.float64]
    bound_M: float | None = field(default=None)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 1:
            raise DimensionMismatchError("semigroup exponents", (1,), mu.shape)
        if not np.all(np.isfinite(mu)):
            raise ImpulsiveSEEError("Semigroup exponents must be finite")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if self.bound_M is not None and not (np.isfinite(self.bound_M) and self.bound_M > 0):
            raise ImpulsiveSEEError(f"bound_M must be a positive number, got {self.bound_M}")

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    def bound(self, horizon: float) -> float:
        """The M used by the theorem checks: declared bound or exact supremum."""
        if self.bound_M is not None:
            return float(self.bound_M)
        return operator_bound(self, horizon)


def semigroup_apply(sg: SemigroupSpec, t: float, y: SpectralState) -> SpectralState:
    """
    Apply T(t) to a state.

    Args:
        sg: Semigroup description
        t: Nonnegative time
        y: State with sg.dim coefficients

    Returns:
        T(t)y
    """
    if t < 0:
        raise ImpulsiveSEEError(f"Semigroup time must be nonnegative, got t = {t}")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (sg.dim,):
        raise DimensionMismatchError("state", (sg.dim,), y.shape)
    if t == 0:
        return y.copy()
    return np.exp(sg.mu * t) * y


def operator_norm(sg: SemigroupSpec, t: float) -> float:
    """Exact ||T(t)|| = max_k exp(mu_k t) for the diagonal semigroup."""
    if t < 0:
        raise ImpulsiveSEEError(f"Semigroup time must be nonnegative, got t = {t}")
    return float(np.exp(np.max(sg.mu) * t))


def operator_bound(sg: SemigroupSpec, horizon: float) -> float:
    """
    Supremum of ||T(t)|| over [0, horizon].

    The maximum sits at t = 0 for a dissipative spectrum and at t = horizon
    on the largest positive exponent otherwise.
    """
    if horizon <= 0:
        raise ImpulsiveSEEError(f"Horizon must be positive, got {horizon}")
    top = float(np.max(sg.mu))
    if top <= 0:
        return 1.0
    return float(np.exp(top * horizon))


def h_norm(y: SpectralState) -> float:
    """Norm of H in the orthonormal eigenbasis."""
    return float(np.linalg.norm(np.asarray(y, dtype=np.float64)))


def dirichlet_advection_spectrum(dim: int = DEFAULT_DIMENSION) -> npt.NDArray[np.float64]:
    """
    Exponents -(k^2 pi^2 + 1/4), k = 1..dim.

    Spectrum of u'' - u' on (0, 1) with zero boundary values, obtained through the
    similarity transform u = exp(x/2) w.
    """
    k = np.arange(1, dim + 1, dtype=np.float64)
    return -(k**2 * np.pi**2 + 0.25)


def heat_spectrum(dim: int = DEFAULT_DIMENSION, diffusivity: float = 1.0) -> npt.NDArray[np.float64]:
    """Exponents -diffusivity * k^2 pi^2 of the Dirichlet Laplacian on (0, 1)."""
    k = np.arange(1, dim + 1, dtype=np.float64)
    return -diffusivity * k**2 * np.pi**2
