"""
Well-posedness - the constants of the existence and uniqueness theorems and
sampling audits of the growth and Lipschitz assumptions.

All verdicts are sufficient-condition checks. A failed verdict says the
certificate does not apply, not that a solution fails to exist.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field
from scipy import linalg

from .dynamics import ProblemSpec
from .errors import AuditError, ImpulsiveSEEError
from .qwiener import NoiseSpec
from .spectral_core import operator_bound, operator_norm
from .streams import AUDIT_STREAM, path_generator

logger = logging.getLogger(__name__)

THEOREM1_THRESHOLD = 1.0 / 9.0
# Relative slack before an audited ratio counts as a violation (float rounding).
AUDIT_RELATIVE_SLACK = 1e-9

SUFFICIENT_ONLY = (
    "All verdicts are sufficient-condition checks: a false verdict does not assert "
    "non-existence or non-uniqueness of the mild solution."
)


@dataclass(frozen=True)
class LipschitzBundle:
    """
    Growth constants (L_g, L_h) and Lipschitz constants (Lt_g, Lt_h) of g and h.

    Both kinds bound squared norms: ||g(t,y)||^2 <= L_g (1 + ||y||^2) and
    ||g(t,y) - g(t,z)||^2 <= Lt_g ||y - z||^2; h is measured in the L2_0 norm.
    """

    L_g: float = 0.0
    L_h: float = 0.0
    Lt_g: float = 0.0
    Lt_h: float = 0.0

    def __post_init__(self):
        for name in ("L_g", "L_h", "Lt_g", "Lt_h"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ImpulsiveSEEError(f"{name} must be finite and nonnegative, got {value}")


@dataclass(frozen=True)
class CompositionConstants:
    """
    C_i = prod_{j=i+1}^{k} (1 + ||D_j||) ||T(t_j - t_{j-1})|| * (1 + ||D_i||) and N = sum C_i^2.

    `C`/`N` use the exact semigroup norm, `C_bound`/`N_bound` replace it with M.
    """

    C: npt.NDArray[np.float64]
    N: float
    C_bound: npt.NDArray[np.float64]
    N_bound: float
    jump_norms: npt.NDArray[np.float64]


def composition_constants(spec: ProblemSpec, M: float | None = None) -> CompositionConstants:
    """
    Impulse composition constants of the uniqueness proof.

    Args:
        spec: Problem description
        M: Semigroup bound for the bound variant (defaults to the problem's M)
    """
    M = spec.sg.bound(spec.horizon) if M is None else M
    jumps = np.array([linalg.norm(ev.D, 2) for ev in spec.impulses], dtype=np.float64)
    times = np.concatenate([[0.0], spec.impulse_times])
    k = len(spec.impulses)
    exact, bounded = [], []
    for i in range(1, k + 1):
        c_exact = c_bound = 1.0 + jumps[i - 1]
        for j in range(i + 1, k + 1):
            c_exact *= (1.0 + jumps[j - 1]) * operator_norm(spec.sg, times[j] - times[j - 1])
            c_bound *= (1.0 + jumps[j - 1]) * M
        exact.append(c_exact)
        bounded.append(c_bound)
    C = np.array(exact, dtype=np.float64)
    C_bound = np.array(bounded, dtype=np.float64)
    return CompositionConstants(
        C=C,
        N=float(np.sum(C**2)),
        C_bound=C_bound,
        N_bound=float(np.sum(C_bound**2)),
        jump_norms=jumps,
    )


class ConstantsReport(BaseModel):
    """Every constant of the well-posedness theorems with the verdicts they imply."""

    M: float
    M_exact: float = Field(description="sup ||T(t)|| on [0, T] from the spectrum")
    horizon: float
    impulses: int
    C: list[float]
    N: float
    C_bound: list[float]
    N_bound: float
    script_N: float | None = None
    script_S: float | None = None
    K0: float | None = None
    K1: float | None = None
    K2: float | None = None
    k_thm1: float | None = None
    k1: float | None = None
    k2: float | None = None
    k_thm2: float | None = None
    verdict_thm1: bool | None = None
    verdict_thm2: bool | None = None
    binding_constraint: str | None = None
    violations: list[str] = Field(default_factory=list)
    bound_variant: dict[str, Any] = Field(default_factory=dict)
    provenance: dict[str, str] = Field(default_factory=dict)
    r0_formula: str | None = None
    notes: list[str] = Field(default_factory=list)


def _base_report(spec: ProblemSpec, M: float | None) -> tuple[ConstantsReport, CompositionConstants]:
    exact_M = operator_bound(spec.sg, spec.horizon)
    if M is None:
        M = spec.sg.bound(spec.horizon)
    elif M < 1.0:
        logger.warning("Diagnostic mode: M overridden to %g (< 1, outside the assumptions)", M)
    comp = composition_constants(spec, M)
    report = ConstantsReport(
        M=M,
        M_exact=exact_M,
        horizon=spec.horizon,
        impulses=len(spec.impulses),
        C=comp.C.tolist(),
        N=comp.N,
        C_bound=comp.C_bound.tolist(),
        N_bound=comp.N_bound,
        notes=[SUFFICIENT_ONLY],
    )
    if M < 1.0:
        report.notes.append(f"Diagnostic mode: M = {M} is below 1, which Assumption 1 forbids.")
    return report, comp


def _theorem1_constants(spec: ProblemSpec, lb: LipschitzBundle, M: float, N: float, comp):
    T = spec.horizon
    k = len(spec.impulses)
    B_sq = float(linalg.norm(spec.B, 2)) ** 2
    growth = T**2 * lb.L_g + T * lb.L_h
    jump_product = float(np.prod((1.0 + comp.jump_norms) ** 2))  # empty product is 1

    impulse_inputs = 0.0
    if k:
        for i in range(2, k + 1):
            tail = float(np.prod((1.0 + comp.jump_norms[i - 1 :]) ** 2))
            ev = spec.impulses[i - 2]
            impulse_inputs += tail * float(linalg.norm(ev.E, 2)) ** 2 * float(ev.v @ ev.v)
        last = spec.impulses[-1]
        impulse_inputs += float(linalg.norm(last.E, 2)) ** 2 * float(last.v @ last.v)

    return {
        "script_N": M**2 + M**2 * growth,
        "script_S": M**2 * T**2 * lb.L_g + M**2 * T * lb.L_h,
        "K0": M ** (2 * k + 2) * jump_product + (M**4 + M**2) * B_sq * N * growth,
        "K1": M**2 * impulse_inputs + (M**4 + M**2) * B_sq * N * growth,
        "K2": (M**4 * N + M**2) * B_sq * T,
        "k_thm1": 3.0 * M ** (2 * k + 2) * jump_product + 3.0 * M**4 * N * growth,
    }


def _theorem1_violations(values: dict[str, float], M: float) -> list[str]:
    violated = []
    if not values["script_N"] < THEOREM1_THRESHOLD:
        violated.append("𝒩 < 1/9")
    if not values["K0"] < THEOREM1_THRESHOLD:
        violated.append("𝒦₀ < 1/9")
    if not M**2 < 1.0:
        violated.append("M² < 1")
    if not values["k_thm1"] < 1.0:
        violated.append("k < 1")
    return violated


def _theorem2_constants(lb: LipschitzBundle, M: float, N: float, T: float) -> dict[str, float]:
    lip = lb.Lt_g + lb.Lt_h
    k1 = 2.0 * M**2 * T**2 * lip
    k2 = 4.0 * M**4 * (N + T**2) * lip
    return {"k1": k1, "k2": k2, "k_thm2": max(k1, k2)}


def theorem1_check(spec: ProblemSpec, lb: LipschitzBundle, M: float | None = None) -> ConstantsReport:
    """
    Existence certificate: max{𝒩, 𝒦₀} < 1/9 and max{M², k} < 1.

    Args:
        spec: Problem description
        lb: Growth and Lipschitz constants
        M: Override for the semigroup bound (diagnostic mode when below 1)
    """
    report, comp = _base_report(spec, M)
    values = _theorem1_constants(spec, lb, report.M, comp.N, comp)
    violated = _theorem1_violations(values, report.M)
    bound_values = _theorem1_constants(spec, lb, report.M, comp.N_bound, comp)
    bound_violated = _theorem1_violations(bound_values, report.M)

    report = report.model_copy(
        update={
            **values,
            "verdict_thm1": not violated,
            "binding_constraint": violated[0] if violated else None,
            "violations": violated,
            "bound_variant": {**bound_values, "verdict_thm1": not bound_violated},
            "provenance": {"verdict_thm1": "max{𝒩, 𝒦₀} < 1/9 and max{M², k} < 1"},
            "r0_formula": (
                f"r0 >= max{{ 4[{values['script_S']:.17g} + {report.M**2:.17g}*||B||^2*"
                f"{spec.horizon:.17g}*∫E||u||^2] / (1 - 4*{values['script_N']:.17g}), "
                f"9[{values['K1']:.17g} + {values['K2']:.17g}*∫E||u||^2] / "
                f"(1 - 9*{values['K0']:.17g}) }}"
            ),
        }
    )
    if report.M >= 1.0:
        report.notes.append(
            "Condition max{M², k} < 1 cannot hold when M >= 1, which Assumption 1 requires; "
            "it is reported as stated."
        )
        logger.warning("Theorem 1 condition max{M^2, k} < 1 is unsatisfiable for M = %g", report.M)
    return report


def theorem2_check(spec: ProblemSpec, lb: LipschitzBundle, M: float | None = None) -> ConstantsReport:
    """
    Uniqueness certificate: k = max{k₁, k₂} < 1.

    k₁ = 2M²T²(Lt_g + Lt_h) and k₂ = 4M⁴(N + T²)(Lt_g + Lt_h).
    """
    report, comp = _base_report(spec, M)
    values = _theorem2_constants(lb, report.M, comp.N, spec.horizon)
    bound_values = _theorem2_constants(lb, report.M, comp.N_bound, spec.horizon)
    verdict = values["k_thm2"] < 1.0
    return report.model_copy(
        update={
            **values,
            "verdict_thm2": verdict,
            "binding_constraint": None if verdict else "k = max{k₁, k₂} < 1",
            "violations": [] if verdict else ["k = max{k₁, k₂} < 1"],
            "bound_variant": {**bound_values, "verdict_thm2": bound_values["k_thm2"] < 1.0},
            "provenance": {"verdict_thm2": "k = max{k₁, k₂} < 1"},
        }
    )


def check_all(spec: ProblemSpec, lb: LipschitzBundle, M: float | None = None) -> ConstantsReport:
    """Both certificates in one report; binding_constraint is the first violated one."""
    first = theorem1_check(spec, lb, M)
    second = theorem2_check(spec, lb, M)
    violations = first.violations + second.violations
    return first.model_copy(
        update={
            "k1": second.k1,
            "k2": second.k2,
            "k_thm2": second.k_thm2,
            "verdict_thm2": second.verdict_thm2,
            "violations": violations,
            "binding_constraint": violations[0] if violations else None,
            "bound_variant": {**first.bound_variant, **second.bound_variant},
            "provenance": {**first.provenance, **second.provenance},
        }
    )


def max_certified_horizon(
    spec: ProblemSpec,
    lb: LipschitzBundle,
    theorem: Literal["thm1", "thm2"] = "thm2",
    upper: float | None = None,
    iterations: int = 60,
) -> float | None:
    """
    Largest horizon in (last impulse, upper] for which the chosen verdict holds.

    Every other datum is kept fixed. Returns None when no admissible horizon passes.
    """
    upper = spec.horizon if upper is None else upper
    last = float(spec.impulse_times[-1]) if spec.impulses else 0.0

    def passes(T: float) -> bool:
        try:
            candidate = replace(spec, horizon=T)
        except ImpulsiveSEEError:
            return False
        if theorem == "thm1":
            return bool(theorem1_check(candidate, lb).verdict_thm1)
        return bool(theorem2_check(candidate, lb).verdict_thm2)

    if passes(upper):
        return upper
    lo = last + 1e-9 * upper
    if lo >= upper or not passes(lo):
        return None
    hi = upper
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo


def l20_norm(h_matrix: npt.ArrayLike, noise: NoiseSpec) -> float:
    """||h||_{L2_0} = (sum_j lambda_j ||h[:, j]||^2)^(1/2) for the diagonal noise action."""
    m = np.asarray(h_matrix, dtype=np.float64)
    return float(np.sqrt(np.sum(noise.lam * np.sum(m**2, axis=0))))


@dataclass
class LipschitzAudit:
    """Largest sampled ratio and the samples that exceed the claimed constant."""

    claimed: float
    samples: int
    max_observed_ratio: float = 0.0
    violations: list[dict[str, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _sample_pair(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal(dim)
    direction /= max(float(np.linalg.norm(direction)), 1e-300)
    return direction * np.sqrt(radius) * rng.uniform() ** (1.0 / dim)


def _call(fn: Callable, t: float, y: np.ndarray) -> np.ndarray:
    try:
        return np.asarray(fn(t, y), dtype=np.float64)
    except Exception as e:
        raise AuditError(f"Audited callback failed at t = {t:.6g}: {type(e).__name__}: {e}") from e


def audit_lipschitz(
    fn: Callable[[float, np.ndarray], Any],
    claimed: float,
    n_samples: int,
    radius: float,
    seed: int,
    dim: int,
    horizon: float = 1.0,
    norm: Callable[[np.ndarray], float] | None = None,
) -> LipschitzAudit:
    """
    Sample ||f(t,y) - f(t,z)||^2 / ||y - z||^2 with ||y||^2, ||z||^2 <= radius.

    Args:
        fn: g or h callback
        claimed: Claimed Lipschitz constant (squared form)
        n_samples: Number of random (t, y, z) triples
        radius: Bound on the squared norms of y and z
        seed: Sampling seed
        dim: State dimension
        horizon: t is drawn from [0, horizon]
        norm: Norm of the callback's output (Frobenius by default; use l20_norm for h)

    Raises:
        AuditError: The callback raised
    """
    if n_samples < 1 or radius <= 0:
        raise ImpulsiveSEEError("audit_lipschitz needs n_samples >= 1 and radius > 0")
    norm = norm or (lambda a: float(np.linalg.norm(a)))
    rng = path_generator(seed, 2, AUDIT_STREAM)
    audit = LipschitzAudit(claimed=claimed, samples=n_samples)
    for _ in range(n_samples):
        t = float(rng.uniform(0.0, horizon))
        y = _sample_pair(rng, dim, radius)
        z = _sample_pair(rng, dim, radius)
        gap = float((y - z) @ (y - z))
        if gap == 0.0:
            continue
        ratio = norm(_call(fn, t, y) - _call(fn, t, z)) ** 2 / gap
        audit.max_observed_ratio = max(audit.max_observed_ratio, ratio)
        if ratio > claimed * (1 + AUDIT_RELATIVE_SLACK) + 1e-300:
            audit.violations.append({"t": t, "ratio": ratio})
    if audit.violations:
        logger.warning(
            "Lipschitz audit: %d samples exceed %g (max ratio %g)",
            len(audit.violations),
            claimed,
            audit.max_observed_ratio,
        )
    return audit


def audit_growth(
    fn: Callable[[float, np.ndarray], Any],
    claimed: float,
    n_samples: int,
    radius: float,
    seed: int,
    dim: int,
    horizon: float = 1.0,
    norm: Callable[[np.ndarray], float] | None = None,
) -> LipschitzAudit:
    """Sample ||f(t,y)||^2 / (1 + ||y||^2) against a claimed growth constant."""
    if n_samples < 1 or radius <= 0:
        raise ImpulsiveSEEError("audit_growth needs n_samples >= 1 and radius > 0")
    norm = norm or (lambda a: float(np.linalg.norm(a)))
    rng = path_generator(seed, 3, AUDIT_STREAM)
    audit = LipschitzAudit(claimed=claimed, samples=n_samples)
    for _ in range(n_samples):
        t = float(rng.uniform(0.0, horizon))
        y = _sample_pair(rng, dim, radius)
        ratio = norm(_call(fn, t, y)) ** 2 / (1.0 + float(y @ y))
        audit.max_observed_ratio = max(audit.max_observed_ratio, ratio)
        if ratio > claimed * (1 + AUDIT_RELATIVE_SLACK):
            audit.violations.append({"t": t, "ratio": ratio})
    return audit


def audit_problem(
    spec: ProblemSpec, lb: LipschitzBundle, n_samples: int, radius: float, seed: int
) -> dict[str, LipschitzAudit]:
    """Growth and Lipschitz audits of both g and h of a problem."""
    h_norm = lambda m: l20_norm(m, spec.noise)  # noqa: E731
    common = {"n_samples": n_samples, "radius": radius, "seed": seed, "dim": spec.dim, "horizon": spec.horizon}
    return {
        "growth_g": audit_growth(spec.g, lb.L_g, **common),
        "growth_h": audit_growth(spec.h, lb.L_h, norm=h_norm, **common),
        "lipschitz_g": audit_lipschitz(spec.g, lb.Lt_g, **common),
        "lipschitz_h": audit_lipschitz(spec.h, lb.Lt_h, norm=h_norm, **common),
    }
