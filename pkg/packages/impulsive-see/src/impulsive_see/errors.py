"""
Error types raised by impulsive-see.

Validation problems are also ``ValueError`` subclasses so callers that only know
about the builtin hierarchy still catch them.
"""


class ImpulsiveSEEError(Exception):
    """Base class for every error raised by the library."""


class DimensionMismatchError(ImpulsiveSEEError, ValueError):
    """An array does not have the shape the problem requires."""

    def __init__(self, what: str, expected: tuple[int, ...] | int, got: tuple[int, ...] | int):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected shape {expected}, got {got}")


class ScheduleError(ImpulsiveSEEError, ValueError):
    """Time grid, impulse schedule or control breakpoints are inconsistent."""


class ConfigError(ImpulsiveSEEError):
    """
    Scenario configuration could not be parsed or validated.

    Attributes:
        violations: One human-readable line per offending key
    """

    def __init__(self, message: str, violations: list[str] | None = None):
        self.violations = violations or []
        if self.violations:
            message = message + "\n" + "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(message)


class AuditError(ImpulsiveSEEError):
    """A user callback failed while being audited."""


class CostEvaluationError(ImpulsiveSEEError):
    """The running cost returned a non-finite value."""

    def __init__(self, t: float, path_index: int, value: float):
        self.t = t
        self.path_index = path_index
        self.value = value
        super().__init__(
            f"Running cost is not finite (l = {value}) at t = {t:.6g} on path {path_index}"
        )
