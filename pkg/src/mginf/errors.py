"""
Exception hierarchy for the mginf package.

Every failure raised on purpose by the library derives from MGInfError, so
callers (the CLI and the HTTP server) can map whole families of errors to an
exit code or a status code without knowing each subclass.
"""

from typing import Optional


class MGInfError(Exception):
    """Base class for all mginf errors."""


class ParameterDomainError(MGInfError, ValueError):
    """A parameter lies outside the domain of the family or operation."""

    def __init__(self, message: str, constraint: Optional[str] = None):
        self.constraint = constraint
        if constraint:
            message = f"{message} (constraint: {constraint})"
        super().__init__(message)


class CapabilityError(MGInfError):
    """The model lacks what the operation needs, e.g. a density."""


class UndefinedHazardError(MGInfError, ArithmeticError):
    """Hazard rate requested where G(t) = 1 or the density is not finite."""


class ShapeError(MGInfError, ValueError):
    """Two grids or arrays that must line up do not."""


class NumericError(MGInfError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class QuadratureError(NumericError):
    def __init__(self, message: str, interval: tuple[float, float], error: float):
        self.interval = interval
        self.error = error
        super().__init__(
            f"{message}: worst subinterval [{interval[0]:.6g}, {interval[1]:.6g}] "
            f"with error estimate {error:.3g}"
        )


class BracketError(NumericError):
    def __init__(self, lo: float, hi: float, f_lo: float, f_hi: float, message: str = "no sign change"):
        self.lo, self.hi = lo, hi
        self.f_lo, self.f_hi = f_lo, f_hi
        super().__init__(
            f"{message} on bracket [{lo:.6g}, {hi:.6g}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}"
        )


class TruncationError(NumericError):
    def __init__(self, mass: float, n_max: int, suggested_n_max: int):
        self.mass = mass
        self.n_max = n_max
        self.suggested_n_max = suggested_n_max
        super().__init__(
            f"truncation mass {mass:.3g} at n_max={n_max} exceeds tolerance; "
            f"try n_max >= {suggested_n_max}"
        )


class SeriesTruncationError(NumericError):
    def __init__(self, diagnostic: float, terms: int, tol: float):
        self.diagnostic = diagnostic
        self.terms = terms
        super().__init__(
            f"busy-period series not converged after {terms} terms: newest term "
            f"sup-norm {diagnostic:.3g} > {tol:.3g}; use more terms or a shorter horizon"
        )


class RunawayError(NumericError):
    def __init__(self, replication: int, length: float, safety_horizon: float):
        self.replication = replication
        self.length = length
        super().__init__(
            f"busy period in replication {replication} passed the safety horizon "
            f"{safety_horizon:.6g} (reached {length:.6g})"
        )
