"""
Hazard-rate conditions for monotone transient moments.

    dμ(1′,t)/dt = (1 − G)(λ − h)              ≥ 0  iff  h ≤ λ
    dV(1′,t)/dt = (1 − G)(h(1 − 2G) + λ)       ≥ 0  iff  h ≤ λ/(2G − 1)   (G > 1/2)

Points where G(t) = 1 contribute a zero derivative (the left-limit
convention), so the checkers never need a hazard there. Points with
G(t) ≤ 1/2 satisfy the variance condition automatically and are listed as
such in the report.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from src.mginf.errors import CapabilityError, ParameterDomainError, UndefinedHazardError
from src.mginf.numerics import DEFAULT_QUADRATURE, QuadratureSpec, finite_difference, integrate
from src.mginf.service_models import ServiceModel, hazard

logger = logging.getLogger(__name__)

# relative slack when comparing a hazard against its threshold
CONDITION_RTOL = 1e-9

BetaFunction = Union[float, Callable[[float], float]]


@dataclass
class MonotonicityReport:
    kind: str
    condition_holds_everywhere: bool
    violations: list[tuple[float, float, float]] = field(default_factory=list)
    derivative_min: float = 0.0
    applicable: bool = True
    trivial: bool = False
    # G(t) <= 1/2: the variance condition is met without consulting the hazard
    auto_satisfied: list[float] = field(default_factory=list)
    # hazard undefined (infinite density) at these points
    skipped: list[float] = field(default_factory=list)
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def beta_of(model: ServiceModel, lam: float, t: float) -> float:
    """β(t) = h(t) − λ."""
    return hazard(model, t) - lam


def variance_beta_of(model: ServiceModel, lam: float, t: float) -> float:
    """β(t) = h(t) − λ/(2G(t) − 1), the gap to the variance threshold."""
    g = model.cdf(t)
    if g <= 0.5:
        raise ParameterDomainError(f"G({t:g}) = {g:.6g} <= 1/2; variance beta undefined", "G(t) > 1/2")
    return hazard(model, t) - lam / (2.0 * g - 1.0)


def mean_derivative(model: ServiceModel, lam: float, t: float) -> float:
    """(1 − G(t))(λ − h(t))."""
    s = model.survival(t)
    if s <= 0:
        return 0.0
    return s * (lam - hazard(model, t))


def variance_derivative(model: ServiceModel, lam: float, t: float) -> float:
    """(1 − G(t))(h(t)(1 − 2G(t)) + λ)."""
    s = model.survival(t)
    if s <= 0:
        return 0.0
    return s * (hazard(model, t) * (1.0 - 2.0 * model.cdf(t)) + lam)


def _inapplicable(kind: str, model: ServiceModel) -> MonotonicityReport:
    return MonotonicityReport(
        kind=kind,
        condition_holds_everywhere=False,
        applicable=False,
        note=f"{model.label} has no density; the hazard condition cannot be evaluated",
    )


def _check(model: ServiceModel, lam: float, grid: Sequence[float], kind: str) -> MonotonicityReport:
    if not lam > 0:
        raise ParameterDomainError(f"lambda must be positive, got {lam}", "lambda > 0")
    if model.density is None:
        return _inapplicable(kind, model)
    grid = np.asarray(grid, dtype=float)
    report = MonotonicityReport(kind=kind, condition_holds_everywhere=True)
    derivatives = []
    saturated = 0
    derivative = mean_derivative if kind == "mean" else variance_derivative
    for t in map(float, grid):
        if model.survival(t) <= 0:
            saturated += 1
            derivatives.append(0.0)
            continue
        g = model.cdf(t)
        try:
            h = hazard(model, t)
            derivatives.append(derivative(model, lam, t))
        except UndefinedHazardError:
            # skipped and auto_satisfied are disjoint
            report.skipped.append(t)
            continue
        if kind == "variance" and g <= 0.5:
            report.auto_satisfied.append(t)
            continue
        threshold = lam if kind == "mean" else lam / (2.0 * g - 1.0)
        if h > threshold * (1.0 + CONDITION_RTOL) + CONDITION_RTOL:
            report.violations.append((t, h, threshold))

    report.condition_holds_everywhere = not report.violations
    report.derivative_min = min(derivatives) if derivatives else 0.0
    if saturated == grid.size:
        report.trivial = True
        report.note = "G(t) = 1 on the whole grid: the moment is constant"
    elif kind == "variance" and report.auto_satisfied:
        report.note = "points with G(t) <= 1/2 satisfy the condition without the hazard"
    logger.debug(
        "%s monotonicity for %s: %d violations, derivative_min=%.3g",
        kind,
        model.label,
        len(report.violations),
        report.derivative_min,
    )
    return report


def check_mean_monotone(model: ServiceModel, lam: float, grid: Sequence[float]) -> MonotonicityReport:
    """μ(1′,·) is non-decreasing wherever h(t) ≤ λ."""
    return _check(model, lam, grid, "mean")


def check_variance_monotone(model: ServiceModel, lam: float, grid: Sequence[float]) -> MonotonicityReport:
    """V(1′,·) is non-decreasing wherever h(t) ≤ λ/(2G(t) − 1)."""
    return _check(model, lam, grid, "variance")


def riccati_residual(model: ServiceModel, lam: float, beta: BetaFunction, t: float, h_step: float) -> float:
    """dG/dt − (−λG² − (β(t) − λ)G + β(t)), with dG/dt by finite differences."""
    if h_step <= 0:
        raise ParameterDomainError(f"h_step must be positive, got {h_step}", "h_step > 0")
    b = beta(t) if callable(beta) else float(beta)
    g = model.cdf(t)
    slope = finite_difference(model.cdf, t, h_step)
    return slope - (-lam * g * g - (b - lam) * g + b)


def reconstruct_cdf(
    model: ServiceModel, lam: float, t: float, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """1 − (1 − G(0))·exp(−λt − ∫₀ᵗ β(u) du) with β = h − λ."""
    if model.density is None:
        raise CapabilityError(f"{model.label} has no density; hazard is undefined")
    if t < 0:
        raise ParameterDomainError(f"t must be non-negative, got {t}", "t >= 0")
    beta_integral = integrate(lambda u: beta_of(model, lam, u), 0.0, t, spec)
    return 1.0 - model.survival(0.0) * math.exp(-lam * t - beta_integral)
