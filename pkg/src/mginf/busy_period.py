"""
Busy-period length distribution.

Constant β has a closed form: an atom at the origin plus an exponential,

    B(t) = 1 − ((λ + β)/λ)(1 − e^{−ρ}) e^{−e^{−ρ}(λ + β)t}.

A time-varying β goes through the convolution series on a uniform grid. With
k(t) = e^{−λt − ∫₀ᵗβ}, q = 1 − G(0) and P(t) = 1 − q(k(t) + λ∫₀ᵗk),

    B = P + P * Σ_{n≥1} λⁿ qⁿ k^{*n},

the n = 0 (identity) term being applied exactly rather than through a
discrete delta.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from src.mginf.errors import NumericError, ParameterDomainError, SeriesTruncationError, ShapeError
from src.mginf.numerics import DEFAULT_QUADRATURE, GridFunction, QuadratureSpec, convolve, cumulative_integral, integrate
from src.mginf.service_models import BetaConstantFamilyParams, PiecewiseBeta, ServiceModel, beta_upper_bound

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed-form"
CONVOLUTION_SERIES = "convolution-series"
SERIES_TOL = 1e-8
# 1 − B at the end of a series grid must be below this for busy_mean
HORIZON_TOL = 1e-6

BetaSpec = Union[float, PiecewiseBeta, Callable[[float], float]]


@dataclass(frozen=True)
class BusyPeriodLaw:
    source: str
    atom_at_zero: float
    cdf: Callable[[float], float]
    grid_values: Optional[GridFunction] = None
    series_terms: Optional[int] = None
    truncation_diagnostic: Optional[float] = None
    params: Mapping[str, float] = field(default_factory=dict)

    def survival(self, t: float) -> float:
        return 1.0 - self.cdf(t)

    def evaluate(self, grid: Sequence[float]) -> np.ndarray:
        return np.array([self.cdf(float(t)) for t in grid])

    def sidecar(self) -> dict:
        """Diagnostics reported next to the CDF table."""
        out = {"source": self.source, "atom_at_zero": self.atom_at_zero, **self.params}
        if self.source == CONVOLUTION_SERIES:
            out["series_terms"] = self.series_terms
            out["truncation_diagnostic"] = self.truncation_diagnostic
        return out


def busy_cdf_constant_beta(lam: float, rho: float, beta: float, t: float) -> float:
    if t < 0:
        raise ParameterDomainError(f"t must be non-negative, got {t}", "t >= 0")
    return busy_law_constant_beta(lam, rho, beta).cdf(t)


def busy_law_constant_beta(lam: float, rho: float, beta: float) -> BusyPeriodLaw:
    BetaConstantFamilyParams(lam, rho, beta)
    a = math.exp(-rho)
    c = max(lam + beta, 0.0)
    mass = min(c * -math.expm1(-rho) / lam, 1.0)
    rate = a * c

    def cdf(t: float) -> float:
        if t < 0:
            return 0.0
        return 1.0 - mass * math.exp(-rate * t)

    return BusyPeriodLaw(
        source=CLOSED_FORM,
        atom_at_zero=1.0 - mass,
        cdf=cdf,
        params={"lambda": lam, "rho": rho, "beta": beta},
    )


def closed_form_busy_mean(lam: float, rho: float) -> float:
    """(e^ρ − 1)/λ, whatever β in the band."""
    return math.expm1(rho) / lam


def _kernel_on_grid(beta: BetaSpec, lam: float, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """k(t), ∫₀ᵗk and ∫₀ᵗβ on the grid."""
    if not callable(beta):
        beta = PiecewiseBeta.constant(beta)
    if isinstance(beta, PiecewiseBeta):
        beta_int = np.array([beta.integral(t) for t in grid])
        k = np.exp(-lam * grid - beta_int)
        k_int = np.array([beta.kernel_integral(lam, t) for t in grid])
        return k, k_int, beta_int
    beta_int = cumulative_integral(beta, grid)
    k = np.exp(-lam * grid - beta_int)
    return k, cumulative_trapezoid(k, grid, initial=0.0), beta_int


def busy_cdf_series(
    model: ServiceModel,
    lam: float,
    beta: BetaSpec,
    grid: Sequence[float],
    n_terms: int,
    tol: float = SERIES_TOL,
) -> BusyPeriodLaw:
    """
    Busy-period CDF on a uniform grid from the convolution series.

    n_terms caps the number of series terms, the identity included; summation
    stops once the next term's sup-norm is below tol.
    """
    if n_terms < 1:
        raise ParameterDomainError(f"n_terms must be at least 1, got {n_terms}", "n_terms >= 1")
    if not lam > 0:
        raise ParameterDomainError(f"lambda must be positive, got {lam}", "lambda > 0")
    grid = np.asarray(grid, dtype=float)
    if not GridFunction(grid, np.zeros_like(grid)).uniform:
        raise ShapeError("the series needs a uniform grid starting at 0")

    k_values, k_int, beta_int = _kernel_on_grid(beta, lam, grid)
    _check_band(beta_int, grid, lam, model.rho(lam))
    q = model.survival(0.0)
    k = GridFunction(grid, k_values)
    prefactor = GridFunction(grid, 1.0 - q * (k_values + lam * k_int))

    series = np.zeros_like(grid)
    term = GridFunction(grid, lam * q * k_values)
    used = 1
    diagnostic = term.sup_norm()
    while diagnostic >= tol:
        if used >= n_terms:
            raise SeriesTruncationError(diagnostic, used, tol)
        series += term.values
        used += 1
        term = GridFunction(grid, lam * q * convolve(term, k).values)
        diagnostic = term.sup_norm()

    values = prefactor.values + convolve(prefactor, GridFunction(grid, series)).values
    values = np.clip(values, 0.0, 1.0)
    logger.debug("busy-period series: %d terms, next-term sup %.3g", used, diagnostic)
    cdf_grid = GridFunction(grid, values)

    def cdf(t: float) -> float:
        return 0.0 if t < 0 else cdf_grid(t)

    return BusyPeriodLaw(
        source=CONVOLUTION_SERIES,
        atom_at_zero=float(values[0]),
        cdf=cdf,
        grid_values=cdf_grid,
        series_terms=used,
        truncation_diagnostic=diagnostic,
        params={"lambda": lam, "step": float(cdf_grid.step), "horizon": float(grid[-1])},
    )


def _check_band(beta_int: np.ndarray, grid: np.ndarray, lam: float, rho: float) -> None:
    if grid.size < 2 or rho <= 0:
        return
    averages = beta_int[1:] / grid[1:]
    upper = beta_upper_bound(lam, rho)
    slack = 1e-9 * max(1.0, abs(upper))
    low, high = float(np.min(averages)), float(np.max(averages))
    if low < -lam - slack or high > upper + slack:
        raise ParameterDomainError(
            f"running average of beta spans [{low:g}, {high:g}], outside [{-lam:g}, {upper:.12g}]",
            "-lambda <= (1/t)∫beta <= lambda/(e^rho - 1)",
        )


def busy_mean(law: BusyPeriodLaw, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """∫₀^∞ (1 − B(t)) dt."""
    if law.grid_values is None:
        return integrate(law.survival, 0.0, math.inf, spec)
    grid, values = law.grid_values.grid, law.grid_values.values
    if 1.0 - values[-1] > HORIZON_TOL:
        raise NumericError(
            f"busy-period CDF only reaches {values[-1]:.9f} at the grid end t={grid[-1]:g}; extend the horizon"
        )
    return float(np.trapezoid(1.0 - values, grid))
