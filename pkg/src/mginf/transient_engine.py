"""
Transient state distribution, mean and variance of M|G|∞.

Two time origins: an empty system (p₀ₙ, Poisson with mean Λ(t) = λΛ̃(t)) and
the start of a busy period, a customer arriving at t = 0 (p₁′ₙ). With
Λ̃(t) = ∫₀ᵗ (1 − G):

    p₁′₀(t) = p₀₀(t) G(t)
    p₁′ₙ(t) = p₀ₙ(t) G(t) + p₀,ₙ₋₁(t) (1 − G(t))
    μ(1′,t) = 1 − G(t) + λΛ̃(t)
    V(1′,t) = λΛ̃(t) + G(t)(1 − G(t))

The module also carries the closed-form curves of the deterministic,
exponential and constant-β families used as references.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammainc

from src.mginf.errors import ParameterDomainError, ShapeError, TruncationError
from src.mginf.numerics import DEFAULT_QUADRATURE, QuadratureSpec, cumulative_tail_integral, integrate
from src.mginf.service_models import ServiceModel

logger = logging.getLogger(__name__)

TRUNCATION_TOL = 1e-10
EMPTY_ORIGIN = "empty"
BUSY_ORIGIN = "busy-period-start"


@dataclass(frozen=True)
class TransientPmf:
    t: float
    origin: str
    probs: np.ndarray
    truncation_mass: float

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, n: int) -> float:
        return float(self.probs[n]) if 0 <= n < self.probs.size else 0.0

    @property
    def mean(self) -> float:
        n = np.arange(self.probs.size)
        return math.fsum(n * self.probs)

    @property
    def variance(self) -> float:
        n = np.arange(self.probs.size)
        mu = self.mean
        return math.fsum((n - mu) ** 2 * self.probs)


@dataclass(frozen=True)
class MomentCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise ShapeError(f"{self.kind} curve has {len(self.values)} values for {len(self.grid)} grid points")

    def __len__(self) -> int:
        return len(self.grid)


def default_n_max(rho: float) -> int:
    return int(math.ceil(rho + 12.0 * math.sqrt(max(rho, 0.0)))) + 20


def _check_inputs(lam: float, t: float, n_max: int) -> None:
    if not lam > 0:
        raise ParameterDomainError(f"lambda must be positive, got {lam}", "lambda > 0")
    if t < 0:
        raise ParameterDomainError(f"t must be non-negative, got {t}", "t >= 0")
    if n_max < 0:
        raise ParameterDomainError(f"n_max must be non-negative, got {n_max}", "n_max >= 0")


def poisson_probs(mass: float, n_max: int) -> tuple[np.ndarray, float]:
    """
    Poisson(mass) probabilities 0..n_max and the mass beyond n_max.

    Terms come from pₙ₊₁ = pₙ·mass/(n+1), run up and down from the mode so
    large means never underflow p₀ first.
    """
    probs = np.zeros(n_max + 1)
    if mass == 0:
        probs[0] = 1.0
        return probs, 0.0
    mode = min(int(mass), n_max)
    probs[mode] = math.exp(mode * math.log(mass) - mass - math.lgamma(mode + 1))
    for n in range(mode, n_max):
        probs[n + 1] = probs[n] * mass / (n + 1)
    for n in range(mode, 0, -1):
        probs[n - 1] = probs[n] * n / mass
    tail = float(gammainc(n_max + 1, mass))
    return probs, tail


def _suggest_n_max(mass: float, n_max: int, tol: float) -> int:
    n = max(n_max, 1)
    while gammainc(n + 1, mass) > tol:
        n = int(n * 1.5) + 1
    return n


def _check_truncation(tail: float, mass: float, n_max: int, tol: float) -> None:
    if tail > tol:
        raise TruncationError(tail, n_max, _suggest_n_max(mass, n_max, tol))


def _resolve_n_max(model: ServiceModel, lam: float, n_max: Optional[int]) -> int:
    return default_n_max(model.rho(lam)) if n_max is None else int(n_max)


def empty_origin_pmf(
    model: ServiceModel,
    lam: float,
    t: float,
    n_max: Optional[int] = None,
    tol: float = TRUNCATION_TOL,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> TransientPmf:
    """p₀ₙ(t): Poisson with mean λ∫₀ᵗ(1 − G)."""
    n_max = _resolve_n_max(model, lam, n_max)
    _check_inputs(lam, t, n_max)
    mass = lam * integrate(model.survival, 0.0, t, spec, model.jump_points)
    return _empty_from_mass(t, mass, n_max, tol)


def _empty_from_mass(t: float, mass: float, n_max: int, tol: float) -> TransientPmf:
    probs, tail = poisson_probs(mass, n_max)
    _check_truncation(tail, mass, n_max, tol)
    return TransientPmf(t=t, origin=EMPTY_ORIGIN, probs=probs, truncation_mass=tail)


def _busy_from_mass(model: ServiceModel, t: float, mass: float, n_max: int, tol: float) -> TransientPmf:
    empty, tail0 = poisson_probs(mass, n_max)
    g = model.cdf(t)
    s = model.survival(t)
    probs = g * empty
    probs[1:] += s * empty[:-1]
    tail = g * tail0 + s * (tail0 + empty[-1])
    if tail > tol:
        # the busy-origin state is one larger than the empty-origin one at most
        raise TruncationError(tail, n_max, _suggest_n_max(mass, n_max, tol) + 1)
    logger.debug("p1'(t=%g): n_max=%d, truncated mass %.3g", t, n_max, tail)
    return TransientPmf(t=t, origin=BUSY_ORIGIN, probs=probs, truncation_mass=tail)


def busy_origin_pmf(
    model: ServiceModel,
    lam: float,
    t: float,
    n_max: Optional[int] = None,
    tol: float = TRUNCATION_TOL,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> TransientPmf:
    """p₁′ₙ(t): state probabilities given a customer arrived at t = 0 to an empty system."""
    n_max = _resolve_n_max(model, lam, n_max)
    _check_inputs(lam, t, n_max)
    mass = lam * integrate(model.survival, 0.0, t, spec, model.jump_points)
    return _busy_from_mass(model, t, mass, n_max, tol)


def busy_origin_pmfs(
    model: ServiceModel,
    lam: float,
    grid: Sequence[float],
    n_max: Optional[int] = None,
    tol: float = TRUNCATION_TOL,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> list[TransientPmf]:
    """busy_origin_pmf at every grid point, sharing one cumulative tail integral."""
    n_max = _resolve_n_max(model, lam, n_max)
    tail = _tail_integral(model, lam, grid, spec)
    return [_busy_from_mass(model, float(t), lam * v, n_max, tol) for t, v in zip(tail.grid, tail.values)]


def _tail_integral(model: ServiceModel, lam: float, grid: Sequence[float], spec: QuadratureSpec):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ShapeError("grid must be a non-empty 1-D sequence of times")
    _check_inputs(lam, float(grid[0]), 0)
    return cumulative_tail_integral(model, grid, spec)


def mean_busy_origin(
    model: ServiceModel, lam: float, grid: Sequence[float], spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> MomentCurve:
    """μ(1′,t) = 1 − G(t) + λΛ̃(t)."""
    tail = _tail_integral(model, lam, grid, spec)
    survival = np.array([model.survival(t) for t in tail.grid])
    return MomentCurve(grid=tail.grid, values=survival + lam * tail.values, kind="mean")


def variance_busy_origin(
    model: ServiceModel, lam: float, grid: Sequence[float], spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> MomentCurve:
    """V(1′,t) = λΛ̃(t) + G(t)(1 − G(t))."""
    tail = _tail_integral(model, lam, grid, spec)
    spread = np.array([model.cdf(t) * model.survival(t) for t in tail.grid])
    return MomentCurve(grid=tail.grid, values=lam * tail.values + spread, kind="variance")


def limit_pmf(rho: float, n_max: Optional[int] = None) -> TransientPmf:
    """Equilibrium law: Poisson(ρ), reached from either origin as t → ∞."""
    if not rho > 0:
        raise ParameterDomainError(f"rho must be positive, got {rho}", "rho > 0")
    n_max = default_n_max(rho) if n_max is None else int(n_max)
    if n_max < 0:
        raise ParameterDomainError(f"n_max must be non-negative, got {n_max}", "n_max >= 0")
    probs, tail = poisson_probs(rho, n_max)
    return TransientPmf(t=math.inf, origin="limit", probs=probs, truncation_mass=tail)


# -- closed-form reference curves --------------------------------------------


def deterministic_mean(alpha: float, lam: float, t: float) -> float:
    """M|D|∞: 1 + λt before α, λα after."""
    return 1.0 + lam * t if t < alpha else lam * alpha


def deterministic_variance(alpha: float, lam: float, t: float) -> float:
    return lam * t if t < alpha else lam * alpha


def exponential_mean(alpha: float, lam: float, t: float) -> float:
    rho = lam * alpha
    return rho + (1.0 - rho) * math.exp(-t / alpha)


def exponential_variance(alpha: float, lam: float, t: float) -> float:
    """M|M|∞: ρ(1 − e^{−t/α}) + e^{−t/α} − e^{−2t/α}."""
    x = math.exp(-t / alpha)
    return lam * alpha * (1.0 - x) + x - x * x


def printed_exponential_variance(alpha: float, lam: float, t: float) -> float:
    """
    The M|M|∞ variance as it circulates in print: ρ(1 − e^{−t/α}) + e^{−t/λ} + e^{−2t/α}.

    Kept only to report how far it sits from the simulated variance; it gives
    V(1′,0) = 2 where the state at 0 is exactly one customer.
    """
    return lam * alpha * (1.0 - math.exp(-t / alpha)) + math.exp(-t / lam) + math.exp(-2.0 * t / alpha)


def _beta_constant_terms(lam: float, rho: float, beta: float, t: float) -> tuple[float, float]:
    """(1 − G(t), λΛ̃(t)) of the constant-β family."""
    a = math.exp(-rho)
    c = lam + beta
    x = math.exp(-c * t)
    survival = (1.0 - a) * c * x / (lam * (a + (1.0 - a) * x))
    arrivals = rho - math.log1p(math.expm1(rho) * x)
    return survival, arrivals


def beta_constant_mean(lam: float, rho: float, beta: float, t: float) -> float:
    """μ(1′,t) = (1 − G(t)) + ρ − ln(1 + (e^ρ − 1)e^{−(λ+β)t})."""
    survival, arrivals = _beta_constant_terms(lam, rho, beta, t)
    return survival + arrivals


def beta_constant_variance(lam: float, rho: float, beta: float, t: float) -> float:
    """V(1′,t) = ρ − ln(1 + (e^ρ − 1)e^{−(λ+β)t}) + (1 − G(t)) − (1 − G(t))²."""
    survival, arrivals = _beta_constant_terms(lam, rho, beta, t)
    return arrivals + survival - survival * survival


def reference_curve(model: ServiceModel, lam: float, grid: Sequence[float], kind: str) -> Optional[MomentCurve]:
    """Closed-form μ or V for the families that have one; None otherwise."""
    forms = {
        ("deterministic", "mean"): lambda t: deterministic_mean(model.params["alpha"], lam, t),
        ("deterministic", "variance"): lambda t: deterministic_variance(model.params["alpha"], lam, t),
        ("exponential", "mean"): lambda t: exponential_mean(model.params["alpha"], lam, t),
        ("exponential", "variance"): lambda t: exponential_variance(model.params["alpha"], lam, t),
    }
    if model.family == "beta-constant" and math.isclose(model.params["lambda"], lam):
        p = model.params
        fn = beta_constant_mean if kind == "mean" else beta_constant_variance
        forms[("beta-constant", kind)] = lambda t: fn(p["lambda"], p["rho"], p["beta"], t)
    form = forms.get((model.family, kind))
    if form is None:
        return None
    grid = np.asarray(grid, dtype=float)
    return MomentCurve(grid=grid, values=np.array([form(float(t)) for t in grid]), kind=kind)
