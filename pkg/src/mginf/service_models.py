"""
Service-time laws for the M|G|∞ queue.

A ServiceModel bundles the CDF G, the survival 1 − G (evaluated directly
where a closed form exists), an optional density, the atom G(0), the mean and
an optional closed-form quantile used by the simulator. Constructors:

    make_deterministic            M|D|∞
    make_exponential              M|M|∞
    make_zero_beta_model          β ≡ 0: constant mean μ(1′,t) = 1 − G(0)
    make_trivial_model            G ≡ 1 (β ≡ −λ)
    make_beta_constant_family     closed-form Riccati family with constant β
    make_riccati_family           same family for a piecewise-constant β(t)
    make_implicit_constant_variance   variance-ODE case A (V(1′,t) constant)
    make_beta_lambda_variance_model   case B at β = λ, closed form
    make_implicit_variance_family     case B, any admissible constant β

The implicit laws are solved in s = −ln(1 − G): t(s) is explicit and strictly
increasing there, so G(t) is one bracketed root find away and 1 − G = e^{−s}
keeps full relative precision in the tail.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from src.mginf.errors import CapabilityError, NumericError, ParameterDomainError, UndefinedHazardError
from src.mginf.numerics import DEFAULT_QUADRATURE, QuadratureSpec, find_root, integrate

logger = logging.getLogger(__name__)

SAMPLER_TOL = 1e-12
# number of s-points in the monotone lookup table of an implicit law
TABLE_POINTS = 257
TABLE_SPAN = 60.0


@dataclass(frozen=True)
class ServiceModel:
    family: str
    label: str
    cdf: Callable[[float], float]
    survival: Callable[[float], float]
    mean: float
    atom_at_zero: float = 0.0
    density: Optional[Callable[[float], float]] = None
    # vectorized inverse of G on [atom_at_zero, 1)
    quantile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jump_points: tuple[float, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)
    metadata: Mapping[str, str] = field(default_factory=dict)

    @property
    def has_density(self) -> bool:
        return self.density is not None

    def rho(self, lam: float) -> float:
        """Traffic intensity λα."""
        return lam * self.mean


@dataclass(frozen=True)
class BetaConstantFamilyParams:
    lam: float
    rho: float
    beta: float

    def __post_init__(self):
        _require_positive("lambda", self.lam)
        _require_positive("rho", self.rho)
        upper = beta_upper_bound(self.lam, self.rho)
        slack = 1e-12 * max(1.0, abs(upper))
        if not (-self.lam - slack <= self.beta <= upper + slack):
            raise ParameterDomainError(
                f"beta={self.beta:g} outside the admissible band [{-self.lam:g}, {upper:.12g}]",
                "-lambda <= beta <= lambda/(e^rho - 1)",
            )


@dataclass(frozen=True)
class ImplicitVarianceParams:
    lam: float
    g0: float
    beta: float = 0.0

    def __post_init__(self):
        _require_positive("lambda", self.lam)
        if self.beta == 0.0:
            if not 0.5 < self.g0 < 1.0:
                raise ParameterDomainError(f"G(0)={self.g0:g} outside (1/2, 1)", "1/2 < G(0) < 1")
            return
        if not 0.5 <= self.g0 < 1.0:
            raise ParameterDomainError(f"G(0)={self.g0:g} outside [1/2, 1)", "1/2 <= G(0) < 1")
        if self.beta <= -self.lam:
            raise ParameterDomainError(
                f"beta={self.beta:g} leaves the branch where beta(2G - 1) + lambda > 0 on [G(0), 1)",
                "beta > -lambda",
            )


def beta_upper_bound(lam: float, rho: float) -> float:
    return lam / math.expm1(rho)


def _require_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ParameterDomainError(f"{name} must be positive and finite, got {value!r}", f"{name} > 0")


# -- closed-form families ----------------------------------------------------


def make_deterministic(alpha: float) -> ServiceModel:
    _require_positive("alpha", alpha)

    def cdf(t: float) -> float:
        return 1.0 if t >= alpha else 0.0

    def survival(t: float) -> float:
        return 0.0 if t >= alpha else 1.0

    return ServiceModel(
        family="deterministic",
        label=f"deterministic(alpha={alpha:g})",
        cdf=cdf,
        survival=survival,
        mean=alpha,
        quantile=lambda u: np.full(np.shape(u), alpha, dtype=float),
        jump_points=(alpha,),
        params={"alpha": alpha},
        metadata={"density": "none: atomic at alpha"},
    )


def make_exponential(alpha: float) -> ServiceModel:
    _require_positive("alpha", alpha)

    def survival(t: float) -> float:
        return math.exp(-t / alpha) if t > 0 else 1.0

    def cdf(t: float) -> float:
        return -math.expm1(-t / alpha) if t > 0 else 0.0

    def density(t: float) -> float:
        return math.exp(-t / alpha) / alpha if t >= 0 else 0.0

    return ServiceModel(
        family="exponential",
        label=f"exponential(alpha={alpha:g})",
        cdf=cdf,
        survival=survival,
        mean=alpha,
        density=density,
        quantile=lambda u: -alpha * np.log1p(-np.asarray(u, dtype=float)),
        params={"alpha": alpha},
        metadata={"density": "analytic"},
    )


def make_zero_beta_model(lam: float, g0: float) -> ServiceModel:
    """G(t) = 1 − (1 − G(0))e^{−λt}: hazard ≡ λ, so μ(1′,t) ≡ 1 − G(0)."""
    _require_positive("lambda", lam)
    if not 0.0 <= g0 < 1.0:
        raise ParameterDomainError(f"G(0)={g0:g} outside [0, 1)", "0 <= G(0) < 1")
    q = 1.0 - g0

    def survival(t: float) -> float:
        return q * math.exp(-lam * t) if t >= 0 else 1.0

    def cdf(t: float) -> float:
        return 1.0 - survival(t) if t >= 0 else 0.0

    def density(t: float) -> float:
        return q * lam * math.exp(-lam * t) if t >= 0 else 0.0

    def quantile(u: np.ndarray) -> np.ndarray:
        return -np.log((1.0 - np.asarray(u, dtype=float)) / q) / lam

    return ServiceModel(
        family="zero-beta",
        label=f"zero-beta(lambda={lam:g}, g0={g0:g})",
        cdf=cdf,
        survival=survival,
        mean=q / lam,
        atom_at_zero=g0,
        density=density,
        quantile=quantile,
        jump_points=(0.0,) if g0 > 0 else (),
        params={"lambda": lam, "g0": g0},
        metadata={"density": "analytic (absolutely continuous part)"},
    )


def make_trivial_model() -> ServiceModel:
    """Every service takes zero time."""
    return ServiceModel(
        family="trivial",
        label="trivial(G=1)",
        cdf=lambda t: 1.0 if t >= 0 else 0.0,
        survival=lambda t: 0.0 if t >= 0 else 1.0,
        mean=0.0,
        atom_at_zero=1.0,
        density=lambda t: 0.0,
        quantile=lambda u: np.zeros(np.shape(u)),
        jump_points=(0.0,),
        metadata={"density": "identically zero"},
    )


def make_beta_constant_family(p: BetaConstantFamilyParams) -> ServiceModel:
    """
    G(t) = 1 − (1 − e^{−ρ})(λ + β) / (λe^{−ρ}(e^{(λ+β)t} − 1) + λ).

    Evaluated as K e^{−ct} / (λ(a + (1 − a)e^{−ct})) with a = e^{−ρ}, c = λ + β,
    K = (1 − a)c, which never overflows.
    """
    lam, rho, beta = p.lam, p.rho, p.beta
    a = math.exp(-rho)
    c = max(lam + beta, 0.0)
    K = (1.0 - a) * c
    atom = min(max(1.0 - K / lam, 0.0), 1.0)

    def survival(t: float) -> float:
        if t < 0:
            return 1.0
        x = math.exp(-c * t)
        return K * x / (lam * (a + (1.0 - a) * x))

    def cdf(t: float) -> float:
        return 1.0 - survival(t) if t >= 0 else 0.0

    def density(t: float) -> float:
        if t < 0:
            return 0.0
        x = math.exp(-c * t)
        return K * a * c * x / (lam * (a + (1.0 - a) * x) ** 2)

    def quantile(u: np.ndarray) -> np.ndarray:
        s = 1.0 - np.asarray(u, dtype=float)
        x = lam * s * a / (K - lam * s * (1.0 - a))
        return np.maximum(-np.log(x) / c, 0.0)

    return ServiceModel(
        family="beta-constant",
        label=f"beta-constant(lambda={lam:g}, rho={rho:g}, beta={beta:g})",
        cdf=cdf,
        survival=survival,
        mean=rho / lam if c > 0 else 0.0,
        atom_at_zero=atom,
        density=density,
        quantile=quantile if K > 0 else None,
        jump_points=(0.0,) if atom > 0 else (),
        params={"lambda": lam, "rho": rho, "beta": beta},
        metadata={"density": "analytic derivative of the closed form"},
    )


@dataclass(frozen=True)
class PiecewiseBeta:
    """
    Piecewise-constant β(t): values[i] on [breaks[i-1], breaks[i]).

    Supplies ∫₀ᵗβ and ∫₀ᵗ exp(−λw − ∫₀ʷβ) dw in closed form.
    """

    values: tuple[float, ...]
    breaks: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise ParameterDomainError("piecewise beta needs one more value than breaks", "len(values) = len(breaks) + 1")
        if any(b <= 0 for b in self.breaks) or any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ParameterDomainError("beta breaks must be positive and increasing", "0 < breaks[0] < breaks[1] < ...")

    @classmethod
    def constant(cls, beta: float) -> "PiecewiseBeta":
        return cls((float(beta),))

    def _starts(self) -> tuple[float, ...]:
        return (0.0, *self.breaks)

    def __call__(self, t: float) -> float:
        return self.values[bisect.bisect_right(self.breaks, t)]

    def integral(self, t: float) -> float:
        total = 0.0
        for start, end, b in zip(self._starts(), (*self.breaks, math.inf), self.values):
            if t <= start:
                break
            total += b * (min(t, end) - start)
        return total

    def kernel(self, lam: float, t: float) -> float:
        """k(t) = exp(−λt − ∫₀ᵗβ)."""
        return math.exp(-lam * t - self.integral(t))

    def kernel_integral(self, lam: float, t: float) -> float:
        """∫₀ᵗ k(w) dw, exact piece by piece."""
        total = 0.0
        for start, end, b in zip(self._starts(), (*self.breaks, math.inf), self.values):
            if t <= start:
                break
            width = min(t, end) - start
            rate = lam + b
            k_start = self.kernel(lam, start)
            total += k_start * width if rate == 0 else k_start * -math.expm1(-rate * width) / rate
        return total

    def kernel_total(self, lam: float) -> float:
        if lam + self.values[-1] <= 0:
            raise ParameterDomainError("the last beta piece must exceed -lambda", "lambda + beta(inf) > 0")
        return self.kernel_integral(lam, math.inf)

    def average_extremes(self) -> tuple[float, float]:
        """Range of ∫₀ᵗβ/t over t > 0 (attained at t → 0, the breaks, or t → ∞)."""
        averages = [self.values[0], self.values[-1]]
        averages.extend(self.integral(b) / b for b in self.breaks)
        return min(averages), max(averages)


def make_riccati_family(lam: float, rho: float, beta: Union[float, PiecewiseBeta]) -> ServiceModel:
    """
    Service law solving dG/dt = −λG² − (β(t) − λ)G + β(t) with mean ρ/λ.

    G(t) = 1 − (1 − e^{−ρ}) k(t) / (λ(∫₀^∞k − (1 − e^{−ρ})∫₀ᵗk)),  k(t) = e^{−λt−∫₀ᵗβ}.
    A constant β gives make_beta_constant_family.
    """
    _require_positive("lambda", lam)
    _require_positive("rho", rho)
    beta = beta if isinstance(beta, PiecewiseBeta) else PiecewiseBeta.constant(beta)
    low, high = beta.average_extremes()
    upper = beta_upper_bound(lam, rho)
    slack = 1e-12 * max(1.0, abs(upper))
    if low < -lam - slack or high > upper + slack:
        raise ParameterDomainError(
            f"running average of beta spans [{low:g}, {high:g}], outside [{-lam:g}, {upper:.12g}]",
            "-lambda <= (1/t)∫beta <= lambda/(e^rho - 1)",
        )
    spread = -math.expm1(-rho)
    total = beta.kernel_total(lam)
    atom = 1.0 - spread / (lam * total)
    if atom < -1e-12:
        raise ParameterDomainError(f"beta schedule gives G(0)={atom:.6g} < 0", "lambda ∫k >= 1 - e^-rho")
    atom = max(atom, 0.0)

    def survival(t: float) -> float:
        if t < 0:
            return 1.0
        return spread * beta.kernel(lam, t) / (lam * (total - spread * beta.kernel_integral(lam, t)))

    def cdf(t: float) -> float:
        return 1.0 - survival(t) if t >= 0 else 0.0

    def density(t: float) -> float:
        if t < 0:
            return 0.0
        s = survival(t)
        return (lam + beta(t)) * s - lam * s * s

    return ServiceModel(
        family="riccati",
        label=f"riccati(lambda={lam:g}, rho={rho:g}, beta={list(beta.values)} @ {list(beta.breaks)})",
        cdf=cdf,
        survival=survival,
        mean=rho / lam,
        atom_at_zero=atom,
        density=density,
        jump_points=(0.0,) if atom > 0 else (),
        params={"lambda": lam, "rho": rho},
        metadata={"density": "from the Riccati right-hand side", "beta": repr(beta)},
    )


# -- implicit families (variance ODE) ----------------------------------------


class _ImplicitLaw:
    """
    G(t) defined by t = t(s), s = −ln(1 − G), with t(·) strictly increasing.

    rate and offset give the analytic bracket
        s0 + rate·t  <=  s(t)  <=  s0 + rate·t + offset;
    a lookup table of (t(s), s) built at construction narrows it. The table is
    immutable after __init__, and the per-t cache is lru_cache, so concurrent
    callers see identical results.
    """

    def __init__(self, t_of_s: Callable[[np.ndarray], np.ndarray], g0: float, rate: float, offset: float):
        self.t_of_s = t_of_s
        self.g0 = g0
        self.s0 = -math.log1p(-g0)
        self.rate = rate
        self.offset = offset
        s_table = self.s0 + TABLE_SPAN * np.linspace(0.0, 1.0, TABLE_POINTS) ** 2
        t_table = t_of_s(s_table)
        t_table[0] = 0.0
        if not np.all(np.diff(t_table) > 0):
            bad = int(np.argmin(np.diff(t_table)))
            raise NumericError(
                f"implicit relation is not monotone on the search bracket near "
                f"G={-math.expm1(-s_table[bad]):.6g}"
            )
        self.s_table = s_table
        self.t_table = t_table
        self.s_at = lru_cache(maxsize=16384)(self._solve)

    def _solve(self, t: float) -> float:
        if t <= 0:
            return self.s0
        i = int(np.searchsorted(self.t_table, t))
        if i < len(self.t_table):
            lo, hi = self.s_table[i - 1], self.s_table[i]
        else:
            lo = self.s0 + self.rate * t
            hi = lo + self.offset
        return find_root(lambda s: float(self.t_of_s(np.array(s))) - t, lo, hi, tol=1e-14)

    def survival(self, t: float) -> float:
        return math.exp(-self.s_at(t)) if t >= 0 else 1.0

    def cdf(self, t: float) -> float:
        return -math.expm1(-self.s_at(t)) if t >= 0 else 0.0

    def quantile(self, u: np.ndarray) -> np.ndarray:
        return np.maximum(self.t_of_s(-np.log1p(-np.asarray(u, dtype=float))), 0.0)

    def mean(self, spec: QuadratureSpec) -> float:
        """E[S] = ∫_{s0}^∞ t(s) e^{−s} ds (integration in the quantile variable)."""
        return integrate(lambda s: float(self.t_of_s(np.array(s))) * math.exp(-s), self.s0, math.inf, spec)


def make_implicit_constant_variance(lam: float, g0: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ServiceModel:
    """
    (1 − G(t))/(1 − G(0)) · e^{2(G(t) − G(0))} = e^{−λt}: V(1′,t) ≡ G(0)(1 − G(0)).
    """
    p = ImplicitVarianceParams(lam, g0, 0.0)
    s0 = -math.log1p(-g0)

    def t_of_s(s: np.ndarray) -> np.ndarray:
        g = -np.expm1(-s)
        return (s - s0 - 2.0 * (g - g0)) / lam

    law = _ImplicitLaw(t_of_s, g0, rate=lam, offset=2.0 * (1.0 - g0))

    def density(t: float) -> float:
        if t < 0:
            return 0.0
        g = law.cdf(t)
        return lam * math.exp(-lam * t) * (1.0 - g0) / ((2.0 * g - 1.0) * math.exp(2.0 * (g - g0)))

    return ServiceModel(
        family="implicit-constant-variance",
        label=f"implicit-constant-variance(lambda={lam:g}, g0={g0:g})",
        cdf=law.cdf,
        survival=law.survival,
        mean=law.mean(spec),
        atom_at_zero=g0,
        density=density,
        quantile=law.quantile,
        jump_points=(0.0,),
        params={"lambda": p.lam, "g0": p.g0, "beta": 0.0},
        metadata={"density": "implicit-function derivative", "cdf": "root of t(s) = t"},
    )


def make_beta_lambda_variance_model(lam: float) -> ServiceModel:
    """G(t) = (1 + √(1 − e^{−2λt}))/2, the case β = λ with G(0) = 1/2."""
    _require_positive("lambda", lam)

    def survival(t: float) -> float:
        if t <= 0:
            return 0.5 if t == 0 else 1.0
        x = math.exp(-2.0 * lam * t)
        return x / (2.0 * (1.0 + math.sqrt(-math.expm1(-2.0 * lam * t))))

    def cdf(t: float) -> float:
        if t < 0:
            return 0.0
        return 0.5 * (1.0 + math.sqrt(-math.expm1(-2.0 * lam * t)))

    def density(t: float) -> float:
        if t < 0:
            return 0.0
        if t == 0:
            return math.inf
        return lam * math.exp(-2.0 * lam * t) / (2.0 * math.sqrt(-math.expm1(-2.0 * lam * t)))

    def quantile(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.maximum(-np.log(4.0 * u * (1.0 - u)) / (2.0 * lam), 0.0)

    return ServiceModel(
        family="beta-lambda-variance",
        label=f"beta-lambda-variance(lambda={lam:g})",
        cdf=cdf,
        survival=survival,
        mean=(1.0 - math.log(2.0)) / (2.0 * lam),
        atom_at_zero=0.5,
        density=density,
        quantile=quantile,
        jump_points=(0.0,),
        params={"lambda": lam, "g0": 0.5, "beta": lam},
        metadata={"density": "analytic"},
    )


def make_implicit_variance_family(p: ImplicitVarianceParams, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ServiceModel:
    """
    Constant nonzero β in the variance ODE dG/dt = (β + λ/(2G − 1))(1 − G):

        ((1−G)/(1−G(0)))^{1/(β+λ)} · |L(G)/L(G(0))|^{λ/(β(β+λ))} = e^{−t},
        L(G) = β(2G − 1) + λ.
    """
    lam, g0, beta = p.lam, p.g0, p.beta
    if beta == 0.0:
        raise ParameterDomainError("beta = 0 is case A; use make_implicit_constant_variance", "beta != 0")
    s0 = -math.log1p(-g0)
    rate = beta + lam
    k = lam / (beta * rate)

    def linear(g):
        return beta * (2.0 * g - 1.0) + lam

    L0 = linear(g0)
    if L0 <= 0:
        raise ParameterDomainError(
            f"beta(2G(0) - 1) + lambda = {L0:g} <= 0; the implicit relation is not analysed there",
            "beta(2G(0) - 1) + lambda > 0",
        )

    def t_of_s(s: np.ndarray) -> np.ndarray:
        g = -np.expm1(-s)
        return (s - s0) / rate - k * np.log(np.abs(linear(g) / L0))

    # k·ln(L(G)/L(G(0))) climbs monotonically from 0 to this value as G → 1
    spread = k * math.log(rate / L0)
    law = _ImplicitLaw(t_of_s, g0, rate=rate, offset=rate * max(spread, 0.0) + 1e-9)

    def density(t: float) -> float:
        if t < 0:
            return 0.0
        g = law.cdf(t)
        if 2.0 * g - 1.0 <= 0:
            return math.inf
        return law.survival(t) * linear(g) / (2.0 * g - 1.0)

    return ServiceModel(
        family="implicit-variance",
        label=f"implicit-variance(lambda={lam:g}, g0={g0:g}, beta={beta:g})",
        cdf=law.cdf,
        survival=law.survival,
        mean=law.mean(spec),
        atom_at_zero=g0,
        density=density,
        quantile=law.quantile,
        jump_points=(0.0,),
        params={"lambda": lam, "g0": g0, "beta": beta},
        metadata={"density": "implicit-function derivative", "cdf": "root of t(s) = t"},
    )


# -- operations on any model -------------------------------------------------


def hazard(model: ServiceModel, t: float) -> float:
    """h(t) = g(t)/(1 − G(t))."""
    if model.density is None:
        raise CapabilityError(f"{model.label} has no density; hazard is undefined")
    if t < 0:
        raise ParameterDomainError(f"hazard needs t >= 0, got {t}", "t >= 0")
    s = model.survival(t)
    if s <= 0:
        raise UndefinedHazardError(f"G({t:g}) = 1 for {model.label}; hazard undefined")
    g = model.density(t)
    if not math.isfinite(g):
        raise UndefinedHazardError(f"density of {model.label} is not finite at t={t:g}")
    return g / s


def moment(model: ServiceModel, n: int, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """E[Sⁿ] = ∫₀^∞ n t^{n−1}(1 − G(t)) dt."""
    if n < 1 or int(n) != n:
        raise ParameterDomainError(f"moment order must be a positive integer, got {n}", "n >= 1")
    n = int(n)
    return integrate(lambda t: n * t ** (n - 1) * model.survival(t), 0.0, math.inf, spec, model.jump_points)


def moment_bounds(g0: float, lam: float, n: int) -> tuple[float, float]:
    """
    Bounds on E[Sⁿ] for the constant-variance law:
    (1−G(0)) n! e^{−2(1−G(0))}/λⁿ  <=  E[Sⁿ]  <=  (1−G(0)) n!/((2G(0)−1)λⁿ).
    """
    if not 0.5 < g0 <= 1.0:
        raise ParameterDomainError(f"G(0)={g0:g} must exceed 1/2", "1/2 < G(0) <= 1")
    _require_positive("lambda", lam)
    if n < 1 or int(n) != n:
        raise ParameterDomainError(f"moment order must be a positive integer, got {n}", "n >= 1")
    base = (1.0 - g0) * math.factorial(int(n)) / lam ** n
    return base * math.exp(-2.0 * (1.0 - g0)), base / (2.0 * g0 - 1.0)


def sample(model: ServiceModel, u: Union[float, Sequence[float], np.ndarray]):
    """
    Inverse-CDF draw(s) for uniform variate(s) u in [0, 1).

    u below the atom maps to 0. Closed-form quantiles are used where the model
    has one; otherwise G(t) = u is solved by bracketing.
    """
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((u < 0) | (u >= 1)) or np.any(np.isnan(u)):
        raise ParameterDomainError("uniform variates must lie in [0, 1)", "0 <= u < 1")
    out = np.zeros_like(u)
    mask = u >= model.atom_at_zero
    if np.any(mask):
        if model.quantile is not None:
            out[mask] = model.quantile(u[mask])
        else:
            out[mask] = [_solve_quantile(model, v) for v in u[mask]]
    return float(out[0]) if scalar else out


def _solve_quantile(model: ServiceModel, u: float) -> float:
    hi = max(model.mean, 1e-3)
    for _ in range(200):
        if model.cdf(hi) >= u:
            break
        hi *= 2.0
    else:
        raise NumericError(f"could not bracket the {u:g}-quantile of {model.label}")
    return find_root(lambda t: model.cdf(t) - u, 0.0, hi, tol=SAMPLER_TOL)


def verify_model(
    model: ServiceModel,
    grid: Optional[Sequence[float]] = None,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    check_mean: bool = True,
) -> list[str]:
    """
    Check the structural invariants of a law on a sampling grid.

    Returns human-readable problems; an empty list means the law passed.
    """
    problems = []
    if grid is None:
        horizon = max(50.0 * model.mean, 1.0)
        grid = np.linspace(0.0, horizon, 201)
    values = np.array([model.cdf(t) for t in grid])
    if np.any(values < 0) or np.any(values > 1):
        problems.append("G leaves [0, 1]")
    if np.any(np.diff(values) < -1e-14):
        problems.append("G decreases on the grid")
    if abs(model.cdf(0.0) - model.atom_at_zero) > 1e-12:
        problems.append(f"atom_at_zero={model.atom_at_zero:g} but G(0)={model.cdf(0.0):g}")
    if model.survival(float(grid[-1])) > 1e-6:
        problems.append(f"1 - G({grid[-1]:g}) = {model.survival(float(grid[-1])):.3g} does not approach 0")
    if check_mean:
        tail = integrate(model.survival, 0.0, math.inf, spec, model.jump_points)
        if abs(tail - model.mean) > 1e-8 * max(1.0, model.mean):
            problems.append(f"mean {model.mean:.12g} differs from the tail integral {tail:.12g}")
    if problems:
        logger.debug("%s failed checks: %s", model.label, problems)
    return problems
