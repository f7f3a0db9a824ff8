"""
Shared numerical kernels.

- adaptive Simpson quadrature with declared jump points
- cumulative integrals on a time grid (each cell integrates only its own span)
- bracketed root finding (scipy's brentq: bisection safeguarded secant/IQI)
- central / one-sided finite differences
- trapezoid-weighted discrete convolution on a uniform grid
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import pairwise
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from src.mginf.errors import BracketError, NumericError, ParameterDomainError, QuadratureError, ShapeError

logger = logging.getLogger(__name__)

# Simpson refinements below this depth are always taken, so a coarse first
# panel cannot accept a feature it has not sampled.
MIN_DEPTH = 3
ROOT_TOL = 1e-12
UNIFORM_RTOL = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_depth: int = 60
    # replaces +inf as the upper limit; None means "search by doubling"
    tail_cutoff: Optional[float] = None

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ParameterDomainError("quadrature tolerances must be positive", "abs_tol > 0, rel_tol > 0")
        if self.max_depth < MIN_DEPTH:
            raise ParameterDomainError(f"max_depth must be at least {MIN_DEPTH}", f"max_depth >= {MIN_DEPTH}")
        if self.tail_cutoff is not None and self.tail_cutoff <= 0:
            raise ParameterDomainError("tail_cutoff must be positive", "tail_cutoff > 0")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class GridFunction:
    """
    Sampled function on an increasing time grid.

    Convolution additionally needs the grid to start at 0 with a uniform step;
    see `step`.
    """

    grid: np.ndarray
    values: np.ndarray
    uniform: bool = field(init=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ShapeError(f"grid shape {grid.shape} and values shape {values.shape} differ")
        if grid.size == 0:
            raise ShapeError("empty grid")
        if grid[0] < 0 or np.any(np.diff(grid) <= 0):
            raise ShapeError("grid must be non-negative and strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "uniform", _is_uniform_from_zero(grid))

    @property
    def step(self) -> float:
        if not self.uniform:
            raise ShapeError("grid is not uniform from 0")
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, t: float) -> float:
        """Linear interpolation, clamped to the end values."""
        return float(np.interp(t, self.grid, self.values))

    def __len__(self) -> int:
        return self.grid.size


def _is_uniform_from_zero(grid: np.ndarray) -> bool:
    if grid[0] != 0.0:
        return False
    if grid.size < 2:
        return True
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    return bool(np.all(np.abs(steps - h) <= UNIFORM_RTOL * max(h, 1.0) * grid.size))


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    """0, h, 2h, ... up to (and including) the first point >= horizon."""
    if horizon <= 0 or step <= 0:
        raise ParameterDomainError("horizon and step must be positive", "horizon > 0, step > 0")
    n = int(math.ceil(horizon / step - 1e-9))
    return np.arange(n + 1, dtype=float) * step


def make_grid(start: float, stop: float, points: int) -> np.ndarray:
    if points < 1:
        raise ParameterDomainError("a grid needs at least one point", "points >= 1")
    if start < 0 or stop < start:
        raise ParameterDomainError("grid must satisfy 0 <= start <= stop", "0 <= start <= stop")
    if points == 1:
        return np.array([float(start)])
    if stop == start:
        raise ParameterDomainError("grid with several points needs stop > start", "stop > start")
    return np.linspace(start, stop, points)


def find_tail_cutoff(f: Callable[[float], float], tol: float, start: float = 1.0, max_doublings: int = 80) -> float:
    """Smallest T = start * 2^k with |f(T)| < tol."""
    T = max(start, 1e-12)
    for _ in range(max_doublings):
        if abs(f(T)) < tol:
            return T
        T *= 2.0
    raise NumericError(f"tail of integrand does not fall below {tol:.3g} by t={T:.6g}")


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Iterable[float] = (),
) -> float:
    """
    Adaptive Simpson integral of f over [a, b].

    f may jump at the given breakpoints. f is taken as right-continuous, so the
    piece ending at a breakpoint is evaluated just left of it. b may be +inf:
    spec.tail_cutoff is used, or a doubling search for |f| < abs_tol.
    """
    if a > b:
        raise ParameterDomainError(f"integration limits out of order: a={a}, b={b}", "a <= b")
    if a == b:
        return 0.0
    if math.isinf(b):
        b = spec.tail_cutoff if spec.tail_cutoff is not None else find_tail_cutoff(f, spec.abs_tol, start=max(1.0, 2 * a))
        if b <= a:
            return 0.0

    jumps = sorted({p for p in breakpoints if a < p < b})
    cuts = [a, *jumps, b]
    jump_set = set(jumps)
    pieces = []
    for lo, hi in pairwise(cuts):
        fa = f(lo)
        fb = f(math.nextafter(hi, -math.inf)) if hi in jump_set else f(hi)
        pieces.append(_adaptive_simpson(f, lo, hi, fa, fb, spec))
    return math.fsum(pieces)


def _adaptive_simpson(f, a: float, b: float, fa: float, fb: float, spec: QuadratureSpec) -> float:
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, spec.abs_tol, 0)]
    accepted = []
    while stack:
        lo, hi, flo, fmid, fhi, whole, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        flm = f(0.5 * (lo + mid))
        frm = f(0.5 * (mid + hi))
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - whole
        if depth >= MIN_DEPTH and abs(delta) <= 15.0 * max(tol, spec.rel_tol * abs(left + right)):
            # Richardson correction
            accepted.append(left + right + delta / 15.0)
            continue
        if depth >= spec.max_depth:
            # integrable endpoint singularities (e.g. a sqrt cusp) end up here
            # with a negligible absolute error
            if abs(delta) / 15.0 <= spec.abs_tol:
                accepted.append(left + right + delta / 15.0)
                continue
            raise QuadratureError("adaptive Simpson exceeded max_depth", (lo, hi), abs(delta) / 15.0)
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1))
    return math.fsum(accepted)


def cumulative_integral(
    f: Callable[[float], float],
    times: Sequence[float],
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Iterable[float] = (),
) -> np.ndarray:
    """∫₀ᵗ f at each t of an increasing, non-negative grid, cell by cell."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ShapeError("times must be a non-empty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ShapeError("times must be non-negative and non-decreasing")
    breakpoints = tuple(breakpoints)
    out = np.empty_like(times)
    running = 0.0
    previous = 0.0
    for i, t in enumerate(times):
        running += integrate(f, previous, float(t), spec, breakpoints)
        out[i] = running
        previous = float(t)
    return out


def cumulative_tail_integral(model, grid: Sequence[float], spec: QuadratureSpec = DEFAULT_QUADRATURE) -> GridFunction:
    """Λ̃(t) = ∫₀ᵗ (1 − G(v)) dv for a ServiceModel on the grid."""
    grid = np.asarray(grid, dtype=float)
    values = cumulative_integral(model.survival, grid, spec, model.jump_points)
    # never let quadrature noise break monotonicity
    values = np.maximum.accumulate(values)
    return GridFunction(grid, values)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Root of f inside [lo, hi]; f(lo) and f(hi) must not share a sign."""
    if lo > hi:
        lo, hi = hi, lo
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.isnan(f_lo) or math.isnan(f_hi) or f_lo * f_hi > 0:
        raise BracketError(lo, hi, f_lo, f_hi)
    root, info = brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True, disp=False)
    if not info.converged:
        raise NumericError(f"root finder did not converge on [{lo:.6g}, {hi:.6g}]: {info.flag}")
    return min(max(root, lo), hi)


def finite_difference(f: Callable[[float], float], t: float, h: float) -> float:
    """Central difference; second-order forward stencil when t - h < 0."""
    if t - h >= 0:
        return (f(t + h) - f(t - h)) / (2.0 * h)
    return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)


def delta(grid: Sequence[float]) -> GridFunction:
    """
    Discrete convolution identity on a uniform grid.

    The weight 2/h at index 0 gives unit trapezoid mass, so convolve(a, delta)
    reproduces a at every index except 0, where the trapezoid rule over an
    empty interval yields 0.
    """
    grid = np.asarray(grid, dtype=float)
    step = GridFunction(grid, np.zeros_like(grid)).step
    values = np.zeros_like(grid)
    values[0] = 2.0 / step
    return GridFunction(grid, values)


def convolve(a: GridFunction, b: GridFunction) -> GridFunction:
    """
    (a*b)(t) = ∫₀ᵗ a(t−s) b(s) ds by the trapezoid-weighted Cauchy product.

    Both operands must share the same uniform grid from 0; the result lives on
    that grid.
    """
    if len(a) != len(b) or not (a.uniform and b.uniform):
        raise ShapeError("convolution needs two functions on the same uniform grid from 0")
    h = a.step
    if len(a) > 1 and not math.isclose(h, b.step, rel_tol=UNIFORM_RTOL * 10):
        raise ShapeError(f"grid steps differ: {h} vs {b.step}")
    n = len(a)
    full = np.convolve(a.values, b.values)[:n]
    # trapezoid end weights: half of the j=0 and j=i terms
    correction = 0.5 * (a.values * b.values[0] + a.values[0] * b.values)
    return GridFunction(a.grid, h * (full - correction))
