"""
Tests for monotonicity.py - hazard-rate conditions, derivatives and identity checks.
"""
import math

import numpy as np
import pytest

from src.mginf.errors import CapabilityError, ParameterDomainError
from src.mginf.numerics import finite_difference
from src.mginf.service_models import (
    BetaConstantFamilyParams,
    PiecewiseBeta,
    beta_upper_bound,
    make_beta_constant_family,
    make_beta_lambda_variance_model,
    make_deterministic,
    make_exponential,
    make_riccati_family,
    make_trivial_model,
    make_zero_beta_model,
)
from src.mginf.monotonicity import (
    beta_of,
    check_mean_monotone,
    check_variance_monotone,
    mean_derivative,
    reconstruct_cdf,
    riccati_residual,
    variance_beta_of,
    variance_derivative,
)
from src.mginf.transient_engine import mean_busy_origin, variance_busy_origin

GRID = np.linspace(0.0, 5.0, 6)
SWEEP_GRID = np.linspace(0.0, 10.0, 41)


def _sweep_draws(count: int = 50, seed: int = 20240611) -> list:
    """Seeded (model, λ) draws from families whose hazard is monotone in t."""
    rng = np.random.default_rng(seed)
    draws = []
    for i in range(count):
        lam = float(rng.uniform(0.3, 3.0))
        kind = i % 5
        if kind == 0:
            model = make_exponential(float(rng.uniform(0.2, 3.0)))
        elif kind == 1:
            model = make_zero_beta_model(lam, float(rng.uniform(0.0, 0.9)))
        elif kind == 4:
            model = make_beta_lambda_variance_model(lam)
        else:
            rho = float(rng.uniform(0.2, 3.0))
            beta = float(rng.uniform(-0.9 * lam, beta_upper_bound(lam, rho)))
            model = make_beta_constant_family(BetaConstantFamilyParams(lam, rho, beta))
        draws.append(pytest.param(model, lam, id=f"draw{i}-{model.family}"))
    return draws


SWEEP_DRAWS = _sweep_draws()


class TestBetaOf:
    """Tests for beta_of and variance_beta_of."""

    def test_balanced_exponential(self, unit_exponential):
        """Test that h = λ gives β = 0."""
        for t in (0.0, 1.0, 3.0):
            assert beta_of(unit_exponential, 1.0, t) == pytest.approx(0.0, abs=1e-12)

    def test_slow_exponential(self):
        """Test that α = 2, λ = 1 gives β = −1/2."""
        assert beta_of(make_exponential(2.0), 1.0, 1.0) == pytest.approx(-0.5, abs=1e-12)

    def test_zero_beta_family(self, zero_beta_model):
        """Test that the zero-β law has β ≡ 0."""
        for t in (0.0, 0.5, 2.0):
            assert beta_of(zero_beta_model, 1.0, t) == pytest.approx(0.0, abs=1e-12)

    def test_variance_beta_needs_upper_half(self, unit_exponential):
        """Test that variance_beta_of is undefined where G <= 1/2."""
        with pytest.raises(ParameterDomainError):
            variance_beta_of(unit_exponential, 1.0, 0.1)

    def test_variance_beta_of_constant_variance_law(self, constant_variance_model):
        """Test that the constant-variance law sits exactly on its threshold."""
        assert variance_beta_of(constant_variance_model, 1.0, 1.0) == pytest.approx(0.0, abs=1e-8)


class TestDerivatives:
    """Tests for mean_derivative and variance_derivative."""

    def test_mean_derivative_balanced(self, unit_exponential):
        """Test that ρ = 1 gives a zero mean derivative."""
        assert mean_derivative(unit_exponential, 1.0, 2.0) == pytest.approx(0.0, abs=1e-12)

    def test_mean_derivative_at_zero(self, unit_exponential):
        """Test that α = 1, λ = 2 gives 1 at t = 0."""
        assert mean_derivative(unit_exponential, 2.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_saturated_model(self):
        """Test that G(t) = 1 gives zero derivatives without a hazard."""
        model = make_deterministic(2.0)
        assert mean_derivative(model, 1.0, 3.0) == 0.0
        assert variance_derivative(model, 1.0, 3.0) == 0.0

    def test_variance_derivative_at_zero(self, unit_exponential):
        """Test that α = λ = 1 gives 2 at t = 0."""
        assert variance_derivative(unit_exponential, 1.0, 0.0) == pytest.approx(2.0, abs=1e-12)

    def test_constant_variance_law(self, constant_variance_model):
        """Test that the constant-variance law has a zero variance derivative."""
        for t in (0.1, 1.0, 4.0):
            assert variance_derivative(constant_variance_model, 1.0, t) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_mean_derivative_matches_curve(self, beta_constant_model, t):
        """Test that the formula agrees with a finite difference of μ(1′,·)."""
        def mu(x):
            return float(mean_busy_origin(beta_constant_model, 1.0, [x]).values[0])

        assert finite_difference(mu, t, 1e-4) == pytest.approx(mean_derivative(beta_constant_model, 1.0, t), abs=1e-4)

    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_variance_derivative_matches_curve(self, t):
        """Test that the formula agrees with a finite difference of V(1′,·)."""
        model = make_exponential(1.5)

        def var(x):
            return float(variance_busy_origin(model, 2.0, [x]).values[0])

        assert finite_difference(var, t, 1e-4) == pytest.approx(variance_derivative(model, 2.0, t), abs=1e-4)


class TestCheckMeanMonotone:
    """Tests for check_mean_monotone."""

    def test_heavy_traffic_holds(self):
        """Test that M|M|∞ with ρ = 1.5 satisfies h <= λ."""
        report = check_mean_monotone(make_exponential(1.5), 1.0, GRID)
        assert report.condition_holds_everywhere
        assert report.violations == []

    def test_light_traffic_violates_everywhere(self):
        """Test that M|M|∞ with ρ = 0.5 violates the condition at every point."""
        report = check_mean_monotone(make_exponential(0.5), 1.0, GRID)
        assert not report.condition_holds_everywhere
        assert [v[0] for v in report.violations] == list(GRID)
        assert report.derivative_min < 0

    def test_zero_beta_equality(self, zero_beta_model):
        """Test that h = λ holds with a zero derivative."""
        report = check_mean_monotone(zero_beta_model, 1.0, GRID)
        assert report.condition_holds_everywhere
        assert report.derivative_min == pytest.approx(0.0, abs=1e-12)

    def test_no_density_is_inapplicable(self):
        """Test that a law without a density yields an inapplicable report."""
        report = check_mean_monotone(make_deterministic(2.0), 1.0, GRID)
        assert not report.applicable
        assert not report.condition_holds_everywhere
        assert "density" in report.note

    def test_condition_implies_monotone_curve(self):
        """Test that a report without violations comes with a non-decreasing μ(1′,·)."""
        model = make_exponential(1.5)
        grid = np.linspace(0.0, 10.0, 41)
        assert check_mean_monotone(model, 1.0, grid).condition_holds_everywhere
        assert np.all(np.diff(mean_busy_origin(model, 1.0, grid).values) >= -1e-10)

    def test_rejects_non_positive_lambda(self, unit_exponential):
        """Test that λ <= 0 is rejected."""
        with pytest.raises(ParameterDomainError):
            check_mean_monotone(unit_exponential, 0.0, GRID)


class TestCheckVarianceMonotone:
    """Tests for check_variance_monotone."""

    def test_constant_variance_equality(self, constant_variance_model):
        """Test that case A holds with equality and a zero derivative."""
        report = check_variance_monotone(constant_variance_model, 1.0, GRID)
        assert report.condition_holds_everywhere
        assert report.derivative_min == pytest.approx(0.0, abs=1e-8)

    def test_exponential_holds(self, unit_exponential):
        """Test that α = λ = 1 holds everywhere, with early points auto-satisfied."""
        report = check_variance_monotone(unit_exponential, 1.0, GRID)
        assert report.condition_holds_everywhere
        assert report.auto_satisfied == [0.0]

    def test_trivial_model(self):
        """Test that G ≡ 1 gives a trivial report."""
        report = check_variance_monotone(make_trivial_model(), 1.0, GRID)
        assert report.trivial
        assert report.condition_holds_everywhere
        assert report.derivative_min == 0.0

    def test_infinite_density_is_skipped(self):
        """Test that t = 0 of the β = λ law is skipped while t > 0 violates by β."""
        report = check_variance_monotone(make_beta_lambda_variance_model(1.0), 1.0, GRID)
        assert report.skipped == [0.0]
        assert [v[0] for v in report.violations] == list(GRID[1:])
        for _, h, threshold in report.violations:
            assert h - threshold == pytest.approx(1.0, abs=1e-9)

    def test_skipped_points_are_not_auto_satisfied(self):
        """Test that G(0) = 1/2 with an infinite density is skipped only."""
        report = check_variance_monotone(make_beta_lambda_variance_model(2.0), 2.0, [0.0, 0.5])
        assert report.skipped == [0.0]
        assert report.auto_satisfied == []
        assert not set(report.skipped) & set(report.auto_satisfied)

    def test_condition_implies_monotone_curve(self):
        """Test that a report without violations comes with a non-decreasing V(1′,·)."""
        model = make_exponential(1.5)
        grid = np.linspace(0.0, 10.0, 41)
        assert check_variance_monotone(model, 2.0, grid).condition_holds_everywhere
        assert np.all(np.diff(variance_busy_origin(model, 2.0, grid).values) >= -1e-10)

    def test_report_serializes(self, unit_exponential):
        """Test that as_dict carries every report field."""
        data = check_variance_monotone(unit_exponential, 1.0, GRID).as_dict()
        assert data["kind"] == "variance"
        assert {"violations", "derivative_min", "applicable", "trivial", "skipped"} <= set(data)


class TestRandomizedSweep:
    """Tests that a clean hazard-rate report always comes with a non-decreasing curve."""

    @pytest.mark.parametrize("model, lam", SWEEP_DRAWS)
    def test_mean_condition_implies_monotone(self, model, lam):
        """Test that no mean violations on the grid means μ(1′,·) never decreases."""
        report = check_mean_monotone(model, lam, SWEEP_GRID)
        if report.violations or not report.applicable:
            return
        assert np.all(np.diff(mean_busy_origin(model, lam, SWEEP_GRID).values) >= -1e-10)

    @pytest.mark.parametrize("model, lam", SWEEP_DRAWS)
    def test_variance_condition_implies_monotone(self, model, lam):
        """Test that no variance violations on the grid means V(1′,·) never decreases."""
        report = check_variance_monotone(model, lam, SWEEP_GRID)
        if report.violations or not report.applicable:
            return
        assert np.all(np.diff(variance_busy_origin(model, lam, SWEEP_GRID).values) >= -1e-10)

    def test_sweep_covers_both_outcomes(self):
        """Test that the draws include both clean and violating reports."""
        outcomes = {bool(check_mean_monotone(p.values[0], p.values[1], SWEEP_GRID).violations) for p in SWEEP_DRAWS}
        assert outcomes == {True, False}


class TestRiccatiResidual:
    """Tests for riccati_residual."""

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_beta_constant_family(self, beta_constant_model, t):
        """Test that the constant-β family solves its Riccati equation."""
        assert abs(riccati_residual(beta_constant_model, 1.0, 0.0, t, 1e-4)) <= 1e-5

    def test_trivial_solution(self):
        """Test that G ≡ 1 solves the equation for any β."""
        assert riccati_residual(make_trivial_model(), 1.0, 0.3, 1.0, 1e-4) == pytest.approx(0.0, abs=1e-12)

    def test_non_member(self):
        """Test that an exponential with α = 2, λ = 1 does not solve it at β = 0."""
        assert abs(riccati_residual(make_exponential(2.0), 1.0, 0.0, 1.0, 1e-4)) > 1e-3

    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_piecewise_beta(self, t):
        """Test that the piecewise-β family solves the equation away from the break."""
        beta = PiecewiseBeta((0.2, -0.3), (1.0,))
        model = make_riccati_family(1.0, 1.0, beta)
        assert abs(riccati_residual(model, 1.0, beta, t, 1e-4)) <= 1e-6

    def test_rejects_zero_step(self, unit_exponential):
        """Test that h_step <= 0 is rejected."""
        with pytest.raises(ParameterDomainError):
            riccati_residual(unit_exponential, 1.0, 0.0, 1.0, 0.0)


class TestReconstructCdf:
    """Tests for reconstruct_cdf."""

    def test_exponential(self):
        """Test that the hazard integral rebuilds G for α = 2, λ = 1."""
        model = make_exponential(2.0)
        assert reconstruct_cdf(model, 1.0, 3.0) == pytest.approx(1.0 - math.exp(-1.5), abs=1e-10)

    @pytest.mark.parametrize("t", [0.5, 2.0, 5.0])
    def test_beta_constant_family(self, beta_constant_model, t):
        """Test that the hazard integral rebuilds G for a law with an atom."""
        assert reconstruct_cdf(beta_constant_model, 1.0, t) == pytest.approx(beta_constant_model.cdf(t), abs=1e-9)

    def test_requires_density(self):
        """Test that a law without a density cannot be rebuilt."""
        with pytest.raises(CapabilityError):
            reconstruct_cdf(make_deterministic(1.0), 1.0, 0.5)
