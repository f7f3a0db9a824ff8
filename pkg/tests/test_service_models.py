"""
Tests for service_models.py - service-time families and their operations.
"""
import math

import numpy as np
import pytest

from src.mginf.errors import CapabilityError, ParameterDomainError, UndefinedHazardError
from src.mginf.numerics import integrate
from src.mginf.service_models import (
    BetaConstantFamilyParams,
    ImplicitVarianceParams,
    PiecewiseBeta,
    hazard,
    make_beta_constant_family,
    make_beta_lambda_variance_model,
    make_deterministic,
    make_exponential,
    make_implicit_constant_variance,
    make_implicit_variance_family,
    make_riccati_family,
    make_trivial_model,
    make_zero_beta_model,
    moment,
    moment_bounds,
    sample,
    verify_model,
)


class TestDeterministic:
    """Tests for make_deterministic."""

    def test_step_function(self):
        """Test that G jumps from 0 to 1 at alpha."""
        model = make_deterministic(2.0)
        assert model.cdf(1.0) == 0.0
        assert model.cdf(2.0) == 1.0

    def test_mean_and_tail_integral(self):
        """Test that the mean is alpha and matches the tail integral."""
        assert make_deterministic(2.0).mean == 2.0
        assert moment(make_deterministic(1.0), 1) == pytest.approx(1.0, abs=1e-9)

    def test_no_density(self):
        """Test that the law is flagged as atomic and has no hazard."""
        model = make_deterministic(1.0)
        assert model.density is None
        with pytest.raises(CapabilityError):
            hazard(model, 0.5)

    def test_non_positive_alpha(self):
        """Test that alpha <= 0 is a parameter-domain error."""
        with pytest.raises(ParameterDomainError):
            make_deterministic(0.0)

    def test_third_moment(self):
        """Test that E[S³] = α³."""
        assert moment(make_deterministic(2.0), 3) == pytest.approx(8.0, abs=1e-8)


class TestExponential:
    """Tests for make_exponential."""

    def test_median(self, unit_exponential):
        """Test that G(ln 2) = 1/2 for the unit exponential."""
        assert unit_exponential.cdf(math.log(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_constant_hazard(self):
        """Test that the hazard is 1/alpha everywhere."""
        model = make_exponential(2.0)
        for t in (0.1, 1.0, 7.5):
            assert hazard(model, t) == pytest.approx(0.5, rel=1e-12)

    def test_tail_integral(self):
        """Test that the tail integral reproduces the mean."""
        assert moment(make_exponential(2.0), 1) == pytest.approx(2.0, abs=1e-9)

    def test_second_moment(self, unit_exponential):
        """Test that E[S²] = 2α²."""
        assert moment(unit_exponential, 2) == pytest.approx(2.0, abs=1e-9)

    def test_rejects_negative_alpha(self):
        """Test that negative alpha is rejected."""
        with pytest.raises(ParameterDomainError):
            make_exponential(-1.0)


class TestBetaConstantFamily:
    """Tests for make_beta_constant_family."""

    def test_atom_at_zero(self, beta_constant_model):
        """Test that G(0) = e^{-1} at λ = 1, ρ = 1, β = 0."""
        assert beta_constant_model.cdf(0.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
        assert beta_constant_model.atom_at_zero == pytest.approx(math.exp(-1.0), abs=1e-15)

    def test_cdf_limit(self, beta_constant_model):
        """Test that G(30) is within 1e-9 of 1."""
        assert beta_constant_model.cdf(30.0) > 1.0 - 1e-9

    @pytest.mark.parametrize("lam, rho, beta", [(1.0, 1.0, 0.0), (1.0, 1.0, -0.5), (1.0, 0.5, 0.2)])
    def test_hazard_excess_tends_to_beta(self, lam, rho, beta):
        """Test that h(t) − λ approaches β for large t."""
        model = make_beta_constant_family(BetaConstantFamilyParams(lam, rho, beta))
        t = 60.0 / (lam + beta)
        assert hazard(model, t) - lam == pytest.approx(beta, abs=1e-9)

    def test_band_boundary(self):
        """Test that the upper band edge constructs and a step past it fails."""
        edge = 1.0 / (math.e - 1.0)
        model = make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, edge))
        assert model.atom_at_zero == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ParameterDomainError) as exc:
            make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, edge + 1e-6))
        assert "lambda/(e^rho - 1)" in str(exc.value)

    def test_lower_band_edge_is_trivial(self):
        """Test that β = −λ gives G ≡ 1 with mean 0."""
        model = make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, -1.0))
        assert model.atom_at_zero == 1.0
        assert model.mean == 0.0

    @pytest.mark.parametrize("beta", [0.0, -0.5, 0.3])
    def test_mean_is_rho_over_lambda(self, beta):
        """Test that the tail integral equals ρ/λ across the band."""
        model = make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, beta))
        assert moment(model, 1) == pytest.approx(1.0, abs=1e-9)

    def test_density_integrates_to_increment(self, beta_constant_model):
        """Test that ∫₀ᵀ g = G(T) − G(0)."""
        total = integrate(beta_constant_model.density, 0.0, 3.0)
        assert total == pytest.approx(beta_constant_model.cdf(3.0) - beta_constant_model.cdf(0.0), abs=1e-10)


class TestZeroBeta:
    """Tests for make_zero_beta_model."""

    def test_reduces_to_exponential(self, unit_exponential):
        """Test that g0 = 0, λ = 1 is the unit exponential."""
        model = make_zero_beta_model(1.0, 0.0)
        for t in np.linspace(0.0, 10.0, 21):
            assert model.cdf(t) == pytest.approx(unit_exponential.cdf(t), abs=1e-12)

    def test_atom_and_mean(self):
        """Test that λ = 2, g0 = 1/2 gives G(0) = 1/2 and mean 1/4."""
        model = make_zero_beta_model(2.0, 0.5)
        assert model.cdf(0.0) == 0.5
        assert model.mean == pytest.approx(0.25)
        assert moment(model, 1) == pytest.approx(0.25, abs=1e-10)

    def test_hazard_equals_lambda(self, zero_beta_model):
        """Test that the hazard is λ for t > 0."""
        for t in (0.5, 1.0, 4.0):
            assert hazard(zero_beta_model, t) == pytest.approx(1.0, rel=1e-12)

    def test_rejects_full_atom(self):
        """Test that g0 = 1 is a parameter-domain error."""
        with pytest.raises(ParameterDomainError):
            make_zero_beta_model(1.0, 1.0)


class TestTrivial:
    """Tests for make_trivial_model."""

    def test_all_mass_at_zero(self):
        """Test that G ≡ 1 with mean 0."""
        model = make_trivial_model()
        assert model.cdf(0.0) == 1.0
        assert model.mean == 0.0
        assert moment(model, 1) == 0.0

    def test_hazard_undefined(self):
        """Test that the hazard of G ≡ 1 is undefined."""
        with pytest.raises(UndefinedHazardError):
            hazard(make_trivial_model(), 1.0)


class TestImplicitConstantVariance:
    """Tests for make_implicit_constant_variance."""

    def test_atom(self, constant_variance_model):
        """Test that G(0) = g0."""
        assert constant_variance_model.cdf(0.0) == pytest.approx(0.8, abs=1e-14)

    def test_mean(self, constant_variance_model):
        """Test that λ·mean = g0(1 − g0) by quadrature of the root-found CDF."""
        assert moment(constant_variance_model, 1) == pytest.approx(0.16, abs=1e-4)
        assert constant_variance_model.mean == pytest.approx(0.16, abs=1e-8)

    def test_implicit_relation_holds(self, constant_variance_model):
        """Test that (1−G)/(1−g0)·e^{2(G−g0)} = e^{−λt} at the solved G."""
        for t in (0.1, 1.0, 5.0):
            g = constant_variance_model.cdf(t)
            lhs = (1.0 - g) / 0.2 * math.exp(2.0 * (g - 0.8))
            assert lhs == pytest.approx(math.exp(-t), rel=1e-10)

    def test_first_moment_inside_bounds(self, constant_variance_model):
        """Test that E[S] lies within the moment bounds for n = 1."""
        lower, upper = moment_bounds(0.8, 1.0, 1)
        assert lower <= moment(constant_variance_model, 1) <= upper

    @pytest.mark.parametrize("g0", [0.6, 0.8, 0.9])
    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    def test_moment_bounds_hold(self, g0, lam):
        """Test that E[Sⁿ] obeys the moment bounds for n = 1..5."""
        model = make_implicit_constant_variance(lam, g0)
        for n in range(1, 6):
            lower, upper = moment_bounds(g0, lam, n)
            value = moment(model, n)
            assert lower * (1 - 1e-9) <= value <= upper * (1 + 1e-9)

    def test_density_integrates_to_increment(self, constant_variance_model):
        """Test that ∫₀ᵀ g = G(T) − G(0) for the implicit density."""
        total = integrate(constant_variance_model.density, 0.0, 3.0)
        expected = constant_variance_model.cdf(3.0) - 0.8
        assert total == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("g0", [0.5, 0.3, 1.0])
    def test_rejects_g0_outside_domain(self, g0):
        """Test that g0 outside (1/2, 1) is rejected."""
        with pytest.raises(ParameterDomainError):
            make_implicit_constant_variance(1.0, g0)


class TestBetaLambdaVariance:
    """Tests for make_beta_lambda_variance_model."""

    def test_endpoints(self):
        """Test that G(0) = 1/2 and G(20) > 1 − 1e-8."""
        model = make_beta_lambda_variance_model(1.0)
        assert model.cdf(0.0) == 0.5
        assert model.cdf(20.0) > 1.0 - 1e-8

    def test_hand_value(self):
        """Test that G(ln 2 / 2) = (1 + √0.5)/2."""
        model = make_beta_lambda_variance_model(1.0)
        assert model.cdf(math.log(2.0) / 2.0) == pytest.approx((1.0 + math.sqrt(0.5)) / 2.0, abs=1e-12)

    def test_mean_matches_tail(self):
        """Test that the closed-form mean matches the tail integral."""
        model = make_beta_lambda_variance_model(1.0)
        assert moment(model, 1) == pytest.approx((1.0 - math.log(2.0)) / 2.0, abs=1e-8)

    def test_density_infinite_at_zero(self):
        """Test that the hazard at 0 is undefined (infinite density)."""
        with pytest.raises(UndefinedHazardError):
            hazard(make_beta_lambda_variance_model(1.0), 0.0)


class TestImplicitVarianceFamily:
    """Tests for make_implicit_variance_family."""

    def test_matches_closed_form_at_beta_lambda(self):
        """Test that β = λ = 1, g0 = 1/2 agrees with the closed form on 100 points."""
        implicit = make_implicit_variance_family(ImplicitVarianceParams(1.0, 0.5, 1.0))
        closed = make_beta_lambda_variance_model(1.0)
        for t in np.linspace(0.0, 10.0, 100):
            assert implicit.cdf(t) == pytest.approx(closed.cdf(t), abs=1e-8)

    def test_atom(self):
        """Test that G(0) = g0."""
        model = make_implicit_variance_family(ImplicitVarianceParams(1.0, 0.7, -0.4))
        assert model.cdf(0.0) == pytest.approx(0.7, abs=1e-14)

    def test_monotone(self):
        """Test that G is non-decreasing on [0, 20] at β = 0.5, g0 = 0.8."""
        model = make_implicit_variance_family(ImplicitVarianceParams(1.0, 0.8, 0.5))
        values = [model.cdf(t) for t in np.linspace(0.0, 20.0, 201)]
        assert np.all(np.diff(values) >= 0)

    def test_variance_beta_constant(self):
        """Test that h − λ/(2G − 1) equals β along the curve."""
        model = make_implicit_variance_family(ImplicitVarianceParams(1.0, 0.8, 0.5))
        for t in (0.2, 1.0, 3.0):
            g = model.cdf(t)
            assert hazard(model, t) - 1.0 / (2.0 * g - 1.0) == pytest.approx(0.5, abs=1e-8)

    def test_rejects_zero_beta(self):
        """Test that β = 0 is routed to the constant-variance constructor."""
        with pytest.raises(ParameterDomainError):
            make_implicit_variance_family(ImplicitVarianceParams(1.0, 0.8, 0.0))

    def test_rejects_beta_at_minus_lambda(self):
        """Test that β = −λ is rejected."""
        with pytest.raises(ParameterDomainError):
            ImplicitVarianceParams(1.0, 0.8, -1.0)


class TestRiccatiFamily:
    """Tests for make_riccati_family."""

    def test_constant_beta_matches_closed_form(self):
        """Test that a constant β reproduces the constant-β family."""
        general = make_riccati_family(1.0, 1.0, 0.3)
        closed = make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, 0.3))
        for t in np.linspace(0.0, 8.0, 17):
            assert general.cdf(t) == pytest.approx(closed.cdf(t), abs=1e-12)

    def test_piecewise_beta_mean(self):
        """Test that a piecewise β keeps the mean at ρ/λ."""
        model = make_riccati_family(1.0, 1.0, PiecewiseBeta((0.2, -0.3), (1.0,)))
        assert model.mean == 1.0
        assert verify_model(model) == []

    def test_band_violation(self):
        """Test that a β schedule leaving the band is rejected."""
        with pytest.raises(ParameterDomainError):
            make_riccati_family(1.0, 1.0, PiecewiseBeta((0.9, 0.0), (2.0,)))


class TestMomentBounds:
    """Tests for moment_bounds."""

    def test_first_moment(self):
        """Test the bounds at g0 = 0.8, λ = 1, n = 1."""
        lower, upper = moment_bounds(0.8, 1.0, 1)
        assert lower == pytest.approx(0.134064, abs=1e-6)
        assert upper == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_lambda_scaling(self):
        """Test that doubling λ halves both first-moment bounds."""
        a = moment_bounds(0.8, 1.0, 1)
        b = moment_bounds(0.8, 2.0, 1)
        assert b[0] == pytest.approx(a[0] / 2.0)
        assert b[1] == pytest.approx(a[1] / 2.0)

    def test_second_moment(self):
        """Test the bounds at g0 = 0.6, λ = 1, n = 2."""
        lower, upper = moment_bounds(0.6, 1.0, 2)
        assert lower == pytest.approx(0.359463, abs=1e-6)
        assert upper == pytest.approx(4.0, abs=1e-12)

    def test_rejects_half(self):
        """Test that g0 <= 1/2 is rejected."""
        with pytest.raises(ParameterDomainError):
            moment_bounds(0.5, 1.0, 1)


class TestSample:
    """Tests for inverse-CDF sampling."""

    def test_exponential_median(self, unit_exponential):
        """Test that u = 1/2 maps to ln 2."""
        assert sample(unit_exponential, 0.5) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_below_atom_is_zero(self, zero_beta_model):
        """Test that u below the atom maps to 0."""
        assert sample(zero_beta_model, 0.2) == 0.0
        assert sample(zero_beta_model, 0.5) > 0.0

    def test_vector_input(self, unit_exponential):
        """Test that an array of variates returns an array."""
        out = sample(unit_exponential, np.array([0.0, 0.5]))
        assert isinstance(out, np.ndarray)
        np.testing.assert_allclose(out, [0.0, math.log(2.0)], atol=1e-15)

    @pytest.mark.parametrize("u", [0.45, 0.7, 0.95, 0.999])
    def test_closed_form_inverses(self, u):
        """Test that G(sample(u)) = u for the closed-form quantiles."""
        for model in (
            make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, 0.0)),
            make_beta_lambda_variance_model(1.0),
            make_zero_beta_model(1.0, 0.3),
        ):
            if u >= model.atom_at_zero:
                assert model.cdf(sample(model, u)) == pytest.approx(u, abs=1e-12)

    def test_implicit_inverse(self, constant_variance_model):
        """Test that the implicit law's explicit inverse round-trips."""
        for u in (0.85, 0.9, 0.99):
            assert constant_variance_model.cdf(sample(constant_variance_model, u)) == pytest.approx(u, abs=1e-12)

    def test_root_finding_fallback(self):
        """Test that a law without a closed-form quantile is inverted by bracketing."""
        model = make_riccati_family(1.0, 1.0, PiecewiseBeta((0.2, -0.3), (1.0,)))
        assert model.quantile is None
        for u in (0.5, 0.9):
            assert model.cdf(sample(model, u)) == pytest.approx(u, abs=1e-10)

    def test_rejects_one(self, unit_exponential):
        """Test that u = 1 is outside [0, 1)."""
        with pytest.raises(ParameterDomainError):
            sample(unit_exponential, 1.0)


class TestVerifyModel:
    """Tests for verify_model."""

    @pytest.mark.parametrize(
        "model",
        [
            make_exponential(1.0),
            make_deterministic(2.0),
            make_zero_beta_model(1.0, 0.3),
            make_beta_constant_family(BetaConstantFamilyParams(1.0, 0.5, 0.2)),
            make_beta_lambda_variance_model(1.0),
        ],
    )
    def test_families_pass(self, model):
        """Test that the closed-form families satisfy the structural checks."""
        assert verify_model(model, grid=np.linspace(0.0, 40.0, 201)) == []

    def test_wrong_mean_is_reported(self):
        """Test that a mean inconsistent with the tail integral is reported."""
        import dataclasses

        model = dataclasses.replace(make_exponential(1.0), mean=1.5)
        problems = verify_model(model, grid=np.linspace(0.0, 40.0, 11))
        assert any("mean" in p for p in problems)
