"""Utility families, multiplier calibration and the growth bound."""
import numpy as np
import pytest

from pyopc.errors import BadParameters, CalibrationFailed, EmptySample, GoalWithZeroRisk, GrowthBoundUnsatisfiable
from pyopc.utility import (
    BUDGET_TOLERANCE,
    Family,
    UtilitySpec,
    budget_value,
    calibrate,
    calibrate_lambda,
    check_growth_bound,
    expected_utility,
    pointwise_maximizer,
    utility_value,
)

from .conftest import REFERENCE_R

FAMILIES = [
    UtilitySpec.log(),
    UtilitySpec.power(0.5),
    UtilitySpec.power(-1.0),
    UtilitySpec.mean_variance(1.0, 4.0),
    UtilitySpec.polynomial_goal(2),
    UtilitySpec.goal_achieving(2.0),
]


class TestUtilitySpec:
    @pytest.mark.parametrize("kwargs, field", [
        ({"family": "power", "delta": 1.0}, "delta"),
        ({"family": "power", "delta": 0.0}, "delta"),
        ({"family": "mean_variance", "k": 0.0, "c": 1.0}, "k"),
        ({"family": "mean_variance", "k": 1.0, "c": -1.0}, "c"),
        ({"family": "polynomial_goal", "l": 1.5}, "l"),
        ({"family": "goal_achieving", "alpha": 0.0}, "alpha"),
        ({"family": "exponential"}, "family"),
    ])
    def test_bad_parameters(self, kwargs, field):
        with pytest.raises(BadParameters) as exc:
            UtilitySpec(**kwargs)
        assert exc.value.payload == field

    def test_initial_wealth_domain(self):
        with pytest.raises(BadParameters):
            UtilitySpec.goal_achieving(1.0).check_x0(1.0)
        with pytest.raises(BadParameters):
            UtilitySpec.polynomial_goal(2).check_x0(0.4)
        with pytest.raises(BadParameters):
            UtilitySpec.log().check_x0(0.0)
        UtilitySpec.mean_variance(1.0, 0.0).check_x0(-3.0)

    def test_utility_values(self):
        np.testing.assert_allclose(utility_value(UtilitySpec.power(0.5), [4.0]), [4.0])
        np.testing.assert_allclose(utility_value(UtilitySpec.polynomial_goal(1), [2.0]), [2.0 - 4.0])
        assert utility_value(UtilitySpec.log(), -1.0) == -np.inf
        np.testing.assert_array_equal(utility_value(UtilitySpec.goal_achieving(2.0), [1.9, 2.0]), [0.0, 1.0])

    def test_maximizer_jumps_to_the_goal(self):
        cf = pointwise_maximizer(UtilitySpec.goal_achieving(2.0)).with_lambda(0.5)
        np.testing.assert_array_equal(cf.evaluate([0.99, 1.0, 3.0]), [0.0, 2.0, 2.0])


class TestCalibration:
    @pytest.mark.parametrize("u", FAMILIES, ids=lambda u: u.family.value)
    def test_budget_is_met(self, u, quad):
        lam = calibrate_lambda(u, 1.0, REFERENCE_R, quad)
        assert budget_value(pointwise_maximizer(u), REFERENCE_R, quad, lam) == pytest.approx(1.0, abs=BUDGET_TOLERANCE)

    def test_closed_forms(self):
        R = REFERENCE_R
        assert calibrate_lambda(UtilitySpec.log(), 2.0, R) == pytest.approx(0.5, rel=1e-14)
        assert calibrate_lambda(UtilitySpec.power(0.5), 1.0, R) == pytest.approx(np.exp(R / 2.0), rel=1e-14)
        assert calibrate_lambda(UtilitySpec.power(-1.0), 1.0, R) == pytest.approx(np.exp(-R / 4.0), rel=1e-14)
        assert calibrate_lambda(UtilitySpec.mean_variance(1.0, 4.0), 1.0, R) == pytest.approx(2.0 * np.exp(-R), rel=1e-14)

    def test_polynomial_goal_multiplier_is_negative(self):
        assert calibrate_lambda(UtilitySpec.polynomial_goal(3), 1.0, REFERENCE_R) < 0

    def test_zero_risk(self):
        assert calibrate_lambda(UtilitySpec.power(0.5), 1.0, 0.0) == pytest.approx(1.0)
        with pytest.raises(GoalWithZeroRisk) as exc:
            calibrate_lambda(UtilitySpec.goal_achieving(2.0), 1.0, 0.0)
        assert exc.value.exit_code == 2
        assert isinstance(exc.value, CalibrationFailed)

    def test_negative_risk(self):
        with pytest.raises(BadParameters):
            calibrate_lambda(UtilitySpec.log(), 1.0, -0.1)

    @pytest.mark.parametrize("u", [UtilitySpec.mean_variance(1.0, 4.0), UtilitySpec.polynomial_goal(3)],
                             ids=lambda u: u.family.value)
    def test_power_terms_sum_to_the_claim(self, u):
        cf = calibrate(u, 1.0, REFERENCE_R)
        c0, terms = cf.power_terms()
        z = np.array([0.3, 1.0, 2.5])
        total = c0 + sum(c1 * (z / lam) ** nu for nu, c1, lam in terms)
        np.testing.assert_allclose(total, cf.evaluate(z), rtol=1e-12)

    def test_goal_has_no_power_terms(self):
        cf = calibrate(UtilitySpec.goal_achieving(2.0), 1.0, REFERENCE_R)
        assert cf.power_terms() is None


MAXIMIZER_CASES = [
    (UtilitySpec.log(), 1.0),
    (UtilitySpec.power(0.5), 1.0),
    (UtilitySpec.power(-1.0), 1.0),
    (UtilitySpec.mean_variance(1.0, 4.0), 1.0),
    (UtilitySpec.polynomial_goal(2), -0.5),
    (UtilitySpec.goal_achieving(2.0), 0.5),
]


@pytest.mark.parametrize("u, lam", MAXIMIZER_CASES,
                         ids=["log", "power_0.5", "power_-1", "mean_variance", "polynomial_goal", "goal_achieving"])
def test_claim_maximizes_the_pointwise_objective(u, lam):
    lower = -1000.0 if u.domain_lower is None else 0.0
    x = np.linspace(lower, 1000.0, int(round((1000.0 - lower) / 0.005)) + 1)
    h = x[1] - x[0]
    cf = pointwise_maximizer(u).with_lambda(lam)
    rng = np.random.default_rng(3)
    for z in rng.uniform(0.2, 5.0, size=20):
        with np.errstate(invalid="ignore"):
            grid_obj = z * utility_value(u, x) - lam * x
        best = float(cf.evaluate(z))
        best_obj = float(z * utility_value(u, [best])[0] - lam * best)
        assert best_obj >= np.nanmax(grid_obj) - 1e-9
        assert best_obj - np.nanmax(grid_obj) <= 1e-3
        assert abs(x[np.nanargmax(grid_obj)] - best) <= 2 * h


@pytest.mark.parametrize("u", [UtilitySpec.log(), UtilitySpec.power(0.5), UtilitySpec.power(-1.0)],
                         ids=["log", "power_0.5", "power_-1"])
def test_multiplier_decreases_in_initial_wealth(u):
    lams = [calibrate_lambda(u, x0, REFERENCE_R) for x0 in (0.25, 0.5, 1.0, 2.0, 8.0)]
    assert np.all(np.diff(lams) < 0)


class TestGrowthBound:
    @pytest.mark.parametrize("u", FAMILIES, ids=lambda u: u.family.value)
    def test_certified_below_limit(self, u):
        cf = calibrate(u, 1.0, REFERENCE_R)
        C, c0 = cf.growth
        assert C > 0
        assert c0 < 1.0 / (2.0 * REFERENCE_R)

    def test_bound_holds_on_samples(self):
        cf = calibrate(UtilitySpec.power(0.5), 1.0, REFERENCE_R)
        C, c0 = cf.growth
        z = np.logspace(-3, 3, 61)
        assert np.all(np.abs(cf.evaluate(z)) <= C * z ** (c0 * np.log(z)))

    def test_needs_positive_risk(self):
        cf = calibrate(UtilitySpec.log(), 1.0, REFERENCE_R)
        with pytest.raises(BadParameters):
            check_growth_bound(cf, 0.0)

    def test_bound_close_to_the_limit(self):
        # F = z^{log z} needs c0 >= 1, and 1 < 1/(2J) only just at J = 0.47
        C, c0 = check_growth_bound(lambda z: np.exp(np.log(z) ** 2), 0.47)
        assert 1.0 <= c0 < 1.0 / (2.0 * 0.47)
        assert C == pytest.approx(1.0, rel=1e-6)

    def test_unsatisfiable(self):
        with pytest.raises(GrowthBoundUnsatisfiable) as exc:
            check_growth_bound(lambda z: np.exp(np.log(z) ** 2), 0.7)
        assert exc.value.exit_code == 2
        assert exc.value.payload == {"J": 0.7}

    def test_zero_risk_skips_certification(self):
        assert calibrate(UtilitySpec.log(), 1.0, 0.0).growth is None


class TestExpectedUtility:
    def test_log_quadrature(self):
        cf = calibrate(UtilitySpec.log(), 1.0, REFERENCE_R)
        est = expected_utility(UtilitySpec.log(), claim=cf, R=REFERENCE_R)
        assert est.method == "quadrature"
        assert est.value == pytest.approx(REFERENCE_R / 2.0, rel=1e-10)

    def test_monte_carlo_with_exclusions(self):
        u = UtilitySpec.log()
        x = np.array([1.0, np.e, -1.0, np.e ** 2])
        est = expected_utility(u, x, exclude=x < 0)
        assert est.value == pytest.approx(1.0)
        assert est.excluded == 1
        assert est.samples == 3

    def test_weights(self):
        est = expected_utility(UtilitySpec.log(), [1.0, np.e], weights=[0.0, 2.0])
        assert est.value == pytest.approx(1.0)

    def test_empty_sample(self):
        with pytest.raises(EmptySample):
            expected_utility(UtilitySpec.log(), [-1.0], exclude=[True])

    def test_needs_samples_or_claim(self):
        with pytest.raises(BadParameters):
            expected_utility(UtilitySpec.log())
