"""Market coefficients, validation and risk metrics."""
import numpy as np
import pytest

from pyopc.errors import BadGrid, EllipticityViolated, NonFiniteCoefficient, NonPositivePrice, ValidationError
from pyopc.market import MarketParams, bank_account, compute_metrics, discount, refine, validate_market

from .conftest import REFERENCE_R


def two_interval_market():
    return MarketParams(
        grid=[0.0, 0.5, 1.0],
        rate=[0.0, 0.02],
        drift=[[0.05, 0.06], [0.02, 0.10]],
        vol=[np.diag([0.2, 0.3]), [[0.2, 0.0], [0.1, 0.3]]],
        s0=[1.0, 2.0],
    )


class TestMetrics:
    def test_reference_market_risk(self, reference_market):
        m = compute_metrics(reference_market)
        assert m.R == pytest.approx(REFERENCE_R, rel=1e-14)
        assert m.Rbar == pytest.approx(REFERENCE_R, rel=1e-14)
        assert m.J == m.R
        np.testing.assert_allclose(m.theta[0], [0.25, 0.2], rtol=1e-14)

    def test_restricted_quadratic_form_matches_theta(self):
        params = two_interval_market()
        m = compute_metrics(params)
        excess = params.excess_drift
        for k in range(params.intervals):
            expected = excess[k] @ np.linalg.inv(params.vol[k] @ params.vol[k].T) @ excess[k]
            assert m.theta_sq[k] == pytest.approx(expected, rel=1e-12)
        assert m.R == pytest.approx(0.5 * m.theta_sq.sum(), rel=1e-12)

    def test_time_change_is_identity_when_risk_vanishes(self, degenerate_market):
        m = compute_metrics(degenerate_market)
        t = np.linspace(0.0, 1.0, 7)
        assert m.R == 0.0
        np.testing.assert_array_equal(m.tau(t), t)

    def test_time_change_endpoints_and_monotonicity(self):
        m = compute_metrics(two_interval_market())
        t = np.linspace(0.0, 1.0, 101)
        tau = m.tau(t)
        assert tau[0] == 0.0
        assert tau[-1] == pytest.approx(1.0, rel=1e-12)
        assert np.all(np.diff(tau) >= 0)
        assert m.remaining(1.0) == 0.0
        assert m.remaining(0.0) == pytest.approx(m.R)

    def test_refinement_keeps_risk(self):
        params = two_interval_market()
        fine = refine(params, 4)
        assert fine.intervals == 8
        assert compute_metrics(fine).R == pytest.approx(compute_metrics(params).R, rel=1e-12)

    @pytest.mark.parametrize("c", [0.5, 3.0])
    def test_joint_scaling_of_vol_and_excess_drift(self, c):
        params = two_interval_market()
        scaled = MarketParams(
            grid=params.grid,
            rate=params.rate,
            drift=params.rate[:, None] + c * params.excess_drift,
            vol=c * params.vol,
            s0=params.s0,
        )
        base, m = compute_metrics(params), compute_metrics(scaled)
        np.testing.assert_allclose(m.theta, base.theta, rtol=1e-12)
        assert m.R == pytest.approx(base.R, rel=1e-12)
        t = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(m.tau(t), base.tau(t), rtol=1e-12, atol=1e-15)

    def test_bank_account_and_discount(self):
        params = MarketParams.constant([0.08], [[0.2]], rate=0.05)
        assert bank_account(params, 1.0) == pytest.approx(np.exp(0.05))
        assert discount(params, 0.5) * bank_account(params, 0.5) == pytest.approx(1.0)
        assert bank_account(params, 0.0) == 1.0


class TestValidation:
    def test_valid_market(self, reference_market):
        assert validate_market(reference_market) is True

    def test_ellipticity(self):
        params = MarketParams.constant([0.05, 0.06], np.diag([0.2, 0.0]))
        with pytest.raises(EllipticityViolated) as exc:
            validate_market(params)
        assert exc.value.payload["interval"] == 0

    def test_grid_must_increase(self):
        params = MarketParams(
            grid=[0.0, 0.5, 0.5, 1.0], rate=[0.0] * 3, drift=[[0.05]] * 3, vol=[[[0.2]]] * 3, s0=[1.0],
        )
        with pytest.raises(BadGrid) as exc:
            validate_market(params)
        assert exc.value.payload == "grid[2]"

    def test_grid_needs_two_points(self):
        with pytest.raises(BadGrid):
            MarketParams(grid=[0.0], rate=[], drift=np.zeros((0, 1)), vol=np.zeros((0, 1, 1)), s0=[1.0])

    def test_positive_prices(self):
        params = MarketParams.constant([0.05, 0.06], np.diag([0.2, 0.3]), s0=[1.0, -1.0])
        with pytest.raises(NonPositivePrice):
            validate_market(params)

    def test_finite_coefficients(self):
        params = MarketParams.constant([np.nan, 0.06], np.diag([0.2, 0.3]))
        with pytest.raises(NonFiniteCoefficient) as exc:
            validate_market(params)
        assert exc.value.payload == "drift"

    def test_shape_errors_name_the_field(self):
        with pytest.raises(ValidationError) as exc:
            MarketParams(grid=[0.0, 1.0], rate=[0.0], drift=[[0.05, 0.06]], vol=np.zeros((1, 3, 3)), s0=[1.0, 1.0])
        assert exc.value.payload == "vol"

    @pytest.mark.parametrize("c1", [0.0, -1.0])
    def test_ellipticity_constant_must_be_positive(self, reference_market, c1):
        with pytest.raises(ValidationError) as exc:
            validate_market(reference_market, c1)
        assert exc.value.payload == "c1"
        assert exc.value.exit_code == 1

    def test_market_needs_a_stock(self):
        with pytest.raises(ValidationError) as exc:
            MarketParams(grid=[0.0, 1.0], rate=[0.0], drift=np.zeros((1, 0)), vol=np.zeros((1, 0, 0)), s0=[])
        assert exc.value.payload == "s0"

    def test_arrays_are_read_only(self, reference_market):
        with pytest.raises(ValueError):
            reference_market.drift[0, 0] = 1.0
