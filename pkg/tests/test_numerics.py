"""Gaussian quadrature and random substreams."""
import numpy as np
import pytest
from scipy.stats import norm

from pyopc.numerics import (
    PATH_BLOCK,
    PiecewiseFunction,
    QuadratureConfig,
    block_ranges,
    block_streams,
    gaussian_expectation,
    hermite_table,
    lognormal_expectation,
)


class TestQuadrature:
    def test_identity_is_a_martingale(self):
        s = 0.3
        f = PiecewiseFunction(func=lambda z: z)
        out = gaussian_expectation(f, np.array([0.5, 2.0]), -0.5 * s, np.sqrt(s))
        np.testing.assert_allclose(out, [0.5, 2.0], rtol=1e-12)

    def test_first_moment(self):
        s = 0.2
        sd = np.sqrt(s)
        f = PiecewiseFunction(func=lambda z: z)
        out = gaussian_expectation(f, np.array([3.0]), -0.5 * s, sd, moment=1)
        assert out[0] == pytest.approx(3.0 * sd, rel=1e-12)

    def test_indicator_is_exact(self):
        K, mean, sd = 1.2, -0.05, 0.3
        f = PiecewiseFunction(func=lambda z: np.where(z >= K, 1.0, 0.0), breakpoints=(K,), levels=(0.0, 1.0))
        x = np.array([0.8, 1.0, 1.5])
        expected = norm.cdf((np.log(x / K) + mean) / sd)
        np.testing.assert_allclose(gaussian_expectation(f, x, mean, sd), expected, rtol=1e-14, atol=1e-15)

    def test_smooth_piece_beside_a_jump(self):
        # f(z) = z on [1, inf), 0 below: E = x e^{m + s/2} Φ(d + sd)
        mean, sd = -0.02, 0.2
        f = PiecewiseFunction(func=lambda z: np.where(z >= 1.0, z, 0.0), breakpoints=(1.0,), levels=(0.0, None))
        x = 1.1
        d = (np.log(x) + mean) / sd
        expected = x * np.exp(mean + 0.5 * sd * sd) * norm.cdf(d + sd)
        assert gaussian_expectation(f, np.array([x]), mean, sd)[0] == pytest.approx(expected, rel=1e-10)

    def test_degenerate_law(self):
        f = PiecewiseFunction(func=lambda z: z * z)
        assert gaussian_expectation(f, np.array([2.0]), 0.0, 0.0)[0] == 4.0
        assert gaussian_expectation(f, np.array([2.0]), 0.0, 0.0, moment=1)[0] == 0.0

    def test_lognormal_moment(self):
        f = PiecewiseFunction(func=lambda z: z ** 2)
        assert lognormal_expectation(f, 0.1, 0.04) == pytest.approx(np.exp(0.2 + 0.08), rel=1e-12)

    def test_hermite_table_is_truncated_and_read_only(self):
        u, w = hermite_table(256, 10.0)
        assert np.all(np.abs(u) <= 10.0)
        assert w.sum() == pytest.approx(1.0, rel=1e-12)
        with pytest.raises(ValueError):
            w[0] = 1.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            QuadratureConfig(nodes=1)
        with pytest.raises(ValueError):
            PiecewiseFunction(func=lambda z: z, breakpoints=(2.0, 1.0))


class TestStreams:
    def test_block_ranges(self):
        assert block_ranges(2500) == [(0, 0, PATH_BLOCK), (1, PATH_BLOCK, 2048), (2, 2048, 2500)]

    def test_same_block_same_draws(self):
        a = block_streams(7, 0, 3, 0, 10).gauss.standard_normal(5)
        b = block_streams(7, 0, 3, 0, 10).gauss.standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_are_distinct(self):
        a = block_streams(7, 0, 0, 0, 10).gauss.standard_normal(5)
        b = block_streams(7, 1, 0, 0, 10).gauss.standard_normal(5)
        c = block_streams(7, 0, 0, 0, 10).scenario.standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
