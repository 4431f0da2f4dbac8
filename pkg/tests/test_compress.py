"""Portfolio compression: restricted inverses, subset enumeration and selection."""
import itertools

import numpy as np
import pytest

from pyopc.compress import (
    compressed_drift,
    compressed_market,
    dominates,
    enumerate_subsets,
    policy_from_subsets,
    projection,
    restricted_inverse,
    select_subset,
    subset_count,
    subset_label,
    subset_risk,
)
from pyopc.errors import BadParameters, SubsetSpaceTooLarge
from pyopc.market import MarketParams, compute_metrics
from pyopc.simulate import ScenarioMixture

from .conftest import REFERENCE_R, random_spd_market

V = np.array([[0.04, 0.01], [0.01, 0.09]])


def brute_force_best(params: MarketParams, m: int) -> float:
    metrics = compute_metrics(params)
    excess = params.excess_drift[0]
    best = 0.0
    for size in range(1, m + 1):
        for I in itertools.combinations(range(params.n), size):
            idx = list(I)
            value = excess[idx] @ np.linalg.solve(metrics.V[0][np.ix_(idx, idx)], excess[idx])
            best = max(best, value)
    return best


class TestProjection:
    def test_restricted_inverse(self):
        np.testing.assert_allclose(restricted_inverse(V, (0,)), [[25.0, 0.0], [0.0, 0.0]], rtol=1e-14)
        np.testing.assert_allclose(restricted_inverse(V, (0, 1)), np.linalg.inv(V), rtol=1e-12)

    def test_compressed_drift(self):
        np.testing.assert_allclose(compressed_drift(np.array([0.05, 0.07]), 0.0, V, (0,)), [0.05, 0.0125],
                                   rtol=1e-12)

    def test_inverse_on_subspace(self):
        rng = np.random.default_rng(3)
        params = random_spd_market(rng, 5)
        Vk = compute_metrics(params).V[0]
        I = (1, 3)
        P = projection(I, 5)
        Q = restricted_inverse(Vk, I)
        x = P @ rng.normal(size=5)
        np.testing.assert_allclose(P @ Vk @ P @ Q @ x, x, atol=1e-12)
        a_I = compressed_drift(params.drift[0], params.rate[0], Vk, I)
        np.testing.assert_allclose(P @ a_I, P @ params.drift[0], rtol=1e-12)

    def test_rejects_bad_subsets(self):
        with pytest.raises(ValueError):
            projection((), 2)
        with pytest.raises(ValueError):
            projection((2,), 2)

    def test_label(self):
        assert subset_label((0, 2)) == "{1,3}"


class TestSelection:
    def test_reference_market(self, reference_market):
        one = select_subset(reference_market, 1)
        assert one.subsets == ((0,),)
        assert one.R == pytest.approx(0.0625, rel=1e-14)
        two = select_subset(reference_market, 2)
        assert two.subsets == ((0, 1),)
        assert two.R == pytest.approx(REFERENCE_R, rel=1e-12)

    def test_table_rows(self, reference_market):
        rows = enumerate_subsets(reference_market, 2).rows()
        assert [r["subset"] for r in rows] == ["{1}", "{2}", "{1,2}"]
        assert rows[1]["R_I"] == pytest.approx(0.04, rel=1e-12)
        assert rows[0]["size"] == 1

    def test_matches_brute_force(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            params = random_spd_market(rng, 6)
            policy = select_subset(params, 3)
            assert policy.max_size <= 3
            assert policy.R == pytest.approx(brute_force_best(params, 3), rel=1e-10)
            assert subset_risk(params, policy) == pytest.approx(policy.R, rel=1e-12)
            np.testing.assert_allclose(policy.values[0], np.sum(policy.theta[0] ** 2), rtol=1e-10)

    def test_monotone_in_size(self):
        rng = np.random.default_rng(8)
        params = random_spd_market(rng, 5)
        risks = [select_subset(params, m).R for m in range(1, 6)]
        assert all(b >= a - 1e-14 for a, b in zip(risks, risks[1:]))
        assert risks[-1] == pytest.approx(compute_metrics(params).R, rel=1e-10)

    def test_ties_go_to_smallest_subset(self):
        params = MarketParams.constant([0.05, 0.05], np.diag([0.2, 0.2]))
        assert select_subset(params, 1).subsets == ((0,),)

    def test_thread_count_does_not_change_table(self):
        params = random_spd_market(np.random.default_rng(1), 8)
        a = enumerate_subsets(params, 4, threads=1)
        b = enumerate_subsets(params, 4, threads=4)
        assert a.subsets == b.subsets
        np.testing.assert_array_equal(a.values, b.values)

    def test_subset_count_and_cap(self):
        assert subset_count(12, 6) == 2509
        params = random_spd_market(np.random.default_rng(2), 12)
        with pytest.raises(SubsetSpaceTooLarge) as exc:
            enumerate_subsets(params, 6, cap=1000)
        assert exc.value.payload == {"count": 2509, "cap": 1000}

    @pytest.mark.parametrize("m", [0, 3])
    def test_bad_size(self, reference_market, m):
        with pytest.raises(BadParameters):
            select_subset(reference_market, m)

    def test_time_varying_selection(self):
        params = MarketParams(
            grid=[0.0, 0.5, 1.0],
            rate=[0.0, 0.0],
            drift=[[0.05, 0.06], [0.02, 0.06]],
            vol=[np.diag([0.2, 0.3])] * 2,
            s0=[1.0, 1.0],
        )
        policy = select_subset(params, 1)
        assert policy.subsets == ((0,), (1,))
        assert policy.label == "{1}|{2}"
        assert policy.R == pytest.approx(0.5 * 0.0625 + 0.5 * 0.04, rel=1e-12)

    def test_compressed_market_keeps_held_drift(self, reference_market):
        policy = policy_from_subsets(reference_market, (1,))
        market = compressed_market(reference_market, policy)
        assert market.drift[0, 1] == pytest.approx(0.06)
        assert compute_metrics(market).R == pytest.approx(policy.R, rel=1e-12)


class TestDominance:
    def test_deterministic(self, reference_market):
        first = policy_from_subsets(reference_market, (0,))
        second = policy_from_subsets(reference_market, (1,))
        assert dominates(first, second, reference_market)
        assert not dominates(second, first, reference_market)
        assert not dominates(first, first, reference_market)

    def test_mixture_needs_every_scenario(self, reference_market):
        other = MarketParams.constant([0.02, 0.06], np.diag([0.2, 0.3]))
        mix = ScenarioMixture.from_pairs([(reference_market, 0.5), (other, 0.5)])
        first = policy_from_subsets(reference_market, (0,))
        second = policy_from_subsets(reference_market, (1,))
        full = policy_from_subsets(reference_market, (0, 1))
        assert not dominates(first, second, mix)
        assert dominates(full, first, mix)
