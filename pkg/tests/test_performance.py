"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Performance and acceptance-scale tests for AuctionForge.
"""

import math
import time

import numpy as np
import pytest

from auction_forge.distributions import AuctionInstance, UniformDistribution, max_distribution
from auction_forge.mechanisms import GrandBundle, ReserveWelfare, SecondPriceReserve, restrict_to_subset
from auction_forge.opt_solvers import build_lp, bundle_price_search, optimal_mechanism, solve_lp
from auction_forge.partition import partition_items, range_ratio
from auction_forge.sim_harness import check_concentration, check_ir, estimate, estimate_regret, welfare_samples
from auction_forge.tail_analysis import iid_reserve
from tests.base_test import BaseTest
from tests.mocks import (
    EntryFeeAuction,
    FirstPriceAuction,
    posted_price_revenue,
    random_discrete,
    second_price_reserve_revenue,
)


def _sigma(report) -> float:
    return report.revenue_ci95 / 1.96


@pytest.mark.slow
class TestAuctionForgePerformance(BaseTest):
    """Acceptance-scale checks with their time limits."""

    def test_reserve_welfare_revenue_bound(self):
        """Test the reserve welfare revenue against (1 - k eps - k delta) s on 100 uniform items."""
        instance = AuctionInstance(2, (UniformDistribution(0.5, 1.0),) * 100, population=True)
        s_star = 100 * (0.5 + 0.5 * 2.0 / 3.0)
        eps, delta = 0.1, 0.01
        start_time = time.time()

        concentration = check_concentration(welfare_samples(instance, 10_000, seed=1), eps, delta)
        report = estimate(ReserveWelfare((1 - eps) * s_star), instance, 10_000, seed=2)

        execution_time = time.time() - start_time
        assert concentration.passed
        assert report.revenue_mean >= (1 - 2 * eps - 2 * delta) * s_star - 3 * _sigma(report)
        assert execution_time < 30.0

    @pytest.mark.parametrize('mechanism, instance', [
        (ReserveWelfare(3.5), AuctionInstance(2, (UniformDistribution(0.5, 1.0),) * 5, population=True)),
        (SecondPriceReserve([0.7] * 3), AuctionInstance(3, (UniformDistribution(0.5, 1.0),) * 3, population=True)),
        (GrandBundle(2.2), AuctionInstance(1, (UniformDistribution(0.5, 1.0),) * 3, population=True)),
    ])
    def test_simple_mechanisms_pass_audits(self, mechanism, instance):
        """Test that the simple mechanisms show no regret and no IR violation."""
        start_time = time.time()

        regret = estimate_regret(mechanism, instance, 'DT', samples=10_000, seed=3)
        ir = check_ir(mechanism, instance, 10_000, seed=3)

        execution_time = time.time() - start_time
        assert regret.max_observed <= 1e-9
        assert ir.violations == 0
        assert execution_time < 60.0

    def test_broken_mechanisms_are_flagged(self):
        """Test that the audits catch both deliberately broken mechanisms."""
        instance = AuctionInstance(2, (UniformDistribution(0.5, 1.0),) * 2, population=True)

        regret = estimate_regret(FirstPriceAuction(), instance, 'DT', samples=2000)
        ir = check_ir(EntryFeeAuction(0.5), instance, 2000)

        assert regret.max_observed > 1e-3
        assert ir.violations > 0

    def test_lp_matches_posted_price_oracle(self):
        """Test the single-bidder single-item LP against the best posted price."""
        rng = np.random.default_rng(20)
        start_time = time.time()

        for _ in range(10):
            dist = random_discrete(rng, int(rng.integers(1, 5)))
            instance = AuctionInstance(1, (dist,), population=True)
            objective = solve_lp(build_lp(instance, 'IC')).objective
            assert objective == pytest.approx(posted_price_revenue(dist), abs=1e-4)

        bic = solve_lp(build_lp(self.two_bidders, 'BIC')).objective
        assert bic >= 1.5 - 1e-7
        assert bic == pytest.approx(second_price_reserve_revenue(self.two_point, 2), abs=1e-4)
        assert time.time() - start_time < 120.0

    def test_partition_guarantees(self):
        """Test the size of R and the ignored mass over 1000 random inputs."""
        rng = np.random.default_rng(7)
        start_time = time.time()

        for _ in range(1000):
            eps = float(rng.uniform(0.02, 0.24))
            delta = float(rng.uniform(0.01, 0.12))
            expectations = rng.lognormal(0.0, 3.0, int(rng.integers(1, 300)))
            c = 4.0 / eps * math.log(1.0 / eps)

            partition = partition_items(expectations, c, eps, delta)

            assert len(partition.R) <= partition.r_bound
            assert partition.t_mass <= eps * partition.s_hat + 1e-9
            assert sorted(partition.R + partition.S + partition.T) == list(range(len(expectations)))

        assert time.time() - start_time < 120.0

    @pytest.mark.parametrize('eps, delta, c', [(0.24, 0.12, 1.0), (0.2, 0.1, 0.5), (0.1, 0.05, 0.25)])
    def test_concentrated_block_sum_concentrates(self, eps, delta, c):
        """Test that the welfare of a non-empty S block stays within (1 +- eps) of its mean."""
        instance = AuctionInstance(1, (self.two_point,) * 4096, population=True)
        start_time = time.time()

        partition = partition_items([self.two_point.expectation()] * 4096, c, eps, delta)
        samples = welfare_samples(instance.sub_instance(partition.S), 10_000, seed=13)
        concentration = check_concentration(samples, eps, delta)

        assert len(partition.S) > 0
        assert len(partition.R) <= partition.r_bound
        assert concentration.passed
        assert concentration.empirical_fraction >= 1.0 - delta - 0.02
        assert time.time() - start_time < 120.0

    def test_range_ratio_of_instance(self):
        """Test that every item range of an instance has the common ratio."""
        instance = AuctionInstance(3, (self.two_point, self.uniform, self.exponential), population=True)

        ratio = range_ratio([instance.column(j)[0] for j in range(3)], 0.1)

        assert ratio.c == pytest.approx(40.0 * math.log(10.0))
        for lo, hi in ratio.ranges:
            assert hi / lo == pytest.approx(ratio.c)

    def test_restricted_mechanism_revenue(self):
        """Test that restricting the optimum loses at most the outside expected maxima."""
        rng = np.random.default_rng(11)
        start_time = time.time()

        for _ in range(5):
            items = tuple(random_discrete(rng, 2, 1.0, 5.0) for _ in range(2))
            instance = AuctionInstance(2, items, population=True)
            base = optimal_mechanism(instance, 'IC')
            expected = [max_distribution(instance.column(j)).expectation() for j in range(2)]
            for _ in range(3):
                subset = [j for j in range(2) if rng.random() < 0.5] or [int(rng.integers(0, 2))]
                restricted = restrict_to_subset(base, subset, instance, seed=int(rng.integers(0, 1000)))

                report = estimate(restricted, instance.sub_instance(subset), 4000, seed=5)

                lost = sum(expected[j] for j in range(2) if j not in subset)
                assert report.revenue_mean >= base.objective - lost - 3 * _sigma(report)

        assert time.time() - start_time < 120.0

    def test_iid_reserve_guarantee(self):
        """Test the reserve objective identity and its dominance over fine reserves for fifty bidders."""
        start_time = time.time()

        result = iid_reserve(self.exponential, 50, 0.1)

        reserves = np.linspace(0.5, 10.0, 2000)
        objective = reserves * (1.0 - self.exponential.cdf(reserves) ** 50)
        expected_max = sum(1.0 / k for k in range(1, 51))
        assert result.guarantee == pytest.approx(result.reserve * (1.0 - self.exponential.cdf(result.reserve) ** 50))
        assert result.guarantee >= objective.max() / 1.1
        assert result.guarantee / expected_max >= 0.6
        assert time.time() - start_time < 10.0

    def test_bundle_search_dominance(self):
        """Test bundle pricing against the deterministic optimum on random two-item buyers."""
        rng = np.random.default_rng(3)
        eps = 0.1
        start_time = time.time()

        for _ in range(20):
            items = (random_discrete(rng, 3, 1.0, 5.0),), (random_discrete(rng, 3, 1.0, 5.0),)
            instance = AuctionInstance(1, items)
            optimum = solve_lp(build_lp(instance, 'IC'), integral=True).objective

            result = bundle_price_search(instance, eps)

            assert result.revenue >= (1 - 2 * eps) * optimum

        assert time.time() - start_time < 120.0
