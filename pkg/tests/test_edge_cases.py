"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Edge cases tests for AuctionForge.
"""

# pylint: disable=protected-access

import numpy as np
import pytest

from auction_forge.distributions import (
    AuctionInstance,
    DiscreteDistribution,
    MaxOfDistributions,
    PointMass,
    coarsen,
    max_distribution,
)
from auction_forge.mechanisms import (
    LookupMechanism,
    MenuMechanism,
    ReserveWelfare,
    SecondPriceReserve,
    combine,
    weakest_concept,
)
from auction_forge.opt_solvers import build_lp, price_grid
from auction_forge.partition import partition_items
from auction_forge.sim_harness import DeviationGrid, check_concentration, ir_check
from auction_forge.tail_analysis import iid_reserve, tail_profile
from tests.base_test import BaseTest


class TestAuctionForgeEdgeCases(BaseTest):
    """Test edge cases and boundary conditions."""

    def test_reserve_welfare_sells_at_equality(self):
        """Test that a welfare exactly at the reserve sells."""
        outcome = ReserveWelfare(9.0).run(self.bids)

        assert np.allclose(outcome.payments, [4.0, 5.0])
        assert outcome.revenue == pytest.approx(9.0)

    def test_second_price_tie_goes_to_lowest_index(self):
        """Test tie breaking between equal highest bids."""
        outcome = SecondPriceReserve([1.0]).run([[2.0], [2.0]])

        assert np.array_equal(outcome.alloc, [[1.0], [0.0]])
        assert np.allclose(outcome.payments, [2.0, 0.0])

    def test_second_price_single_bidder_pays_reserve(self):
        """Test that a lone bidder pays the reserve."""
        outcome = SecondPriceReserve([1.5]).run([[4.0]])

        assert outcome.payments[0] == 1.5

    def test_lookup_clips_low_bids(self):
        """Test that bids below the lowest type are read as the lowest type."""
        mechanism = LookupMechanism([[[1.0, 2.0]]], [[[0.0]], [[1.0]]], [[0.0], [2.0]])

        assert mechanism.type_index(np.array([[[0.5]]])).tolist() == [0]
        assert mechanism.type_index(np.array([[[1.0]], [[1.99]], [[2.0]]])).tolist() == [0, 0, 1]

    def test_lookup_quantum_rounds_bids_first(self):
        """Test that bids are floored to the rounding step before the lookup."""
        mechanism = LookupMechanism([[[1.0, 1.5]]], [[[0.0]], [[1.0]]], [[0.0], [1.5]], quantum=0.5)

        assert mechanism.type_index(np.array([[[1.49]], [[1.5]], [[1.74]]])).tolist() == [0, 1, 1]

    def test_menu_zero_value_buys_nothing(self):
        """Test that the empty entry is chosen when nothing is worth its price."""
        menu = MenuMechanism([([1.0, 0.0], 1.0), ([1.0, 1.0], 1.5)])

        outcome = menu.run([[0.0, 0.0]])

        assert not outcome.alloc.any()
        assert outcome.payments[0] == 0.0

    def test_menu_bought_entries(self):
        """Test that unbought entries are dropped."""
        menu = MenuMechanism([([1.0, 0.0], 1.0), ([1.0, 1.0], 10.0)])

        trimmed = menu.bought_entries(np.array([[2.0, 0.0], [1.0, 1.0]]))

        assert len(trimmed.entries) == 1
        assert trimmed.entries[0][1] == 1.0

    def test_combine_with_everything_ignored(self):
        """Test a combination that never sells anything."""
        mechanism = combine(None, [], None, [], ignored=[0, 1])

        outcome = mechanism.run(self.bids)

        assert mechanism.concept == 'DT'
        assert not outcome.alloc.any()
        assert not outcome.payments.any()

    def test_weakest_concept_without_arguments(self):
        """Test the neutral element of the concept order."""
        assert weakest_concept() == 'DT'

    def test_max_distribution_single_input(self):
        """Test that the maximum of one distribution is that distribution."""
        assert max_distribution([self.uniform]) is self.uniform

    def test_max_distribution_mixed_inputs(self):
        """Test that continuous inputs give a sampling maximum."""
        maximum = max_distribution([self.two_point, self.uniform])

        draws = maximum.sample(0, 1000)

        assert isinstance(maximum, MaxOfDistributions)
        assert draws.shape == (1000,)
        assert np.all(draws >= 1.0)
        assert maximum.cdf(0.99) == pytest.approx(0.0)

    def test_coarsen_point_mass_below_interval(self):
        """Test that a value below the truncation interval collapses to zero."""
        result = coarsen(PointMass(0.1), 0.1, (0.5, 2.0))

        assert isinstance(result, PointMass)
        assert result.value == 0.0

    def test_single_item_partition(self):
        """Test that a lone item is always solved exactly."""
        partition = partition_items([3.0], 1.0, 0.1, 0.05)

        assert partition.R == (0,)
        assert partition.buckets == {1: (0,)}

    def test_zero_item_in_partition(self):
        """Test that items worth nothing are ignored."""
        partition = partition_items([1.0, 0.0], 1.0, 0.1, 0.05)

        assert partition.T == (1,)

    def test_price_grid_single_price(self):
        """Test the grid of an empty price range."""
        assert price_grid(2.0, 2.0, 0.1) == [2.0]

    def test_iid_reserve_many_exponential_bidders(self):
        """Test the reserve of fifty exponential bidders against the expected maximum."""
        result = iid_reserve(self.exponential, 50, 0.1)
        harmonic = sum(1.0 / k for k in range(1, 51))

        assert result.guarantee == pytest.approx(result.reserve * (1 - self.exponential.cdf(result.reserve) ** 50))
        assert result.guarantee == pytest.approx(2.8, abs=0.05)
        assert result.guarantee / harmonic >= 0.6

    def test_tail_profile_ratio(self):
        """Test that the truncation ratio depends on epsilon only."""
        profile = tail_profile([self.two_point], 0.1)

        assert profile.beta == 4.0
        assert profile.ratio == pytest.approx(40.0 * np.log(10.0))

    def test_single_type_lp(self):
        """Test that a one-type instance has no incentive rows."""
        instance = AuctionInstance(1, (PointMass(3.0),), population=True)

        model = build_lp(instance)

        assert model.counts['icRows'] == 0
        assert model.num_rows == 2

    def test_lp_export_is_deterministic(self):
        """Test that exporting the same model twice gives the same text."""
        first = build_lp(self.two_bidders, 'BIC').export_text()
        second = build_lp(self.two_bidders, 'BIC').export_text()

        assert first == second
        assert first.startswith('\\ AuctionForge BIC revenue LP\nMaximize\n')
        for section in ('Subject To', 'Bounds', 'End'):
            assert f'\n{section}\n' in first
        assert ' p_0_0 free' in first

    def test_deviation_grid_without_zero(self):
        """Test a grid with perturbations only."""
        grid = DeviationGrid(steps=0, include_zero=False, use_supports=False)

        labels = [label for label, _ in grid.reports(np.ones((1, 2)), [np.array([1.0]), None])]

        assert labels == ['item0-', 'item0+', 'item1-', 'item1+']

    def test_concentration_band_is_closed(self):
        """Test that samples on the band edge count as inside."""
        samples = np.array([0.9, 1.1] * 500)

        result = check_concentration(samples, 0.1, 0.05)

        assert result.empirical_fraction == 1.0
        assert result.passed

    def test_ir_check_tolerance_follows_allowance(self):
        """Test that small IR deficits within the solver allowance are not violations."""
        mechanism = LookupMechanism([[[1.0]]], [[[1.0]]], [[1.0]], regret_allowance=1e-6)

        result = ir_check(mechanism, np.array([[-5e-7], [-2e-6]]))

        assert result.violations == 1
        assert result.worst_margin == pytest.approx(-2e-6)

    def test_non_population_instance_per_bidder_marginals(self):
        """Test that each bidder keeps its own marginal."""
        other = DiscreteDistribution((5.0, 6.0), (0.5, 0.5))
        instance = AuctionInstance(2, ((self.two_point, other),))

        profiles = instance.sample_profiles(0, 200)

        assert set(profiles[:, 0, 0].tolist()) <= {1.0, 2.0}
        assert set(profiles[:, 1, 0].tolist()) <= {5.0, 6.0}
        assert instance.marginal(1, 0) == other
