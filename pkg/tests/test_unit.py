"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Unit tests for AuctionForge building blocks.
"""

# pylint: disable=protected-access

import json
import math

import numpy as np
import pytest

from auction_forge.distributions import (
    AuctionInstance,
    DiscreteDistribution,
    MhrVerdict,
    PointMass,
    check_bounded_ratio,
    check_mhr,
    coarsen,
    floor_to_multiple,
    max_distribution,
    sample,
)
from auction_forge.exceptions import InstanceTooLargeError, InvalidArgumentError, MalformedInstanceError
from auction_forge.mechanisms import (
    GrandBundle,
    LookupMechanism,
    MenuMechanism,
    ReserveWelfare,
    SecondPriceReserve,
    combine,
    mechanism_from_metadata,
    weakest_concept,
)
from auction_forge.opt_solvers import build_lp, lottery_grid, price_grid
from auction_forge.partition import ell_star, estimate_s, partition_items
from auction_forge.pipeline import PtasBuilder
from auction_forge.sim_harness import DeviationGrid, check_concentration, worker_count
from auction_forge.tail_analysis import ANCHOR_LEVEL, anchoring_point, iid_reserve, truncation_interval
from tests.base_test import BaseTest


class TestDistributionsUnit(BaseTest):
    """Unit tests for value distributions and instances."""

    def test_discrete_expectation_and_tails(self):
        """Test closed form expectation, CDF and survival of a discrete distribution."""
        assert self.two_point.expectation() == 1.5
        assert self.two_point.cdf(1.0) == 0.5
        assert self.two_point.survival(2.0) == 0.5
        assert self.two_point.survival(1.5) == 0.5
        assert self.two_point.survival(0.5) == 1.0

    def test_sampling_is_reproducible(self):
        """Test that the same seed gives the same draws."""
        first = sample(self.two_point, 42, 100)
        second = sample(self.two_point, 42, 100)

        assert np.array_equal(first, second)
        assert set(first.tolist()) <= {1.0, 2.0}
        assert isinstance(sample(self.uniform, 1), float)

    def test_max_distribution_of_discrete(self):
        """Test the exact law of the maximum of two discrete marginals."""
        maximum = max_distribution([self.two_point, self.two_point])

        assert np.allclose(maximum.values, [1.0, 2.0])
        assert np.allclose(maximum.weights, [0.25, 0.75])
        assert maximum.expectation() == pytest.approx(1.75)

    def test_check_mhr_reports_witness(self):
        """Test that a decreasing discrete hazard is reported with its index."""
        dist = DiscreteDistribution((1.0, 2.0, 3.0), (0.6, 0.1, 0.3))

        assert check_mhr(dist) == MhrVerdict(False, 1)
        assert check_mhr(self.two_point).is_mhr

    def test_check_mhr_hazard_drop_after_first_atom(self):
        """Test the hazards 0.5, 0.2, 1.0 of {1: 0.5, 2: 0.1, 3: 0.4}."""
        dist = DiscreteDistribution((1.0, 2.0, 3.0), (0.5, 0.1, 0.4))

        assert check_mhr(dist) == MhrVerdict(is_mhr=False, witness=1)
        assert check_mhr(self.exponential).is_mhr

    def test_check_bounded_ratio(self):
        """Test the support ratio check."""
        assert check_bounded_ratio(self.two_point, 2.0)
        assert not check_bounded_ratio(self.two_point, 1.5)
        assert not check_bounded_ratio(self.exponential, 100.0)

    def test_coarsen_rounds_down_to_grid(self):
        """Test that values are rounded down to a power of (1 + eps)."""
        result = coarsen(PointMass(0.95), 0.1, (0.5, 2.0))

        assert result.values[0] == pytest.approx(1.0 / 1.1)

    def test_coarsen_zeroes_low_and_clamps_high_values(self):
        """Test the treatment of values outside of the truncation interval."""
        result = coarsen(DiscreteDistribution((0.3, 5.0), (0.5, 0.5)), 0.1, (0.5, 2.0))

        assert np.allclose(result.values, [0.0, 1.1 ** 7])
        assert np.allclose(result.weights, [0.5, 0.5])

    def test_coarsen_continuous_distribution(self):
        """Test that a continuous distribution is coarsened from its CDF."""
        result = coarsen(self.uniform, 0.1, (0.5, 2.0))

        assert result.weights.sum() == pytest.approx(1.0)
        assert result.values.max() <= 1.0
        assert 0.75 / 1.1 <= result.expectation() <= 0.75

    def test_floor_to_multiple(self):
        """Test flooring atoms to multiples of a step."""
        result = floor_to_multiple(DiscreteDistribution((0.26, 0.74), (0.5, 0.5)), 0.25)

        assert np.allclose(result.values, [0.25, 0.5])

    def test_instance_from_dict(self):
        """Test parsing an instance document."""
        instance = AuctionInstance.from_dict(self.instance_doc)

        assert instance.num_bidders == 2
        assert instance.num_items == 1
        assert instance.population
        assert instance.epsilon == 0.2
        assert instance.seed == 7
        assert instance.marginal(1, 0) == self.two_point
        assert instance.to_dict() == self.instance_doc

    def test_instance_from_dict_names_bad_field(self):
        """Test that a malformed fragment is reported with its path."""
        self.instance_doc['items'][0]['type'] = 'gauss'

        with pytest.raises(MalformedInstanceError, match='items\\[0\\].type') as info:
            AuctionInstance.from_dict(self.instance_doc)
        assert info.value.field == 'items[0].type'

    def test_sample_profiles_shape(self):
        """Test the shape of sampled valuation profiles."""
        profiles = self.uniform_items.sample_profiles(0, 10)

        assert profiles.shape == (10, 2, 5)
        assert np.all((profiles >= 0.5) & (profiles <= 1.0))


class TestTailAnalysisUnit(BaseTest):
    """Unit tests for anchoring points and reserves."""

    def test_anchoring_point_discrete(self):
        """Test the anchoring point of a two point distribution."""
        assert anchoring_point([self.two_point]) == 4.0

    def test_anchoring_point_exponential(self):
        """Test the anchoring point of the unit exponential."""
        expected = -2.0 * math.log(1.0 - ANCHOR_LEVEL)
        assert anchoring_point([self.exponential]) == pytest.approx(expected, abs=0.03)

    def test_truncation_interval(self):
        """Test the truncation interval formula."""
        lo, hi = truncation_interval(2.0, 0.1)

        assert lo == pytest.approx(0.1)
        assert hi == pytest.approx(9.21034, abs=1e-5)

    def test_iid_reserve_two_bidders(self):
        """Test the reserve for two i.i.d. bidders."""
        result = iid_reserve(self.two_point, 2, 0.1)

        assert result.reserve == 2.0
        assert result.guarantee == pytest.approx(1.5)

    def test_iid_reserve_prefers_smaller_reserve_on_tie(self):
        """Test tie breaking towards the smaller reserve."""
        result = iid_reserve(self.two_point, 1, 0.1)

        assert result.reserve == 1.0
        assert result.guarantee == pytest.approx(1.0)


class TestPartitionUnit(BaseTest):
    """Unit tests for the item partition."""

    def test_ell_star(self):
        """Test the bucket threshold."""
        assert ell_star(1.0, 0.24, 0.12) == 12

    def test_many_identical_items_are_concentrated(self):
        """Test that a large bucket of equal items becomes S."""
        partition = partition_items([1.0] * 4096, 1.0, 0.24, 0.12)

        assert partition.R == ()
        assert len(partition.S) == 4096
        assert partition.T == ()
        assert partition.ell_star == 12
        assert list(partition.buckets) == [13]

    def test_exact_block_stays_within_bound(self):
        """Test that l* is lowered when the rounded-up threshold would let |R| exceed its bound."""
        partition = partition_items([1.0] * 6000, 1.0, 0.2, 0.1)

        assert partition.r_bound == pytest.approx(2000.0 * math.log(20.0))
        assert len(partition.R) <= partition.r_bound
        assert partition.ell_star == 12
        assert partition.R == ()
        assert len(partition.S) == 6000

    def test_negligible_items_are_ignored(self):
        """Test that low expectation items go to T."""
        partition = partition_items([100.0, 1.0, 1e-6], 1.0, 0.24, 0.12)

        assert partition.R == (0,)
        assert partition.S == ()
        assert partition.T == (1, 2)
        assert partition.t_mass == pytest.approx(1.000001)
        assert partition.t_mass <= partition.epsilon * partition.s_hat

    def test_partition_to_dict(self):
        """Test the JSON form of a partition."""
        data = partition_items([100.0, 1.0, 1e-6], 1.0, 0.24, 0.12).to_dict()

        assert data['R'] == [0]
        assert data['ellStar'] == 12
        assert data['rBound'] == pytest.approx(16.0 / 0.24 ** 3 * math.log(2.0 / 0.12))
        assert data['buckets'] == {'1': [0]}
        json.dumps(data)

    def test_estimate_s_discrete(self):
        """Test that s is exact for discrete items."""
        assert estimate_s(self.two_items) == pytest.approx(3.5)

    def test_estimate_s_sampled(self):
        """Test the Monte Carlo estimate of s for continuous items."""
        assert estimate_s(self.uniform_items, samples=100_000) == pytest.approx(5 * (0.5 + 0.5 * 2.0 / 3.0), abs=0.01)


class TestMechanismsUnit(BaseTest):
    """Unit tests for the mechanism rules."""

    def test_reserve_welfare_payments(self):
        """Test the reserve welfare payments when the reserve is met."""
        outcome = ReserveWelfare(8.0).run(self.bids)

        assert np.array_equal(outcome.alloc, [[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(outcome.payments, [3.0, 4.0])
        assert outcome.revenue == pytest.approx(7.0)

    def test_reserve_welfare_pays_losing_bidders(self):
        """Test that bidders without items receive W - s_hat."""
        bids = np.vstack([self.bids, [[0.0, 0.0]]])

        outcome = ReserveWelfare(8.0).run(bids)

        assert np.allclose(outcome.payments, [3.0, 4.0, -1.0])

    def test_reserve_welfare_below_reserve(self):
        """Test that nothing is sold below the reserve welfare."""
        outcome = ReserveWelfare(10.0).run(self.bids)

        assert not outcome.alloc.any()
        assert not outcome.payments.any()

    def test_second_price_reserve(self):
        """Test per-item second price with reserve."""
        mechanism = SecondPriceReserve([1.0])

        sold = mechanism.run([[2.0], [1.5]])
        reserve_bound = mechanism.run([[3.0], [0.5]])
        unsold = mechanism.run([[0.5], [0.2]])

        assert np.array_equal(sold.alloc, [[1.0], [0.0]])
        assert np.allclose(sold.payments, [1.5, 0.0])
        assert np.allclose(reserve_bound.payments, [1.0, 0.0])
        assert not unsold.alloc.any()

    def test_grand_bundle(self):
        """Test the grand bundle take-it-or-leave-it offer."""
        mechanism = GrandBundle(5.0)

        assert mechanism.run([[2.0, 3.0]]).payments[0] == 5.0
        assert not mechanism.run([[2.0, 2.9]]).alloc.any()

    def test_combine_runs_blocks_on_their_items(self):
        """Test that combined blocks see only their items and payments add up."""
        mechanism = combine(SecondPriceReserve([1.0]), [0], ReserveWelfare(1.0), [2], ignored=[1])

        outcome = mechanism.run([[2.0, 7.0, 3.0], [1.5, 8.0, 0.0]])

        assert np.array_equal(outcome.alloc, [[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        assert np.allclose(outcome.payments, [2.5, -2.0])
        assert mechanism.concept == 'DT'

    def test_weakest_concept(self):
        """Test the ordering of solution concepts."""
        assert weakest_concept('DT', 'eps-IC') == 'eps-IC'
        assert weakest_concept('IC', 'BIC') == 'BIC'
        assert weakest_concept('DT', 'DT') == 'DT'

    def test_lookup_rounds_bids_down_to_types(self):
        """Test the table lookup of a single-bidder mechanism."""
        mechanism = LookupMechanism([[[1.0, 2.0]]], [[[0.0]], [[1.0]]], [[0.0], [2.0]])

        assert mechanism.run([[1.5]]).payments[0] == 0.0
        assert mechanism.run([[2.0]]).payments[0] == 2.0
        assert mechanism.run([[5.0]]).alloc[0, 0] == 1.0
        assert mechanism.deterministic

    def test_menu_choice_ties_to_higher_price(self):
        """Test that an indifferent buyer takes the more expensive entry."""
        menu = MenuMechanism([([1.0], 1.0)])

        assert menu.run([[1.0]]).payments[0] == 1.0
        assert menu.run([[0.9]]).payments[0] == 0.0
        assert menu.concept == 'DT'
        assert MenuMechanism([([0.5], 0.2)]).concept == 'IC'

    def test_metadata_replays_combined_mechanism(self):
        """Test that metadata written as JSON rebuilds an equivalent mechanism."""
        mechanism = combine(SecondPriceReserve([1.0]), [0], ReserveWelfare(1.0), [1])
        metadata = json.loads(json.dumps(mechanism.metadata()))

        replayed = mechanism_from_metadata(metadata)
        bids = [[2.0, 3.0], [1.5, 0.5]]

        assert replayed.metadata() == mechanism.metadata()
        assert np.allclose(replayed.run(bids).payments, mechanism.run(bids).payments)


class TestSolversUnit(BaseTest):
    """Unit tests for LP construction and price grids."""

    def test_lp_counts(self):
        """Test the size of the IC and BIC models of two bidders on one item."""
        ic = build_lp(self.two_bidders, 'IC')
        bic = build_lp(self.two_bidders, 'BIC')

        assert ic.counts == {'profiles': 4, 'variables': 16, 'supplyRows': 4, 'irRows': 8, 'icRows': 8}
        assert bic.counts['bicRows'] == 4
        assert bic.num_rows == 4 + 8 + 4

    def test_lp_size_cap(self):
        """Test that an oversized model is refused with its counts."""
        with pytest.raises(InstanceTooLargeError) as info:
            build_lp(self.two_bidders, 'IC', max_variables=10)
        assert info.value.counts['variables'] == 16

    def test_price_grid(self):
        """Test geometric price grids."""
        grid = price_grid(1.0, 1.953125, 0.5)

        assert np.allclose(grid, [1.0, 1.25, 1.5625, 1.953125])
        assert len(price_grid(1.0, 2.0, 0.1)) == 71
        assert price_grid(3.0, 3.0, 0.1) == [3.0]

    def test_lottery_grid(self):
        """Test the allocation probability grid."""
        grid = lottery_grid(0.5)

        assert len(grid) == 8
        assert grid[:3] == pytest.approx([0.0, 0.125, 0.15625])


class TestHarnessUnit(BaseTest):
    """Unit tests for the audit harness helpers and configuration."""

    def test_deviation_grid_size(self):
        """Test the number of deviations of the default grid without supports."""
        reports = list(DeviationGrid().reports(np.ones((3, 2))))

        assert len(reports) == 40 + 4 + 1
        assert all(report.shape == (3, 2) for _, report in reports)

    def test_deviation_grid_support_values(self):
        """Test that support values are tried per coordinate."""
        labels = [label for label, _ in DeviationGrid().reports(np.ones((1, 1)), [np.array([1.0, 2.0])])]

        assert 'item0=1.0' in labels
        assert 'item0=2.0' in labels

    def test_check_concentration_constant(self):
        """Test that a constant sample is concentrated."""
        result = check_concentration(np.ones(1000), 0.1, 0.05)

        assert result.passed
        assert result.empirical_fraction == 1.0

    def test_check_concentration_uniform_fails(self):
        """Test that a uniform sample is not concentrated at 10%."""
        draws = np.random.default_rng(0).uniform(0.0, 1.0, 10_000)

        result = check_concentration(draws, 0.1, 0.05)

        assert not result.passed
        assert result.empirical_fraction == pytest.approx(0.1, abs=0.02)

    def test_worker_count_from_environment(self, monkeypatch):
        """Test the thread override."""
        monkeypatch.setenv('AUCTIONFORGE_THREADS', '3')

        assert worker_count() == 3

    def test_worker_count_invalid_environment(self, monkeypatch):
        """Test that an invalid thread override falls back with a warning."""
        monkeypatch.setenv('AUCTIONFORGE_THREADS', 'many')

        with pytest.warns(UserWarning, match='AUCTIONFORGE_THREADS'):
            assert worker_count() >= 1


class TestPtasBuilderUnit(BaseTest):
    """Unit tests for the builder configuration."""

    def test_default_config(self):
        """Test PtasBuilder initialization with default configuration."""
        builder = PtasBuilder()

        assert builder.config == PtasBuilder.default_config

    def test_custom_config_is_merged(self):
        """Test that user keys override the defaults."""
        builder = PtasBuilder({'concept': 'IC', 'seed': 3})

        assert builder.config['concept'] == 'IC'
        assert builder.config['seed'] == 3
        assert builder.config['samples'] == PtasBuilder.default_config['samples']

    def test_config_wrong_type(self):
        """Test that a wrong configuration type is reported."""
        with pytest.raises(InvalidArgumentError, match='Configuration "samples" must be of type int'):
            PtasBuilder({'samples': '100'})

    def test_config_missing_key(self):
        """Test that a missing configuration key is reported."""
        with pytest.raises(InvalidArgumentError, match='Configuration must have "concept" key'):
            PtasBuilder._check_config({})

    def test_dispatch_threshold_is_capped(self):
        """Test that the default dispatch threshold is capped with a warning."""
        with pytest.warns(UserWarning, match='capped'):
            assert PtasBuilder().dispatch_threshold(0.2) == 10 ** 6

    def test_dispatch_threshold_override(self):
        """Test the configured dispatch threshold."""
        assert PtasBuilder({'dispatch_threshold': 5}).dispatch_threshold(0.2) == 5
