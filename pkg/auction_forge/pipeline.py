"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

PtasBuilder: assembles the near-optimal mechanism of an instance.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .distributions import AuctionInstance, ValueDistribution, check_bounded_ratio, check_mhr, coarsen, max_distribution
from .exceptions import InvalidArgumentError
from .mechanisms import Mechanism, ReserveWelfare, SecondPriceReserve, combine
from .opt_solvers import (
    DEFAULT_MAX_VARIABLES,
    build_lp,
    bundle_price_search,
    eps_dt_search,
    lottery_menu_search,
    mechanism_from_lp,
    solve_lp,
)
from .partition import Partition, partition_instance
from .tail_analysis import iid_reserve, tail_profile

logger = logging.getLogger(__name__)


@dataclass
class BuildResult:
    """Mechanism built for an instance and how it was obtained."""
    mechanism: Mechanism
    dispatch: str
    threshold: Optional[int] = None
    partition: Optional[Partition] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dispatch': self.dispatch,
            'dispatchThreshold': self.threshold,
            'partition': None if self.partition is None else self.partition.to_dict(),
            'mechanism': self.mechanism.metadata(),
        }


class PtasBuilder:
    """
    Builds the near-optimal mechanism of an auction instance.

    Population instances with at least the dispatch threshold of bidders get a
    per-item second price auction with i.i.d. reserves. Every other instance
    is partitioned; the small block R gets an exactly optimised mechanism, the
    concentrated block S the reserve-welfare mechanism and the rest is never
    sold.

    Config can be added in constructor or can be used default config.
    Config contains:
        - concept: Solution concept of the R block, 'BIC', 'IC' or 'DT' (default: 'BIC')
        - samples: Monte Carlo draws for expectations of non-discrete items (default: 100000)
        - seed: Seed of every Monte Carlo estimate (default: 0)
        - dispatch_threshold: Bidders needed for per-item reserves; None uses (12/eps)^(12/eps)
          capped at 10^6 (default: None)
        - max_lp_variables: Size cap of the R block LP (default: 100000)
        - r_block_solver: 'lp', or 'bundle' / 'menu' grid searches for single-bidder blocks (default: 'lp')
        - menu_cap: Largest lottery menu enumerated by the 'menu' solver (default: 3)
        - require_regularity: Reject marginals that are neither MHR nor of bounded support ratio
          instead of warning (default: False)
        - support_ratio: Allowed support ratio of non-MHR marginals (default: 100.0)

    :examples:
        >>> from auction_forge import PtasBuilder
        builder = PtasBuilder({'concept': 'IC'})
        mechanism = builder.build(instance).mechanism
    """
    default_config = {
        'concept': 'BIC',
        'samples': 100_000,
        'seed': 0,
        'dispatch_threshold': None,
        'max_lp_variables': DEFAULT_MAX_VARIABLES,
        'r_block_solver': 'lp',
        'menu_cap': 3,
        'require_regularity': False,
        'support_ratio': 100.0,
    }
    threshold_cap = 10 ** 6

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize PtasBuilder instance.

        :param config: Optional configuration overriding keys of ``default_config``
        :type config: dict or None
        :raises InvalidArgumentError: If the configuration is invalid
        """
        self.config = dict(self.default_config) if config is None else {**self.default_config, **config}
        PtasBuilder._check_config(self.config)

    @staticmethod
    def _check_config(config: dict):
        """
        Check if configuration dictionary has proper structure.

        :param config: Configuration dictionary to check
        :type config: dict
        :raises InvalidArgumentError: If a key is missing or has a wrong type or value
        """
        for key, val_type in (
                ('concept', str),
                ('samples', int),
                ('seed', int),
                ('max_lp_variables', int),
                ('r_block_solver', str),
                ('menu_cap', int),
                ('require_regularity', bool),
                ('support_ratio', (int, float)),
        ):
            if key not in config:
                raise InvalidArgumentError(f'Configuration must have "{key}" key')
            if not isinstance(config[key], val_type) or (val_type is int and isinstance(config[key], bool)):
                type_name = val_type.__name__ if isinstance(val_type, type) else 'float'
                raise InvalidArgumentError(f'Configuration "{key}" must be of type {type_name}')
        if config['concept'].upper() not in ('DT', 'IC', 'BIC'):
            raise InvalidArgumentError('Configuration "concept" must be one of DT, IC, BIC')
        if config['r_block_solver'] not in ('lp', 'bundle', 'menu'):
            raise InvalidArgumentError('Configuration "r_block_solver" must be one of lp, bundle, menu')
        for key in ('samples', 'max_lp_variables', 'menu_cap'):
            if config[key] < 1:
                raise InvalidArgumentError(f'Configuration "{key}" must be positive')
        if config['seed'] < 0:
            raise InvalidArgumentError('Configuration "seed" must be non-negative')
        if config['support_ratio'] < 1:
            raise InvalidArgumentError('Configuration "support_ratio" must be at least 1')
        threshold = config.get('dispatch_threshold')
        if threshold is not None and (isinstance(threshold, bool) or not isinstance(threshold, int) or threshold < 1):
            raise InvalidArgumentError('Configuration "dispatch_threshold" must be a positive int or None')

    def dispatch_threshold(self, eps: float) -> int:
        """
        Number of bidders from which per-item reserves are used.

        :param eps: Accuracy of the instance
        :type eps: float
        :return: The configured override, or (12 / eps)^(12 / eps) capped at 10^6
        :rtype: int
        """
        if self.config['dispatch_threshold'] is not None:
            return self.config['dispatch_threshold']
        exponent = 12.0 / eps
        if exponent * math.log10(exponent) > math.log10(self.threshold_cap):
            warnings.warn(f'Dispatch threshold (12/eps)^(12/eps) for eps={eps} is capped at {self.threshold_cap}')
            return self.threshold_cap
        return math.ceil(exponent ** exponent)

    def check_regularity(self, instance: AuctionInstance):
        """
        Warn about (or reject) marginals that are neither MHR nor of bounded support ratio.

        :raises InvalidArgumentError: If ``require_regularity`` is set and a marginal fails both checks
        """
        for j, col in enumerate(instance.columns):
            for dist in dict.fromkeys(col):
                if check_mhr(dist).is_mhr or check_bounded_ratio(dist, self.config['support_ratio']):
                    continue
                message = f'Item {j} has a marginal that is neither MHR nor of bounded support ratio'
                if self.config['require_regularity']:
                    raise InvalidArgumentError(message)
                warnings.warn(f'{message}; revenue guarantees may not hold')

    def build(self, instance: AuctionInstance) -> BuildResult:
        """
        Build the mechanism of an instance.

        :param instance: Auction instance
        :type instance: AuctionInstance
        :return: Mechanism with the partition or dispatch that produced it
        :rtype: BuildResult
        :raises InstanceTooLargeError: If the R block exceeds a solver cap
        :raises SolverError: If the R block solver fails
        """
        threshold = self.dispatch_threshold(instance.epsilon) if instance.population else None
        if threshold is not None and instance.num_bidders >= threshold:
            logger.info('Dispatching %d bidders to per-item reserves (threshold %d)', instance.num_bidders, threshold)
            reserves = [iid_reserve(col, instance.num_bidders, instance.epsilon).reserve for col in instance.items]
            return BuildResult(SecondPriceReserve(reserves), 'second_price_reserve', threshold)

        self.check_regularity(instance)
        partition = partition_instance(instance, self.config['samples'], self.config['seed'])
        logger.info('Partition: |R|=%d |S|=%d |T|=%d', len(partition.R), len(partition.S), len(partition.T))
        exact = self.solve_r_block(instance.sub_instance(partition.R)) if partition.R else None
        concentrated = self.s_block_mechanism(partition) if partition.S else None
        mechanism = combine(exact, partition.R, concentrated, partition.S, partition.T)
        return BuildResult(mechanism, 'partition', threshold, partition)

    def s_block_mechanism(self, partition: Partition) -> ReserveWelfare:
        """Reserve welfare (1 - eps) sum_{j in S} E[max_i v_ij] on the concentrated block."""
        s_value = math.fsum(partition.expectations[j] for j in partition.S)
        return ReserveWelfare((1.0 - partition.epsilon) * s_value)

    def discretize(self, instance: AuctionInstance) -> AuctionInstance:
        """
        Coarsen non-discrete marginals onto the (1 + eps) grid of their item's truncation interval.

        Discrete instances are returned unchanged.
        """
        if instance.all_discrete:
            return instance
        eps = instance.epsilon
        items: List[Any] = []
        for col, interval in zip(instance.items, item_intervals(instance)):
            dists: Sequence[ValueDistribution] = (col,) if isinstance(col, ValueDistribution) else col
            coarse = tuple(dist if dist.is_discrete else coarsen(dist, eps, interval) for dist in dists)
            items.append(coarse[0] if instance.population else coarse)
        return AuctionInstance(
            num_bidders=instance.num_bidders,
            items=tuple(items),
            population=instance.population,
            epsilon=instance.epsilon,
            delta=instance.delta,
            seed=instance.seed,
        )

    def solve_r_block(self, instance: AuctionInstance) -> Mechanism:
        """
        Optimised mechanism of the small block.

        :param instance: Instance restricted to the R items
        :type instance: AuctionInstance
        :return: LP, integer program or menu mechanism
        :rtype: Mechanism
        """
        eps = instance.epsilon
        solver = self.config['r_block_solver']
        if solver in ('bundle', 'menu'):
            if instance.num_bidders != 1:
                raise InvalidArgumentError(f'The "{solver}" R block solver needs a single bidder')
            if solver == 'bundle':
                result = bundle_price_search(instance, eps, seed=self.config['seed'])
            else:
                result = lottery_menu_search(instance, eps, self.config['menu_cap'], seed=self.config['seed'])
            logger.info('R block %s search revenue %.6g (%s)', solver, result.revenue, result.label)
            return result.menu

        coarse = self.discretize(instance)
        concept = self.config['concept'].upper()
        if concept == 'DT':
            return eps_dt_search(coarse, eps, self.config['max_lp_variables'])
        model = build_lp(coarse, concept, self.config['max_lp_variables'])
        solution = solve_lp(model)
        logger.info('R block %s LP objective %.9g', concept, solution.objective)
        if coarse is instance:
            return mechanism_from_lp(model, solution)
        # rounding onto the grid loses at most eps * hi + lo per item
        allowance = math.fsum(eps * hi + lo for lo, hi in item_intervals(instance))
        return mechanism_from_lp(model, solution, concept=f'eps-{concept}', regret_allowance=allowance)


def item_intervals(instance: AuctionInstance) -> List[Tuple[float, float]]:
    """Truncation interval of every item maximum."""
    return [tail_profile([max_distribution(col)], instance.epsilon).interval for col in instance.columns]


def build_ptas_mechanism(instance: AuctionInstance, config: Optional[Dict[str, Any]] = None) -> Mechanism:
    """
    Near-optimal mechanism of an instance.

    :param instance: Auction instance
    :type instance: AuctionInstance
    :param config: PtasBuilder configuration overrides
    :type config: dict or None
    :return: Mechanism
    :rtype: Mechanism
    """
    return PtasBuilder(config).build(instance).mechanism
