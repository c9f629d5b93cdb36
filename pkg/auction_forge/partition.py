"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Three-way item split into a small exact block, a concentrated block and negligible items.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .distributions import AuctionInstance, ValueDistribution, check_accuracy, max_distribution
from .exceptions import DegenerateInstanceError, InvalidArgumentError
from .tail_analysis import tail_profile

logger = logging.getLogger(__name__)

S_SAMPLES = 100_000


@dataclass(frozen=True)
class RangeRatio:
    """Per-item truncated ranges [alpha_j, beta_j] and their largest ratio c."""
    c: float
    ranges: Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class Partition:
    """
    Disjoint item groups R (solved exactly), S (reserve welfare) and T (ignored).

    Item indices are 0-based positions in the instance.
    """
    R: Tuple[int, ...]
    S: Tuple[int, ...]
    T: Tuple[int, ...]
    buckets: Dict[int, Tuple[int, ...]]
    ell_star: int
    s_hat: float
    c: float
    epsilon: float
    delta: float
    expectations: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def r_bound(self) -> float:
        """Upper bound (16 c^2 / eps^3) ln(2 / delta) on |R|."""
        return 16.0 * self.c ** 2 / self.epsilon ** 3 * math.log(2.0 / self.delta)

    @property
    def t_mass(self) -> float:
        """Sum of E[X_j] over the ignored items."""
        return math.fsum(self.expectations[j] for j in self.T)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'R': list(self.R),
            'S': list(self.S),
            'T': list(self.T),
            'ellStar': self.ell_star,
            'sHat': self.s_hat,
            'c': self.c,
            'rBound': self.r_bound,
            'tMass': self.t_mass,
            'buckets': {str(ell): list(items) for ell, items in sorted(self.buckets.items())},
        }


def range_ratio(max_dists: Sequence[ValueDistribution], eps: float) -> RangeRatio:
    """
    Truncated range of every item maximum and the common ratio bound.

    Items whose maximum is identically zero get the range (0, 0).

    :param max_dists: Distribution of max_i v_ij per item
    :type max_dists: Sequence[ValueDistribution]
    :param eps: Accuracy in (0, 1/4)
    :type eps: float
    :return: c = (4 / eps) ln(1 / eps) and the per-item ranges
    :rtype: RangeRatio
    """
    if not max_dists:
        raise InvalidArgumentError('range_ratio needs at least one item')
    known: Dict[ValueDistribution, Tuple[float, float]] = {}
    for dist in max_dists:
        if dist not in known:
            try:
                known[dist] = tail_profile([dist], eps).interval
            except DegenerateInstanceError:
                known[dist] = (0.0, 0.0)
    ranges = [known[dist] for dist in max_dists]
    return RangeRatio(c=4.0 / eps * math.log(1.0 / eps), ranges=tuple(ranges))


def ell_star(c: float, eps: float, delta: float) -> int:
    """Bucket threshold ceil(log2((16 c^2 / eps^3) ln(2 / delta)))."""
    return math.ceil(math.log2(16.0 * c ** 2 / eps ** 3 * math.log(2.0 / delta)))


def _split_buckets(buckets: Dict[int, List[int]], star: int, c: float, eps: float,
                   delta: float) -> Tuple[List[int], List[int], List[int]]:
    exact: List[int] = []
    concentrated: List[int] = []
    ignored: List[int] = []
    for ell, items in buckets.items():
        if ell <= star:
            exact.extend(items)
        elif len(items) >= 2.0 * c ** 2 / eps ** 2 * (math.log(2.0 / delta) + ell - star):
            concentrated.extend(items)
        else:
            ignored.extend(items)
    return exact, concentrated, ignored


def partition_items(expected_maxes: Sequence[float], c: float, eps: float, delta: float) -> Partition:
    """
    Split items by their expected maximum value.

    Items with E[X_j] <= eps * s / (2n) are ignored. The rest go to bucket
    l with E[X_j] in (s / 2^l, s / 2^(l-1)]. Buckets up to l* form R; deeper
    buckets form S when they hold at least (2 c^2 / eps^2)(ln(2 / delta) + l - l*)
    items and are ignored otherwise. When the rounded-up l* lets |R| exceed
    (16 c^2 / eps^3) ln(2 / delta), l* is lowered by one.

    :param expected_maxes: E[max_i v_ij] per item
    :type expected_maxes: Sequence[float]
    :param c: Range ratio
    :type c: float
    :param eps: Accuracy in (0, 1/4)
    :type eps: float
    :param delta: Failure probability in (0, 1/8)
    :type delta: float
    :return: Partition
    :rtype: Partition
    :raises InvalidArgumentError: On negative expectations or invalid parameters
    :raises DegenerateInstanceError: If every expectation is zero
    """
    check_accuracy(eps, delta)
    expectations = tuple(float(e) for e in expected_maxes)
    if not expectations:
        raise InvalidArgumentError('partition_items needs at least one item')
    if any(not math.isfinite(e) or e < 0 for e in expectations):
        raise InvalidArgumentError('Expected maxima must be finite and non-negative')
    if not c > 0:
        raise InvalidArgumentError(f'Range ratio must be positive, got {c!r}')
    s = math.fsum(expectations)
    if s <= 0:
        raise DegenerateInstanceError('All items have zero expected value')
    n = len(expectations)
    star = ell_star(c, eps, delta)
    negligible = eps * s / (2.0 * n)

    negligible_items: List[int] = []
    buckets: Dict[int, List[int]] = {}
    for j, e in enumerate(expectations):
        if e <= negligible:
            negligible_items.append(j)
            continue
        ell = math.floor(math.log2(s / e)) + 1
        buckets.setdefault(ell, []).append(j)

    bound = 16.0 * c ** 2 / eps ** 3 * math.log(2.0 / delta)
    while True:
        exact, concentrated, ignored = _split_buckets(buckets, star, c, eps, delta)
        if len(exact) <= bound or star <= 1:
            break
        # 2^l* <= bound keeps |R| < 2^l* within the bound
        logger.debug('|R|=%d exceeds %.6g at l*=%d, lowering l*', len(exact), bound, star)
        star -= 1
    ignored.extend(negligible_items)

    result = Partition(
        R=tuple(sorted(exact)),
        S=tuple(sorted(concentrated)),
        T=tuple(sorted(ignored)),
        buckets={ell: tuple(items) for ell, items in sorted(buckets.items())},
        ell_star=star,
        s_hat=s,
        c=c,
        epsilon=eps,
        delta=delta,
        expectations=expectations,
    )
    logger.debug('Partition |R|=%d |S|=%d |T|=%d l*=%d', len(result.R), len(result.S), len(result.T), star)
    return result


def item_expected_maxes(instance: AuctionInstance, samples: int = S_SAMPLES, seed: int = 0) -> List[float]:
    """
    E[max_i v_ij] per item, exact for discrete columns and estimated otherwise.

    Every column draws from its own stream derived from (seed, item).
    """
    if samples < 1:
        raise InvalidArgumentError('Number of samples must be positive')
    result = []
    for j, col in enumerate(instance.columns):
        maximum = max_distribution(col)
        if maximum.is_discrete or len(col) == 1:
            result.append(maximum.expectation())
        else:
            rng = np.random.default_rng([seed, j])
            result.append(float(np.mean(maximum.sample(rng, samples))))
    return result


def estimate_s(instance: AuctionInstance, samples: int = S_SAMPLES, seed: int = 0) -> float:
    """
    Estimate s = sum_j E[max_i v_ij].

    :param instance: Auction instance
    :type instance: AuctionInstance
    :param samples: Monte Carlo draws per non-discrete item
    :type samples: int
    :param seed: Seed of the Monte Carlo streams
    :type seed: int
    :return: Estimated s
    :rtype: float
    """
    return math.fsum(item_expected_maxes(instance, samples, seed))


def partition_instance(instance: AuctionInstance, samples: int = S_SAMPLES, seed: int = 0) -> Partition:
    """
    Partition an instance: ranges of the item maxima, expected maxima, then buckets.

    :param instance: Auction instance
    :type instance: AuctionInstance
    :param samples: Monte Carlo draws per non-discrete item
    :type samples: int
    :param seed: Seed of the Monte Carlo streams
    :type seed: int
    :return: Partition
    :rtype: Partition
    """
    ratio = range_ratio([max_distribution(col) for col in instance.columns], instance.epsilon)
    expectations = item_expected_maxes(instance, samples, seed)
    return partition_items(expectations, ratio.c, instance.epsilon, instance.delta)
