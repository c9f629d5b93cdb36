"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Extreme value helpers: anchoring point, truncation interval and i.i.d. reserve.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .distributions import ValueDistribution, geometric_exponents, max_distribution
from .exceptions import DegenerateInstanceError, InvalidArgumentError

logger = logging.getLogger(__name__)

ANCHOR_LEVEL = 1.0 - math.exp(-0.5)
QUANTILE_SAMPLES = 100_000
QUANTILE_SEED = 20_240_601


@dataclass(frozen=True)
class TailProfile:
    """Anchoring point of max_i X_i and the truncation interval derived from it."""
    beta: float
    trunc_lo: float
    trunc_hi: float
    epsilon: float

    @property
    def ratio(self) -> float:
        """trunc_hi / trunc_lo, equal to (4 / eps) ln(1 / eps)."""
        return self.trunc_hi / self.trunc_lo

    @property
    def interval(self) -> Tuple[float, float]:
        return self.trunc_lo, self.trunc_hi

    def to_dict(self) -> Dict[str, Any]:
        return {
            'beta': self.beta,
            'truncLo': self.trunc_lo,
            'truncHi': self.trunc_hi,
            'ratio': self.ratio,
            'epsilon': self.epsilon,
        }


@dataclass(frozen=True)
class IidReserve:
    """Per-item reserve for many i.i.d. bidders and its revenue guarantee."""
    reserve: float
    guarantee: float


def _check_eps(eps: float):
    if not 0 < eps < 0.25:
        raise InvalidArgumentError(f'eps must be in (0, 1/4), got {eps!r}')


def anchoring_point(dists: Sequence[ValueDistribution]) -> float:
    """
    Anchoring point beta = 2q of max_i X_i.

    q is the largest t with Pr[max_i X_i >= t] >= 1 - e^(-1/2). It is exact
    for discrete marginals and the upper quantile of a fixed-seed sample of
    the maximum otherwise.

    :param dists: Independent marginals
    :type dists: Sequence[ValueDistribution]
    :return: beta
    :rtype: float
    :raises InvalidArgumentError: If the list is empty
    :raises DegenerateInstanceError: If the maximum is zero with high probability
    """
    dists = list(dists)
    if not dists:
        raise InvalidArgumentError('anchoring_point needs at least one distribution')
    if all(dist.support_bounds()[1] <= 0 for dist in dists):
        raise DegenerateInstanceError('All value distributions are identically zero')
    maximum = max_distribution(dists)
    if maximum.is_discrete:
        values = maximum.values
        tails = maximum.survival(values)
        q = float(values[tails >= ANCHOR_LEVEL - 1e-12].max())
    else:
        draws = np.sort(maximum.sample(QUANTILE_SEED, QUANTILE_SAMPLES))[::-1]
        q = float(draws[math.ceil(ANCHOR_LEVEL * QUANTILE_SAMPLES) - 1])
    if q <= 0:
        raise DegenerateInstanceError('Anchoring quantile of the maximum value is zero')
    return 2.0 * q


def truncation_interval(beta: float, eps: float) -> Tuple[float, float]:
    """
    Truncation interval [eps * beta / 2, 2 * beta * ln(1 / eps)].

    :param beta: Anchoring point
    :type beta: float
    :param eps: Accuracy in (0, 1/4)
    :type eps: float
    :return: (lo, hi)
    :rtype: tuple[float, float]
    :raises InvalidArgumentError: If beta is not positive or eps is out of range
    """
    _check_eps(eps)
    if not beta > 0:
        raise InvalidArgumentError(f'beta must be positive, got {beta!r}')
    return eps * beta / 2.0, 2.0 * beta * math.log(1.0 / eps)


def tail_profile(dists: Sequence[ValueDistribution], eps: float) -> TailProfile:
    """
    Anchoring point and truncation interval of the maximum of the marginals.

    :param dists: Independent marginals
    :type dists: Sequence[ValueDistribution]
    :param eps: Accuracy in (0, 1/4)
    :type eps: float
    :return: Tail profile
    :rtype: TailProfile
    """
    _check_eps(eps)
    beta = anchoring_point(dists)
    lo, hi = truncation_interval(beta, eps)
    return TailProfile(beta=beta, trunc_lo=lo, trunc_hi=hi, epsilon=eps)


def expected_max(dists: Sequence[ValueDistribution], samples: int = QUANTILE_SAMPLES, seed: int = 0) -> float:
    """
    E[max_i X_i], exact for discrete marginals and a Monte Carlo mean otherwise.

    :param dists: Independent marginals
    :type dists: Sequence[ValueDistribution]
    :param samples: Number of draws for the Monte Carlo case
    :type samples: int
    :param seed: Seed for the Monte Carlo case
    :type seed: int
    :return: Expected maximum
    :rtype: float
    """
    maximum = max_distribution(dists)
    if maximum.is_discrete or len(dists) == 1:
        return maximum.expectation()
    return float(np.mean(maximum.sample(seed, samples)))


def _iid_max_quantile(dist: ValueDistribution, m: int, level: float) -> float:
    """Largest t with 1 - F(t)^m >= level for a continuous F, by bisection."""
    target = (1.0 - level) ** (1.0 / m)
    lo, hi = dist.support_bounds()
    if not math.isfinite(hi):
        hi = max(1.0, 2.0 * dist.expectation())
        while float(dist.cdf(hi)) < target:
            hi *= 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if float(dist.cdf(mid)) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def iid_reserve(dist: ValueDistribution, m: int, eps: float) -> IidReserve:
    """
    Reserve r maximising Pr[max of m i.i.d. draws >= r] * r.

    Discrete marginals are scanned over their full support; continuous ones
    over the (1 + eps)-geometric grid covering the truncation interval of the
    maximum. Ties go to the smaller reserve.

    :param dist: Common marginal of every bidder
    :type dist: ValueDistribution
    :param m: Number of bidders
    :type m: int
    :param eps: Grid step for continuous marginals
    :type eps: float
    :return: Reserve and the achieved objective
    :rtype: IidReserve
    :raises InvalidArgumentError: If m is not a positive integer
    """
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise InvalidArgumentError('Number of bidders must be a positive integer')
    if dist.is_discrete:
        candidates = dist.values
    else:
        _check_eps(eps)
        q = _iid_max_quantile(dist, m, ANCHOR_LEVEL)
        if q <= 0:
            raise DegenerateInstanceError('Anchoring quantile of the maximum value is zero')
        lo, hi = truncation_interval(2.0 * q, eps)
        k_lo, k_hi = geometric_exponents(lo, hi, 1.0 + eps)
        candidates = (1.0 + eps) ** np.arange(k_lo, k_hi + 1).astype(float)
    candidates = np.asarray(candidates, dtype=float)
    below = 1.0 - np.asarray(dist.survival(candidates), dtype=float)
    scores = candidates * (1.0 - np.power(np.clip(below, 0.0, 1.0), m))
    best = float(scores.max())
    idx = int(np.argmax(scores >= best * (1.0 - 1e-12)))
    logger.debug('iid reserve over %d candidates: r=%g, guarantee=%g', len(candidates), candidates[idx], scores[idx])
    return IidReserve(reserve=float(candidates[idx]), guarantee=float(scores[idx]))
