"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Value distributions of the bidders and the auction instance built from them.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import InvalidArgumentError, MalformedInstanceError

PROB_TOLERANCE = 1e-9
MAX_SAMPLER_DRAWS = 100_000
UINT64_LIMIT = 2 ** 64

RngLike = Union[np.random.Generator, int, Sequence[int], None]


def make_rng(rng_state: RngLike) -> np.random.Generator:
    """
    Return a numpy Generator for the given state.

    A Generator is returned untouched so that callers can thread one stream
    through several draws; anything else is used as a seed.

    :param rng_state: Generator, integer seed, seed sequence or None
    :type rng_state: numpy.random.Generator or int or Sequence[int] or None
    :return: Random generator
    :rtype: numpy.random.Generator
    """
    if isinstance(rng_state, np.random.Generator):
        return rng_state
    return np.random.default_rng(rng_state)


@dataclass(frozen=True)
class MhrVerdict:
    """Result of the monotone hazard rate check."""
    is_mhr: bool
    witness: Optional[int] = None


class ValueDistribution(ABC):
    """
    Independent marginal F_ij of a single bidder-item value.

    Concrete families are immutable; samplers take their randomness from the
    generator passed in, never from a shared global state.
    """
    kind: str = ''
    is_discrete: bool = False

    @abstractmethod
    def expectation(self) -> float:
        """Exact expected value."""

    @abstractmethod
    def sample(self, rng: RngLike, size: Optional[int] = None):
        """
        Draw values from the distribution.

        :param rng: Random generator or seed
        :type rng: numpy.random.Generator or int or None
        :param size: Number of draws, a single float is returned when None
        :type size: int or None
        :return: Drawn value(s)
        :rtype: float or numpy.ndarray
        """

    @abstractmethod
    def cdf(self, x):
        """Pr[X <= x], vectorised over x."""

    @abstractmethod
    def survival(self, x):
        """Pr[X >= x], vectorised over x."""

    @abstractmethod
    def support_bounds(self) -> Tuple[float, float]:
        """Smallest and largest value of the support."""

    @abstractmethod
    def check_mhr(self) -> MhrVerdict:
        """Verdict of the monotone hazard rate predicate."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON fragment describing the distribution."""


class _AtomicDistribution(ValueDistribution):
    """Shared behaviour of distributions with finitely many atoms."""
    is_discrete = True

    @property
    @abstractmethod
    def values(self) -> np.ndarray:
        """Ascending support."""

    @property
    @abstractmethod
    def weights(self) -> np.ndarray:
        """Probabilities aligned with ``values``."""

    @cached_property
    def _cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)

    @cached_property
    def _tails(self) -> np.ndarray:
        return np.cumsum(self.weights[::-1])[::-1]

    def expectation(self) -> float:
        return math.fsum(float(v) * float(p) for v, p in zip(self.values, self.weights))

    def sample(self, rng: RngLike, size: Optional[int] = None):
        rng = make_rng(rng)
        draws = rng.random(size)
        idx = np.minimum(np.searchsorted(self._cumulative, draws, side='right'), len(self.values) - 1)
        result = self.values[idx]
        return float(result) if size is None else result

    def cdf(self, x):
        idx = np.searchsorted(self.values, x, side='right')
        padded = np.concatenate(([0.0], self._cumulative))
        return np.minimum(padded[idx], 1.0)

    def survival(self, x):
        idx = np.searchsorted(self.values, x, side='left')
        padded = np.concatenate((self._tails, [0.0]))
        return np.minimum(padded[idx], 1.0)

    def support_bounds(self) -> Tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    def hazards(self) -> np.ndarray:
        """Discrete hazard h(v_i) = p_i / sum_{j >= i} p_j."""
        return self.weights / self._tails

    def check_mhr(self) -> MhrVerdict:
        hazards = self.hazards()
        for idx in range(1, len(hazards)):
            if hazards[idx] < hazards[idx - 1] - 1e-12:
                return MhrVerdict(False, idx)
        return MhrVerdict(True)


@dataclass(frozen=True)
class DiscreteDistribution(_AtomicDistribution):
    """Finite support with explicit probabilities."""
    support: Tuple[float, ...]
    probs: Tuple[float, ...]
    kind = 'discrete'

    def __post_init__(self):
        support = tuple(float(v) for v in self.support)
        probs = tuple(float(p) for p in self.probs)
        if len(support) == 0:
            raise InvalidArgumentError('Discrete support cannot be empty')
        if len(support) != len(probs):
            raise InvalidArgumentError('Discrete support and probs must have the same length')
        if any(not math.isfinite(v) or v < 0 for v in support):
            raise InvalidArgumentError('Discrete support values must be finite and non-negative')
        if any(b <= a for a, b in zip(support, support[1:])):
            raise InvalidArgumentError('Discrete support must be strictly ascending')
        if any(not p > 0 for p in probs):
            raise InvalidArgumentError('Discrete probabilities must be positive')
        if abs(math.fsum(probs) - 1.0) > PROB_TOLERANCE:
            raise InvalidArgumentError(f'Discrete probabilities must sum to 1, got {math.fsum(probs)!r}')
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'probs', probs)

    @cached_property
    def values(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {'type': 'discrete', 'support': list(self.support), 'probs': list(self.probs)}


@dataclass(frozen=True)
class PointMass(_AtomicDistribution):
    """Degenerate distribution at a single value."""
    value: float
    kind = 'point'

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value) or value < 0:
            raise InvalidArgumentError('Point mass value must be finite and non-negative')
        object.__setattr__(self, 'value', value)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([self.value])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([1.0])

    def expectation(self) -> float:
        return self.value

    def sample(self, rng: RngLike, size: Optional[int] = None):
        if size is None:
            return self.value
        return np.full(size, self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {'type': 'point', 'value': self.value}


@dataclass(frozen=True)
class UniformDistribution(ValueDistribution):
    """Uniform distribution on the interval [lo, hi]."""
    lo: float
    hi: float
    kind = 'uniform'

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0:
            raise InvalidArgumentError('Uniform bounds must be finite and non-negative')
        if hi <= lo:
            raise InvalidArgumentError('Uniform upper bound must be greater than the lower bound')
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    def expectation(self) -> float:
        return (self.lo + self.hi) / 2.0

    def sample(self, rng: RngLike, size: Optional[int] = None):
        result = make_rng(rng).uniform(self.lo, self.hi, size)
        return float(result) if size is None else result

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def survival(self, x):
        return 1.0 - self.cdf(x)

    def support_bounds(self) -> Tuple[float, float]:
        return self.lo, self.hi

    def check_mhr(self) -> MhrVerdict:
        # hazard 1 / (hi - x) is increasing on [lo, hi)
        return MhrVerdict(True)

    def to_dict(self) -> Dict[str, Any]:
        return {'type': 'uniform', 'lo': self.lo, 'hi': self.hi}


@dataclass(frozen=True)
class ExponentialDistribution(ValueDistribution):
    """Exponential distribution with the given rate."""
    rate: float
    kind = 'exponential'

    def __post_init__(self):
        rate = float(self.rate)
        if not math.isfinite(rate) or rate <= 0:
            raise InvalidArgumentError('Exponential rate must be positive')
        object.__setattr__(self, 'rate', rate)

    def expectation(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng: RngLike, size: Optional[int] = None):
        result = make_rng(rng).exponential(1.0 / self.rate, size)
        return float(result) if size is None else result

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def survival(self, x):
        return 1.0 - self.cdf(x)

    def support_bounds(self) -> Tuple[float, float]:
        return 0.0, math.inf

    def check_mhr(self) -> MhrVerdict:
        return MhrVerdict(True)

    def to_dict(self) -> Dict[str, Any]:
        return {'type': 'exponential', 'rate': self.rate}


@dataclass(frozen=True)
class MaxOfDistributions(ValueDistribution):
    """
    Sampler for max_i X_i of independent, not all discrete, marginals.

    CDF and survival are exact products of the component closed forms. The
    expectation has no closed form and is a fixed-seed Monte Carlo estimate
    over ``MAX_SAMPLER_DRAWS`` draws.
    """
    components: Tuple[ValueDistribution, ...]
    kind = 'max'

    def expectation(self) -> float:
        return float(np.mean(self.sample(0, MAX_SAMPLER_DRAWS)))

    def sample(self, rng: RngLike, size: Optional[int] = None):
        rng = make_rng(rng)
        count = 1 if size is None else size
        draws = np.max(np.stack([dist.sample(rng, count) for dist in self.components]), axis=0)
        return float(draws[0]) if size is None else draws

    def cdf(self, x):
        result = np.ones_like(np.asarray(x, dtype=float))
        for dist in self.components:
            result = result * dist.cdf(x)
        return result

    def survival(self, x):
        below = np.ones_like(np.asarray(x, dtype=float))
        for dist in self.components:
            below = below * (1.0 - dist.survival(x))
        return 1.0 - below

    def support_bounds(self) -> Tuple[float, float]:
        bounds = [dist.support_bounds() for dist in self.components]
        return max(lo for lo, _ in bounds), max(hi for _, hi in bounds)

    def check_mhr(self) -> MhrVerdict:
        # the max of independent MHR variables is MHR
        verdicts = [dist.check_mhr().is_mhr for dist in self.components]
        return MhrVerdict(all(verdicts))

    def to_dict(self) -> Dict[str, Any]:
        return {'type': 'max', 'of': [dist.to_dict() for dist in self.components]}


def expectation(dist: ValueDistribution) -> float:
    """
    Expected value of a distribution, in closed form for every family.

    :param dist: Distribution
    :type dist: ValueDistribution
    :return: E[X]
    :rtype: float
    """
    return dist.expectation()


def sample(dist: ValueDistribution, rng: RngLike, size: Optional[int] = None):
    """
    Draw from a distribution; identical generator state gives identical draws.

    :param dist: Distribution
    :type dist: ValueDistribution
    :param rng: Random generator or seed
    :type rng: numpy.random.Generator or int or None
    :param size: Number of draws (single float when None)
    :type size: int or None
    :return: Drawn value(s)
    :rtype: float or numpy.ndarray
    """
    return dist.sample(rng, size)


def check_mhr(dist: ValueDistribution) -> MhrVerdict:
    """
    Monotone hazard rate verdict.

    Continuous families are decided in closed form; discrete ones on the
    discrete hazard p_i / sum_{j >= i} p_j, with the first violating index
    as witness.

    :param dist: Distribution
    :type dist: ValueDistribution
    :return: Verdict and optional witness index
    :rtype: MhrVerdict
    """
    return dist.check_mhr()


def check_bounded_ratio(dist: ValueDistribution, ratio: float) -> bool:
    """
    Check that the support lies in an interval [a, b] with 0 < a and b <= ratio * a.

    This is the alternative to MHR used for explicitly given discrete priors.

    :param dist: Distribution
    :type dist: ValueDistribution
    :param ratio: Allowed multiplicative spread C >= 1
    :type ratio: float
    :return: True if the support spread is within the ratio
    :rtype: bool
    """
    if ratio < 1:
        raise InvalidArgumentError('Bounded ratio must be at least 1')
    lo, hi = dist.support_bounds()
    return lo > 0 and math.isfinite(hi) and hi <= ratio * lo * (1 + 1e-12)


def max_distribution(dists: Sequence[ValueDistribution]) -> ValueDistribution:
    """
    Distribution of max_i X_i for independent X_i.

    All-discrete inputs give the exact law via the product of CDFs on the
    merged support; otherwise a sampler drawing every coordinate is returned.

    :param dists: Independent marginals
    :type dists: Sequence[ValueDistribution]
    :return: Distribution of the maximum
    :rtype: ValueDistribution
    """
    dists = list(dists)
    if not dists:
        raise InvalidArgumentError('max_distribution needs at least one distribution')
    if len(dists) == 1:
        return dists[0]
    if not all(dist.is_discrete for dist in dists):
        return MaxOfDistributions(tuple(dists))
    merged = np.unique(np.concatenate([dist.values for dist in dists]))
    cdf = np.ones_like(merged)
    for dist in dists:
        cdf = cdf * dist.cdf(merged)
    probs = np.diff(np.concatenate(([0.0], cdf)))
    return _atoms_to_distribution(merged, probs)


def _atoms_to_distribution(values: np.ndarray, probs: np.ndarray) -> _AtomicDistribution:
    """Build the smallest atomic distribution from (possibly repeated) atoms."""
    values, inverse = np.unique(np.asarray(values, dtype=float), return_inverse=True)
    probs = np.bincount(inverse, weights=np.asarray(probs, dtype=float), minlength=len(values))
    keep = probs > 1e-15
    values, probs = values[keep], probs[keep]
    probs = probs / probs.sum()
    if len(values) == 1:
        return PointMass(float(values[0]))
    return DiscreteDistribution(tuple(values.tolist()), tuple(probs.tolist()))


def geometric_exponents(lo: float, hi: float, ratio: float) -> Tuple[int, int]:
    """
    Exponent range of the powers of ``ratio`` covering [lo, hi], lower end snapped down.

    :return: (k_lo, k_hi) with ratio**k_lo <= lo and ratio**k_hi <= hi < ratio**(k_hi + 1)
    :rtype: tuple[int, int]
    """
    log_ratio = math.log(ratio)
    return (math.floor(math.log(lo) / log_ratio + 1e-9),
            math.floor(math.log(hi) / log_ratio + 1e-9))


def coarsen(dist: ValueDistribution, eps: float, interval: Sequence[float]) -> _AtomicDistribution:
    """
    Round a distribution onto {0} and the powers of (1 + eps) covering the interval.

    Mass below ``lo`` moves to 0, mass above ``hi`` is clamped to ``hi``, and
    every surviving value is rounded down to the closest grid power, so that
    v' <= v <= v' (1 + eps). Continuous families are coarsened from their
    exact CDF at the grid boundaries.

    :param dist: Distribution to coarsen
    :type dist: ValueDistribution
    :param eps: Grid step, 0 < eps < 1
    :type eps: float
    :param interval: Truncation interval [lo, hi] with 0 < lo < hi
    :type interval: Sequence[float]
    :return: Discrete coarsened distribution
    :rtype: DiscreteDistribution or PointMass
    :raises InvalidArgumentError: If eps or the interval are invalid
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError('Coarsening eps must be in (0, 1)')
    lo, hi = float(interval[0]), float(interval[1])
    if not 0 < lo < hi:
        raise InvalidArgumentError(f'Coarsening interval must satisfy 0 < lo < hi, got [{lo}, {hi}]')
    ratio = 1.0 + eps
    k_lo, k_hi = geometric_exponents(lo, hi, ratio)
    exponents = np.arange(k_lo, k_hi + 1)
    grid = ratio ** exponents.astype(float)

    if dist.is_discrete:
        values = dist.values
        clamped = np.minimum(values, hi)
        safe = np.where(values >= lo, clamped, 1.0)
        k = np.floor(np.log(safe) / math.log(ratio) + 1e-9).astype(int)
        k = np.clip(k, k_lo, k_hi)
        images = np.where(values >= lo, ratio ** k.astype(float), 0.0)
        return _atoms_to_distribution(images, dist.weights)

    lower = np.concatenate(([lo], grid[1:]))
    upper = np.concatenate((grid[1:], [math.inf]))
    masses = np.asarray(dist.cdf(upper), dtype=float) - np.asarray(dist.cdf(lower), dtype=float)
    below = float(dist.cdf(lo))
    return _atoms_to_distribution(np.concatenate(([0.0], grid)), np.concatenate(([below], masses)))


def floor_to_multiple(dist: ValueDistribution, step: float) -> _AtomicDistribution:
    """
    Round every atom of a discrete distribution down to a multiple of ``step``.

    :param dist: Discrete distribution
    :type dist: ValueDistribution
    :param step: Rounding step, positive
    :type step: float
    :return: Rounded distribution, atoms k * step
    :rtype: DiscreteDistribution or PointMass
    :raises InvalidArgumentError: If the distribution is not discrete or the step is not positive
    """
    if not dist.is_discrete:
        raise InvalidArgumentError('Only discrete distributions can be floored to a grid')
    if not step > 0:
        raise InvalidArgumentError(f'Rounding step must be positive, got {step!r}')
    return _atoms_to_distribution(np.floor(dist.values / step + 1e-9) * step, dist.weights)


_DISTRIBUTION_KEYS = {
    'discrete': ('support', 'probs'),
    'uniform': ('lo', 'hi'),
    'exponential': ('rate',),
    'point': ('value',),
    'max': ('of',),
}


def distribution_from_dict(data: Any, path: str = 'distribution') -> ValueDistribution:
    """
    Parse a distribution JSON fragment.

    :param data: Parsed JSON fragment
    :type data: Any
    :param path: Field path used in error messages
    :type path: str
    :return: Distribution
    :rtype: ValueDistribution
    :raises MalformedInstanceError: If the fragment is not a valid distribution
    """
    if not isinstance(data, dict):
        raise MalformedInstanceError(path, 'distribution must be an object')
    kind = data.get('type')
    if kind not in _DISTRIBUTION_KEYS:
        raise MalformedInstanceError(f'{path}.type', f'unknown distribution type {kind!r}')
    for key in _DISTRIBUTION_KEYS[kind]:
        if key not in data:
            raise MalformedInstanceError(f'{path}.{key}', 'missing')
    try:
        if kind == 'discrete':
            return DiscreteDistribution(tuple(data['support']), tuple(data['probs']))
        if kind == 'uniform':
            return UniformDistribution(data['lo'], data['hi'])
        if kind == 'exponential':
            return ExponentialDistribution(data['rate'])
        if kind == 'point':
            return PointMass(data['value'])
        return MaxOfDistributions(tuple(
            distribution_from_dict(part, f'{path}.of[{idx}]') for idx, part in enumerate(data['of'])
        ))
    except MalformedInstanceError:
        raise
    except (TypeError, ValueError) as e:
        raise MalformedInstanceError(path, str(e)) from e


Column = Union[ValueDistribution, Tuple[ValueDistribution, ...]]


@dataclass(frozen=True)
class AuctionInstance:
    """
    The m x n matrix of independent marginals with the accuracy parameters.

    In population mode every column is a single distribution F_j shared by
    all bidders; otherwise every column holds one distribution per bidder.
    """
    num_bidders: int
    items: Tuple[Column, ...]
    population: bool = False
    epsilon: float = 0.1
    delta: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.num_bidders, bool) or not isinstance(self.num_bidders, int) or self.num_bidders < 1:
            raise InvalidArgumentError('Number of bidders must be a positive integer')
        items = tuple(col if isinstance(col, ValueDistribution) else tuple(col) for col in self.items)
        if len(items) == 0:
            raise InvalidArgumentError('Instance must have at least one item')
        for idx, col in enumerate(items):
            if self.population:
                if not isinstance(col, ValueDistribution):
                    raise InvalidArgumentError(f'Item {idx} must be a single distribution in population mode')
            elif isinstance(col, ValueDistribution) or len(col) != self.num_bidders:
                raise InvalidArgumentError(f'Item {idx} must list exactly {self.num_bidders} distributions')
            elif not all(isinstance(dist, ValueDistribution) for dist in col):
                raise InvalidArgumentError(f'Item {idx} holds a non-distribution entry')
        check_accuracy(self.epsilon, self.delta)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < UINT64_LIMIT:
            raise InvalidArgumentError('Seed must be an unsigned 64-bit integer')
        object.__setattr__(self, 'items', items)
        object.__setattr__(self, 'epsilon', float(self.epsilon))
        object.__setattr__(self, 'delta', float(self.delta))

    @property
    def num_items(self) -> int:
        """Number of items n."""
        return len(self.items)

    def column(self, item: int) -> Tuple[ValueDistribution, ...]:
        """Per-bidder marginals of one item."""
        col = self.items[item]
        if isinstance(col, ValueDistribution):
            return (col,) * self.num_bidders
        return col

    def marginal(self, bidder: int, item: int) -> ValueDistribution:
        """Marginal F_ij."""
        return self.column(item)[bidder]

    @property
    def columns(self) -> List[Tuple[ValueDistribution, ...]]:
        """All columns expanded to one distribution per bidder."""
        return self.columns_for_items(range(self.num_items))

    def columns_for_items(self, items: Sequence[int]) -> List[Tuple[ValueDistribution, ...]]:
        """Expanded columns of the given items."""
        return [self.column(j) for j in items]

    @property
    def all_discrete(self) -> bool:
        """True if every marginal has finite support."""
        return all(dist.is_discrete for col in self.columns for dist in col)

    def sub_instance(self, items: Sequence[int]) -> 'AuctionInstance':
        """
        Instance restricted to the given items, in the given order.

        :param items: Item indices
        :type items: Sequence[int]
        :return: Restricted instance
        :rtype: AuctionInstance
        """
        return AuctionInstance(
            num_bidders=self.num_bidders,
            items=tuple(self.items[j] for j in items),
            population=self.population,
            epsilon=self.epsilon,
            delta=self.delta,
            seed=self.seed,
        )

    def sample_profiles(self, rng: RngLike, count: int) -> np.ndarray:
        """
        Draw ``count`` valuation profiles.

        :param rng: Random generator or seed
        :type rng: numpy.random.Generator or int or None
        :param count: Number of profiles
        :type count: int
        :return: Array of shape (count, m, n)
        :rtype: numpy.ndarray
        """
        rng = make_rng(rng)
        profiles = np.empty((count, self.num_bidders, self.num_items))
        for j, col in enumerate(self.items):
            if isinstance(col, ValueDistribution):
                profiles[:, :, j] = np.asarray(col.sample(rng, count * self.num_bidders)).reshape(count, self.num_bidders)
            else:
                for i, dist in enumerate(col):
                    profiles[:, i, j] = dist.sample(rng, count)
        return profiles

    def to_dict(self) -> Dict[str, Any]:
        """JSON document describing the instance."""
        items = []
        for col in self.items:
            if isinstance(col, ValueDistribution):
                items.append(col.to_dict())
            else:
                items.append([dist.to_dict() for dist in col])
        return {
            'bidders': self.num_bidders,
            'population': self.population,
            'epsilon': self.epsilon,
            'delta': self.delta,
            'seed': self.seed,
            'items': items,
        }

    @staticmethod
    def from_dict(data: Any) -> 'AuctionInstance':
        """
        Parse an instance document.

        :param data: Parsed JSON document
        :type data: Any
        :return: Instance
        :rtype: AuctionInstance
        :raises MalformedInstanceError: If a field is missing or invalid
        """
        if not isinstance(data, dict):
            raise MalformedInstanceError('instance', 'document must be an object')
        for key, val_type in (('bidders', int), ('items', list)):
            if key not in data:
                raise MalformedInstanceError(key, 'missing')
            if not isinstance(data[key], val_type) or isinstance(data[key], bool):
                raise MalformedInstanceError(key, f'must be of type {val_type.__name__}')
        population = data.get('population', False)
        if not isinstance(population, bool):
            raise MalformedInstanceError('population', 'must be of type bool')
        for key in ('epsilon', 'delta'):
            if key in data and (isinstance(data[key], bool) or not isinstance(data[key], (int, float))):
                raise MalformedInstanceError(key, 'must be a number')
        items: List[Column] = []
        for j, col in enumerate(data['items']):
            if population:
                items.append(distribution_from_dict(col, f'items[{j}]'))
            elif isinstance(col, list):
                items.append(tuple(distribution_from_dict(part, f'items[{j}][{i}]') for i, part in enumerate(col)))
            else:
                raise MalformedInstanceError(f'items[{j}]', 'must be a list of per-bidder distributions')
        try:
            return AuctionInstance(
                num_bidders=data['bidders'],
                items=tuple(items),
                population=population,
                epsilon=data.get('epsilon', 0.1),
                delta=data.get('delta', 0.05),
                seed=data.get('seed', 0),
            )
        except InvalidArgumentError as e:
            raise MalformedInstanceError('instance', str(e)) from e


def check_accuracy(epsilon: float, delta: float):
    """
    Validate the accuracy parameters.

    :param epsilon: Accuracy, must lie in (0, 1/4)
    :type epsilon: float
    :param delta: Failure probability, must lie in (0, 1/8)
    :type delta: float
    :raises InvalidArgumentError: If either parameter is out of range
    """
    if not 0 < epsilon < 0.25:
        raise InvalidArgumentError(f'epsilon must be in (0, 1/4), got {epsilon!r}')
    if not 0 < delta < 0.125:
        raise InvalidArgumentError(f'delta must be in (0, 1/8), got {delta!r}')
