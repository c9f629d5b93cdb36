"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Executable auction mechanisms, their combinators and the metadata registry.
"""

import itertools
import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from .distributions import AuctionInstance
from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

EXACT_CONCEPTS = ('DT', 'IC', 'BIC')
SOLUTION_CONCEPTS = EXACT_CONCEPTS + tuple(f'eps-{concept}' for concept in EXACT_CONCEPTS)
TIE_TOLERANCE = 1e-12

MECHANISMS: Dict[str, Type['Mechanism']] = {}


def register(cls: Type['Mechanism']) -> Type['Mechanism']:
    """Class decorator adding a mechanism to the metadata registry."""
    MECHANISMS[cls.name] = cls
    return cls


def weakest_concept(*concepts: str) -> str:
    """
    Weakest solution concept among the given ones.

    DT is stronger than IC which is stronger than BIC; any approximate
    component makes the result approximate.
    """
    if not concepts:
        return 'DT'
    base = max(EXACT_CONCEPTS.index(concept.removeprefix('eps-')) for concept in concepts)
    approximate = any(concept.startswith('eps-') for concept in concepts)
    return ('eps-' if approximate else '') + EXACT_CONCEPTS[base]


def as_bid_batch(bids: Any) -> np.ndarray:
    """
    Validate bids and return them as a float array of shape (B, m, n).

    :param bids: Bid matrix (m, n) or batch (B, m, n)
    :type bids: array_like
    :return: Batch of bid matrices
    :rtype: numpy.ndarray
    :raises InvalidArgumentError: On wrong shape, negative or non-finite bids
    """
    bids = np.asarray(bids, dtype=float)
    if bids.ndim == 2:
        bids = bids[np.newaxis]
    if bids.ndim != 3:
        raise InvalidArgumentError(f'Bids must have shape (m, n) or (B, m, n), got {bids.shape}')
    if not np.all(np.isfinite(bids)) or np.any(bids < 0):
        raise InvalidArgumentError('Bids must be finite and non-negative')
    return bids


@dataclass
class Outcome:
    """
    Allocation x_ij and payments p_i, optionally over a leading batch axis.

    Fractional allocations of randomized mechanisms are allocation
    probabilities.
    """
    alloc: np.ndarray
    payments: np.ndarray
    completions: Optional[np.ndarray] = None

    @property
    def revenue(self):
        """Sum of payments per profile."""
        return self.payments.sum(axis=-1)

    def utilities(self, values: np.ndarray) -> np.ndarray:
        """Quasi-linear utilities v_i . x_i - p_i under the given values."""
        return (self.alloc * values).sum(axis=-1) - self.payments

    def __getitem__(self, idx) -> 'Outcome':
        completions = None if self.completions is None else self.completions[idx]
        return Outcome(self.alloc[idx], self.payments[idx], completions)


def empty_outcome(num_profiles: int, num_bidders: int, num_items: int) -> Outcome:
    """Outcome allocating nothing and charging nothing."""
    return Outcome(np.zeros((num_profiles, num_bidders, num_items)), np.zeros((num_profiles, num_bidders)))


class Mechanism(ABC):
    """
    Allocation and payment rule over bid profiles.

    :param concept: Claimed solution concept
    :type concept: str
    :param claims_ir: Whether the mechanism claims individual rationality
    :type claims_ir: bool
    :param regret_allowance: Largest truthfulness regret the claim tolerates
    :type regret_allowance: float
    :param seed: Internal seed of randomized mechanisms
    :type seed: int or None
    """
    name: str = ''
    deterministic: bool = True

    def __init__(self, concept: str = 'DT', claims_ir: bool = True, regret_allowance: float = 0.0,
                 seed: Optional[int] = None):
        if concept not in SOLUTION_CONCEPTS:
            raise InvalidArgumentError(f'Unknown solution concept {concept!r}')
        self.concept = concept
        self.claims_ir = claims_ir
        self.regret_allowance = float(regret_allowance)
        self.seed = seed

    @abstractmethod
    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        """
        Run the mechanism on a batch of bid profiles.

        :param bids: Bids of shape (B, m, n)
        :type bids: numpy.ndarray
        :param rng: Generator for the internal randomness, if any
        :type rng: numpy.random.Generator or None
        :return: Batched outcome
        :rtype: Outcome
        """

    @property
    @abstractmethod
    def parameters(self) -> Dict[str, Any]:
        """JSON-serializable parameters sufficient to rebuild the mechanism."""

    @classmethod
    @abstractmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'Mechanism':
        """Rebuild the mechanism from its parameters."""

    def run(self, bids: Any, rng: Optional[np.random.Generator] = None) -> Outcome:
        """
        Run the mechanism on a single bid profile.

        :param bids: Bid matrix b_ij of shape (m, n)
        :type bids: array_like
        :param rng: Generator for the internal randomness, if any
        :type rng: numpy.random.Generator or None
        :return: Outcome of the profile
        :rtype: Outcome
        """
        bids = np.asarray(bids, dtype=float)
        if bids.ndim != 2:
            raise InvalidArgumentError(f'Bid profile must be an m x n matrix, got shape {bids.shape}')
        return self.run_batch(as_bid_batch(bids), rng)[0]

    def metadata(self) -> Dict[str, Any]:
        """Replayable description of the mechanism."""
        return {
            'name': self.name,
            'solutionConcept': self.concept,
            'claimsIR': self.claims_ir,
            'regretAllowance': self.regret_allowance,
            'seed': self.seed,
            'parameters': self.parameters,
        }

    def __repr__(self) -> str:
        return f'{type(self).__name__}({self.parameters!r})'


def mechanism_from_metadata(metadata: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> Mechanism:
    """
    Rebuild a mechanism from the metadata written by ``Mechanism.metadata``.

    :param metadata: Mechanism metadata
    :type metadata: dict
    :param instance: Instance, needed by mechanisms that sample from priors
    :type instance: AuctionInstance or None
    :return: Mechanism
    :rtype: Mechanism
    :raises InvalidArgumentError: If the metadata names an unknown mechanism or lacks a key
    """
    if not isinstance(metadata, dict):
        raise InvalidArgumentError('Mechanism metadata must be an object')
    for key in ('name', 'parameters'):
        if key not in metadata:
            raise InvalidArgumentError(f'Mechanism metadata must have "{key}" key')
    cls = MECHANISMS.get(metadata['name'])
    if cls is None:
        raise InvalidArgumentError(f'Unknown mechanism {metadata["name"]!r}')
    logger.debug('Rebuilding %s mechanism from metadata', metadata['name'])
    try:
        return cls.from_parameters(metadata['parameters'], instance)
    except (KeyError, TypeError) as e:
        raise InvalidArgumentError(f'Invalid parameters for mechanism {metadata["name"]!r}: {e}') from e


def _check_price(value: float, label: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise InvalidArgumentError(f'{label} must be finite and non-negative, got {value!r}')
    return value


@register
class GrandBundle(Mechanism):
    """
    Single-bidder take-it-or-leave-it offer of all items at one price.

    :param reserve: Bundle price
    :type reserve: float
    """
    name = 'grand_bundle'

    def __init__(self, reserve: float):
        super().__init__(concept='DT', claims_ir=True)
        self.reserve = _check_price(reserve, 'Reserve')

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        if bids.shape[1] != 1:
            raise InvalidArgumentError('Grand bundle auction needs exactly one bidder')
        buys = bids.sum(axis=-1)[:, 0] >= self.reserve
        alloc = np.broadcast_to(buys[:, None, None], bids.shape).astype(float)
        payments = np.where(buys, self.reserve, 0.0)[:, None]
        return Outcome(alloc, payments)

    @property
    def parameters(self) -> Dict[str, Any]:
        return {'reserve': self.reserve}

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'GrandBundle':
        return cls(parameters['reserve'])


def grand_bundle(reserve: float) -> GrandBundle:
    """Grand bundle auction with the given reserve."""
    return GrandBundle(reserve)


def _winners(bids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Highest bidder per item (lowest index on ties) and the highest bid."""
    winners = np.argmax(bids, axis=1)
    return winners, np.take_along_axis(bids, winners[:, None, :], axis=1)[:, 0, :]


def _allocation(winners: np.ndarray, sold: np.ndarray, num_bidders: int) -> np.ndarray:
    """Integral allocation from per-item winners and per-item sale flags."""
    bidders = np.arange(num_bidders)[None, :, None]
    return ((winners[:, None, :] == bidders) & sold[:, None, :]).astype(float)


@register
class ReserveWelfare(Mechanism):
    """
    Welfare-maximising allocation gated by a reserve on the reported welfare.

    When the reported welfare W = sum_j max_i b_ij reaches s_hat, every item
    goes to its highest bidder and bidder i pays s_hat - (W - own_i), where
    own_i is the bid of i on the items it receives. Bidders without items
    are then paid W - s_hat.

    :param s_hat: Reserve welfare
    :type s_hat: float
    """
    name = 'reserve_welfare'

    def __init__(self, s_hat: float):
        super().__init__(concept='DT', claims_ir=True)
        self.s_hat = _check_price(s_hat, 'Reserve welfare')

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        winners, top = _winners(bids)
        welfare = top.sum(axis=-1)
        sells = welfare >= self.s_hat
        alloc = _allocation(winners, np.broadcast_to(sells[:, None], top.shape), bids.shape[1])
        own = (alloc * bids).sum(axis=-1)
        payments = np.where(sells[:, None], self.s_hat - welfare[:, None] + own, 0.0)
        return Outcome(alloc, payments)

    @property
    def parameters(self) -> Dict[str, Any]:
        return {'sHat': self.s_hat}

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'ReserveWelfare':
        return cls(parameters['sHat'])


def reserve_welfare(s_hat: float) -> ReserveWelfare:
    """Reserve-welfare mechanism with reserve ``s_hat``."""
    return ReserveWelfare(s_hat)


@register
class SecondPriceReserve(Mechanism):
    """
    Independent second-price auction with a reserve on every item.

    :param reserves: Reserve price r_j of every item
    :type reserves: Sequence[float]
    """
    name = 'second_price_reserve'

    def __init__(self, reserves: Sequence[float]):
        super().__init__(concept='DT', claims_ir=True)
        self.reserves = np.array([_check_price(r, 'Reserve') for r in reserves])
        if len(self.reserves) == 0:
            raise InvalidArgumentError('At least one reserve price is required')

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        if bids.shape[2] != len(self.reserves):
            raise InvalidArgumentError(f'Expected bids on {len(self.reserves)} items, got {bids.shape[2]}')
        winners, top = _winners(bids)
        second = np.sort(bids, axis=1)[:, -2, :] if bids.shape[1] > 1 else np.zeros_like(top)
        sold = top >= self.reserves
        alloc = _allocation(winners, sold, bids.shape[1])
        prices = np.maximum(self.reserves, second)
        return Outcome(alloc, (alloc * prices[:, None, :]).sum(axis=-1))

    @property
    def parameters(self) -> Dict[str, Any]:
        return {'reserves': self.reserves.tolist()}

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'SecondPriceReserve':
        return cls(parameters['reserves'])


def second_price_reserve(reserves: Sequence[float]) -> SecondPriceReserve:
    """Per-item second price auction with the given reserves."""
    return SecondPriceReserve(reserves)


@register
class CombinedMechanism(Mechanism):
    """
    Runs sub-mechanisms on disjoint item blocks and merges their outcomes.

    Items of no block are never allocated; payments of the blocks add up.

    :param blocks: Pairs (mechanism, item indices)
    :type blocks: Sequence[tuple[Mechanism, Sequence[int]]]
    :param ignored: Items that are never allocated
    :type ignored: Sequence[int]
    """
    name = 'combined'

    def __init__(self, blocks: Sequence[Tuple[Mechanism, Sequence[int]]], ignored: Sequence[int] = ()):
        self.blocks = [(mech, tuple(int(j) for j in items)) for mech, items in blocks if len(items) > 0]
        self.ignored = tuple(int(j) for j in ignored)
        indices = [j for _, items in self.blocks for j in items] + list(self.ignored)
        if len(set(indices)) != len(indices):
            raise InvalidArgumentError('Item sets of combined mechanisms must not overlap')
        if sorted(indices) != list(range(len(indices))):
            raise InvalidArgumentError('Item sets of combined mechanisms must cover items 0..n-1')
        self.num_items = len(indices)
        mechanisms = [mech for mech, _ in self.blocks]
        super().__init__(
            concept=weakest_concept(*(mech.concept for mech in mechanisms)),
            claims_ir=all(mech.claims_ir for mech in mechanisms),
            regret_allowance=sum(mech.regret_allowance for mech in mechanisms),
        )
        self.deterministic = all(mech.deterministic for mech in mechanisms)

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        if bids.shape[2] != self.num_items:
            raise InvalidArgumentError(f'Expected bids on {self.num_items} items, got {bids.shape[2]}')
        result = empty_outcome(*bids.shape)
        for mech, items in self.blocks:
            outcome = mech.run_batch(bids[:, :, items], rng)
            result.alloc[:, :, items] = outcome.alloc
            result.payments += outcome.payments
        return result

    @property
    def parameters(self) -> Dict[str, Any]:
        return {
            'blocks': [{'items': list(items), 'mechanism': mech.metadata()} for mech, items in self.blocks],
            'ignored': list(self.ignored),
        }

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'CombinedMechanism':
        blocks = []
        for block in parameters['blocks']:
            sub_instance = instance.sub_instance(block['items']) if instance is not None else None
            blocks.append((mechanism_from_metadata(block['mechanism'], sub_instance), block['items']))
        return cls(blocks, parameters['ignored'])


def combine(first: Optional[Mechanism], first_items: Sequence[int], second: Optional[Mechanism],
            second_items: Sequence[int], ignored: Sequence[int] = ()) -> CombinedMechanism:
    """
    Combine two mechanisms on disjoint item sets, never allocating ``ignored``.

    :param first: Mechanism run on ``first_items`` (may be None when the set is empty)
    :type first: Mechanism or None
    :param first_items: Items of the first block
    :type first_items: Sequence[int]
    :param second: Mechanism run on ``second_items`` (may be None when the set is empty)
    :type second: Mechanism or None
    :param second_items: Items of the second block
    :type second_items: Sequence[int]
    :param ignored: Items never allocated
    :type ignored: Sequence[int]
    :return: Combined mechanism
    :rtype: CombinedMechanism
    :raises InvalidArgumentError: If the item sets overlap or do not cover 0..n-1
    """
    blocks = []
    for mech, items in ((first, first_items), (second, second_items)):
        if len(items) == 0:
            continue
        if mech is None:
            raise InvalidArgumentError('A non-empty item block needs a mechanism')
        blocks.append((mech, items))
    return CombinedMechanism(blocks, ignored)


@register
class RestrictedMechanism(Mechanism):
    """
    Mechanism on an item subset built from a mechanism on all items.

    Bids outside the subset are completed with draws from the priors, the
    base mechanism runs on the completed profile, only subset items are
    handed out and every bidder is rebated the sampled value of the outside
    items it won. Without an explicit generator, invocation k draws from the
    stream (seed, k).

    :param base: Mechanism on all items of ``instance``
    :type base: Mechanism
    :param subset: Items kept
    :type subset: Sequence[int]
    :param instance: Instance providing the priors of the outside items
    :type instance: AuctionInstance
    :param seed: Seed of the completion streams
    :type seed: int
    """
    name = 'restricted'
    deterministic = False

    def __init__(self, base: Mechanism, subset: Sequence[int], instance: AuctionInstance, seed: int = 0):
        super().__init__(concept=base.concept, claims_ir=base.claims_ir,
                         regret_allowance=base.regret_allowance, seed=seed)
        self.base = base
        self.subset = tuple(int(j) for j in subset)
        if len(set(self.subset)) != len(self.subset) or any(not 0 <= j < instance.num_items for j in self.subset):
            raise InvalidArgumentError('Subset must hold distinct item indices of the instance')
        self.instance = instance
        self.outside = tuple(j for j in range(instance.num_items) if j not in set(self.subset))
        self._outside_instance = instance.sub_instance(self.outside) if self.outside else None
        self._calls = itertools.count()
        self._lock = threading.Lock()

    def _next_rng(self) -> np.random.Generator:
        with self._lock:
            call = next(self._calls)
        return np.random.default_rng([self.seed, call])

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        count, num_bidders, _ = bids.shape
        if bids.shape[2] != len(self.subset):
            raise InvalidArgumentError(f'Expected bids on {len(self.subset)} items, got {bids.shape[2]}')
        if self._outside_instance is None:
            return self.base.run_batch(bids, rng)
        rng = rng if rng is not None else self._next_rng()
        completions = self._outside_instance.sample_profiles(rng, count)
        full = np.empty((count, num_bidders, self.instance.num_items))
        full[:, :, self.subset] = bids
        full[:, :, self.outside] = completions
        outcome = self.base.run_batch(full, rng)
        rebate = (outcome.alloc[:, :, self.outside] * completions).sum(axis=-1)
        return Outcome(outcome.alloc[:, :, self.subset], outcome.payments - rebate, completions)

    @property
    def parameters(self) -> Dict[str, Any]:
        return {
            'base': self.base.metadata(),
            'subset': list(self.subset),
            'baseInstance': self.instance.to_dict(),
            'completionSeed': self.seed,
        }

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'RestrictedMechanism':
        base_instance = AuctionInstance.from_dict(parameters['baseInstance'])
        base = mechanism_from_metadata(parameters['base'], base_instance)
        return cls(base, parameters['subset'], base_instance, parameters['completionSeed'])


def restrict_to_subset(base: Mechanism, subset: Sequence[int], instance: AuctionInstance,
                       seed: int = 0) -> RestrictedMechanism:
    """
    Turn a mechanism on all items into one on ``subset``.

    :param base: Mechanism on all items of ``instance``
    :type base: Mechanism
    :param subset: Items kept
    :type subset: Sequence[int]
    :param instance: Instance providing the priors
    :type instance: AuctionInstance
    :param seed: Seed of the completion streams
    :type seed: int
    :return: Restricted mechanism
    :rtype: RestrictedMechanism
    """
    return RestrictedMechanism(base, subset, instance, seed)


@register
class LookupMechanism(Mechanism):
    """
    Allocation and payment tables over a finite type space.

    Every bid b_ij is first floored to a multiple of ``quantum`` (when set)
    and then rounded down onto the type support of bidder i on item j; bids
    below the lowest type are treated as the lowest type.

    :param supports: supports[i][j] is the ascending type support of bidder i on item j
    :type supports: Sequence[Sequence[Sequence[float]]]
    :param alloc: Allocation table of shape (profiles, m, n)
    :type alloc: array_like
    :param payments: Payment table of shape (profiles, m)
    :type payments: array_like
    """
    name = 'lookup'

    def __init__(self, supports: Sequence[Sequence[Sequence[float]]], alloc: Any, payments: Any,
                 concept: str = 'IC', regret_allowance: float = 1e-6, quantum: Optional[float] = None,
                 objective: Optional[float] = None):
        super().__init__(concept=concept, claims_ir=True, regret_allowance=regret_allowance)
        self.supports = [[np.asarray(values, dtype=float) for values in bidder] for bidder in supports]
        self.alloc = np.asarray(alloc, dtype=float)
        self.payments_table = np.asarray(payments, dtype=float)
        self.quantum = quantum
        self.objective = objective
        self.type_counts = [int(np.prod([len(values) for values in bidder])) for bidder in self.supports]
        num_profiles = int(np.prod(self.type_counts))
        num_bidders, num_items = len(self.supports), len(self.supports[0])
        if self.alloc.shape != (num_profiles, num_bidders, num_items):
            raise InvalidArgumentError(f'Allocation table must have shape {(num_profiles, num_bidders, num_items)}')
        if self.payments_table.shape != (num_profiles, num_bidders):
            raise InvalidArgumentError(f'Payment table must have shape {(num_profiles, num_bidders)}')
        self.deterministic = bool(np.all(np.isclose(self.alloc, np.round(self.alloc))))

    def type_index(self, bids: np.ndarray) -> np.ndarray:
        """Profile index of every bid matrix in the batch."""
        if self.quantum:
            bids = np.floor(bids / self.quantum + 1e-9) * self.quantum
        profile = np.zeros(bids.shape[0], dtype=np.int64)
        for i, bidder in enumerate(self.supports):
            for j, values in enumerate(bidder):
                idx = np.searchsorted(values, bids[:, i, j] + 1e-9, side='right') - 1
                profile = profile * len(values) + np.clip(idx, 0, len(values) - 1)
        return profile

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        if bids.shape[1:] != self.alloc.shape[1:]:
            raise InvalidArgumentError(f'Expected bids of shape {self.alloc.shape[1:]}, got {bids.shape[1:]}')
        idx = self.type_index(bids)
        return Outcome(self.alloc[idx].copy(), self.payments_table[idx].copy())

    @property
    def parameters(self) -> Dict[str, Any]:
        return {
            'supports': [[values.tolist() for values in bidder] for bidder in self.supports],
            'alloc': self.alloc.tolist(),
            'payments': self.payments_table.tolist(),
            'concept': self.concept,
            'regretAllowance': self.regret_allowance,
            'quantum': self.quantum,
            'objective': self.objective,
        }

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'LookupMechanism':
        return cls(parameters['supports'], parameters['alloc'], parameters['payments'],
                   concept=parameters['concept'], regret_allowance=parameters['regretAllowance'],
                   quantum=parameters.get('quantum'), objective=parameters.get('objective'))


@register
class MenuMechanism(Mechanism):
    """
    Single-bidder menu of (lottery, price) entries.

    The buyer takes an entry maximising q . b - price; the empty entry at
    price 0 is always available and ties go to the higher price.

    :param entries: Pairs (allocation probabilities per item, price)
    :type entries: Sequence[tuple[Sequence[float], float]]
    """
    name = 'menu'

    def __init__(self, entries: Sequence[Tuple[Sequence[float], float]], label: str = ''):
        entries = [(np.asarray(q, dtype=float), _check_price(price, 'Menu price')) for q, price in entries]
        if not entries:
            raise InvalidArgumentError('Menu must have at least one entry')
        num_items = len(entries[0][0])
        if any(len(q) != num_items or np.any(q < 0) or np.any(q > 1) for q, _ in entries):
            raise InvalidArgumentError('Menu lotteries must be probability vectors of equal length')
        lotteries = all(np.all((q == 0) | (q == 1)) for q, _ in entries)
        super().__init__(concept='DT' if lotteries else 'IC', claims_ir=True)
        self.deterministic = lotteries
        self.entries = entries
        self.label = label
        order = sorted(range(len(entries)), key=lambda k: -entries[k][1])
        self._order = order
        self._lotteries = np.vstack([entries[k][0] for k in order] + [np.zeros(num_items)])
        self._prices = np.array([entries[k][1] for k in order] + [0.0])

    @property
    def num_items(self) -> int:
        return self._lotteries.shape[1]

    def choices(self, values: np.ndarray) -> np.ndarray:
        """
        Index (into the price-sorted menu plus the empty entry) chosen per valuation.

        :param values: Valuations of shape (B, n)
        :type values: numpy.ndarray
        :return: Chosen entry per valuation
        :rtype: numpy.ndarray
        """
        utilities = values @ self._lotteries.T - self._prices
        best = utilities.max(axis=1, keepdims=True)
        return np.argmax(utilities >= best - TIE_TOLERANCE * np.maximum(1.0, np.abs(best)), axis=1)

    def prices_paid(self, values: np.ndarray) -> np.ndarray:
        """Price paid by the buyer under every valuation of shape (B, n)."""
        return self._prices[self.choices(values)]

    def bought_entries(self, values: np.ndarray) -> 'MenuMechanism':
        """The menu without the entries no valuation in ``values`` buys."""
        chosen = set(self.choices(values).tolist())
        kept = [self.entries[k] for pos, k in enumerate(self._order) if pos in chosen]
        return MenuMechanism(kept, self.label) if kept else self

    def run_batch(self, bids: np.ndarray, rng: Optional[np.random.Generator] = None) -> Outcome:
        bids = as_bid_batch(bids)
        if bids.shape[1] != 1 or bids.shape[2] != self.num_items:
            raise InvalidArgumentError(f'Menu expects one bidder on {self.num_items} items, got {bids.shape[1:]}')
        chosen = self.choices(bids[:, 0, :])
        return Outcome(self._lotteries[chosen][:, None, :].copy(), self._prices[chosen][:, None].copy())

    @property
    def parameters(self) -> Dict[str, Any]:
        return {'entries': [{'lottery': q.tolist(), 'price': price} for q, price in self.entries], 'label': self.label}

    @classmethod
    def from_parameters(cls, parameters: Dict[str, Any], instance: Optional[AuctionInstance] = None) -> 'MenuMechanism':
        return cls([(entry['lottery'], entry['price']) for entry in parameters['entries']], parameters.get('label', ''))


def mechanisms_summary(mechanism: Mechanism) -> List[str]:
    """Names of the mechanism and every nested block, depth first."""
    names = [mechanism.name]
    if isinstance(mechanism, CombinedMechanism):
        for mech, _ in mechanism.blocks:
            names.extend(mechanisms_summary(mech))
    elif isinstance(mechanism, RestrictedMechanism):
        names.extend(mechanisms_summary(mechanism.base))
    return names
