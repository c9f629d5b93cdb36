"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Optimal mechanisms for small blocks: revenue LPs, eps-DT integer program and menu searches.
"""

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .distributions import AuctionInstance, floor_to_multiple
from .exceptions import InstanceTooLargeError, InvalidArgumentError, SolverError
from .mechanisms import TIE_TOLERANCE, LookupMechanism, MenuMechanism
from .tail_analysis import ANCHOR_LEVEL

logger = logging.getLogger(__name__)

DEFAULT_MAX_VARIABLES = 100_000
DEFAULT_MAX_ROWS = 2_000_000
DEFAULT_MAX_EVALUATIONS = 20_000_000
DEFAULT_MAX_MENUS = 2_000_000
DEFAULT_SEARCH_SAMPLES = 10_000
EXACT_ATOM_LIMIT = 4096
FEASIBILITY_TOLERANCE = 1e-7
CHUNK_ELEMENTS = 4_000_000
TERMS_PER_LINE = 8


@dataclass
class TypeSpace:
    """
    Per-bidder type vectors of a discrete instance.

    Types of bidder i are the product of its per-item supports, items varying
    fastest from the last; profiles are the product of the bidders' types,
    bidder 0 most significant. The ordering matches ``LookupMechanism``.
    """
    supports: List[List[np.ndarray]]
    type_values: List[np.ndarray]
    type_probs: List[np.ndarray]

    @staticmethod
    def from_instance(instance: AuctionInstance) -> 'TypeSpace':
        """
        Build the type space of an all-discrete instance.

        :raises InvalidArgumentError: If a marginal is not discrete
        """
        if not instance.all_discrete:
            raise InvalidArgumentError('Type enumeration needs discrete marginals')
        supports, type_values, type_probs = [], [], []
        for i in range(instance.num_bidders):
            dists = [instance.marginal(i, j) for j in range(instance.num_items)]
            supports.append([dist.values for dist in dists])
            grids = np.meshgrid(*[dist.values for dist in dists], indexing='ij')
            type_values.append(np.stack([grid.ravel() for grid in grids], axis=1))
            probs = np.ones(1)
            for dist in dists:
                probs = np.multiply.outer(probs, dist.weights).ravel()
            type_probs.append(probs)
        return TypeSpace(supports, type_values, type_probs)

    @property
    def type_counts(self) -> List[int]:
        return [len(probs) for probs in self.type_probs]

    @property
    def num_profiles(self) -> int:
        return math.prod(self.type_counts)

    @property
    def strides(self) -> List[int]:
        """Profile-index step of one type of every bidder."""
        counts = self.type_counts
        return [math.prod(counts[i + 1:]) for i in range(len(counts))]

    def profile_digits(self) -> np.ndarray:
        """Type index of every bidder in every profile, shape (m, profiles)."""
        return np.array(np.unravel_index(np.arange(self.num_profiles), self.type_counts)).reshape(len(self.type_counts), -1)

    def profile_probs(self) -> np.ndarray:
        """Probability of every profile."""
        probs = np.ones(1)
        for type_probs in self.type_probs:
            probs = np.multiply.outer(probs, type_probs).ravel()
        return probs


@dataclass
class LPModel:
    """
    Revenue LP over a discrete type space, in minimisation form.

    Per profile v the variables are x(v)_ij in [0, 1] followed by the free
    payments p(v)_i. Rows are A x <= b, grouped in tagged blocks.
    """
    concept: str
    space: TypeSpace
    objective: np.ndarray
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_blocks: List[Tuple[str, int, int]]
    counts: Dict[str, int] = field(default_factory=dict)

    @property
    def num_bidders(self) -> int:
        return len(self.space.supports)

    @property
    def num_items(self) -> int:
        return len(self.space.supports[0])

    @property
    def num_variables(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def block_size(self) -> int:
        """Variables per profile."""
        return self.num_bidders * self.num_items + self.num_bidders

    def integrality(self) -> np.ndarray:
        """1 for the allocation variables, 0 for the payments."""
        flags = np.zeros((self.space.num_profiles, self.block_size), dtype=int)
        flags[:, :self.num_bidders * self.num_items] = 1
        return flags.ravel()

    def variable_names(self) -> List[str]:
        names = []
        for p in range(self.space.num_profiles):
            names.extend(f'x_{p}_{i}_{j}' for i in range(self.num_bidders) for j in range(self.num_items))
            names.extend(f'p_{p}_{i}' for i in range(self.num_bidders))
        return names

    def export_text(self) -> str:
        """
        The model in CPLEX LP text format, maximising expected revenue.

        The text depends only on the model, so identical inputs give
        identical bytes.

        :return: LP file contents
        :rtype: str
        """
        names = self.variable_names()
        lines = [f'\\ AuctionForge {self.concept} revenue LP', 'Maximize']
        lines.extend(_format_expression(' revenue:', [(-c, names[k]) for k, c in enumerate(self.objective) if c != 0]))
        lines.append('Subject To')
        matrix = self.matrix.tocsr()
        matrix.sum_duplicates()
        matrix.sort_indices()
        for tag, start, stop in self.row_blocks:
            for row in range(start, stop):
                lo, hi = matrix.indptr[row], matrix.indptr[row + 1]
                terms = [(float(c), names[k]) for c, k in zip(matrix.data[lo:hi], matrix.indices[lo:hi]) if c != 0]
                expr = _format_expression(f' {tag}_{row - start}:', terms)
                expr[-1] += f' <= {float(self.rhs[row])!r}'
                lines.extend(expr)
        lines.append('Bounds')
        for k, name in enumerate(names):
            if math.isinf(self.lower[k]) and math.isinf(self.upper[k]):
                lines.append(f' {name} free')
            else:
                lines.append(f' {float(self.lower[k])!r} <= {name} <= {float(self.upper[k])!r}')
        lines.append('End')
        return '\n'.join(lines) + '\n'


def _format_expression(head: str, terms: Sequence[Tuple[float, str]]) -> List[str]:
    if not terms:
        return [f'{head} 0']
    parts = [f'{"+" if c >= 0 else "-"} {abs(c)!r} {name}' for c, name in terms]
    lines = []
    for start in range(0, len(parts), TERMS_PER_LINE):
        chunk = ' '.join(parts[start:start + TERMS_PER_LINE])
        lines.append(f'{head} {chunk}' if start == 0 else f'   {chunk}')
    return lines


@dataclass
class LPSolution:
    """Optimal revenue and the variable assignment of a solved model."""
    objective: float
    values: np.ndarray
    integral: bool = False


class _RowBlock:
    """COO accumulator for one tagged block of rows."""

    def __init__(self, tag: str):
        self.tag = tag
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.data: List[np.ndarray] = []
        self.rhs: List[np.ndarray] = []
        self.count = 0

    def add(self, cols: np.ndarray, data: np.ndarray, rhs: np.ndarray):
        """Add rows, one per leading index of ``cols`` and ``data``."""
        num = cols.shape[0]
        self.rows.append(np.repeat(np.arange(self.count, self.count + num), cols.shape[1]))
        self.cols.append(cols.ravel())
        self.data.append(data.ravel())
        self.rhs.append(np.broadcast_to(rhs, (num,)).astype(float))
        self.count += num


def _utility_terms(profiles: np.ndarray, bidder: int, values: np.ndarray, sign: float,
                   num_bidders: int, num_items: int) -> Tuple[np.ndarray, np.ndarray]:
    """Columns and coefficients of sign * (values . x_bidder(profile) - p_bidder(profile))."""
    block = num_bidders * num_items + num_bidders
    x_cols = profiles[:, None] * block + bidder * num_items + np.arange(num_items)[None, :]
    pay_cols = profiles * block + num_bidders * num_items + bidder
    cols = np.hstack([x_cols, pay_cols[:, None]])
    data = np.hstack([sign * values, np.full((len(profiles), 1), -sign)])
    return cols, data


def _incentive_counts(space: TypeSpace, concept: str) -> int:
    if concept == 'IC':
        return sum(space.num_profiles * (count - 1) for count in space.type_counts)
    return sum(count * (count - 1) for count in space.type_counts)


def build_lp(instance: AuctionInstance, concept: str = 'IC', max_variables: int = DEFAULT_MAX_VARIABLES) -> LPModel:
    """
    Build the exact revenue LP of a discrete instance.

    IC rows compare, profile by profile, the truthful utility of a bidder with
    every misreport; BIC rows compare the same utilities averaged over the
    opponents' types. IR holds per profile.

    :param instance: All-discrete instance
    :type instance: AuctionInstance
    :param concept: "IC" or "BIC"
    :type concept: str
    :param max_variables: Largest allowed number of variables
    :type max_variables: int
    :return: LP model
    :rtype: LPModel
    :raises InvalidArgumentError: On an unknown concept or non-discrete marginals
    :raises InstanceTooLargeError: If the model exceeds the size caps
    """
    concept = concept.upper()
    if concept not in ('IC', 'BIC'):
        raise InvalidArgumentError(f'LP concept must be IC or BIC, got {concept!r}')
    space = TypeSpace.from_instance(instance)
    m, n = instance.num_bidders, instance.num_items
    num_profiles = space.num_profiles
    block = m * n + m
    counts = {
        'profiles': num_profiles,
        'variables': num_profiles * block,
        'supplyRows': num_profiles * n,
        'irRows': num_profiles * m,
        f'{concept.lower()}Rows': _incentive_counts(space, concept),
    }
    total_rows = counts['supplyRows'] + counts['irRows'] + counts[f'{concept.lower()}Rows']
    if counts['variables'] > max_variables or total_rows > DEFAULT_MAX_ROWS:
        raise InstanceTooLargeError('Revenue LP exceeds the configured size cap', counts)

    digits = space.profile_digits()
    profile_probs = space.profile_probs()
    profiles = np.arange(num_profiles)

    supply = _RowBlock('supply')
    rows = np.arange(num_profiles * n)
    p_idx, j_idx = np.divmod(rows, n)
    supply.add(p_idx[:, None] * block + np.arange(m)[None, :] * n + j_idx[:, None], np.ones((len(rows), m)), 1.0)

    ir = _RowBlock('ir')
    ir_cols, ir_data, ir_order = [], [], []
    for i in range(m):
        cols, data = _utility_terms(profiles, i, space.type_values[i][digits[i]], -1.0, m, n)
        ir_cols.append(cols)
        ir_data.append(data)
        ir_order.append(profiles * m + i)
    order = np.argsort(np.concatenate(ir_order))
    ir.add(np.concatenate(ir_cols)[order], np.concatenate(ir_data)[order], 0.0)

    incentive = _RowBlock(concept.lower())
    for i in range(m):
        count, stride = space.type_counts[i], space.strides[i]
        if count < 2:
            continue
        if concept == 'IC':
            p_rep = np.repeat(profiles, count)
            alt = np.tile(np.arange(count), num_profiles)
            keep = alt != digits[i][p_rep]
            p_rep, alt = p_rep[keep], alt[keep]
            deviation = p_rep + (alt - digits[i][p_rep]) * stride
            values = space.type_values[i][digits[i][p_rep]]
            cols_t, data_t = _utility_terms(p_rep, i, values, -1.0, m, n)
            cols_d, data_d = _utility_terms(deviation, i, values, 1.0, m, n)
            incentive.add(np.hstack([cols_t, cols_d]), np.hstack([data_t, data_d]), 0.0)
            continue
        for t in range(count):
            own = profiles[digits[i] == t]
            weights = (profile_probs[own] / space.type_probs[i][t])[:, None]
            values = np.broadcast_to(space.type_values[i][t], (len(own), n))
            cols_t, data_t = _utility_terms(own, i, values, -1.0, m, n)
            for alt in range(count):
                if alt == t:
                    continue
                cols_d, data_d = _utility_terms(own + (alt - t) * stride, i, values, 1.0, m, n)
                incentive.add(np.hstack([cols_t, cols_d]).reshape(1, -1),
                              np.hstack([data_t * weights, data_d * weights]).reshape(1, -1), 0.0)

    blocks = [supply, ir, incentive]
    row_blocks, all_rows, all_cols, all_data, all_rhs = [], [], [], [], []
    offset = 0
    for rb in blocks:
        row_blocks.append((rb.tag, offset, offset + rb.count))
        for rows_part, cols_part, data_part in zip(rb.rows, rb.cols, rb.data):
            all_rows.append(rows_part + offset)
            all_cols.append(cols_part)
            all_data.append(data_part)
        all_rhs.extend(rb.rhs)
        offset += rb.count
    num_vars = num_profiles * block
    matrix = sparse.coo_matrix(
        (np.concatenate(all_data), (np.concatenate(all_rows), np.concatenate(all_cols))),
        shape=(offset, num_vars),
    ).tocsr()
    objective = np.zeros((num_profiles, block))
    objective[:, m * n:] = -profile_probs[:, None]
    lower = np.zeros((num_profiles, block))
    upper = np.ones((num_profiles, block))
    lower[:, m * n:] = -np.inf
    upper[:, m * n:] = np.inf
    logger.debug('Built %s LP: %s', concept, counts)
    return LPModel(
        concept=concept,
        space=space,
        objective=objective.ravel(),
        matrix=matrix,
        rhs=np.concatenate(all_rhs) if all_rhs else np.zeros(0),
        lower=lower.ravel(),
        upper=upper.ravel(),
        row_blocks=row_blocks,
        counts=counts,
    )


def solve_lp(model: LPModel, integral: bool = False) -> LPSolution:
    """
    Solve a revenue model with HiGHS and re-verify every row.

    :param model: Model from ``build_lp``
    :type model: LPModel
    :param integral: Require integral allocations (mixed integer program)
    :type integral: bool
    :return: Optimal expected revenue and the variable values
    :rtype: LPSolution
    :raises SolverError: If the solver fails or the solution violates a row by more than 1e-7
    """
    if integral:
        result = milp(
            model.objective,
            integrality=model.integrality(),
            bounds=Bounds(model.lower, model.upper),
            constraints=LinearConstraint(model.matrix, -np.inf, model.rhs),
        )
    else:
        bounds = [(None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
                  for lo, hi in zip(model.lower, model.upper)]
        result = linprog(model.objective, A_ub=model.matrix, b_ub=model.rhs, bounds=bounds, method='highs-ds')
    if result.status != 0 or result.x is None:
        raise SolverError(f'Revenue {"integer program" if integral else "LP"} failed: {result.message}')
    values = np.asarray(result.x, dtype=float)
    row_violation = float(np.max(model.matrix @ values - model.rhs, initial=0.0))
    bound_violation = float(max(np.max(model.lower - values, initial=0.0), np.max(values - model.upper, initial=0.0)))
    if max(row_violation, bound_violation) > FEASIBILITY_TOLERANCE:
        raise SolverError(f'Solution violates the model by {max(row_violation, bound_violation):.3g}')
    logger.debug('Solved %s model, objective %.9g', model.concept, -result.fun)
    return LPSolution(objective=-float(result.fun), values=values, integral=integral)


def mechanism_from_lp(model: LPModel, solution: LPSolution, concept: Optional[str] = None,
                      regret_allowance: Optional[float] = None, quantum: Optional[float] = None) -> LookupMechanism:
    """
    Executable table mechanism from a solved model.

    :param model: Solved model
    :type model: LPModel
    :param solution: Its solution
    :type solution: LPSolution
    :param concept: Claimed concept, the model's concept when None
    :type concept: str or None
    :param regret_allowance: Claimed regret tolerance, the solver tolerance scaled by the largest type value when None
    :type regret_allowance: float or None
    :param quantum: Bid rounding step applied before the lookup
    :type quantum: float or None
    :return: Lookup mechanism
    :rtype: LookupMechanism
    """
    m, n = model.num_bidders, model.num_items
    table = solution.values.reshape(model.space.num_profiles, model.block_size)
    alloc = np.clip(table[:, :m * n].reshape(-1, m, n), 0.0, 1.0)
    alloc[np.abs(alloc) < 1e-12] = 0.0
    if solution.integral:
        alloc = np.round(alloc)
    payments = table[:, m * n:]
    if regret_allowance is None:
        scale = max(1.0, max(float(values.sum(axis=1).max()) for values in model.space.type_values))
        regret_allowance = 10 * FEASIBILITY_TOLERANCE * scale
    return LookupMechanism(
        supports=[[values.tolist() for values in bidder] for bidder in model.space.supports],
        alloc=alloc,
        payments=payments,
        concept=concept or model.concept,
        regret_allowance=regret_allowance,
        quantum=quantum,
        objective=solution.objective,
    )


def optimal_mechanism(instance: AuctionInstance, concept: str = 'IC',
                      max_variables: int = DEFAULT_MAX_VARIABLES) -> LookupMechanism:
    """Revenue-optimal IC or BIC table mechanism of a discrete instance."""
    model = build_lp(instance, concept, max_variables)
    return mechanism_from_lp(model, solve_lp(model))


def eps_dt_search(instance: AuctionInstance, eps: float, max_variables: int = DEFAULT_MAX_VARIABLES) -> LookupMechanism:
    """
    Best deterministic truthful table on values rounded down to multiples of eps / n.

    The integer program keeps the IC rows of the LP and integral allocations.
    Bids are rounded the same way before the lookup, so truthful reporting
    loses at most eps.

    :param instance: All-discrete instance
    :type instance: AuctionInstance
    :param eps: Regret tolerance in (0, 1)
    :type eps: float
    :param max_variables: Largest allowed number of variables
    :type max_variables: int
    :return: eps-DT lookup mechanism
    :rtype: LookupMechanism
    :raises InstanceTooLargeError: If the rounded type space exceeds the cap
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError(f'eps must be in (0, 1), got {eps!r}')
    step = eps / instance.num_items
    items = []
    for col in instance.items:
        if instance.population:
            items.append(floor_to_multiple(col, step))
        else:
            items.append(tuple(floor_to_multiple(dist, step) for dist in col))
    coarse = AuctionInstance(
        num_bidders=instance.num_bidders,
        items=tuple(items),
        population=instance.population,
        epsilon=instance.epsilon,
        delta=instance.delta,
        seed=instance.seed,
    )
    model = build_lp(coarse, 'IC', max_variables)
    solution = solve_lp(model, integral=True)
    return mechanism_from_lp(model, solution, concept='eps-DT', regret_allowance=eps, quantum=step)


def price_grid(lo: float, hi: float, eps: float) -> List[float]:
    """
    Prices hi / (1 + eps^2)^k for k = 0, 1, ... down to the first one not above lo.

    :param lo: Lowest price of interest, positive
    :type lo: float
    :param hi: Highest price, at least lo
    :type hi: float
    :param eps: Accuracy in (0, 1)
    :type eps: float
    :return: Ascending prices
    :rtype: list[float]
    :raises InvalidArgumentError: On an invalid range or eps
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError(f'eps must be in (0, 1), got {eps!r}')
    if not (0 < lo <= hi and math.isfinite(hi)):
        raise InvalidArgumentError(f'Price range must satisfy 0 < lo <= hi, got [{lo}, {hi}]')
    if lo == hi:
        return [float(lo)]
    ratio = 1.0 + eps ** 2
    steps = math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-9)
    return [hi / ratio ** k for k in range(steps, -1, -1)]


def lottery_grid(eps: float) -> List[float]:
    """
    Allocation probabilities {0} and eps^2 (1 + eps^2)^k up to 1, scaled by (1 - eps).

    :param eps: Accuracy in (0, 1)
    :type eps: float
    :return: Ascending probabilities
    :rtype: list[float]
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError(f'eps must be in (0, 1), got {eps!r}')
    ratio = 1.0 + eps ** 2
    top = math.floor(math.log(1.0 / eps ** 2) / math.log(ratio) + 1e-9)
    return [0.0] + [(1.0 - eps) * eps ** 2 * ratio ** k for k in range(top + 1)]


@dataclass
class MenuSearchResult:
    """Best menu found by a grid search and its revenue on the search valuations."""
    menu: MenuMechanism
    revenue: float
    evaluated: int
    label: str = 'exhaustive'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'revenue': self.revenue,
            'evaluated': self.evaluated,
            'label': self.label,
            'menu': self.menu.parameters['entries'],
        }


def single_bidder_valuations(instance: AuctionInstance, samples: int = DEFAULT_SEARCH_SAMPLES,
                             seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Valuations and weights a single-bidder search optimises over.

    Discrete instances with at most ``EXACT_ATOM_LIMIT`` types are enumerated
    exactly, anything else is sampled.

    :return: Valuations of shape (A, n) and their probabilities
    :rtype: tuple[numpy.ndarray, numpy.ndarray]
    :raises InvalidArgumentError: If the instance has more than one bidder
    """
    if instance.num_bidders != 1:
        raise InvalidArgumentError('Menu searches need a single-bidder instance')
    if instance.all_discrete:
        space = TypeSpace.from_instance(instance)
        if space.type_counts[0] <= EXACT_ATOM_LIMIT:
            return space.type_values[0], space.type_probs[0]
    values = instance.sample_profiles(np.random.default_rng(seed), samples)[:, 0, :]
    return values, np.full(samples, 1.0 / samples)


def _search_range(values: np.ndarray, weights: np.ndarray, eps: float) -> Optional[Tuple[float, float]]:
    """Range of useful prices for a good with the given value distribution."""
    positive = values > 0
    if not np.any(positive):
        return None
    order = np.argsort(-values, kind='stable')
    cumulative = np.cumsum(weights[order])
    q = float(values[order][np.argmax(cumulative >= ANCHOR_LEVEL - 1e-12)])
    v_min, v_max = float(values[positive].min()), float(values.max())
    if q <= 0:
        return v_min, v_max
    lo = max(v_min, eps * q)
    hi = min(v_max, 4.0 * q * math.log(1.0 / eps))
    return min(lo, hi), hi


def _goods_price_grid(values: np.ndarray, weights: np.ndarray, eps: float) -> np.ndarray:
    bounds = _search_range(values, weights, eps)
    if bounds is None:
        return np.array([0.0])
    lo, hi = bounds
    return np.asarray(price_grid((1.0 - eps) * lo, hi, eps))


def all_bundles(num_items: int) -> np.ndarray:
    """Every non-empty bundle as a 0/1 row, the grand bundle last."""
    rows = [bits for bits in itertools.product((0.0, 1.0), repeat=num_items) if any(bits)]
    return np.array(rows)


def menu_revenue(menu: MenuMechanism, values: np.ndarray, weights: np.ndarray) -> float:
    """Expected revenue of a menu when the buyer best-responds to every valuation."""
    return float(weights @ menu.prices_paid(values))


def _non_grand_choice(bundle_values: np.ndarray, prices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Best utility (at least 0) and price paid over the non-grand bundles, ties to the higher price."""
    util = bundle_values[None, :, :] - prices[:, None, :]
    best = util.max(axis=2)
    tied = util >= best[..., None] - TIE_TOLERANCE * np.maximum(1.0, np.abs(best[..., None]))
    paid = np.where(tied, prices[:, None, :], -np.inf).max(axis=2)
    buys = best >= -TIE_TOLERANCE
    return np.where(buys, np.maximum(best, 0.0), 0.0), np.where(buys, paid, 0.0)


def bundle_price_search(instance: AuctionInstance, eps: float, samples: int = DEFAULT_SEARCH_SAMPLES,
                        seed: int = 0, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> MenuSearchResult:
    """
    Best single-bidder bundle pricing over per-bundle (1 + eps^2)-geometric price grids.

    Every non-empty bundle is priced from a grid spanning its useful value
    range. Price vectors of the non-grand bundles are enumerated; for each,
    every grand-bundle price is evaluated at once from the buyer's best
    alternative utility.

    :param instance: Single-bidder instance
    :type instance: AuctionInstance
    :param eps: Accuracy in (0, 1)
    :type eps: float
    :param samples: Valuations drawn when the instance is not small and discrete
    :type samples: int
    :param seed: Seed of the drawn valuations
    :type seed: int
    :param max_evaluations: Largest number of menus evaluated
    :type max_evaluations: int
    :return: Best bundle menu and its revenue
    :rtype: MenuSearchResult
    :raises InstanceTooLargeError: If the menu space exceeds ``max_evaluations``
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError(f'eps must be in (0, 1), got {eps!r}')
    values, weights = single_bidder_valuations(instance, samples, seed)
    bundles = all_bundles(instance.num_items)
    bundle_values = values @ bundles.T
    grids = [_goods_price_grid(bundle_values[:, k], weights, eps) for k in range(len(bundles))]
    others, grand = grids[:-1], grids[-1]
    shape = tuple(len(grid) for grid in others)
    combos = math.prod(shape)
    counts = {'bundles': len(bundles), 'combinations': combos, 'grandPrices': len(grand), 'valuations': len(weights)}
    evaluated = combos * len(grand)
    if evaluated > max_evaluations:
        raise InstanceTooLargeError('Bundle price search exceeds the enumeration cap', counts)

    num_atoms, num_grand = len(weights), len(grand)
    chunk = max(1, CHUNK_ELEMENTS // max(num_atoms * max(1, len(others)), num_grand + 1))
    grand_values = bundle_values[:, -1]
    best_revenue, best_prices = -np.inf, None
    for start in range(0, combos, chunk):
        idx = np.arange(start, min(start + chunk, combos))
        digits = np.unravel_index(idx, shape) if others else ()
        prices = np.stack([grid[d] for grid, d in zip(others, digits)], axis=1) if others else np.zeros((len(idx), 0))
        if others:
            utility, paid = _non_grand_choice(bundle_values[:, :-1], prices)
        else:
            utility, paid = np.zeros((len(idx), num_atoms)), np.zeros((len(idx), num_atoms))
        # atom a buys the grand bundle at every grid index below cut[a]
        cut = np.searchsorted(grand, grand_values[None, :] - utility + TIE_TOLERANCE, side='right')
        flat = (np.arange(len(idx))[:, None] * (num_grand + 1) + cut).ravel()
        size = len(idx) * (num_grand + 1)
        mass = np.bincount(flat, weights=np.broadcast_to(weights, cut.shape).ravel(), minlength=size)
        spent = np.bincount(flat, weights=(paid * weights).ravel(), minlength=size)
        mass = np.cumsum(mass.reshape(len(idx), -1)[:, ::-1], axis=1)[:, ::-1][:, 1:]
        spent = np.cumsum(spent.reshape(len(idx), -1)[:, ::-1], axis=1)[:, ::-1][:, 1:]
        revenue = grand[None, :] * mass + (paid @ weights)[:, None] - spent
        pos = int(np.argmax(revenue))
        if revenue.flat[pos] > best_revenue + 1e-12:
            row, g = divmod(pos, num_grand)
            best_revenue = float(revenue.flat[pos])
            best_prices = np.append(prices[row], grand[g])

    menu = MenuMechanism([(bundle, price) for bundle, price in zip(bundles, best_prices)], label='exhaustive')
    revenue = menu_revenue(menu, values, weights)
    logger.debug('Bundle search over %d menus: revenue %.6g', evaluated, revenue)
    return MenuSearchResult(menu=menu, revenue=revenue, evaluated=evaluated, label='exhaustive')


def _chunks(iterator: Iterator[Tuple[int, ...]], size: int) -> Iterator[np.ndarray]:
    while True:
        block = list(itertools.islice(iterator, size))
        if not block:
            return
        yield np.array(block)


def lottery_menu_search(instance: AuctionInstance, eps: float, menu_cap: int = 3,
                        samples: int = DEFAULT_SEARCH_SAMPLES, seed: int = 0,
                        max_menus: int = DEFAULT_MAX_MENUS) -> MenuSearchResult:
    """
    Best single-bidder menu of at most ``menu_cap`` (lottery, price) entries.

    Lotteries allocate every item with a probability from ``lottery_grid``;
    deterministic bundles are always included. Lotteries worth at most
    eps * E[welfare] are not offered. Each lottery is priced from its own
    price grid. The bundle pricing optimum, restricted to the bought entries,
    is the starting incumbent.

    :param instance: Single-bidder instance
    :type instance: AuctionInstance
    :param eps: Accuracy in (0, 1)
    :type eps: float
    :param menu_cap: Largest menu size enumerated
    :type menu_cap: int
    :param samples: Valuations drawn when the instance is not small and discrete
    :type samples: int
    :param seed: Seed of the drawn valuations
    :type seed: int
    :param max_menus: Largest number of menus evaluated
    :type max_menus: int
    :return: Best menu found, labelled "best_within_cap"
    :rtype: MenuSearchResult
    :raises InstanceTooLargeError: If the menu space exceeds ``max_menus``
    """
    if isinstance(menu_cap, bool) or not isinstance(menu_cap, int) or menu_cap < 1:
        raise InvalidArgumentError('Menu cap must be a positive integer')
    values, weights = single_bidder_valuations(instance, samples, seed)
    n = instance.num_items
    probabilities = lottery_grid(eps)
    lotteries = np.unique(np.vstack([np.array(list(itertools.product(probabilities, repeat=n))), all_bundles(n)]), axis=0)
    mean_values = weights @ values
    lotteries = lotteries[lotteries @ mean_values > eps * float(mean_values.sum())]

    entries: List[Tuple[np.ndarray, float]] = []
    for lottery in lotteries:
        for price in _goods_price_grid(values @ lottery, weights, eps):
            if price > 0:
                entries.append((lottery, float(price)))
    total = sum(math.comb(len(entries), k) for k in range(1, min(menu_cap, len(entries)) + 1))
    counts = {'lotteries': len(lotteries), 'entries': len(entries), 'menus': total, 'menuCap': menu_cap}
    if total > max_menus:
        raise InstanceTooLargeError('Lottery menu search exceeds the enumeration cap', counts)
    if len(entries) > menu_cap:
        warnings.warn(f'Lottery menu search is limited to menus of at most {menu_cap} of {len(entries)} entries')

    incumbent = bundle_price_search(instance, eps, samples, seed)
    best_menu = incumbent.menu.bought_entries(values)
    best_revenue = menu_revenue(best_menu, values, weights)

    entries.sort(key=lambda entry: -entry[1])
    lottery_matrix = np.array([lottery for lottery, _ in entries])
    prices = np.array([price for _, price in entries])
    utilities = values @ lottery_matrix.T - prices
    for size in range(1, min(menu_cap, len(entries)) + 1):
        chunk = max(1, CHUNK_ELEMENTS // (len(weights) * size))
        for combos in _chunks(itertools.combinations(range(len(entries)), size), chunk):
            util = utilities[:, combos]
            best = util.max(axis=2)
            pick = np.argmax(util >= best[..., None] - TIE_TOLERANCE * np.maximum(1.0, np.abs(best[..., None])), axis=2)
            chosen = np.take_along_axis(np.broadcast_to(combos, util.shape), pick[..., None], axis=2)[..., 0]
            paid = np.where(best >= -TIE_TOLERANCE, prices[chosen], 0.0)
            revenue = weights @ paid
            pos = int(np.argmax(revenue))
            if revenue[pos] > best_revenue + 1e-12:
                candidate = MenuMechanism([entries[k] for k in combos[pos]], label='best_within_cap')
                candidate_revenue = menu_revenue(candidate, values, weights)
                if candidate_revenue > best_revenue + 1e-12:
                    best_menu, best_revenue = candidate, candidate_revenue
    best_menu.label = 'best_within_cap'
    logger.debug('Lottery search over %d menus: revenue %.6g', total, best_revenue)
    return MenuSearchResult(menu=best_menu, revenue=best_revenue, evaluated=total, label='best_within_cap')
