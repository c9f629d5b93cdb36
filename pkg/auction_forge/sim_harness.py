"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Monte Carlo audits of mechanisms: revenue, welfare, IR, truthfulness regret and concentration.
"""

import csv
import io
import itertools
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .distributions import AuctionInstance
from .exceptions import InvalidArgumentError
from .mechanisms import EXACT_CONCEPTS, Mechanism

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1024
IR_TOLERANCE = 1e-9
REGRET_TOLERANCE = 1e-9
MIN_SAMPLES = 100
MIN_CONCENTRATION_SAMPLES = 1000
CONCENTRATION_SLACK = 0.02
BIC_OPPONENT_DRAWS = 1000
BIC_TYPE_DRAWS = 200
EXACT_ENUMERATION_LIMIT = 4096
THREADS_ENV = 'AUCTIONFORGE_THREADS'

T = TypeVar('T')


def worker_count() -> int:
    """
    Number of simulation threads.

    Read from AUCTIONFORGE_THREADS, defaulting to min(4, cpu count); invalid
    values fall back to the default with a warning.
    """
    default = min(4, os.cpu_count() or 1)
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default
    try:
        value = int(raw)
        if value < 1:
            raise ValueError(raw)
    except ValueError:
        warnings.warn(f'Ignoring invalid {THREADS_ENV}={raw!r}, using {default} threads')
        return default
    return value


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Generator of one simulation block, derived from (seed, block, stream)."""
    return np.random.default_rng(np.random.SeedSequence([seed, block, stream]))


def map_blocks(task: Callable[[int, int], T], samples: int) -> List[T]:
    """
    Run ``task(block, count)`` over blocks of ``BLOCK_SIZE`` profiles.

    Results come back in block order whatever the number of threads.
    """
    blocks = [(b, min(BLOCK_SIZE, samples - b * BLOCK_SIZE)) for b in range(math.ceil(samples / BLOCK_SIZE))]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(lambda block: task(*block), blocks))


def _check_samples(samples: int, minimum: int = MIN_SAMPLES):
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < minimum:
        raise InvalidArgumentError(f'Number of samples must be an integer of at least {minimum}')


def welfare_samples(instance: AuctionInstance, samples: int, seed: int = 0) -> np.ndarray:
    """
    Draws of sum_j max_i v_ij.

    :param instance: Auction instance
    :type instance: AuctionInstance
    :param samples: Number of draws
    :type samples: int
    :param seed: Master seed
    :type seed: int
    :return: Welfare per draw
    :rtype: numpy.ndarray
    """
    parts = map_blocks(lambda b, count: instance.sample_profiles(block_rng(seed, b), count).max(axis=1).sum(axis=1), samples)
    return np.concatenate(parts)


@dataclass
class SimulationSummary:
    """Per-profile revenue, welfare and truthful utilities of every bidder."""
    revenue: np.ndarray
    welfare: np.ndarray
    utilities: np.ndarray

    @property
    def samples(self) -> int:
        return len(self.revenue)


def simulate(mechanism: Mechanism, instance: AuctionInstance, samples: int, seed: int = 0) -> SimulationSummary:
    """
    Run the mechanism on truthful bids of sampled profiles.

    Block b samples its profiles from stream (seed, b, 0) and feeds the
    mechanism stream (seed, b, 1).
    """
    _check_samples(samples)

    def task(block: int, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        values = instance.sample_profiles(block_rng(seed, block), count)
        outcome = mechanism.run_batch(values, block_rng(seed, block, 1))
        utilities = outcome.utilities(values)
        return outcome.revenue, values.max(axis=1).sum(axis=1), utilities

    parts = map_blocks(task, samples)
    return SimulationSummary(
        revenue=np.concatenate([p[0] for p in parts]),
        welfare=np.concatenate([p[1] for p in parts]),
        utilities=np.concatenate([p[2] for p in parts]),
    )


@dataclass(frozen=True)
class IrCheck:
    """Bidder-profile pairs with negative truthful utility and the lowest utility seen."""
    violations: int
    worst_margin: float


@dataclass(frozen=True)
class ConcentrationCheck:
    """Share of samples within (1 +- eps) of their mean."""
    eps: float
    delta: float
    passed: bool
    empirical_fraction: float

    def to_dict(self) -> Dict[str, Any]:
        return {'eps': self.eps, 'delta': self.delta, 'passed': self.passed, 'empiricalFraction': self.empirical_fraction}


@dataclass(frozen=True)
class RegretEstimate:
    """Largest utility gain from misreporting found over a deviation grid."""
    concept: str
    max_observed: float
    grid: Dict[str, Any]
    worst: Optional[Dict[str, Any]] = None

    @property
    def verdict(self) -> str:
        if self.max_observed <= REGRET_TOLERANCE:
            return 'no violation found over grid G'
        return f'regret {self.max_observed:.6g} found over grid G'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'concept': self.concept,
            'maxObserved': self.max_observed,
            'deviationGridSpec': self.grid,
            'worst': self.worst,
            'verdict': self.verdict,
        }


@dataclass(frozen=True)
class DeviationGrid:
    """
    Misreports tried against a true valuation vector.

    Whole-vector scalings by factor^k for k in [-steps, steps] without 0,
    every single coordinate scaled by (1 +- perturbation), the zero report
    and every coordinate replaced by each value of its support.
    """
    factor: float = 1.05
    steps: int = 20
    perturbation: float = 0.05
    include_zero: bool = True
    use_supports: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'factor': self.factor,
            'steps': self.steps,
            'perturbation': self.perturbation,
            'includeZero': self.include_zero,
            'supportValues': self.use_supports,
        }

    def reports(self, values: np.ndarray, supports: Optional[Sequence[Optional[np.ndarray]]] = None
                ) -> Iterator[Tuple[str, np.ndarray]]:
        """
        Labelled misreports of a batch of true valuation vectors.

        :param values: True values of one bidder, shape (B, n)
        :type values: numpy.ndarray
        :param supports: Per-item support of the bidder, None for continuous items
        :type supports: Sequence[numpy.ndarray or None] or None
        :return: Iterator of (label, reports of shape (B, n))
        :rtype: Iterator[tuple[str, numpy.ndarray]]
        """
        for k in range(-self.steps, self.steps + 1):
            if k != 0:
                yield f'scale^{k}', values * self.factor ** k
        for j in range(values.shape[1]):
            for sign in (-1, 1):
                report = values.copy()
                report[:, j] *= 1.0 + sign * self.perturbation
                yield f'item{j}{"+" if sign > 0 else "-"}', report
        if self.include_zero:
            yield 'zero', np.zeros_like(values)
        if self.use_supports and supports is not None:
            for j, support in enumerate(supports):
                if support is None:
                    continue
                for value in support:
                    report = values.copy()
                    report[:, j] = value
                    yield f'item{j}={float(value)!r}', report


def _bidder_supports(instance: AuctionInstance, bidder: int) -> List[Optional[np.ndarray]]:
    return [dist.values if dist.is_discrete else None for dist in (instance.marginal(bidder, j) for j in range(instance.num_items))]


def estimate(mechanism: Mechanism, instance: AuctionInstance, samples: int, seed: int = 0) -> 'AuditReport':
    """
    Revenue and welfare of truthful bidding.

    :param mechanism: Mechanism to audit
    :type mechanism: Mechanism
    :param instance: Instance providing the priors
    :type instance: AuctionInstance
    :param samples: Number of profiles, at least 100
    :type samples: int
    :param seed: Master seed
    :type seed: int
    :return: Report with the revenue and welfare fields filled
    :rtype: AuditReport
    """
    return AuditReport.from_summary(mechanism, simulate(mechanism, instance, samples, seed), seed)


def check_ir(mechanism: Mechanism, instance: AuctionInstance, samples: int, seed: int = 0) -> IrCheck:
    """
    Count bidder-profile pairs whose truthful utility is negative.

    :param mechanism: Mechanism to audit
    :type mechanism: Mechanism
    :param instance: Instance providing the priors
    :type instance: AuctionInstance
    :param samples: Number of profiles, at least 100
    :type samples: int
    :param seed: Master seed
    :type seed: int
    :return: Violation count and worst margin
    :rtype: IrCheck
    """
    return ir_check(mechanism, simulate(mechanism, instance, samples, seed).utilities)


def ir_check(mechanism: Mechanism, utilities: np.ndarray) -> IrCheck:
    """
    IR verdict of truthful utilities.

    Table mechanisms meet IR up to their solver tolerance, so the threshold is
    the larger of 1e-9 and the mechanism's regret allowance.
    """
    tolerance = max(IR_TOLERANCE, mechanism.regret_allowance)
    return IrCheck(violations=int(np.sum(utilities < -tolerance)), worst_margin=float(utilities.min()))


def _pointwise_regret(mechanism: Mechanism, instance: AuctionInstance, grid: DeviationGrid,
                      samples: int, seed: int) -> Tuple[float, Optional[Dict[str, Any]]]:
    supports = [_bidder_supports(instance, i) for i in range(instance.num_bidders)]

    def task(block: int, count: int) -> Tuple[float, Optional[Dict[str, Any]]]:
        values = instance.sample_profiles(block_rng(seed, block), count)
        truthful = mechanism.run_batch(values, block_rng(seed, block, 1)).utilities(values)
        best, worst = -np.inf, None
        for i in range(instance.num_bidders):
            for label, report in grid.reports(values[:, i, :], supports[i]):
                bids = values.copy()
                bids[:, i, :] = np.maximum(report, 0.0)
                gains = mechanism.run_batch(bids, block_rng(seed, block, 1)).utilities(values)[:, i] - truthful[:, i]
                pos = int(np.argmax(gains))
                if gains[pos] > best:
                    best = float(gains[pos])
                    worst = {'block': block, 'profile': pos, 'bidder': i, 'deviation': label}
        return best, worst

    parts = map_blocks(task, samples)
    best = max(range(len(parts)), key=lambda k: (parts[k][0], -k))
    return parts[best]


def _type_space(instance: AuctionInstance, bidders: Sequence[int]) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Exact joint values (K, len(bidders), n) and probabilities, or None when too large or continuous."""
    dists = [instance.marginal(i, j) for i in bidders for j in range(instance.num_items)]
    if not all(dist.is_discrete for dist in dists):
        return None
    if math.prod(len(dist.values) for dist in dists) > EXACT_ENUMERATION_LIMIT:
        return None
    values = np.array(list(itertools.product(*[dist.values for dist in dists]))).reshape(-1, len(bidders), instance.num_items)
    probs = np.array([math.prod(p) for p in itertools.product(*[dist.weights for dist in dists])])
    return values, probs


def _interim_regret(mechanism: Mechanism, instance: AuctionInstance, grid: DeviationGrid,
                    samples: int, seed: int) -> Tuple[float, Optional[Dict[str, Any]]]:
    m = instance.num_bidders
    best, worst = -np.inf, None
    for i in range(m):
        others = [k for k in range(m) if k != i]
        own = _type_space(instance, [i])
        if own is None:
            rng = block_rng(seed, i, 2)
            types = instance.sample_profiles(rng, min(samples, BIC_TYPE_DRAWS))[:, i, :]
        else:
            types = own[0][:, 0, :]
        opponents = _type_space(instance, others) if others else (np.zeros((1, 0, instance.num_items)), np.ones(1))
        if opponents is None:
            draws = instance.sample_profiles(block_rng(seed, i, 3), BIC_OPPONENT_DRAWS)[:, others, :]
            opponents = (draws, np.full(BIC_OPPONENT_DRAWS, 1.0 / BIC_OPPONENT_DRAWS))
        opp_values, opp_probs = opponents
        count = len(opp_probs)
        supports = _bidder_supports(instance, i)

        def expected_utility(report: np.ndarray, true_type: np.ndarray, stream: int) -> float:
            bids = np.empty((count, m, instance.num_items))
            bids[:, others, :] = opp_values
            bids[:, i, :] = report
            outcome = mechanism.run_batch(bids, block_rng(seed, stream, 4))
            utility = (outcome.alloc[:, i, :] @ true_type) - outcome.payments[:, i]
            return float(opp_probs @ utility)

        for t, true_type in enumerate(types):
            stream = i * len(types) + t
            truthful = expected_utility(true_type, true_type, stream)
            for label, report in grid.reports(true_type[None, :], supports):
                gain = expected_utility(np.maximum(report[0], 0.0), true_type, stream) - truthful
                if gain > best:
                    best, worst = gain, {'bidder': i, 'type': true_type.tolist(), 'deviation': label}
    return best, worst


def estimate_regret(mechanism: Mechanism, instance: AuctionInstance, concept: str = 'DT',
                    grid: Optional[DeviationGrid] = None, samples: int = 1000, seed: int = 0) -> RegretEstimate:
    """
    Largest gain from a unilateral misreport over the deviation grid.

    DT and IC regret is measured profile by profile on sampled profiles, with
    the mechanism's randomness shared between truthful and deviating runs.
    BIC regret compares expected utilities over the opponents' types,
    enumerated exactly when small and discrete and sampled otherwise.

    :param mechanism: Mechanism to audit
    :type mechanism: Mechanism
    :param instance: Instance providing the priors
    :type instance: AuctionInstance
    :param concept: "DT", "IC" or "BIC"
    :type concept: str
    :param grid: Deviations to try, the default grid when None
    :type grid: DeviationGrid or None
    :param samples: Sampled profiles (DT/IC) or at most this many sampled types (BIC)
    :type samples: int
    :param seed: Master seed
    :type seed: int
    :return: Regret estimate; a grid search finds violations, it cannot certify their absence
    :rtype: RegretEstimate
    """
    concept = concept.upper().removeprefix('EPS-')
    if concept not in EXACT_CONCEPTS:
        raise InvalidArgumentError(f'Regret concept must be one of DT, IC, BIC, got {concept!r}')
    _check_samples(samples, 1)
    grid = grid or DeviationGrid()
    if concept == 'BIC':
        best, worst = _interim_regret(mechanism, instance, grid, samples, seed)
    else:
        best, worst = _pointwise_regret(mechanism, instance, grid, samples, seed)
    best = max(best, 0.0)
    logger.debug('%s regret of %s: %.3g', concept, mechanism.name, best)
    return RegretEstimate(concept=concept, max_observed=best, grid=grid.to_dict(), worst=worst if best > 0 else None)


def check_concentration(samples: Sequence[float], eps: float, delta: float,
                        slack: float = CONCENTRATION_SLACK) -> ConcentrationCheck:
    """
    Check that samples lie within (1 +- eps) times their mean with frequency at least 1 - delta - slack.

    :param samples: At least 1000 draws of the variable
    :type samples: Sequence[float]
    :param eps: Relative band half-width
    :type eps: float
    :param delta: Allowed failure probability
    :type delta: float
    :param slack: Allowance for sampling noise
    :type slack: float
    :return: Verdict and in-band fraction
    :rtype: ConcentrationCheck
    :raises InvalidArgumentError: If fewer than 1000 samples are given
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or len(values) < MIN_CONCENTRATION_SAMPLES:
        raise InvalidArgumentError(f'Concentration check needs at least {MIN_CONCENTRATION_SAMPLES} samples')
    mean = float(values.mean())
    fraction = float(np.mean(np.abs(values - mean) <= eps * abs(mean) + 1e-12))
    return ConcentrationCheck(eps=eps, delta=delta, passed=fraction >= 1.0 - delta - slack, empirical_fraction=fraction)


@dataclass
class AuditReport:
    """Audit results of one mechanism on one instance."""
    mechanism: str
    solution_concept: str
    claims_ir: bool
    regret_allowance: float
    samples: int
    seed: int
    revenue_mean: float
    revenue_ci95: float
    welfare_mean: float
    revenue_to_welfare: float
    ir: Optional[IrCheck] = None
    regret: Optional[RegretEstimate] = None
    concentration: Optional[ConcentrationCheck] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    CSV_COLUMNS = (
        'mechanism', 'solutionConcept', 'claimsIR', 'samples', 'seed',
        'revenueMean', 'revenueCI95', 'welfareMean', 'revenueToWelfare',
        'irViolations', 'irWorstMargin', 'regretConcept', 'regretMaxObserved',
        'concentrationEps', 'concentrationDelta', 'concentrationPassed', 'concentrationFraction',
    )

    @staticmethod
    def from_summary(mechanism: Mechanism, summary: SimulationSummary, seed: int) -> 'AuditReport':
        """Report with the revenue and welfare fields of a simulation."""
        n = summary.samples
        revenue_mean = float(np.mean(summary.revenue))
        revenue_sd = float(np.std(summary.revenue, ddof=1)) if n > 1 else 0.0
        welfare_mean = float(np.mean(summary.welfare))
        return AuditReport(
            mechanism=mechanism.name,
            solution_concept=mechanism.concept,
            claims_ir=mechanism.claims_ir,
            regret_allowance=mechanism.regret_allowance,
            samples=n,
            seed=seed,
            revenue_mean=revenue_mean,
            revenue_ci95=1.96 * revenue_sd / math.sqrt(n),
            welfare_mean=welfare_mean,
            revenue_to_welfare=revenue_mean / welfare_mean if welfare_mean > 0 else 0.0,
        )

    def alarms(self, mechanism: Optional[Mechanism] = None) -> List[str]:
        """
        Claims of the mechanism the audit contradicts.

        :param mechanism: Mechanism whose claims are checked, the recorded claims when None
        :type mechanism: Mechanism or None
        :return: "IR" and/or the regret concept that failed
        :rtype: list[str]
        """
        claims_ir = self.claims_ir if mechanism is None else mechanism.claims_ir
        allowance = self.regret_allowance if mechanism is None else mechanism.regret_allowance
        failed = []
        if claims_ir and self.ir is not None and self.ir.violations > 0:
            failed.append('IR')
        if self.regret is not None and self.regret.max_observed > allowance + REGRET_TOLERANCE:
            failed.append(self.regret.concept)
        return failed

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'mechanism': self.mechanism,
            'solutionConcept': self.solution_concept,
            'claimsIR': self.claims_ir,
            'regretAllowance': self.regret_allowance,
            'samples': self.samples,
            'seed': self.seed,
            'revenueMean': self.revenue_mean,
            'revenueCI95': self.revenue_ci95,
            'welfareMean': self.welfare_mean,
            'revenueToWelfare': self.revenue_to_welfare,
            'irViolations': None if self.ir is None else {'count': self.ir.violations, 'worstMargin': self.ir.worst_margin},
            'regret': None if self.regret is None else self.regret.to_dict(),
            'concentration': None if self.concentration is None else self.concentration.to_dict(),
            'alarms': self.alarms(),
        }
        result.update(self.extra)
        return result

    def to_csv_row(self) -> Dict[str, Any]:
        """Flat row keyed by ``CSV_COLUMNS``."""
        return {
            'mechanism': self.mechanism,
            'solutionConcept': self.solution_concept,
            'claimsIR': self.claims_ir,
            'samples': self.samples,
            'seed': self.seed,
            'revenueMean': self.revenue_mean,
            'revenueCI95': self.revenue_ci95,
            'welfareMean': self.welfare_mean,
            'revenueToWelfare': self.revenue_to_welfare,
            'irViolations': None if self.ir is None else self.ir.violations,
            'irWorstMargin': None if self.ir is None else self.ir.worst_margin,
            'regretConcept': None if self.regret is None else self.regret.concept,
            'regretMaxObserved': None if self.regret is None else self.regret.max_observed,
            'concentrationEps': None if self.concentration is None else self.concentration.eps,
            'concentrationDelta': None if self.concentration is None else self.concentration.delta,
            'concentrationPassed': None if self.concentration is None else self.concentration.passed,
            'concentrationFraction': None if self.concentration is None else self.concentration.empirical_fraction,
        }


def reports_to_csv(reports: Sequence[AuditReport], extra_columns: Sequence[str] = ()) -> str:
    """CSV text with a header and one row per report, columns in a fixed order."""
    buffer = io.StringIO()
    columns = list(extra_columns) + list(AuditReport.CSV_COLUMNS)
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n', extrasaction='ignore')
    writer.writeheader()
    for report in reports:
        writer.writerow({**report.extra, **report.to_csv_row()})
    return buffer.getvalue()


def audit(mechanism: Mechanism, instance: AuctionInstance, samples: int = 10_000, seed: int = 0,
          concept: Optional[str] = None, grid: Optional[DeviationGrid] = None,
          regret_samples: Optional[int] = None) -> AuditReport:
    """
    Full audit: revenue and welfare, IR, truthfulness regret and welfare concentration.

    :param mechanism: Mechanism to audit
    :type mechanism: Mechanism
    :param instance: Instance providing the priors
    :type instance: AuctionInstance
    :param samples: Number of profiles, at least 100
    :type samples: int
    :param seed: Master seed
    :type seed: int
    :param concept: Regret concept, the mechanism's own concept when None
    :type concept: str or None
    :param grid: Deviations to try
    :type grid: DeviationGrid or None
    :param regret_samples: Profiles used for the regret search, ``samples`` when None
    :type regret_samples: int or None
    :return: Audit report
    :rtype: AuditReport
    """
    summary = simulate(mechanism, instance, samples, seed)
    report = AuditReport.from_summary(mechanism, summary, seed)
    report.ir = ir_check(mechanism, summary.utilities)
    report.regret = estimate_regret(mechanism, instance, concept or mechanism.concept, grid,
                                    regret_samples or samples, seed)
    if samples >= MIN_CONCENTRATION_SAMPLES:
        report.concentration = check_concentration(summary.welfare, instance.epsilon, instance.delta)
    logger.info('Audit of %s: revenue %.6g +- %.3g, alarms %s', mechanism.name, report.revenue_mean,
                report.revenue_ci95, report.alarms())
    return report
