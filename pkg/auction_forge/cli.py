"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Command line front end: partition, build, audit, lp-export and sweep.
"""

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import AuctionInstance, check_accuracy
from .exceptions import (
    AuctionForgeError,
    DegenerateInstanceError,
    InstanceTooLargeError,
    InvalidArgumentError,
    MalformedInstanceError,
)
from .mechanisms import Mechanism, mechanism_from_metadata, mechanisms_summary
from .opt_solvers import build_lp
from .partition import partition_instance
from .pipeline import PtasBuilder
from .sim_harness import MIN_SAMPLES, AuditReport, audit, reports_to_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_DEGENERATE = 3
EXIT_TOO_LARGE = 4
EXIT_ALARM = 5

COMMANDS = ('partition', 'build', 'audit', 'lp-export', 'sweep')
CSV_COMMANDS = ('audit', 'sweep')


@dataclass(frozen=True)
class RunConfig:
    """
    Validated options of one CLI run.

    ``epsilon``, ``delta`` and ``seed`` override the values of the instance
    file when set.
    """
    command: str
    instance_path: Path
    output_path: Path
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    samples: int = 10_000
    seed: Optional[int] = None
    concept: Optional[str] = None
    dispatch_threshold: Optional[int] = None
    output_format: str = 'json'
    mechanism_path: Optional[Path] = None
    epsilons: Tuple[float, ...] = ()
    items: Optional[Tuple[int, ...]] = None
    solver: str = 'lp'

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidArgumentError(f'Unknown command {self.command!r}')
        if self.epsilon is not None or self.delta is not None:
            check_accuracy(self.epsilon if self.epsilon is not None else 0.1,
                           self.delta if self.delta is not None else 0.05)
        for eps in self.epsilons:
            check_accuracy(eps, self.delta if self.delta is not None else 0.05)
        if self.samples < MIN_SAMPLES:
            raise InvalidArgumentError(f'--samples must be at least {MIN_SAMPLES}')
        if self.seed is not None and self.seed < 0:
            raise InvalidArgumentError('--seed must be non-negative')
        if self.concept is not None and self.concept.upper() not in ('DT', 'IC', 'BIC'):
            raise InvalidArgumentError('--concept must be one of dt, ic, bic')
        if self.dispatch_threshold is not None and self.dispatch_threshold < 1:
            raise InvalidArgumentError('--dispatch-threshold must be positive')
        if self.output_format not in ('json', 'csv'):
            raise InvalidArgumentError('--format must be json or csv')
        if self.output_format == 'csv' and self.command not in CSV_COMMANDS:
            raise InvalidArgumentError(f'CSV output is only available for {", ".join(CSV_COMMANDS)}')
        if self.command == 'audit' and self.mechanism_path is None:
            raise InvalidArgumentError('audit needs --mechanism')
        if self.command == 'sweep' and not self.epsilons:
            raise InvalidArgumentError('sweep needs --epsilons')

    @staticmethod
    def from_args(args: argparse.Namespace) -> 'RunConfig':
        """Build the run configuration from parsed arguments."""
        return RunConfig(
            command=args.command,
            instance_path=Path(args.instance),
            output_path=Path(args.out),
            epsilon=args.epsilon,
            delta=args.delta,
            samples=args.samples,
            seed=args.seed,
            concept=args.concept,
            dispatch_threshold=args.dispatch_threshold,
            output_format=args.format,
            mechanism_path=Path(args.mechanism) if args.mechanism else None,
            epsilons=tuple(args.epsilons or ()),
            items=tuple(args.items) if args.items is not None else None,
            solver=args.solver,
        )

    def builder_config(self, instance: AuctionInstance) -> Dict[str, Any]:
        """PtasBuilder configuration of this run."""
        config: Dict[str, Any] = {
            'samples': self.samples,
            'seed': self.run_seed(instance),
            'dispatch_threshold': self.dispatch_threshold,
            'r_block_solver': self.solver,
        }
        if self.concept is not None:
            config['concept'] = self.concept.upper()
        return config

    def run_seed(self, instance: AuctionInstance) -> int:
        return self.seed if self.seed is not None else instance.seed


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}') from e


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'expected comma separated item indices, got {text!r}') from e


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the ``auction-forge`` command."""
    parser = argparse.ArgumentParser(
        prog='auction-forge',
        description='Build and audit simple near-optimal multi-item auctions.',
        epilog='Exit codes: 0 ok, 2 invalid input, 3 degenerate instance, 4 size cap exceeded, 5 audit alarm.',
    )
    parser.add_argument('command', choices=COMMANDS, help='Stage to run')
    parser.add_argument('--instance', required=True, help='Instance JSON file')
    parser.add_argument('--out', required=True, help='Output file')
    parser.add_argument('--epsilon', type=float, help='Override the instance epsilon')
    parser.add_argument('--delta', type=float, help='Override the instance delta')
    parser.add_argument('--samples', type=int, default=10_000, help='Monte Carlo samples (default: 10000)')
    parser.add_argument('--seed', type=int, help='Override the instance seed')
    parser.add_argument('--concept', type=str.lower, choices=('dt', 'ic', 'bic'), help='Solution concept')
    parser.add_argument('--dispatch-threshold', type=int, help='Bidders needed for per-item reserves')
    parser.add_argument('--format', choices=('json', 'csv'), default='json', help='Report format (default: json)')
    parser.add_argument('--mechanism', help='Mechanism metadata file written by build (audit)')
    parser.add_argument('--epsilons', type=_float_list, help='Comma separated epsilons (sweep)')
    parser.add_argument('--items', type=_int_list, help='Comma separated item block (lp-export)')
    parser.add_argument('--solver', choices=('lp', 'bundle', 'menu'), default='lp', help='R block solver (default: lp)')
    parser.add_argument('--verbose', action='store_true', help='Log debug messages to stderr')
    return parser


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'Object of type {type(value).__name__} is not JSON serializable')


def dump_json(data: Any) -> str:
    """Byte-stable JSON text."""
    return json.dumps(data, sort_keys=True, indent=2, default=_json_default) + '\n'


def _write(path: Path, text: str):
    path.write_text(text, encoding='utf-8')
    logger.debug('Wrote %s', path)


def load_instance(config: RunConfig) -> AuctionInstance:
    """
    Read the instance file and apply the epsilon, delta and seed overrides.

    :raises MalformedInstanceError: If the file is not a valid instance document
    """
    try:
        data = json.loads(config.instance_path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise MalformedInstanceError('instance', f'invalid JSON at line {e.lineno} column {e.colno}') from e
    instance = AuctionInstance.from_dict(data)
    overrides = {key: value for key, value in (('epsilon', config.epsilon), ('delta', config.delta),
                                                ('seed', config.seed)) if value is not None}
    return dataclasses.replace(instance, **overrides) if overrides else instance


def load_mechanism(path: Path, instance: AuctionInstance) -> Mechanism:
    """Mechanism from a metadata file or from the output of ``build``."""
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f'Mechanism file {path} is not valid JSON: {e}') from e
    if isinstance(data, dict) and 'dispatch' in data and 'mechanism' in data:
        data = data['mechanism']
    return mechanism_from_metadata(data, instance)


def cmd_partition(config: RunConfig) -> int:
    """Partition the instance and write the partition JSON."""
    instance = load_instance(config)
    partition = partition_instance(instance, config.samples, config.run_seed(instance))
    _write(config.output_path, dump_json({'epsilon': instance.epsilon, 'delta': instance.delta,
                                          'partition': partition.to_dict()}))
    print(f'|R|={len(partition.R)} |S|={len(partition.S)} |T|={len(partition.T)} '
          f'ellStar={partition.ell_star} rBound={partition.r_bound:.6g} tMass={partition.t_mass:.6g}')
    return EXIT_OK


def cmd_build(config: RunConfig) -> int:
    """Build the mechanism of the instance and write its replayable metadata."""
    instance = load_instance(config)
    result = PtasBuilder(config.builder_config(instance)).build(instance)
    _write(config.output_path, dump_json(result.to_dict()))
    print(f'dispatch={result.dispatch} mechanism={"/".join(mechanisms_summary(result.mechanism))} '
          f'concept={result.mechanism.concept}')
    return EXIT_OK


def _report_text(config: RunConfig, reports: Sequence[AuditReport], extra_columns: Sequence[str] = ()) -> str:
    if config.output_format == 'csv':
        return reports_to_csv(reports, extra_columns)
    if config.command == 'audit':
        return dump_json(reports[0].to_dict())
    return dump_json([report.to_dict() for report in reports])


def cmd_audit(config: RunConfig) -> int:
    """Replay a mechanism from its metadata and audit it; exit 5 on a failed claim."""
    instance = load_instance(config)
    mechanism = load_mechanism(config.mechanism_path, instance)
    concept = config.concept.upper() if config.concept else None
    report = audit(mechanism, instance, config.samples, config.run_seed(instance), concept=concept)
    _write(config.output_path, _report_text(config, [report]))
    alarms = report.alarms()
    print(f'revenue={report.revenue_mean:.6g}+-{report.revenue_ci95:.3g} '
          f'welfare={report.welfare_mean:.6g} alarms={",".join(alarms) or "none"}')
    return EXIT_ALARM if alarms else EXIT_OK


def cmd_lp_export(config: RunConfig) -> int:
    """Write the revenue LP of the instance (or of an item block) in CPLEX LP format."""
    instance = load_instance(config)
    if config.items is not None:
        if any(not 0 <= j < instance.num_items for j in config.items):
            raise InvalidArgumentError(f'--items must lie in 0..{instance.num_items - 1}')
        instance = instance.sub_instance(config.items)
    model = build_lp(instance, (config.concept or 'ic').upper())
    _write(config.output_path, model.export_text())
    print(f'variables={model.num_variables} rows={model.num_rows}')
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    """Build and audit the instance for every epsilon of ``--epsilons``."""
    instance = load_instance(config)
    reports = []
    for eps in config.epsilons:
        current = dataclasses.replace(instance, epsilon=eps)
        mechanism = PtasBuilder(config.builder_config(current)).build(current).mechanism
        report = audit(mechanism, current, config.samples, config.run_seed(current))
        report.extra['epsilon'] = eps
        reports.append(report)
        print(f'epsilon={eps} revenue={report.revenue_mean:.6g} ratio={report.revenue_to_welfare:.4f}')
    _write(config.output_path, _report_text(config, reports, ('epsilon',)))
    return EXIT_ALARM if any(report.alarms() for report in reports) else EXIT_OK


HANDLERS = {
    'partition': cmd_partition,
    'build': cmd_build,
    'audit': cmd_audit,
    'lp-export': cmd_lp_export,
    'sweep': cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of ``auction-forge``.

    :param argv: Arguments without the program name, ``sys.argv[1:]`` when None
    :type argv: Sequence[str] or None
    :return: Exit code
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    try:
        config = RunConfig.from_args(args)
        return HANDLERS[config.command](config)
    except InstanceTooLargeError as e:
        print(f'error: {e}', file=sys.stderr)
        for key, value in e.counts.items():
            print(f'  {key}: {value}', file=sys.stderr)
        return EXIT_TOO_LARGE
    except DegenerateInstanceError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_DEGENERATE
    except (InvalidArgumentError, OSError) as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_INVALID
    except AuctionForgeError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
