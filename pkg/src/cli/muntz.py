#!/usr/bin/env python
"""
Command-line front end for the Muntz space laboratory.

Usage:
    muntz spikes --lambda geometric:2 --count 5
    muntz c0 --lambda geometric:2 --n 8 --out cert.json
    muntz verify-c0 cert.json --grid 100000 --trials 1000 --seed 42
    muntz octa --slices slices.json --weights 0.5,0.3,0.2 --eps 0.05 --lambda geometric:2 --kmax 64 --out octa.json
    muntz weaknull --lambda geometric:2 --functional 0.3:0.5,0.9:0.5 --kmax 30

Exit codes: 0 verified, 1 falsified, 2 resource or precision limit, 64 usage error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import pandas as pd

# Ensure the src directory is on sys.path so imports work when running as a script
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import config
import c0_builder
import octa_lab
import spikes
from certificates import read_certificate, sample_functions, sanitize, write_certificate, write_plot_csv
from errors import (ConstructionFailure, InsufficientSequenceError, InvalidInputError, MuntzError,
                    NotFoundError, NumericalInconsistencyError, ToleranceError)
from exponents import ExponentSequence, extract_rip_subsequence, is_rip, parse_sequence_spec, subsequence
from muntz_poly import DiscreteFunctional

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Everything a run depends on. Randomness is seeded; no wall-clock inputs."""
    command: str
    sequence: Optional[str] = None
    options: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    json_only: bool = False
    canonical: bool = False


class UsageError(InvalidInputError):
    pass


class MuntzArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(config.EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rip_sequence(seq: ExponentSequence) -> ExponentSequence:
    """Passes to the greedy RIP subsequence when the prefix itself is not RIP."""
    if len(seq) >= 2 and is_rip(seq) and seq[0] > 0:
        return seq
    try:
        indices = extract_rip_subsequence(seq, len(seq))
    except InsufficientSequenceError as e:
        indices = extract_rip_subsequence(seq, e.achieved) if e.achieved else []
    if len(indices) < 3:
        raise InsufficientSequenceError("Fewer than three RIP exponents in the stored prefix.", achieved=len(indices))
    logger.info(f"Using RIP subsequence of length {len(indices)}")
    return subsequence(seq, indices)


def _emit(run: RunConfig, table: Optional[pd.DataFrame], summary: dict):
    if run.json_only:
        print(json.dumps(sanitize(summary), indent=2, sort_keys=True))
    elif table is not None:
        print(table.to_string(index=False))


def _save(run: RunConfig, data: dict):
    path = run.outputs.get('out')
    if path:
        write_certificate(data, path, canonical=run.canonical)


# --- commands ---

def run_spikes(run: RunConfig) -> int:
    count = run.options['count']
    seq = parse_sequence_spec(run.sequence, count=max(count + 2, config.DEFAULT_PREFIX_LENGTH))
    if count + 1 >= len(seq):
        raise InsufficientSequenceError(f"Sequence prefix has {len(seq)} values, {count} spikes need {count + 2}.",
                                        achieved=max(len(seq) - 2, 0))
    rows, profiles, all_hold = [], [], True
    for k in range(1, count + 1):
        spike = spikes.consecutive_spike(seq, k)
        prof = spikes.profile(spike)
        profiles.append(prof.to_dict())
        if prof.quarter_bound_applies:
            all_hold &= prof.norm >= spikes.QUARTER - spikes.QUARTER_SLACK
        rows.append({
            'k': k, 'lambda_k': spike.alpha, 'lambda_k+1': spike.beta,
            'argmax_x': prof.argmax.x, 'argmax_t': prof.argmax.t,
            'norm': prof.norm, 'y_k': prof.y_lower_bound,
        })
    report = spikes.y_sequence_report(seq, count)
    summary = {'schema': 'spikes-table/1', 'exponents': seq.to_dict(), 'profiles': profiles,
               'y_sequence': report.to_dict(), 'quarter_bound_holds': all_hold}
    _emit(run, pd.DataFrame(rows), summary)
    _save(run, summary)
    if run.outputs.get('csv'):
        functions = {f"p_{k}": spikes.consecutive_spike(seq, k).polynomial() for k in range(1, count + 1)}
        write_plot_csv(sample_functions(functions), run.outputs['csv'])
    return config.EXIT_VERIFIED if all_hold else config.EXIT_FALSIFIED


def run_c0(run: RunConfig) -> int:
    seq = _rip_sequence(parse_sequence_spec(run.sequence))
    cert = c0_builder.build(seq, run.options['n'], run.options['tol'])
    rows = [{
        'n': p.n, 'k_n': p.k, 'lambda': seq[p.k], 'scale': p.scale,
        'a_x': p.interval.a.x, 'b_x': p.interval.b.x, 'a_t': p.interval.a.t, 'b_t': p.interval.b.t,
    } for p in cert.picks]
    data = cert.to_dict()
    _emit(run, pd.DataFrame(rows), data)
    _save(run, data)
    if run.outputs.get('csv'):
        functions = {f"f_{p.n}": p.function for p in cert.picks}
        write_plot_csv(sample_functions(functions), run.outputs['csv'])
    return config.EXIT_VERIFIED


def run_verify_c0(run: RunConfig) -> int:
    cert = c0_builder.C0Certificate.from_dict(read_certificate(run.options['certificate']))
    seed = run.options['seed']
    conditions = c0_builder.verify_conditions(cert, run.options['grid'])
    inequalities = c0_builder.verify_c0_inequalities(cert, run.options['trials'], seed)
    report = {'schema': 'c0-verification/1', 'seed': seed,
              'conditions': conditions.to_dict(), 'inequalities': inequalities.to_dict()}
    table = pd.DataFrame([{'condition': c, 'margin': m, 'ok': c not in conditions.failed}
                          for c, m in conditions.margins.items()])
    _emit(run, table, report)
    if not run.json_only:
        print(f"seed={seed} vectors={inequalities.vectors_checked} "
              f"norms in [{inequalities.min_ratio:.9f}, {inequalities.max_ratio:.9f}]")
    _save(run, report)
    passed = conditions.passed and inequalities.passed
    return config.EXIT_VERIFIED if passed else config.EXIT_FALSIFIED


def _load_slices(path: str, tol: float) -> list:
    data = read_certificate(path)
    if not isinstance(data, list) or not data:
        raise UsageError(f"{path} must hold a non-empty JSON array of slices.")
    return [octa_lab.SliceSpec.from_dict(item, tol=tol) for item in data]


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise UsageError(f"Invalid number list '{text}': {e}")


def run_octa(run: RunConfig) -> int:
    tol = run.options['tol']
    slices = _load_slices(run.options['slices'], tol)
    weights = _parse_floats(run.options['weights']) if run.options.get('weights') else [1.0 / len(slices)] * len(slices)
    seq = _rip_sequence(parse_sequence_spec(run.sequence))
    cert = octa_lab.diameter_certificate(slices, weights, run.options['eps'], seq, run.options['kmax'], tol)
    data = cert.to_dict()
    table = pd.DataFrame([{
        'slice': j + 1, 'weight': w, 'member_norm_plus': n['plus'], 'member_norm_minus': n['minus'],
        'margin_plus': m['plus'], 'margin_minus': m['minus'],
    } for j, (w, n, m) in enumerate(zip(cert.weights, cert.member_norms, cert.membership_margins))])
    _emit(run, table, data)
    if not run.json_only:
        print(f"K={cert.chosen_k} separation={cert.separation:.12f} target={cert.target_separation:.12f}")
    _save(run, data)
    return config.EXIT_VERIFIED if cert.passed else config.EXIT_FALSIFIED


def run_weaknull(run: RunConfig) -> int:
    seq = _rip_sequence(parse_sequence_spec(run.sequence))
    functional = DiscreteFunctional.parse(run.options['functional'])
    threshold = run.options['threshold']
    trace = spikes.weak_null_trace(seq, functional, run.options['kmax'])
    k = spikes.first_index_below(trace, threshold)
    summary = {'schema': 'weaknull-trace/1', 'exponents': seq.to_dict(), 'functional': functional.to_list(),
               'trace': trace, 'threshold': threshold, 'K': k}
    _emit(run, pd.DataFrame({'k': range(1, len(trace) + 1), 'trace': trace}), summary)
    if not run.json_only:
        print(f"K={k} (threshold {threshold})")
    _save(run, summary)
    if run.outputs.get('csv'):
        pd.DataFrame({'k': range(1, len(trace) + 1), 'trace': trace}).to_csv(run.outputs['csv'], index=False)
    return config.EXIT_VERIFIED if k is not None else config.EXIT_FALSIFIED


HANDLERS = {
    'spikes': run_spikes,
    'c0': run_c0,
    'verify-c0': run_verify_c0,
    'octa': run_octa,
    'weaknull': run_weaknull,
}


def run(run_config: RunConfig) -> int:
    """Executes one command and maps failures to exit codes."""
    try:
        return HANDLERS[run_config.command](run_config)
    except ConstructionFailure as e:
        logger.error(f"Construction failed on condition ({e.condition}): {e}")
        print(f"construction failure: {e}", file=sys.stderr)
        return config.EXIT_FALSIFIED
    except (InsufficientSequenceError, NotFoundError, ToleranceError, NumericalInconsistencyError) as e:
        logger.error(f"Limit reached: {e}")
        print(f"limit reached: {e}", file=sys.stderr)
        return config.EXIT_LIMIT
    except (InvalidInputError, OSError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return config.EXIT_USAGE
    except MuntzError as e:
        logger.error(f"Unexpected failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return config.EXIT_LIMIT


def build_parser() -> argparse.ArgumentParser:
    parser = MuntzArgumentParser(prog='muntz', description="Muntz space constructions and certificates")
    sub = parser.add_subparsers(dest='command', required=True, parser_class=MuntzArgumentParser)

    def common(p, sequence=True):
        if sequence:
            p.add_argument('--lambda', dest='sequence', required=True, help='geometric:<base>[:scale=..][:start=..] or list:v1,v2,...')
        p.add_argument('--out', help='JSON output path')
        p.add_argument('--json-only', action='store_true', help='print JSON instead of tables')
        p.add_argument('--canonical', action='store_true', help='omit the timestamp from JSON artifacts')

    p = sub.add_parser('spikes', help='spike profiles of consecutive exponent pairs')
    common(p)
    p.add_argument('--count', type=int, default=10)
    p.add_argument('--csv', help='plot data output path')

    p = sub.add_parser('c0', help='build an asymptotically isometric c0 certificate')
    common(p)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--tol', type=float, default=config.DEFAULT_TOL)
    p.add_argument('--csv', help='plot data output path')

    p = sub.add_parser('verify-c0', help='re-check a c0 certificate')
    common(p, sequence=False)
    p.add_argument('certificate')
    p.add_argument('--grid', type=int, default=config.DEFAULT_GRID)
    p.add_argument('--trials', type=int, default=config.DEFAULT_TRIALS)
    p.add_argument('--seed', type=int, default=config.DEFAULT_SEED)

    p = sub.add_parser('octa', help='diameter-2 certificate for a convex combination of slices')
    common(p)
    p.add_argument('--slices', required=True)
    p.add_argument('--weights')
    p.add_argument('--eps', type=float, required=True)
    p.add_argument('--kmax', type=int, default=64)
    p.add_argument('--tol', type=float, default=config.DEFAULT_TOL)

    p = sub.add_parser('weaknull', help='trace |mu(p_k/||p_k||)| along the sequence')
    common(p)
    p.add_argument('--functional', required=True, help='<x>:<weight>,...')
    p.add_argument('--kmax', type=int, default=30)
    p.add_argument('--threshold', type=float, default=0.01)
    p.add_argument('--csv', help='trace output path')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = vars(args).copy()
    command = values.pop('command')
    sequence = values.pop('sequence', None)
    outputs = {k: values.pop(k) for k in ('out', 'csv') if k in values}
    return RunConfig(
        command=command,
        sequence=sequence,
        json_only=values.pop('json_only'),
        canonical=values.pop('canonical'),
        outputs=outputs,
        options=values,
    )


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(format=config.LOG_FORMAT, level=config.LOG_LEVEL)
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == '__main__':
    sys.exit(main())
