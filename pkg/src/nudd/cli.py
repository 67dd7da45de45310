"""
Command-line front end.

Exit status is 0 when the run passes, 1 when a verification fails and 2 on
invalid input. Reports are JSON unless another format is requested and
always carry the full run configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from typing import Sequence

from .algebra import GeneratorLabel
from .coeffs import verify_vanishing
from .sequence import IntervalGrid, build_schedule, expand_orders
from .sim import default_t_list, random_bath, scaling_fit
from .walk import exploration_map, verify_walk_zero

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger('nudd')


def _orders(text: str) -> int | tuple[int, ...]:
    try:
        parts = [int(p) for p in text.split(',') if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'orders must be integers, got {text!r}') from None
    if not parts:
        raise argparse.ArgumentTypeError('empty orders')
    return parts[0] if len(parts) == 1 and ',' not in text else tuple(parts)


def _t_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f'bad T list {text!r}') from None


def _label(text: str) -> GeneratorLabel:
    try:
        return GeneratorLabel.from_string(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.nudd-', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w') as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2) + '\n'


def _csv(header: Sequence[str], rows, config: dict) -> str:
    buf = io.StringIO()
    buf.write(f'# config: {json.dumps(config, sort_keys=True)}\n')
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _levels(args) -> int:
    levels = 2*args.m if args.levels is None else args.levels
    if not 1 <= levels <= 2*args.m:
        raise ValueError(f'--levels must lie in 1..{2*args.m}')
    return levels


def cmd_schedule(args, config) -> tuple[str, int]:
    levels = _levels(args)
    orders = expand_orders(args.orders, levels)
    config['orders'] = list(orders)
    sched = build_schedule(args.m, orders, merged=args.merged, levels=levels)
    if args.format == 'csv':
        rows = [(repr(p.fraction), ' '.join(p.ops)) for p in sched.pulses]
        return _csv(('fraction', 'ops'), rows, config), EXIT_OK
    return _dump({'config': config, **sched.to_dict()}), EXIT_OK


def cmd_verify(args, config) -> tuple[str, int]:
    if args.dephasing_only:
        if args.m != 1:
            raise ValueError('--dephasing-only is the single-qubit UDD path; use --m 1')
        levels = 1
    else:
        levels = _levels(args)
    orders = expand_orders(args.orders, levels)
    config.update(orders=list(orders), levels=levels)
    report = verify_vanishing(IntervalGrid.from_orders(orders), tolerance=args.tolerance,
                              max_queries=args.max_queries)
    return (_dump({'config': config, **report.to_dict()}),
            EXIT_OK if report.passed else EXIT_FAIL)


def cmd_walk_map(args, config) -> tuple[str, int]:
    levels = _levels(args)
    beta = args.beta or GeneratorLabel((0,)*(levels - 1) + (1,))
    if len(beta) != levels:
        raise ValueError(f'--beta needs {levels} bits')
    config.update(levels=levels, beta=str(beta))
    walk = exploration_map(args.m, args.N, beta, args.steps, levels=levels)
    zero = verify_walk_zero(args.m, args.N, levels=levels) if args.N > 1 else None
    status = EXIT_OK if zero is None or zero.passed else EXIT_FAIL
    if args.format == 'ascii':
        blocks = [f'step {i}\n{walk.render(i)}' for i in range(args.steps + 1)]
        legend = 'S initial  X explored  # unexplored target  @ explored target  . unexplored'
        return '\n\n'.join(blocks) + f'\n\n{legend}\n', status
    out = {'config': config, **walk.to_dict()}
    if zero is not None:
        out['zero_check'] = zero.to_dict()
    return _dump(out), status


def cmd_simulate(args, config) -> tuple[str, int]:
    levels = _levels(args)
    orders = expand_orders(args.orders, levels)
    t_list = args.t_list or [float(t) for t in default_t_list()]
    config.update(orders=list(orders), t_list=t_list)
    model = random_bath(args.m, args.d, args.degree, args.seed, args.bound)
    fit = scaling_fit(model, None if args.no_pulses else orders, t_list, args.substeps,
                      method=args.method)
    if args.no_pulses:
        expected, passed = 1, True
    else:
        expected = min(orders) + 1
        passed = fit.slope >= expected - 0.3
    if args.format == 'csv':
        rows = [(repr(T), repr(e)) for T, e in fit.points]
        return _csv(('T', 'epsilon'), rows, config), EXIT_OK if passed else EXIT_FAIL
    out = {'config': config, **fit.to_dict(), 'expected_slope': expected, 'passed': passed}
    return _dump(out), EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='nudd', description=__doc__.strip().splitlines()[0])
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p, orders=True):
        p.add_argument('--m', type=int, required=True, help='number of qubits')
        if orders:
            p.add_argument('--orders', type=_orders, required=True,
                           help='uniform order N, or comma list N_1,...,N_L')
        p.add_argument('--levels', type=int, default=None,
                       help='nesting levels (default 2m)')
        p.add_argument('--output', '-o', default=None, help='report path (default stdout)')

    p = sub.add_parser('schedule', help='pulse timings')
    common(p)
    p.add_argument('--merged', action='store_true',
                   help='collapse coincident pulses into one tensor-Pauli, drop identities')
    p.add_argument('--format', choices=('json', 'csv'), default='json')
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser('verify', help='vanishing Dyson coefficients')
    common(p)
    p.add_argument('--dephasing-only', action='store_true',
                   help='single-level UDD against dephasing generators')
    p.add_argument('--tolerance', type=float, default=1e-10)
    p.add_argument('--max-queries', type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('walk-map', help='walk exploration maps')
    common(p, orders=False)
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--steps', type=int, required=True)
    p.add_argument('--beta', type=_label, default=None,
                   help='step label as a bit string (default 0..01)')
    p.add_argument('--format', choices=('ascii', 'json'), default='ascii')
    p.set_defaults(func=cmd_walk_map)

    p = sub.add_parser('simulate', help='decoupling error scaling')
    common(p)
    p.add_argument('--d', type=int, default=2, help='bath dimension')
    p.add_argument('--degree', type=int, default=2, help='bath polynomial degree')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--bound', type=float, default=1.0)
    p.add_argument('--t-list', type=_t_list, default=None)
    p.add_argument('--substeps', type=int, default=64)
    p.add_argument('--method', choices=('midpoint', 'magnus4'), default='magnus4')
    p.add_argument('--no-pulses', action='store_true')
    p.add_argument('--format', choices=('json', 'csv'), default='json')
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    config = {k: (str(v) if isinstance(v, GeneratorLabel) else v)
              for k, v in vars(args).items() if k not in ('func', 'output', 'verbose')}
    if isinstance(config.get('orders'), tuple):
        config['orders'] = list(config['orders'])
    start = time.perf_counter()
    try:
        text, status = args.func(args, config)
    except ValueError as err:
        parser.print_usage(sys.stderr)
        print(f'nudd {args.command}: error: {err}', file=sys.stderr)
        return EXIT_USAGE
    log.info('%s finished in %.2fs with status %d', args.command,
             time.perf_counter() - start, status)
    _write(text, args.output)
    return status


if __name__ == '__main__':
    sys.exit(main())
