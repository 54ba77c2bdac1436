"""
Command-line front end for the Oscillatory Operator Laboratory

    osclab factor --degree 4 --coeffs 1,0,1
    osclab apply --config apply.json --variants T,T1,T2
    osclab sweep --config decay.json --out runs/decay
    osclab ranges --n 4 --mu 0.5
    osclab audit --config audit.json
    osclab verify-kernel --mu 0.5
"""

import argparse
import logging
import sys
from typing import List, Optional

from . import __version__
from .config import ACCEPTANCE, EXIT_CODES, KERNEL, OUTPUT_DIR
from .errors import (
    ConfigError, DampingSingularity, DegenerateHessian, InvalidPhase,
    QuadratureFailure, ResolutionInadequate, RootIsolationFailure
)
from .experiments import decomposition_audit, p_ranges, interpolation_exponents, run_experiment
from .operator import Variant, apply_many
from .phase import HomogeneousPhase, factor_hessian
from .run_manager import RunManager
from .validators import (
    load_config_document, validate_experiment_config, validate_kernel_spec,
    validate_operator_config
)

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the usage code instead of argparse's 2"""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_CODES['usage'])


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--config', type=str, default=None, help='JSON experiment document')
    common.add_argument('--seed', type=int, default=None, help='Seed for every random start')
    common.add_argument('--threads', type=int, default=None, help='Worker threads for lambda/x jobs')
    common.add_argument('--quad-tol', type=float, default=None, help='Absolute quadrature tolerance')
    common.add_argument('--out', type=str, default=None, help=f'Output directory (default {OUTPUT_DIR})')

    parser = _Parser(
        prog='osclab',
        description='Numerical laboratory for degenerate and singular oscillatory integral operators',
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    factor = commands.add_parser('factor', parents=[common], help='Factor the mixed Hessian of a phase')
    factor.add_argument('--degree', type=int, required=True)
    factor.add_argument('--coeffs', type=_float_list, required=True, help='a_1,...,a_{n-1}')

    apply = commands.add_parser('apply', parents=[common], help='Evaluate operator variants at points')
    apply.add_argument('--variants', type=str, default='T', help="Comma list, e.g. 'T,T1,T2,group:Y'")
    apply.add_argument('--x', type=_float_list, default=None, help='Output points (overrides sample_xs)')

    commands.add_parser('sweep', parents=[common], help='Run the experiment named in the config')

    ranges = commands.add_parser('ranges', parents=[common], help='Theorem and necessary p-ranges')
    ranges.add_argument('--n', type=int, required=True)
    ranges.add_argument('--mu', type=float, required=True)

    commands.add_parser('audit', parents=[common], help='Check T = T1 + T2 and T2 = T_X + T_Delta + T_Y')

    verify = commands.add_parser('verify-kernel', parents=[common], help='Check kernel size/derivative conditions')
    verify.add_argument('--mu', type=float, required=True)
    verify.add_argument('--E', type=float, default=1.0)
    verify.add_argument('--family', choices=['power', 'modulated'], default='power')
    verify.add_argument('--modulation', type=str, default='one')
    verify.add_argument('--samples', type=int, default=KERNEL['samples'])
    verify.add_argument('--include-ac', action='store_true', help='Also check the x-derivative condition')
    return parser


def _overrides(args) -> dict:
    return {'seed': args.seed, 'threads': args.threads, 'quad_tol': args.quad_tol, 'output': args.out}


def _require_config(args):
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config")
    return load_config_document(args.config)


def cmd_factor(args) -> int:
    try:
        phase = HomogeneousPhase(args.degree, tuple(args.coeffs))
    except InvalidPhase as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES['degenerate']
    fact = factor_hessian(phase)
    error = abs(fact.evaluate(1.0, 0.5) - phase.hessian(1.0, 0.5))
    if error > ACCEPTANCE['factor_reconstruction_tol'] * (1 + abs(phase.hessian(1.0, 0.5))):
        logger.warning(f"Factorization reconstruction error {error:.3g}")
    print(fact)
    return EXIT_CODES['pass']


def cmd_apply(args) -> int:
    document = _require_config(args)
    settings, _ = validate_operator_config(document, _overrides(args))
    try:
        variants = [Variant.parse(v) for v in args.variants.split(',')]
    except ValueError as e:
        raise ConfigError(str(e), field='variants')
    xs = args.x if args.x is not None else settings['sample_xs']
    cfg, f = settings['operator'], settings['function']

    manager = RunManager(settings['output'] or OUTPUT_DIR)
    results = {str(v): apply_many(cfg, v, f, xs, threads=settings['threads']) for v in variants}
    rows = []
    for i, x in enumerate(xs):
        for v in variants:
            r = results[str(v)][i]
            rows.append({'x': x, 'variant': str(v), 're': r.value.real, 'im': r.value.imag,
                         'err': r.abs_error_estimate})
        if {'T', 'T1', 'T2'} <= set(results):
            split = results['T'][i].value - results['T1'][i].value - results['T2'][i].value
            rows.append({'x': x, 'variant': 'T-T1-T2', 're': split.real, 'im': split.imag,
                         'err': 3 * cfg.quad_tol})
    manager.write_table('apply', rows)
    manager.write_manifest(args.config, document, command='apply')
    manager.close()
    return EXIT_CODES['pass']


def cmd_sweep(args) -> int:
    document = _require_config(args)
    settings, _ = validate_experiment_config(document, _overrides(args))
    manager = RunManager(settings['output'] or OUTPUT_DIR)
    report = run_experiment(settings)
    manager.record_report(report)
    manager.write_summary()
    manager.write_manifest(args.config, document, command='sweep')
    manager.close()
    print(report.summary)
    return EXIT_CODES['fail'] if manager.failed else EXIT_CODES['pass']


def cmd_ranges(args) -> int:
    try:
        report = p_ranges(args.n, args.mu)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES['usage']
    bookkeeping = interpolation_exponents(args.n, args.mu)
    print(report)
    print(f"interpolation: theta={bookkeeping['theta']:.4f}, p={bookkeeping['p']:.4f}, "
          f"decay={bookkeeping['decay']:.4f}")
    return EXIT_CODES['pass']


def cmd_audit(args) -> int:
    document = _require_config(args)
    settings, _ = validate_operator_config(document, _overrides(args))
    manager = RunManager(settings['output'] or OUTPUT_DIR)
    report = decomposition_audit(settings['operator'], settings['function'], settings['sample_xs'],
                                 threads=settings['threads'])
    manager.record_report(report)
    manager.write_summary()
    manager.write_manifest(args.config, document, command='audit')
    manager.close()
    print(report.summary)
    return EXIT_CODES['fail'] if manager.failed else EXIT_CODES['pass']


def cmd_verify_kernel(args) -> int:
    from .weights import verify_kernel_conditions

    kernel, _ = validate_kernel_spec({'mu': args.mu, 'E': args.E, 'family': args.family,
                                      'modulation': args.modulation}, field='kernel')
    report = verify_kernel_conditions(kernel, samples=args.samples, include_ac=args.include_ac,
                                      seed=args.seed or 0)
    for row in report.as_rows():
        print(f"{row['condition']:>4} order {row['order']}: max ratio {row['max_ratio']:.6g} "
              f"{'pass' if row['pass'] else 'FAIL'}")
    return EXIT_CODES['pass'] if report.passed else EXIT_CODES['fail']


COMMANDS = {
    'factor': cmd_factor,
    'apply': cmd_apply,
    'sweep': cmd_sweep,
    'ranges': cmd_ranges,
    'audit': cmd_audit,
    'verify-kernel': cmd_verify_kernel
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES['usage']
    except (DegenerateHessian, RootIsolationFailure, InvalidPhase) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES['degenerate']
    except (QuadratureFailure, DampingSingularity) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES['quadrature']
    except ResolutionInadequate as e:
        print(f"error: {e}", file=sys.stderr)
        logger.error(f"Resolution diagnostics: {e.diagnostics}")
        return EXIT_CODES['resolution']


if __name__ == '__main__':
    sys.exit(main())
