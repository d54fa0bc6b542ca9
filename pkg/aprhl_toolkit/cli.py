from . import __version__
from .aputils import format_scalar
from .audit import AuditError, audit_dp, load_audit
from .config import ConfigError, RunConfig, load_config
from .lang import PWhileSyntaxError, PWhileTypeError, UnknownOperation, PWhileParser, default_optable, parse_file, \
    print_program, initial_memory
from .lifting import LiftingError
from .lifting.checkfile import load_lift_checks, run_lift_check
from .logic import Policy, ProofError, FuzzConfig, FuzzError, check_proof, load_script, soundness_fuzz
from .logic.fuzz import FUZZ_RULES, MUTATIONS
from .mechanisms import MechanismError, certify_named
from .semantics import EvaluationError, UnrollBudgetExceeded, run_program, sample_program
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Sequence, Tuple
from pythonjsonlogger import jsonlogger
import argparse
import hashlib
import json
import logging
import os
import sys

logger = logging.getLogger(__name__)

EXIT_OK: int = 0
EXIT_REFUTED: int = 1
EXIT_USAGE: int = 2

_HANDLER_NAME = 'aprhl-cli'


class UsageError(Exception):
    """An exception raised when the command line names a missing file or a malformed value."""
    pass


def literal(text: str) -> Any:
    """Reads a command-line value: true/false, an integer, or an exact rational such as 0.5 or 1/3."""
    if text in ('true', 'false'):
        return text == 'true'
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f'`{text}` is not a boolean or a number.')


def assignment(text: str) -> Tuple[str, Any]:
    """Reads `name=value`."""
    name, separator, value = text.partition('=')
    if not separator or not name.strip():
        raise argparse.ArgumentTypeError(f'Expected name=value, found `{text}`.')
    return name.strip(), literal(value.strip())


def configure_logging(json_lines: bool = False, verbose: bool = False) -> None:
    """Installs the CLI's stderr handler on the root logger, replacing the one of a previous call."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == _HANDLER_NAME:
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    if json_lines:
        handler.setFormatter(jsonlogger.JsonFormatter('%(asctime)s %(levelname)s %(name)s %(message)s'))
    else:
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _json_default(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_scalar(value)
    if hasattr(value, 'item'):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    return str(value)


class _Output:
    """Writes the result of a subcommand, wrapped with the tool version, the seed and the configuration."""

    def __init__(self, args: argparse.Namespace, config: RunConfig):
        self.args = args
        self.config = config

    def emit(self, record: Dict[str, Any], text: str) -> None:
        if self.args.format == 'record':
            wrapped = {
                'tool': 'aprhl_toolkit',
                'version': __version__,
                'command': self.args.command,
                'seed': self.config.seed,
                'config': self.config.to_record(),
                'result': record,
            }
            print(json.dumps(wrapped, indent=2, default=_json_default))
        else:
            print(text)
            print(f'[aprhl_toolkit {__version__}, seed {self.config.seed}, policy {self.config.policy}]')


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    values: Dict[str, Any] = dict(args.param or [])
    if args.eps is not None:
        values['eps'] = args.eps
    return values


# Subcommands:

def _parse(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    optable = default_optable()
    with open(_existing(args.file), 'r', encoding='utf-8') as source_file:
        program = PWhileParser(source_file.read(), optable, args.file).parse()
    printed = print_program(program)
    reparsed = PWhileParser(printed, optable, '<printed>').parse()
    digest, again = _digest(program), _digest(reparsed)
    record = {'file': args.file, 'ast_hash': digest, 'round_trip': digest == again, 'printed': printed}
    out.emit(record, printed + f'\n-- ast {digest[:16]}, round trip {"ok" if digest == again else "FAILED"}')
    return EXIT_OK if digest == again else EXIT_REFUTED


def _digest(program: Any) -> str:
    shape = (sorted(program.types.items()), sorted((name, param.value) for name, param in program.params.items()),
             list(program.ops.values()), list(program.ctx), program.body)
    return hashlib.sha256(repr(shape).encode('utf-8')).hexdigest()


def _typecheck(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    program = parse_file(_existing(args.file))
    record = {
        'file': args.file,
        'variables': {name: ty.describe() for name, ty in program.ctx},
        'params': {name: format_scalar(param.value) if not isinstance(param.value, bool) else param.value
                   for name, param in program.params.items()},
    }
    out.emit(record, f'{args.file}: well typed, {len(program.ctx)} variables, {len(program.params)} parameters')
    return EXIT_OK


def _run(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    program = parse_file(_existing(args.file))
    program = program.with_params(_overrides(args))
    try:
        memory = initial_memory(program.ctx, dict(args.init or []))
    except ValueError as error:
        raise UsageError(str(error))
    if args.mode == 'exact':
        result = run_program(program, memory, config.exact)
        lines = [f'{dict(point)}: {weight}' for point, weight in result.dist.items()]
        lines.append(f'mass {result.dist.mass()}, residual {result.residual}')
        out.emit(result.to_record(), '\n'.join(lines))
        return EXIT_OK
    result = sample_program(program, memory, args.trials, args.fuel, config.seed,
                            block_size=config.audit.block_size, workers=args.workers)
    record = result.to_record()
    out.emit(record, json.dumps(record['summary'], indent=2, default=_json_default) +
             f'\n{result.completed} of {result.trials} runs completed')
    return EXIT_OK


def _lift_check(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    results = [run_lift_check(check) for check in load_lift_checks(_existing(args.file))]
    lines = [f'{result.check.location}: {"member" if result.member else "not a member"} at {result.check.grade} '
             f'(least delta {format_scalar(result.delta)}){"" if result.passed else "  UNEXPECTED"}'
             for result in results]
    out.emit({'checks': [result.to_record() for result in results]}, '\n'.join(lines))
    return EXIT_OK if all(result.passed for result in results) else EXIT_REFUTED


def _certify(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    names = {'sigma': args.sigma, 'rho': args.rho, 'eps': args.eps, 'delta': args.delta, 'c': args.c,
             'variant': args.variant}
    params = {name: value for name, value in names.items() if value is not None}
    try:
        certificate = certify_named(args.kind, params, args.r, config.grid)
    except KeyError as error:
        raise UsageError(f'`certify {args.kind}` needs --{error.args[0]}.')
    grade = certificate.grade
    out.emit(certificate.to_record(),
             f'{certificate.mechanism} at r = {format_scalar(args.r)}: grade (gamma, delta) = '
             f'({float(grade.gamma):.12g}, {format_scalar(grade.delta)}), eps = {format_scalar(grade.eps)} '
             f'[{certificate.status}]')
    return EXIT_OK


def _check(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    script = load_script(_existing(args.file), _overrides(args), config)
    report = check_proof(script, config, Policy.named(config.policy), oracle=args.oracle)
    out.emit(report.to_record(), report.describe())
    return EXIT_OK if report.accepted else EXIT_REFUTED


def _audit(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    spec = load_audit(_existing(args.file), _overrides(args), config)
    if args.trials is not None:
        spec.trials = args.trials
        spec.__post_init__()
    report = audit_dp(spec, config)
    out.emit(report.to_record(), report.describe())
    return EXIT_OK if report.verdict == 'Consistent' else EXIT_REFUTED


def _fuzz(args: argparse.Namespace, config: RunConfig, out: _Output) -> int:
    rules = tuple(rule.strip() for rule in args.rules.split(',')) if args.rules else FUZZ_RULES
    cfg = FuzzConfig(trials=args.trials, program_size=args.size, support_bound=args.support_bound, rules=rules,
                     seed=config.seed, mutation=args.mutation, workers=args.workers, run=config)
    summary = soundness_fuzz(cfg)
    lines = [f'{rule}: {summary.checked[rule]} checked, {summary.skipped[rule]} skipped' for rule in rules]
    lines += [f'COUNTEREXAMPLE [{item.rule}] trial {item.trial}: {item.conclusion.describe()}'
              for item in summary.counterexamples]
    out.emit(summary.to_record(), '\n'.join(lines))
    return EXIT_OK if not summary.counterexamples else EXIT_REFUTED


def _existing(path: str) -> str:
    if not os.path.isfile(path):
        raise UsageError(f'The file {path} does not exist.')
    return path


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig, _Output], int]] = {
    'parse': _parse,
    'typecheck': _typecheck,
    'run': _run,
    'lift-check': _lift_check,
    'certify': _certify,
    'check': _check,
    'audit': _audit,
    'fuzz-soundness': _fuzz,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='the random seed (default: $APRHL_SEED or the built-in seed)')
    common.add_argument('--config', help='a YAML file of settings')
    common.add_argument('--policy', choices=['strict', 'standard', 'permissive'], help='the side-condition policy')
    common.add_argument('--format', choices=['text', 'record'], default='text', help='the report format')
    common.add_argument('--param', type=assignment, action='append', metavar='NAME=VALUE',
                        help='override a program or script parameter')
    common.add_argument('--eps', type=literal, help='the privacy parameter eps (shorthand for --param eps=...)')
    common.add_argument('--log-json', action='store_true', help='log JSON lines to stderr')
    common.add_argument('--verbose', action='store_true', help='log debug messages')

    parser = argparse.ArgumentParser(prog='aprhl', description='Differential-privacy verification of pWHILE programs.')
    parser.add_argument('--version', action='version', version=f'aprhl_toolkit {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    for name, description in (('parse', 'parse a program and check the printer round trip'),
                              ('typecheck', 'parse and typecheck a program')):
        sub = commands.add_parser(name, parents=[common], help=description)
        sub.add_argument('file')

    run = commands.add_parser('run', parents=[common], help='interpret a program exactly or by sampling')
    run.add_argument('file')
    run.add_argument('--mode', choices=['exact', 'sample'], default='exact')
    run.add_argument('--init', type=assignment, action='append', metavar='NAME=VALUE', help='an initial value')
    run.add_argument('--trials', type=int, default=10_000)
    run.add_argument('--fuel', type=int, default=10_000)
    run.add_argument('--workers', type=int, default=1)

    lift = commands.add_parser('lift-check', parents=[common], help='decide lifting memberships from a file')
    lift.add_argument('file')

    certify = commands.add_parser('certify', parents=[common], help='certify a noise mechanism')
    certify.add_argument('kind', choices=['lap', 'gauss', 'cauchy', 'exp'])
    certify.add_argument('--sigma', type=literal)
    certify.add_argument('--rho', type=literal)
    certify.add_argument('--delta', type=literal)
    certify.add_argument('--c', type=literal, help='the score sensitivity of the exponential mechanism')
    certify.add_argument('--variant', choices=['standard', 'relaxed'])
    certify.add_argument('--r', type=literal, default=1, help='the adjacency radius')

    check = commands.add_parser('check', parents=[common], help='check an apRHL proof script')
    check.add_argument('file')
    check.add_argument('--oracle', action='store_true', help='validate the final judgement on finite memories')

    audit = commands.add_parser('audit', parents=[common], help='audit a privacy claim statistically')
    audit.add_argument('file')
    audit.add_argument('--trials', type=int, help='override the number of trials of the audit spec')

    fuzz = commands.add_parser('fuzz-soundness', parents=[common], help='fuzz the proof rules against the oracle')
    fuzz.add_argument('--trials', type=int, default=50, help='trials per rule')
    fuzz.add_argument('--rules', help=f'comma-separated rules among {",".join(FUZZ_RULES)}')
    fuzz.add_argument('--mutation', choices=sorted(MUTATIONS), help='fuzz a deliberately broken grade algebra')
    fuzz.add_argument('--size', type=int, default=2, help='statements per generated command')
    fuzz.add_argument('--support-bound', type=int, default=8)
    fuzz.add_argument('--workers', type=int, default=4)
    return parser


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one subcommand.

    :param argv: The arguments (the process arguments by default).
    :return: The exit code: 0 on success, an accepted proof or a Consistent audit; 1 on a refutation, a
        violation or an ill-formed input; 2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return EXIT_USAGE if exit_request.code not in (0, None) else EXIT_OK
    configure_logging(args.log_json, args.verbose)
    try:
        config = load_config(args.config, {'seed': args.seed, 'policy': args.policy})
        logger.info("aprhl %s, seed %d, policy %s", args.command, config.seed, config.policy)
        return COMMANDS[args.command](args, config, _Output(args, config))
    except (UsageError, ConfigError, FileNotFoundError) as error:
        print(f'aprhl {args.command}: {error}', file=sys.stderr)
        return EXIT_USAGE
    except (PWhileSyntaxError, PWhileTypeError, UnknownOperation, ProofError, AuditError, MechanismError,
            LiftingError, EvaluationError, UnrollBudgetExceeded, FuzzError, ValueError) as error:
        print(f'aprhl {args.command}: {type(error).__name__}: {error}', file=sys.stderr)
        return EXIT_REFUTED


def main() -> None:
    sys.exit(run_command())
