"""
Command-line front end.

    obstruction-forge validate TWO-RING.model
    obstruction-forge reduce TWO-RING.model g1,g2,u0 --output structured

Exit status is 0 when every check passes, 1 when a theorem-level check fails
and 2 for input errors.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from natsort import natsorted

from ._version import __version__
from .certify.weights import (MissingConstantError, ThresholdError,
                              certify_grotzsch, find_t_threshold, sigma,
                              solve_rho)
from .config import load_options
from .decompose import classify, to_dot
from .model import (ModelError, _DATA_DIR, open_example_model, open_model,
                    validate_model)
from .multicurve import (Multicurve, enumerate_stable, generate_gamma,
                         transition_matrix)
from .reduction import (ReductionError, check_combination,
                        verify_reduction_identity)
from .spectral import (NotContractingError, contraction_vector,
                       is_contracting, power_lambda)
from .utils import configure_logging, dump_structured, parse_rational

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('validate', 'gamma', 'obstruction', 'decompose', 'reduce',
               'combine', 'certify')
OUTPUTS = ('text', 'structured', 'dot')

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


@dataclass(frozen=True)
class RunConfig:
    """
    One command-line invocation.

    ``tol``, ``enumeration_cap`` and ``default_constant`` override the
    options file when given.
    """

    subcommand: str
    model_path: Path
    tol: float = None
    enumeration_cap: int = None
    output: str = 'text'
    multicurve: str = None
    config_path: Path = None
    default_constant: Fraction = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError("Unknown subcommand {!r}".format(self.subcommand))
        if self.output not in OUTPUTS:
            raise ValueError("Unknown output format {!r}".format(self.output))
        if self.output == 'dot' and self.subcommand != 'decompose':
            raise ValueError("DOT output is only available for decompose")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("--tol must be positive, got {}".format(self.tol))
        if self.enumeration_cap is not None and self.enumeration_cap < 1:
            raise ValueError("--cap must be at least 1, got {}"
                             .format(self.enumeration_cap))
        if self.subcommand == 'reduce' and not self.multicurve:
            raise ValueError("reduce needs a multicurve such as g1,g2,u0")

    def options(self):
        return load_options(self.config_path).updated(
            tol=self.tol, enumeration_cap=self.enumeration_cap,
            default_constant=self.default_constant)


@dataclass(frozen=True)
class GammaSummary:
    gamma: Multicurve
    matrix: object
    lambda_estimate: float
    contracting: bool
    vector: tuple

    @property
    def passed(self):
        return self.contracting

    def to_dict(self):
        return {'gamma': self.gamma, 'matrix': self.matrix,
                'lambda': self.lambda_estimate,
                'contracting': self.contracting,
                'contraction_vector': (None if self.vector is None
                                       else list(self.vector)),
                'passed': self.passed}

    def to_text(self):
        lines = ['Γ = {}'.format(self.gamma)]
        for row in self.matrix.to_strings():
            lines.append('  [' + ', '.join(row) + ']')
        lines.append('λ(Γ) ≈ {:.9g}, {}'.format(
            self.lambda_estimate,
            'contracting' if self.contracting else 'NOT contracting'))
        if self.vector is not None:
            lines.append('v = (' + ', '.join(str(x) for x in self.vector)
                         + ')')
        return '\n'.join(lines)


@dataclass(frozen=True)
class ObstructionSummary:
    stable: tuple
    obstructions: tuple

    @property
    def passed(self):
        return not self.obstructions

    def to_dict(self):
        return {'stable': [{'multicurve': c, 'lambda': x}
                           for c, x in self.stable],
                'obstructions': [{'multicurve': c, 'lambda': x}
                                 for c, x in self.obstructions],
                'passed': self.passed}

    def to_text(self):
        if self.obstructions:
            lines = ['obstructed; {} of {} stable multicurves are not '
                     'contracting'.format(len(self.obstructions),
                                          len(self.stable))]
            for multicurve, estimate in self.obstructions:
                lines.append('  {} λ ≈ {:.9g}'.format(multicurve, estimate))
            return '\n'.join(lines)
        if len(self.stable) == 1:
            return 'unobstructed; only stable multicurve is {}'.format(
                self.stable[0][0])
        return 'unobstructed; {} stable multicurves, all contracting'.format(
            len(self.stable))


@dataclass(frozen=True)
class CertificationSummary:
    gamma: Multicurve
    vector: tuple
    rho: object
    sigma: object
    threshold: object
    grotzsch: object

    @property
    def passed(self):
        return self.threshold.holds and self.grotzsch.passed

    def to_dict(self):
        return {'gamma': self.gamma, 'contraction_vector': list(self.vector),
                'rho': self.rho, 'sigma': self.sigma,
                'threshold': self.threshold, 'grotzsch': self.grotzsch,
                'passed': self.passed}

    def to_text(self):
        lines = ['Γ = {}, v = ({})'.format(
                     self.gamma, ', '.join(str(x) for x in self.vector))]
        for (curve, side), value in natsorted(self.rho.values.items()):
            lines.append('  ρ({}, {}) = {}'.format(side, curve, value))
        for key, form in self.sigma.to_dict().items():
            lines.append('  σ_t({}) = {}'.format(key, form))
        argmax = self.threshold.argmax
        lines.append('t* = {}{}'.format(
            self.threshold.t_star,
            '' if argmax is None else ' ({} at {})'.format(argmax.name,
                                                           argmax.location)))
        failures = self.threshold.failures(self.threshold.certified_at)
        lines.append('{} inequalities at t = {}: {}'.format(
            len(self.threshold.inequalities), self.threshold.certified_at,
            'all hold' if not failures
            else 'FAIL at ' + ', '.join(i.location for i in failures)))
        for entry in self.grotzsch.entries:
            lines.append('  Grötzsch {}: modulus {} > {} {}'.format(
                entry.location, entry.modulus, entry.budget,
                'pass' if entry.passed else 'FAIL'))
        lines.append('certified' if self.passed else 'NOT certified')
        return '\n'.join(lines)


def _load(path):
    path = Path(path)
    if not path.is_file() and path.suffix == '.model' \
            and (_DATA_DIR / path.name).is_file():
        logger.info("Using the shipped model %s", path.name)
        return open_example_model(path.stem)
    return open_model(path)


def _gamma(m, options):
    gamma = generate_gamma(m)
    W = transition_matrix(m, gamma)
    contracting = is_contracting(W, max_bits=options.max_bits)
    vector = (tuple(contraction_vector(W, max_bits=options.max_bits))
              if contracting else None)
    return GammaSummary(
        gamma=gamma, matrix=W, contracting=contracting, vector=vector,
        lambda_estimate=power_lambda(W, tol=options.tol,
                                     max_iterations=options.max_iterations))


def _obstruction(m, options):
    stable = enumerate_stable(m, options)
    obstructions = [(c, x) for c, x in stable
                    if not is_contracting(transition_matrix(m, c),
                                          max_bits=options.max_bits)]
    return ObstructionSummary(stable=tuple(stable),
                              obstructions=tuple(obstructions))


def _certify(m, options):
    gamma = generate_gamma(m)
    vector = tuple(contraction_vector(transition_matrix(m, gamma),
                                      max_bits=options.max_bits))
    rho = solve_rho(m, gamma, vector)
    sigma_function = sigma(m, rho, vector)
    _, threshold = find_t_threshold(m, rho, vector, m.grotzsch_constants,
                                    default_constant=options.default_constant)
    grotzsch = certify_grotzsch(m, sigma_function, threshold.certified_at,
                                m.grotzsch_constants,
                                default_constant=options.default_constant)
    return CertificationSummary(gamma=gamma, vector=vector, rho=rho,
                                sigma=sigma_function, threshold=threshold,
                                grotzsch=grotzsch)


def _dispatch(config, m, options):
    command = config.subcommand
    if command == 'validate':
        report = validate_model(m, options)
        return report.passed, report
    if command == 'gamma':
        report = _gamma(m, options)
        return report.passed, report
    if command == 'obstruction':
        report = _obstruction(m, options)
        return report.passed, report
    if command == 'decompose':
        report = classify(m, options)
        return report.passed, report
    if command == 'reduce':
        C = Multicurve.parse(config.multicurve, m)
        report = verify_reduction_identity(m, C, tol=options.tol,
                                           options=options)
        return report.holds, report
    if command == 'combine':
        report = check_combination(m, options)
        return report.agree and not report.lhs_obstructed, report
    if command == 'certify':
        report = _certify(m, options)
        return report.passed, report
    raise ValueError("Unknown subcommand {!r}".format(command))


def _render(config, report):
    if config.output == 'structured':
        return dump_structured(report)
    if config.output == 'dot':
        if report.dynamics is None:
            raise ValueError("Piece dynamics could not be built, no DOT "
                             "output")
        return to_dot(report.dynamics)
    return report.to_text() + '\n'


def run(config):
    """
    Execute one subcommand.

    Parameters
    ----------
    config : RunConfig

    Returns
    -------
    (int, str)
        Exit status and the report text.
    """

    try:
        options = config.options()
        m = _load(config.model_path)
        passed, report = _dispatch(config, m, options)
        text = _render(config, report)
    except ReductionError as e:
        return EXIT_FAIL, 'reduction identity FAILS: {}\n'.format(e)
    except (NotContractingError, ThresholdError) as e:
        return EXIT_FAIL, 'not certified: {}\n'.format(e)
    except MissingConstantError as e:
        return EXIT_INPUT, 'error: {}\n'.format(e.args[0])
    except (ModelError, IOError, ValueError) as e:
        return EXIT_INPUT, 'error: {}\n'.format(e)
    return (EXIT_PASS if passed else EXIT_FAIL), text


def _parser():
    parser = argparse.ArgumentParser(
        prog='obstruction-forge',
        description='Check combinatorial models of branched covers with '
                    'rotation domains for Thurston-type obstructions.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(__version__))
    subparsers = parser.add_subparsers(dest='subcommand', required=True)

    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument('model_path', type=Path, metavar='MODEL')
        if name == 'reduce':
            sub.add_argument('multicurve', metavar='C',
                             help='comma-separated curve ids')
        sub.add_argument('--tol', type=float, default=None)
        sub.add_argument('--cap', dest='enumeration_cap', type=int,
                         default=None)
        sub.add_argument('--output', choices=OUTPUTS, default='text')
        sub.add_argument('--config', dest='config_path', type=Path,
                         default=None)
        if name == 'decompose':
            sub.add_argument('--dot', dest='output', action='store_const',
                             const='dot')
        if name == 'certify':
            sub.add_argument('--default-constant', type=parse_rational,
                             default=None)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    configure_logging()
    try:
        config = RunConfig(
            subcommand=args.subcommand, model_path=args.model_path,
            tol=args.tol, enumeration_cap=args.enumeration_cap,
            output=args.output, multicurve=getattr(args, 'multicurve', None),
            config_path=args.config_path,
            default_constant=getattr(args, 'default_constant', None))
    except ValueError as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_INPUT
    code, text = run(config)
    stream = sys.stderr if code == EXIT_INPUT else sys.stdout
    print(text, end='', file=stream)
    return code


if __name__ == '__main__':
    sys.exit(main())
