import dataclasses
import json
import math

import numpy

from . import error
from .config import parallel_map
from .debug import debug
from .families import Kind, get_case, get_interval
from .operators import annihilator_residual, eliminate_and_form_F1, \
    elimination_residual, operator_residual, remainder, synthesize_L
from .picard_fuchs import check_parabolic_identities, \
    parabolic_identity_residuals, pf_residual, pf_system, riccati_residual, \
    tabulated_differences, unexpected_differences
from .quadrature import generator_vector, get_settings, j_integral, \
    lower_arc_integral
from .reduction import RECURRENCES, melnikov_symbolic, random_perturbation, \
    recurrence_residual, reduce_monomial

DEFAULT_TOL = 1e-8
# Second derivatives come from differentiated quadrature and lose digits.
SECOND_ORDER_FACTOR = 100
RECURRENCE_TOL = 1e-6
RICCATI_TOL = 1e-5
ANNIHILATOR_TOL = 1e-5
ELIMINATION_TOL = 1e-7
# Samples stay this fraction of the annulus away from both ends.
SAMPLE_MARGIN = 0.02
REDUCTION_LEVEL = 6

DEFAULT_SAMPLES = {
    'pf': 50,
    'recurrence': 20,
    'riccati': 20,
    'annihilator': 30,
}


@dataclasses.dataclass
class Check:
    name: str
    h: float
    residual: float
    tol: float

    @property
    def passed(self):
        return bool(self.residual <= self.tol)

    def to_json(self):
        return {'name': self.name, 'h': self.h, 'residual': self.residual,
                'tol': self.tol, 'passed': self.passed}


def _relative(residual, values):
    return residual / max(float(numpy.max(numpy.abs(values))), 1e-300)


# Suites.
# -------

def pf_checks(case, annulus, hs, settings, tol, experimental=False):
    system = pf_system(case, annulus, experimental)
    for difference in tabulated_differences(system):
        debug('printed entry',
              (difference.block, difference.row, difference.col),
              'is', difference.tabulated, 'derived', difference.derived,
              '(known misprint)' if difference.known else '')
    checks = [Check('tabulated-matrices', None,
                    len(unexpected_differences(system)), 0)]
    if case.kind == Kind.PARABOLIC:
        for name, holds in sorted(check_parabolic_identities().items()):
            checks.append(Check('identity-' + name, None,
                                0 if holds else 1, 0))

    def at(x):
        values = generator_vector(case, annulus, x, settings).values
        slopes = generator_vector(case, annulus, x, settings, 1).values
        first = pf_residual(case, annulus, x, 'first', settings, experimental)
        second = pf_residual(case, annulus, x, 'second', settings,
                             experimental)
        return [Check('first-order', x, _relative(first, values), tol),
                Check('second-order', x, _relative(second, slopes),
                      SECOND_ORDER_FACTOR * tol)]
    for found in parallel_map(at, hs):
        checks.extend(found)
    return checks


def recurrence_checks(case, annulus, hs, settings, tol):
    indices = [(i, level - i) for level in range(REDUCTION_LEVEL + 1)
               for i in range(level + 1)]
    identities = [w for w in RECURRENCES
                  if w != 'energy-derivative' or case.segment]

    def at(x):
        checks = []
        vector = generator_vector(case, annulus, x, settings)
        for idx in indices:
            reduced = reduce_monomial(case, idx).evaluate(x, vector)
            direct = j_integral(case, annulus, x, idx, settings)
            checks.append(Check('reduce-J{}{}'.format(*idx), x,
                                abs(reduced - direct) /
                                max(abs(direct), 1e-300), tol))
        for which in identities:
            idx = (3, 1) if which == 'rule' else (1, 1)
            checks.append(Check(which, x, recurrence_residual(
                case, x, idx, which, annulus, settings), tol))
        for idx in ((0, 0), (1, 2), (2, 3)):
            folded = lower_arc_integral(case, annulus, x, idx, settings)
            direct = lower_arc_integral(case, annulus, x, idx, settings,
                                        direct=True)
            checks.append(Check('fold-J{}{}'.format(*idx), x,
                                abs(folded - direct) /
                                max(abs(direct), 1e-300), tol))
        if case.kind == Kind.PARABOLIC:
            root = math.sqrt(4 + 2 * x)
            for idx, closed in (((0, 0), 2 * root), ((1, 0), 4 * root)):
                value = j_integral(case, annulus, x, idx, settings)
                checks.append(Check('closed-form-J{}{}'.format(*idx), x,
                                    abs(value - closed) / closed, tol))
        return checks
    checks = []
    for found in parallel_map(at, hs):
        checks.extend(found)
    return checks


def riccati_checks(case, annulus, hs, settings, tol):
    ratios = ['omega'] if case.kind == Kind.PARABOLIC else ['omega', 'nu']

    def at(x):
        checks = [Check('riccati-' + which, x,
                        riccati_residual(case, x, which, annulus, settings),
                        tol)
                  for which in ratios]
        if case.kind == Kind.PARABOLIC:
            residuals = parabolic_identity_residuals(case, annulus, x,
                                                     settings)
            checks.extend(Check('identity-' + name, x, value, tol)
                          for name, value in sorted(residuals.items()))
        return checks
    checks = []
    for found in parallel_map(at, hs):
        checks.extend(found)
    return checks


def annihilator_checks(case, annulus, hs, settings, tol, count=2, n=3,
                       seed=0):
    rng = numpy.random.default_rng(seed)
    checks = []
    for k in range(count):
        pert = random_perturbation(n, rng)
        combination = melnikov_symbolic(case, annulus, pert)
        result = eliminate_and_form_F1(case, combination, pert.n)
        L = synthesize_L(case, result.f1.phi1, pert.n)
        R = remainder(case, L, result.f1)
        debug('annihilator', k, 'of order', L.m2, 'with', L.equations,
              'equations and', L.unknowns, 'unknowns, within ceiling:',
              L.within_order_ceiling)

        def at(x, result=result, L=L, R=R, combination=combination, k=k):
            return [
                Check('elimination-{}'.format(k), x, elimination_residual(
                    case, combination, result, annulus, x, settings),
                    ELIMINATION_TOL),
                Check('annihilator-{}'.format(k), x, annihilator_residual(
                    case, L, result.f1.phi1, x, annulus, settings), tol),
                Check('remainder-{}'.format(k), x, operator_residual(
                    case, L, result.f1, R, x, annulus, settings), tol),
            ]
        for found in parallel_map(at, hs):
            checks.extend(found)
    return checks


# Command line.
# -------------

def print_checks(suite, case, checks):
    for check in checks:
        where = '' if check.h is None else 'h={:.6g}'.format(check.h)
        print('{:<32} {:<14} {:<12.3e} {:<10.1e} {}'.format(
            check.name, where, check.residual, check.tol,
            'pass' if check.passed else 'FAIL'))
    failed = [c for c in checks if not c.passed]
    print(json.dumps({
        'suite': suite,
        'case': str(case),
        'checks': len(checks),
        'failed': len(failed),
        'worst': max((c.residual for c in checks if c.h is not None),
                     default=0.0),
        'failures': [c.to_json() for c in failed],
    }, indent='  '))
    return failed


def do_verify(args):
    case = get_case(args)
    interval = get_interval(args, case)
    settings = get_settings(args)
    suite = next(name for name in DEFAULT_SAMPLES if args[name])
    samples = int(args['--samples']) if args['--samples'] else \
        DEFAULT_SAMPLES[suite]
    hs = [float(x) for x in interval.grid(samples, SAMPLE_MARGIN)]
    annulus = interval.annulus
    if suite == 'pf':
        tol = float(args['--tol']) if args['--tol'] else DEFAULT_TOL
        checks = pf_checks(case, annulus, hs, settings, tol,
                           args['--experimental'])
    elif suite == 'recurrence':
        tol = float(args['--tol']) if args['--tol'] else RECURRENCE_TOL
        checks = recurrence_checks(case, annulus, hs, settings, tol)
    elif suite == 'riccati':
        tol = float(args['--tol']) if args['--tol'] else RICCATI_TOL
        checks = riccati_checks(case, annulus, hs, settings, tol)
    else:
        tol = float(args['--tol']) if args['--tol'] else ANNIHILATOR_TOL
        count = int(args['--count']) if args['--count'] else 2
        checks = annihilator_checks(case, annulus, hs, settings, tol, count)
    failed = print_checks(suite, case, checks)
    if failed:
        raise error.VerificationError(
            "{} of {} {} checks failed".format(len(failed), len(checks),
                                               suite))
