import csv
import dataclasses
import enum
import json

import numpy
from scipy import optimize

from . import error
from .config import parallel_map
from .debug import debug, warn
from .families import Kind, get_annulus, get_case, get_interval
from .quadrature import DEFAULT_SETTINGS, generator_vector, get_settings, \
    lower_arc_integral, monomial_values
from .reduction import get_perturbation, melnikov_symbolic, \
    random_perturbation

DEFAULT_GRID = 2000
DEFAULT_REFINE_TOL = 1e-10
MARGIN = 1e-4
# A local minimum of |M| this far below the largest grid value, with no sign
# change around it, is reported as a possible double zero.
TANGENCY_FACTOR = 1e-6


class ZeroKind(enum.Enum):
    SIGN_CHANGE = 'sign-change'
    TANGENCY_SUSPECT = 'tangency-suspect'


@dataclasses.dataclass(frozen=True)
class Zero:
    lo: float
    hi: float
    h: float
    kind: ZeroKind

    def to_json(self):
        return {'bracket': [self.lo, self.hi], 'h': self.h,
                'kind': self.kind.value}


@dataclasses.dataclass
class ZeroReport:
    annulus: object
    grid_size: int
    zeros: list
    bound: int
    dropped: int = 0

    @property
    def count_sign_changes(self):
        return sum(1 for z in self.zeros if z.kind == ZeroKind.SIGN_CHANGE)

    @property
    def within_bound(self):
        return self.count_sign_changes <= self.bound

    def to_json(self):
        return {
            'annulus': self.annulus.value,
            'grid_size': self.grid_size,
            'zeros': [z.to_json() for z in self.zeros],
            'count_sign_changes': self.count_sign_changes,
            'bound': self.bound,
            'within_bound': self.within_bound,
            'dropped_points': self.dropped,
        }


def theorem_bound(case, n):
    '''Upper bound on the number of limit cycles bifurcating from the
    annulus at first order, for perturbations of degree n.'''
    minimum = 2 if case.kind == Kind.PARABOLIC else 3
    if n < minimum:
        raise error.DegreeTooSmallError(
            "the bound for {} needs n >= {}, got {}".format(
                case.kind.value, minimum, n))
    if case.kind == Kind.PARABOLIC:
        return 12 * n + 24
    if case.kind == Kind.TRIANGLE:
        return 24 * n + 126
    return 25 * n + 161


def _bound_for(case, n):
    # A degree n perturbation is also one of every larger degree.
    minimum = 2 if case.kind == Kind.PARABOLIC else 3
    return theorem_bound(case, max(n, minimum))


# Evaluating M.
# -------------

def melnikov_numeric(case, annulus, pert, at, settings=DEFAULT_SETTINGS):
    '''M(h) term by term from the perturbation. The p dy terms are integrated
    by parts into dx terms and the lower arc is integrated directly on the
    y < 0 branch.'''
    upper = {}
    lower = {}

    def add(terms, idx, value):
        terms[idx] = terms.get(idx, 0) + value
    for (i, j), b in pert.plus_q.items():
        add(upper, (i, j), b)
    for (i, j), b in pert.minus_q.items():
        add(lower, (i, j), b)
    for (i, j), a in pert.plus_p.items():
        if i:
            add(upper, (i - 1, j + 1), a * i / (j + 1))
    for (i, j), a in pert.minus_p.items():
        if i:
            add(lower, (i - 1, j + 1), a * i / (j + 1))

    total = 0.0
    indices = sorted(idx for idx, value in upper.items() if value != 0)
    if indices:
        values = monomial_values(case, annulus, at, indices, settings)
        total += sum(float(upper[idx]) * v for idx, v in zip(indices, values))
    for idx, value in sorted(lower.items()):
        if value != 0:
            total += float(value) * lower_arc_integral(
                case, annulus, at, idx, settings, direct=True)
    return total


def melnikov_evaluator(case, annulus, pert, settings=DEFAULT_SETTINGS,
                       symbolic=True):
    '''A float function of h for M. The symbolic path reduces M to the
    generators once and then needs six integrals per point.'''
    if symbolic:
        combination = melnikov_symbolic(case, annulus, pert)

        def evaluate(at):
            return combination.evaluate(
                at, generator_vector(case, annulus, at, settings))
        return evaluate

    def evaluate(at):
        return melnikov_numeric(case, annulus, pert, at, settings)
    return evaluate


def _guarded(function):
    def evaluate(at):
        for attempt in range(2):
            try:
                return function(at)
            except RuntimeError as e:
                debug('evaluation at h={} failed (attempt {}): {}'.format(
                    at, attempt + 1, e))
        warn('dropping grid point h={}'.format(at))
        return None
    return evaluate


def sample(case, annulus, pert, hs, settings=DEFAULT_SETTINGS,
           symbolic=True):
    '''M at every h, in parallel. Points that fail twice come back as
    None.'''
    function = _guarded(melnikov_evaluator(case, annulus, pert, settings,
                                           symbolic))
    return parallel_map(function, hs)


# Zero scanning.
# --------------

def scan_zeros(case, annulus, pert, grid_size=DEFAULT_GRID,
               refine_tol=DEFAULT_REFINE_TOL, settings=DEFAULT_SETTINGS,
               samples=None):
    '''Sign changes of M over a uniform grid, each refined by Brent's
    method, plus suspected tangencies. samples, if given, receives the
    (h, M) pairs that were evaluated.'''
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    interval = get_annulus(case, annulus)
    hs = interval.grid(grid_size, MARGIN)
    evaluate = melnikov_evaluator(case, interval.annulus, pert, settings)
    values = sample(case, interval.annulus, pert, hs, settings)
    points = [(float(x), v) for x, v in zip(hs, values) if v is not None]
    dropped = len(hs) - len(points)
    if samples is not None:
        samples.extend(points)
    debug('scanned', len(points), 'points of', case, interval.annulus.value)

    zeros = []
    nonzero = [(x, v) for x, v in points if v != 0]
    for (x0, v0), (x1, v1) in zip(nonzero, nonzero[1:]):
        if v0 * v1 < 0:
            root = optimize.brentq(evaluate, x0, x1, xtol=refine_tol)
            zeros.append(Zero(x0, x1, float(root), ZeroKind.SIGN_CHANGE))

    if points:
        noise = TANGENCY_FACTOR * max(abs(v) for _, v in points)
        for (x0, v0), (x1, v1), (x2, v2) in zip(points, points[1:],
                                                 points[2:]):
            if (abs(v1) < abs(v0) and abs(v1) < abs(v2) and
                    abs(v1) < noise and v0 * v2 > 0):
                warn('possible tangency of M near h={}'.format(x1))
                zeros.append(Zero(x0, x2, x1, ZeroKind.TANGENCY_SUSPECT))

    zeros.sort(key=lambda z: z.h)
    return ZeroReport(interval.annulus, grid_size, zeros,
                      _bound_for(case, pert.n), dropped)


# Output files.
# -------------

def write_csv(path, points):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['h', 'M'])
        for x, value in points:
            writer.writerow(['{:.17g}'.format(x), '{:.17g}'.format(value)])


def write_svg(path, points, report, title):
    '''Static plot of M(h) with the zeros marked. Needs matplotlib.'''
    import matplotlib
    matplotlib.use('Agg')
    from matplotlib import pyplot

    xs = numpy.array([x for x, _ in points])
    ys = numpy.array([v for _, v in points])
    figure, axes = pyplot.subplots(figsize=(7, 4))
    axes.plot(xs, ys, color='C0', linewidth=1.0)
    axes.axhline(0, color='0.6', linewidth=0.6)
    for z in report.zeros:
        marker = 'o' if z.kind == ZeroKind.SIGN_CHANGE else 'x'
        axes.plot(z.h, 0, marker=marker, color='C3')
    axes.set_title(title)
    axes.set_xlabel('h')
    axes.set_ylabel('M(h)')
    figure.savefig(path, format='svg', metadata={'Date': None})
    pyplot.close(figure)


# Command line.
# -------------

def get_grid(args, default=DEFAULT_GRID):
    return int(args['--grid']) if args.get('--grid') else default


def do_melnikov(args):
    case = get_case(args)
    interval = get_interval(args, case)
    pert = get_perturbation(args)
    settings = get_settings(args)
    if args['--h']:
        at = float(args['--h'])
        print(json.dumps({
            'case': str(case),
            'annulus': interval.annulus.value,
            'h': at,
            'symbolic': melnikov_evaluator(case, interval.annulus, pert,
                                           settings)(at),
            'numeric': melnikov_numeric(case, interval.annulus, pert, at,
                                        settings),
        }, indent='  '))
        return
    points = []
    report = scan_zeros(case, interval.annulus, pert, get_grid(args),
                        settings=settings, samples=points)
    output = report.to_json()
    output['case'] = str(case)
    output['perturbation'] = pert.to_json()
    text = json.dumps(output, indent='  ')
    print(text)
    if args['--csv']:
        write_csv(args['--csv'], points)
    if args['--json']:
        with open(args['--json'], 'w') as f:
            f.write(text + '\n')
    if args['--svg']:
        write_svg(args['--svg'], points, report, str(case))


def do_stress(args):
    '''Scan random perturbations and fail if any has more sign changes than
    the bound allows.'''
    case = get_case(args)
    interval = get_interval(args, case)
    n = int(args['--n']) if args['--n'] else 3
    count = int(args['--count']) if args['--count'] else 20
    seed = int(args['--seed']) if args['--seed'] else 0
    grid = get_grid(args, default=400)
    settings = get_settings(args)
    rng = numpy.random.default_rng(seed)
    counts = []
    for k in range(count):
        pert = random_perturbation(n, rng)
        report = scan_zeros(case, interval.annulus, pert, grid,
                            settings=settings)
        debug('stress run', k, ':', report.count_sign_changes, 'zeros')
        counts.append(report.count_sign_changes)
    bound = _bound_for(case, n)
    print(json.dumps({
        'case': str(case),
        'annulus': interval.annulus.value,
        'n': n,
        'runs': count,
        'seed': seed,
        'sign_changes': counts,
        'max_sign_changes': max(counts, default=0),
        'bound': bound,
    }, indent='  '))
    if any(c > bound for c in counts):
        raise error.VerificationError(
            "a random perturbation exceeded the bound {}".format(bound))
