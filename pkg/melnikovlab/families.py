import dataclasses
import enum
import functools
import json
import math

import numpy
from numpy.polynomial import polynomial
import sympy

from . import error
from .debug import debug
from .exact import rational

# All four families share the shape H(x, y) = a(x)*y**2 + V(x), with a(x)
# linear and V(x) a polynomial vanishing at 0.


class Kind(enum.Enum):
    ELLIPTIC = 'elliptic'
    HYPERBOLIC = 'hyperbolic'
    PARABOLIC = 'parabolic'
    TRIANGLE = 'triangle'


class Annulus(enum.Enum):
    RIGHT = 'right'
    LEFT = 'left'
    SOLE = 'sole'


class PointKind(enum.Enum):
    CENTER = 'center'
    SADDLE = 'saddle'


@dataclasses.dataclass(frozen=True)
class FamilyCase:
    kind: Kind
    lam: object = None

    def __post_init__(self):
        if self.kind in (Kind.ELLIPTIC, Kind.HYPERBOLIC):
            if self.lam is None:
                raise error.OutOfFamilyError(
                    "{} segment needs a parameter".format(self.kind.value))
            lam = rational(self.lam)
            object.__setattr__(self, 'lam', lam)
            if self.kind == Kind.ELLIPTIC and not 0 < lam < 2:
                raise error.OutOfFamilyError(
                    "elliptic segment needs 0 < lambda < 2, got " + str(lam))
            if self.kind == Kind.HYPERBOLIC and not -1 < lam < 0:
                raise error.OutOfFamilyError(
                    "hyperbolic segment needs -1 < lambda < 0, got " +
                    str(lam))
        elif self.lam is not None:
            raise error.OutOfFamilyError(
                "{} takes no parameter".format(self.kind.value))

    def __str__(self):
        if self.lam is None:
            return self.kind.value
        return "{}(lambda={})".format(self.kind.value, self.lam)

    @property
    def segment(self):
        'Elliptic and hyperbolic segments share every formula.'
        return self.kind in (Kind.ELLIPTIC, Kind.HYPERBOLIC)

    @property
    def a_coeffs(self):
        if self.kind == Kind.TRIANGLE:
            return (sympy.Rational(1, 2), sympy.Integer(1))
        return (sympy.Integer(0), sympy.Integer(1))

    @property
    def v_coeffs(self):
        'Ascending coefficients of V.'
        if self.segment:
            lam = self.lam
            return [sympy.Integer(0), 3 * (lam - 2), -3 * (lam - 1), lam]
        elif self.kind == Kind.PARABOLIC:
            return [sympy.Integer(0), sympy.Integer(-2), sympy.Rational(1, 2)]
        else:
            return [sympy.Integer(0), sympy.Integer(0), sympy.Rational(1, 2),
                    sympy.Rational(-1, 3)]

    @property
    def orientation(self):
        '''+1 when the unperturbed field is (H_y, -H_x), -1 for the
        parabolic system, which runs as (-H_y, H_x).'''
        return -1 if self.kind == Kind.PARABOLIC else 1

    # Float evaluation, used by the numerical modules.

    @functools.cached_property
    def a_float(self):
        return numpy.array([float(c) for c in self.a_coeffs])

    @functools.cached_property
    def v_float(self):
        return numpy.array([float(c) for c in self.v_coeffs])

    @functools.cached_property
    def dv_float(self):
        return polynomial.polyder(self.v_float)

    @functools.cached_property
    def ddv_float(self):
        return polynomial.polyder(self.v_float, 2)

    def weight(self, x):
        return self.a_float[0] + self.a_float[1] * x

    def potential(self, x):
        return polynomial.polyval(x, self.v_float)

    def potential_slope(self, x):
        return polynomial.polyval(x, self.dv_float)

    def potential_curvature(self, x):
        return polynomial.polyval(x, self.ddv_float)

    def energy(self, x, y):
        return self.weight(x) * y * y + self.potential(x)

    def gradient(self, x, y):
        'Returns (H_x, H_y).'
        return (self.a_float[1] * y * y + self.potential_slope(x),
                2 * self.weight(x) * y)


@dataclasses.dataclass(frozen=True)
class CriticalPoint:
    x: object
    y: object
    kind: PointKind
    energy: object

    @property
    def location(self):
        return (float(self.x), float(self.y))

    def to_json(self):
        return {
            'x': float(self.x),
            'y': float(self.y),
            'kind': self.kind.value,
            'energy': str(self.energy),
        }


@dataclasses.dataclass(frozen=True)
class EnergyInterval:
    '''An open interval of energies filled by the ovals of one period
    annulus. The center sits at (center_x, 0).'''
    annulus: Annulus
    lower: object
    upper: object
    center_x: object
    center_energy: object

    @property
    def polycycle_energy(self):
        if self.center_energy == self.lower:
            return self.upper
        return self.lower

    @property
    def length(self):
        return float(self.upper - self.lower)

    def contains(self, h):
        return float(self.lower) < h < float(self.upper)

    def grid(self, count, margin):
        '''count evenly spaced interior energies, keeping margin*length away
        from both ends.'''
        lower, upper = float(self.lower), float(self.upper)
        pad = margin * (upper - lower)
        return numpy.linspace(lower + pad, upper - pad, count)

    def to_json(self):
        return {
            'annulus': self.annulus.value,
            'lower': str(self.lower),
            'upper': str(self.upper),
            'center_energy': str(self.center_energy),
        }


# Operations.
# -----------

def case_from_ab(a, b, tol=1e-10):
    '''Classify a boundary point (a, b) of the quadratic reversible family.
    The segment b = (1-a)*sqrt(1+2a) maps to lambda = (1-a(1+2a))/(1+a).'''
    a_exact = rational(a)
    b = float(b)
    if a_exact == 1:
        if abs(b) > tol:
            raise error.OutOfFamilyError(
                "a=1 needs b=0 for the Hamiltonian triangle")
        return FamilyCase(Kind.TRIANGLE)
    if not sympy.Rational(-1, 2) < a_exact < 1:
        raise error.OutOfFamilyError("a={} outside (-1/2, 1]".format(a))
    expected = (1 - float(a_exact)) * math.sqrt(1 + 2 * float(a_exact))
    if abs(b - expected) > tol:
        raise error.OutOfFamilyError(
            "b={} is off the segment b=(1-a)sqrt(1+2a)={}".format(b, expected))
    if a_exact == sympy.Rational(1, 2):
        return FamilyCase(Kind.PARABOLIC)
    lam = (1 - a_exact * (1 + 2 * a_exact)) / (1 + a_exact)
    kind = Kind.ELLIPTIC if lam > 0 else Kind.HYPERBOLIC
    return FamilyCase(kind, lam)


def hamiltonian(case, point):
    '''Exact for exact inputs, a float as soon as either coordinate is one.'''
    x, y = point
    a0, a1 = case.a_coeffs
    if isinstance(x, float) or isinstance(y, float):
        return float(case.energy(x, y))
    x, y = sympy.sympify(x), sympy.sympify(y)
    value = (a0 + a1 * x) * y**2 + sum(
        c * x**k for k, c in enumerate(case.v_coeffs))
    return sympy.nsimplify(sympy.simplify(value))


def critical_points(case):
    x = sympy.Symbol('x')
    a0, a1 = case.a_coeffs
    potential = sum(c * x**k for k, c in enumerate(case.v_coeffs))
    slope = sympy.diff(potential, x)
    curvature = sympy.diff(potential, x, 2)

    locations = []
    # On the axis: V'(x) = 0.
    for root in sympy.roots(sympy.Poly(slope, x)):
        if root.is_real:
            locations.append((sympy.nsimplify(root), sympy.Integer(0)))
    # Off the axis: a(x) = 0 and a1*y**2 + V'(x) = 0.
    x0 = -a0 / a1
    y_squared = -slope.subs(x, x0) / a1
    if y_squared > 0:
        y0 = sympy.sqrt(y_squared)
        locations.extend([(x0, y0), (x0, -y0)])

    points = []
    for px, py in locations:
        hxx = curvature.subs(x, px)
        hxy = 2 * a1 * py
        hyy = 2 * (a0 + a1 * px)
        determinant = sympy.simplify(hxx * hyy - hxy**2)
        assert determinant != 0, "degenerate critical point"
        kind = PointKind.CENTER if determinant > 0 else PointKind.SADDLE
        points.append(CriticalPoint(px, py, kind,
                                    hamiltonian(case, (px, py))))
    points.sort(key=lambda p: (float(p.x), float(p.y)))
    debug('critical points of', case, [p.location for p in points])
    return points


def annuli(case):
    if case.segment:
        lam = case.lam
        right = EnergyInterval(Annulus.RIGHT, lam - 3, sympy.Integer(0),
                               sympy.Integer(1), lam - 3)
        if case.kind == Kind.HYPERBOLIC:
            return [dataclasses.replace(right, annulus=Annulus.SOLE)]
        left_center = (lam - 2) ** 2 * (lam + 1) / lam**2
        left = EnergyInterval(Annulus.LEFT, sympy.Integer(0), left_center,
                              (lam - 2) / lam, left_center)
        return [right, left]
    elif case.kind == Kind.PARABOLIC:
        return [EnergyInterval(Annulus.SOLE, sympy.Integer(-2),
                               sympy.Integer(0), sympy.Integer(2),
                               sympy.Integer(-2))]
    else:
        return [EnergyInterval(Annulus.SOLE, sympy.Integer(0),
                               sympy.Rational(1, 6), sympy.Integer(0),
                               sympy.Integer(0))]


def get_annulus(case, annulus=None):
    '''Look up one interval by name or Annulus; None picks the first one.'''
    intervals = annuli(case)
    if annulus is None:
        return intervals[0]
    if isinstance(annulus, str):
        annulus = Annulus(annulus)
    for interval in intervals:
        if interval.annulus == annulus:
            return interval
    raise error.UnsupportedAnnulusError(
        "{} has no {} annulus".format(case, annulus.value))


def all_cases(lambdas=('1/2', '1', '3/2'), hyperbolic=('-1/2',)):
    cases = [FamilyCase(Kind.ELLIPTIC, lam) for lam in lambdas]
    cases += [FamilyCase(Kind.HYPERBOLIC, lam) for lam in hyperbolic]
    cases += [FamilyCase(Kind.PARABOLIC), FamilyCase(Kind.TRIANGLE)]
    return cases


# Phase portrait.
# ---------------

def write_portrait(case, path, resolution=400):
    '''Level curves of H through every annulus, with the critical points
    marked. Needs matplotlib.'''
    import matplotlib
    matplotlib.use('Agg')
    from matplotlib import pyplot

    points = critical_points(case)
    xs = [p.location[0] for p in points]
    ys = [p.location[1] for p in points]
    span = max(max(map(abs, xs + ys)), 1.0) * 1.3
    grid_x, grid_y = numpy.meshgrid(
        numpy.linspace(min(xs) - span / 2, max(xs) + span / 2, resolution),
        numpy.linspace(-span, span, resolution))
    energies = case.energy(grid_x, grid_y)

    figure, axes = pyplot.subplots(figsize=(6, 6))
    for interval in annuli(case):
        levels = numpy.sort(interval.grid(7, 0.05))
        axes.contour(grid_x, grid_y, energies, levels=levels, colors='C0',
                     linewidths=0.8)
    saddle_levels = sorted({float(p.energy) for p in points
                            if p.kind == PointKind.SADDLE})
    if saddle_levels:
        axes.contour(grid_x, grid_y, energies, levels=saddle_levels,
                     colors='C3', linewidths=1.2)
    for p in points:
        marker = 'o' if p.kind == PointKind.CENTER else 'x'
        axes.plot(*p.location, marker=marker, color='k')
    axes.axhline(0, color='0.6', linewidth=0.6)
    axes.set_title(str(case))
    axes.set_xlabel('x')
    axes.set_ylabel('y')
    figure.savefig(path, format='svg')
    pyplot.close(figure)


# Command line.
# -------------

def get_case(args):
    family = args['--family'] or 'elliptic'
    kind = Kind(family)
    if kind in (Kind.ELLIPTIC, Kind.HYPERBOLIC):
        lam = args['--lambda']
        if lam is None:
            lam = '1' if kind == Kind.ELLIPTIC else '-1/2'
        return FamilyCase(kind, lam)
    if args['--lambda'] is not None:
        raise error.OutOfFamilyError("{} takes no --lambda".format(family))
    return FamilyCase(kind)


def get_interval(args, case):
    return get_annulus(case, args['--annulus'])


def do_families(args):
    if args['--family']:
        cases = [get_case(args)]
    else:
        cases = all_cases()
    report = []
    for case in cases:
        report.append({
            'case': str(case),
            'critical_points': [p.to_json() for p in critical_points(case)],
            'annuli': [interval.to_json() for interval in annuli(case)],
        })
    print(json.dumps(report, indent='  '))
    if args['--svg']:
        write_portrait(cases[0], args['--svg'])
