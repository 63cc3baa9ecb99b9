import dataclasses
import functools
import json
import math

import numpy
from numpy.polynomial import legendre
import sympy

from . import error
from .debug import debug
from .exact import rational
from .families import Kind, get_annulus, get_case, get_interval
from .ovals import endpoints

DEFAULT_NODES = 64
DEFAULT_TOL = 1e-11
DEFAULT_REFINEMENTS = 8
MAX_INDEX = 12

# Energies this close to the polycycle are refused; the period blows up
# logarithmically there.
BOUNDARY_GAP = 1e-6


@dataclasses.dataclass(frozen=True)
class QuadratureSettings:
    node_count: int = DEFAULT_NODES
    target_rel_tol: float = DEFAULT_TOL
    max_refinements: int = DEFAULT_REFINEMENTS
    max_index: int = MAX_INDEX

    def __post_init__(self):
        if self.node_count < 16:
            raise ValueError("node_count must be at least 16")
        if self.target_rel_tol < 1e-14:
            raise ValueError("target_rel_tol must be at least 1e-14")


DEFAULT_SETTINGS = QuadratureSettings()


@dataclasses.dataclass(frozen=True)
class MonomialIndex:
    i: int
    j: int

    def __iter__(self):
        return iter((self.i, self.j))


def monomial_index(idx, settings=DEFAULT_SETTINGS):
    i, j = idx
    if i < 0 or j < 0:
        raise error.NegativeIndexError("negative index ({}, {})".format(i, j))
    if i + j > settings.max_index:
        raise error.UnsupportedIndexError(
            "i+j={} exceeds the maximum {}".format(i + j, settings.max_index))
    return MonomialIndex(int(i), int(j))


# Generator bases.
# ----------------

SEGMENT_GENERATORS = ([(0, 0), (1, 0), (0, 2)], [(0, 1), (1, 1), (2, 1)])
PARABOLIC_GENERATORS = ([(0, 1), (1, 1)], [(1, 0), (0, 2)])


def generators(case):
    '''The two generator blocks (U1, U2). Every J_ij reduces to these with
    polynomial coefficients in h.'''
    if case.kind == Kind.PARABOLIC:
        return PARABOLIC_GENERATORS
    return SEGMENT_GENERATORS


def generator_list(case):
    u1, u2 = generators(case)
    return u1 + u2


@dataclasses.dataclass(frozen=True)
class GeneratorVector:
    case: object
    annulus: object
    h: float
    u1: numpy.ndarray
    u2: numpy.ndarray
    z: float = None
    order: int = 0

    @property
    def values(self):
        return numpy.concatenate([self.u1, self.u2])

    def as_dict(self):
        return dict(zip(generator_list(self.case), self.values))


# The sin**2 substitution.
# ------------------------
#
# With x = x_a + L*sin(t)**2 and L = x_b - x_a, the level curve factors as
# y = L*sin(t)*cos(t)*sqrt(W(x)), where W = c3*(x - x_c)/a(x) for the cubic
# potentials and W = c2/a(x) for the quadratic one. W stays positive on the
# closed oval, so x**i * y**k * dx is smooth in t for every k >= -1.

@functools.lru_cache(maxsize=64)
def theta_rule(node_count, panels):
    'Composite Gauss-Legendre nodes and weights on [0, pi/2].'
    nodes, weights = legendre.leggauss(node_count)
    width = (math.pi / 2) / panels
    starts = numpy.arange(panels) * width
    theta = (starts[:, None] + (nodes[None, :] + 1) * (width / 2)).ravel()
    return theta, numpy.tile(weights * (width / 2), panels)


def _converge(integrand, settings, label):
    previous = None
    panels = 1
    for _ in range(settings.max_refinements + 1):
        theta, weights = theta_rule(settings.node_count, panels)
        values = integrand(theta)
        estimate = numpy.dot(values, weights)
        if previous is not None:
            # Cancelling integrands are judged against their absolute mass.
            magnitude = numpy.dot(numpy.abs(values), weights)
            scale = max(abs(estimate), 1e-3 * magnitude, 1e-300)
            if abs(estimate - previous) <= settings.target_rel_tol * scale:
                return float(estimate)
        previous = estimate
        panels *= 2
    raise error.NoConvergenceError(
        "{} did not reach rel tol {} in {} refinements".format(
            label, settings.target_rel_tol, settings.max_refinements))


def _geometry(case, oval, theta):
    s, c = numpy.sin(theta), numpy.cos(theta)
    x = oval.x_a + oval.length * s * s
    weight = case.weight(x)
    if oval.x_c is None:
        w = case.v_float[2] / weight
    else:
        w = case.v_float[3] * (x - oval.x_c) / weight
    return x, s * c, numpy.maximum(w, 0.0), weight


def _monomial_integrand(case, oval, i, k, p):
    '''x**i * y**k * a(x)**-p dx over the upper arc, as a function of t.'''
    def integrand(theta):
        x, sc, w, weight = _geometry(case, oval, theta)
        return (2 * sc**(k + 1) * oval.length**(k + 1) * x**i *
                w**(k / 2) / weight**p)
    return integrand


_XA, _XB, _XC, _S2, _SC = sympy.symbols('x_a x_b x_c s2 sc')


@functools.lru_cache(maxsize=None)
def _bracket(case, i, j, order):
    '''The t-integrand of J_ij differentiated order times in h. Each root
    x_r of V(x) = h moves with dx_r/dh = 1/V'(x_r), so d/dh acts on the
    integrand as the derivation sum_r (1/V'(x_r)) d/dx_r.'''
    length = _XB - _XA
    x = _XA + length * _S2
    a0, a1 = case.a_coeffs
    weight = a0 + a1 * x
    coeffs = case.v_coeffs
    if len(coeffs) == 4:
        w = coeffs[3] * (x - _XC) / weight
        roots = (_XA, _XB, _XC)
    else:
        w = coeffs[2] / weight
        roots = (_XA, _XB)
    t = sympy.Symbol('t')
    slope = sympy.diff(sum(c * t**k for k, c in enumerate(coeffs)), t)

    expr = 2 * _SC**(j + 1) * x**i * length**(j + 1) * sympy.sqrt(w)**j
    for _ in range(order):
        expr = sum(sympy.diff(expr, r) / slope.subs(t, r) for r in roots)
    debug('bracket for J_{},{} order {} of {}'.format(i, j, order, case))
    return sympy.lambdify((_XA, _XB, _XC, _S2, _SC), expr, modules='numpy',
                          cse=True)


def _bracket_integrand(case, oval, i, j, order):
    function = _bracket(case, i, j, order)
    x_c = 0.0 if oval.x_c is None else oval.x_c

    def integrand(theta):
        s, c = numpy.sin(theta), numpy.cos(theta)
        return numpy.zeros_like(theta) + function(
            oval.x_a, oval.x_b, x_c, s * s, s * c)
    return integrand


def oval_for(case, annulus, h):
    interval = get_annulus(case, annulus)
    if abs(float(h) - float(interval.polycycle_energy)) < BOUNDARY_GAP:
        raise error.OutsideAnnulusError(
            "h={} is within {} of the polycycle energy {}".format(
                h, BOUNDARY_GAP, interval.polycycle_energy))
    return endpoints(case, interval.annulus, h)


def _value(case, oval, idx, settings, order):
    i, j = idx
    label = 'J_{},{}^({}) at h={}'.format(i, j, order, oval.h)
    if oval.length == 0:
        if order:
            raise error.OutsideAnnulusError(
                "no h derivative on the collapsed oval at h={}".format(oval.h))
        return 0.0
    if order == 0:
        integrand = _monomial_integrand(case, oval, i, j, 0)
    elif order == 1 and j == 0:
        return (oval.x_b**i / case.potential_slope(oval.x_b) -
                oval.x_a**i / case.potential_slope(oval.x_a))
    elif order == 1:
        # dy/dh = 1/(2*a*y), so the y**(j-1) factor becomes y**(j-2)/a.
        inner = _monomial_integrand(case, oval, i, j - 2, 1)

        def integrand(theta):
            return (j / 2) * inner(theta)
    else:
        integrand = _bracket_integrand(case, oval, i, j, order)
    return _converge(integrand, settings, label)


def monomial_values(case, annulus, h, indices, settings=DEFAULT_SETTINGS,
                    order=0):
    'Evaluate several J_ij (or their order-th h derivatives) on one oval.'
    indices = [monomial_index(idx, settings) for idx in indices]
    oval = oval_for(case, annulus, h)
    return numpy.array([_value(case, oval, idx, settings, order)
                        for idx in indices])


def j_integral(case, annulus, h, idx, settings=DEFAULT_SETTINGS):
    '''J_ij(h), the integral of x**i * y**j dx along the upper arc from x_a
    to x_b.'''
    return float(monomial_values(case, annulus, h, [idx], settings)[0])


def j_derivative(case, annulus, h, idx, settings=DEFAULT_SETTINGS, order=1):
    return float(monomial_values(case, annulus, h, [idx], settings,
                                 order)[0])


def lower_arc_integral(case, annulus, h, idx, settings=DEFAULT_SETTINGS,
                       direct=False):
    '''The same monomial along the lower arc, run from x_b back to x_a. By
    the y -> -y symmetry it is (-1)**(j+1) times the upper-arc value;
    direct=True integrates the y < 0 branch instead.'''
    i, j = monomial_index(idx, settings)
    if not direct:
        return (-1)**(j + 1) * j_integral(case, annulus, h, (i, j), settings)
    oval = oval_for(case, annulus, h)

    def integrand(theta):
        s, c = numpy.sin(theta), numpy.cos(theta)
        x = oval.x_b - oval.length * s * s
        radicand = numpy.maximum(
            (oval.h - case.potential(x)) / case.weight(x), 0.0)
        y = -numpy.sqrt(radicand)
        return x**i * y**j * (-2 * oval.length * s * c)
    return _converge(integrand, settings,
                     'lower arc J_{},{} at h={}'.format(i, j, h))


def generator_vector(case, annulus, h, settings=DEFAULT_SETTINGS, order=0):
    u1_indices, u2_indices = generators(case)
    u1 = monomial_values(case, annulus, h, u1_indices, settings, order)
    u2 = monomial_values(case, annulus, h, u2_indices, settings, order)
    z = None
    if case.segment:
        lam = float(case.lam)
        z = (3 / 8) * (1 / lam - 1) * u2[1] + (1 / 4) * u2[2]
    return GeneratorVector(case, get_annulus(case, annulus).annulus,
                           float(h), u1, u2, z, order)


# Finite differences.
# -------------------

def finite_difference(function, h, step, order=1):
    '''Central difference of order 1 or 2 with one Richardson step.'''
    def central(delta):
        if order == 1:
            return (function(h + delta) - function(h - delta)) / (2 * delta)
        elif order == 2:
            return (function(h + delta) - 2 * function(h) +
                    function(h - delta)) / delta**2
        raise ValueError("finite differences of order {}".format(order))
    coarse = central(step)
    fine = central(step / 2)
    return (4 * fine - coarse) / 3


# Command line.
# -------------

def get_settings(args):
    node_count = DEFAULT_NODES
    tol = DEFAULT_TOL
    if args.get('--nodes'):
        node_count = int(args['--nodes'])
    if args.get('--tol') and not args.get('verify'):
        tol = float(args['--tol'])
    return QuadratureSettings(node_count, tol)


def do_integral(args):
    case = get_case(args)
    interval = get_interval(args, case)
    idx = (int(args['<i>']), int(args['<j>']))
    h = float(rational(args['<h>']))
    settings = get_settings(args)
    order = 1 if args['--derivative'] else 0
    value = j_derivative(case, interval.annulus, h, idx, settings, order) \
        if order else j_integral(case, interval.annulus, h, idx, settings)
    print(json.dumps({
        'case': str(case),
        'annulus': interval.annulus.value,
        'h': h,
        'index': list(idx),
        'derivative_order': order,
        'value': value,
    }, indent='  '))
