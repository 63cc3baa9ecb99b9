import dataclasses
import math

import numpy
from numpy.polynomial import polynomial
from scipy import optimize

from . import error
from .debug import debug
from .families import get_annulus

RADICAND_TOLERANCE = 1e-14
SLOPE_TOLERANCE = 1e-13


@dataclasses.dataclass(frozen=True)
class OvalEndpoints:
    '''Where the oval H = h crosses the x axis. x_c is the third root of the
    cubic V(x) = h, outside the oval, and None for the quadratic family.'''
    x_a: float
    x_b: float
    h: float
    annulus: object
    x_c: float = None

    @property
    def length(self):
        return self.x_b - self.x_a


def _check_energy(interval, h):
    lower, upper = float(interval.lower), float(interval.upper)
    center = float(interval.center_energy)
    if h == center:
        return
    if not lower < h < upper:
        raise error.OutsideAnnulusError(
            "h={} is not inside the {} annulus ({}, {})".format(
                h, interval.annulus.value, interval.lower, interval.upper))


def _expand(function, start, step):
    'March from start by doubling steps until function changes sign.'
    sign = numpy.sign(function(start))
    point = start + step
    for _ in range(200):
        if numpy.sign(function(point)) != sign:
            return point
        step *= 2
        point = start + step
    raise error.NoConvergenceError("no sign change while bracketing a root")


def _root(function, lo, hi):
    if function(lo) == 0:
        return lo
    if function(hi) == 0:
        return hi
    return optimize.brentq(function, lo, hi, xtol=1e-15,
                           rtol=4 * numpy.finfo(float).eps, maxiter=200)


def endpoints(case, annulus, h):
    '''Solve V(x) = h for the two roots bounding the oval. At the center
    energy the oval collapses and both roots equal the center abscissa.'''
    interval = get_annulus(case, annulus)
    h = float(h)
    _check_energy(interval, h)
    center = float(interval.center_x)
    coeffs = case.v_float

    if h == float(interval.center_energy):
        x_a = x_b = center
    elif len(coeffs) == 3:
        # c2*x**2 + c1*x = h, symmetric about the center.
        c1, c2 = coeffs[1], coeffs[2]
        half_width = math.sqrt((c1 * c1 + 4 * c2 * h) / (4 * c2 * c2))
        x_a, x_b = center - half_width, center + half_width
    else:
        def level(x):
            return case.potential(x) - h
        separators = [r.real for r in polynomial.polyroots(case.dv_float)
                      if abs(r.imag) < 1e-12 and abs(r.real - center) > 1e-9]
        left = [s for s in separators if s < center]
        right = [s for s in separators if s > center]
        lo = max(left) if left else _expand(level, center, -1.0)
        hi = min(right) if right else _expand(level, center, 1.0)
        x_a = _root(level, lo, center)
        x_b = _root(level, center, hi)

    x_c = None
    if len(coeffs) == 4:
        x_c = -coeffs[2] / coeffs[3] - x_a - x_b
    debug('endpoints at h={}:'.format(h), x_a, x_b, x_c)
    return OvalEndpoints(x_a, x_b, h, interval.annulus, x_c)


def upper_y(case, h, x, annulus=None, oval=None):
    'The nonnegative branch of H(x, y) = h over [x_a, x_b].'
    if oval is None:
        oval = endpoints(case, annulus, h)
    slack = 1e-12 * max(1.0, abs(oval.x_a), abs(oval.x_b))
    if not oval.x_a - slack <= x <= oval.x_b + slack:
        raise error.OutsideArcError(
            "x={} is outside [{}, {}]".format(x, oval.x_a, oval.x_b))
    if x <= oval.x_a or x >= oval.x_b:
        return 0.0
    gap = h - case.potential(x)
    radicand = gap / case.weight(x)
    if radicand < 0:
        scale = max(1.0, abs(h), abs(case.potential(x)))
        if radicand < -RADICAND_TOLERANCE * scale:
            raise error.NegativeRadicandError(
                "y**2 = {} at x={}, h={}".format(radicand, x, h))
        radicand = 0.0
    return math.sqrt(radicand)


def dx_dh_on_axis(case, x):
    '''Along y = 0 the level set moves with dx/dh = 1/H_x(x, 0).'''
    slope = case.potential_slope(x)
    if abs(slope) < SLOPE_TOLERANCE:
        raise error.CriticalAbscissaError(
            "H_x vanishes at x={} on the axis".format(x))
    return 1 / slope
