from fractions import Fraction
import functools

import numpy
import sympy

from .error import ZeroPolynomialError

# The energy variable. Every polynomial and rational function in this package
# is a function of h.
h = sympy.Symbol('h')


# Scalars.
# --------

def rational(value):
    '''Convert ints, Fractions, "p/q" strings, decimal strings and floats to an
    exact sympy Rational. Floats go through their repr, so 0.1 becomes 1/10
    rather than the nearest binary fraction.'''
    if isinstance(value, sympy.Rational):
        return value
    if isinstance(value, sympy.Basic):
        if not value.is_rational:
            raise ValueError("not a rational number: {}".format(value))
        return sympy.Rational(value)
    if isinstance(value, float):
        value = repr(value)
    if isinstance(value, str):
        value = Fraction(value.strip())
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    return sympy.Rational(value)


def integer_normalized(vector):
    '''Scale a rational vector to coprime integers. The first nonzero entry
    comes out positive.'''
    vector = [rational(v) for v in vector]
    nonzero = [v for v in vector if v != 0]
    if not nonzero:
        return vector
    lcm = functools.reduce(sympy.ilcm, (v.q for v in nonzero), 1)
    scaled = [v * lcm for v in vector]
    gcd = functools.reduce(sympy.igcd, (int(abs(v)) for v in scaled if v), 0)
    scaled = [v / gcd for v in scaled]
    if [v for v in scaled if v][0] < 0:
        scaled = [-v for v in scaled]
    return scaled


# Polynomials in h.
# -----------------

def poly(value):
    '''Wrap an expression, a Poly, or an ascending coefficient list as a
    polynomial in h over QQ.'''
    if isinstance(value, sympy.Poly):
        return sympy.Poly(value.as_expr(), h, domain='QQ')
    if isinstance(value, (list, tuple)):
        value = sum((rational(c) * h**k for k, c in enumerate(value)),
                    sympy.Integer(0))
    return sympy.Poly(sympy.expand(value), h, domain='QQ')


ZERO = poly(0)
ONE = poly(1)


def degree(p):
    'Degree with the convention deg(0) = -1.'
    p = poly(p)
    return -1 if p.is_zero else p.degree()


def coefficients(p):
    'Ascending coefficients; the zero polynomial has none.'
    p = poly(p)
    if p.is_zero:
        return []
    return list(reversed(p.all_coeffs()))


def poly_arith(op, *operands):
    if op == 'add':
        return functools.reduce(lambda a, b: a + b, map(poly, operands), ZERO)
    elif op == 'mul':
        return functools.reduce(lambda a, b: a * b, map(poly, operands), ONE)
    elif op == 'differentiate':
        p, = operands
        return poly(p).diff(h)
    elif op == 'evaluate':
        p, at = operands
        return poly(p).eval(rational(at))
    elif op == 'compose_linear':
        p, scale, shift = operands
        return poly(poly(p).as_expr().subs(h, rational(scale) * h +
                                           rational(shift)))
    else:
        raise ValueError("unknown polynomial operation: " + repr(op))


def float_coefficients(p):
    'Ascending float coefficients, for numpy.polynomial.polynomial.polyval.'
    return numpy.array([float(c) for c in coefficients(p)] or [0.0])


def evaluate_float(p, at):
    return numpy.polynomial.polynomial.polyval(at, float_coefficients(p))


# Rational functions in h.
# ------------------------

class RatFunQ:
    '''A reduced quotient of two polynomials in h, with a monic denominator.'''

    def __init__(self, numerator, denominator=ONE):
        numerator, denominator = poly(numerator), poly(denominator)
        if denominator.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        common = numerator.gcd(denominator)
        numerator = numerator.quo(common)
        denominator = denominator.quo(common)
        lead = denominator.LC()
        self.numerator = numerator.quo_ground(lead)
        self.denominator = denominator.quo_ground(lead)

    @classmethod
    def from_expr(cls, expr):
        num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))
        return cls(poly(num), poly(den))

    def as_expr(self):
        return self.numerator.as_expr() / self.denominator.as_expr()

    def evaluate(self, at):
        if isinstance(at, float):
            return (evaluate_float(self.numerator, at) /
                    evaluate_float(self.denominator, at))
        at = rational(at)
        return self.numerator.eval(at) / self.denominator.eval(at)

    def is_polynomial(self):
        return self.denominator.degree() == 0

    def __eq__(self, other):
        if not isinstance(other, RatFunQ):
            other = RatFunQ(other)
        return (self.numerator == other.numerator and
                self.denominator == other.denominator)

    def __hash__(self):
        return hash((self.numerator, self.denominator))

    def __repr__(self):
        return "RatFunQ({})".format(self.as_expr())


# Real roots.
# -----------

def _sign_changes(sequence, at):
    signs = [sympy.sign(p.eval(at)) for p in sequence]
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_count(p, lo, hi):
    '''Number of distinct real roots of p strictly inside (lo, hi). V(lo) -
    V(hi) counts roots in (lo, hi]; a root sitting at hi is taken back out.'''
    p = poly(p)
    if p.is_zero:
        raise ZeroPolynomialError("Sturm count of the zero polynomial")
    lo, hi = rational(lo), rational(hi)
    if lo >= hi or p.degree() == 0:
        return 0
    square_free = p.sqf_part()
    sequence = sympy.sturm(square_free)
    count = _sign_changes(sequence, lo) - _sign_changes(sequence, hi)
    if square_free.eval(hi) == 0:
        count -= 1
    return count


# Linear algebra.
# ---------------

def nullspace(rows):
    '''Exact right nullspace basis of a rational matrix, as lists.'''
    matrix = sympy.Matrix([[rational(v) for v in row] for row in rows])
    return [list(vector) for vector in matrix.nullspace()]
