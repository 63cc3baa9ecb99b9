import dataclasses
import functools
import json
from fractions import Fraction

import numpy
import sympy

from . import error
from .debug import debug
from .exact import ZERO, degree, evaluate_float, h, poly, rational
from .families import Kind, get_case, get_interval
from .quadrature import (DEFAULT_SETTINGS, MAX_INDEX, GeneratorVector,
                         generator_list, monomial_index, monomial_values)


def label(idx):
    i, j = idx
    return 'J{}{}'.format(i, j) if i < 10 and j < 10 else \
        'J{},{}'.format(i, j)


@dataclasses.dataclass
class GeneratorCombination:
    '''sum over the generator basis of coefficient(h) * J_g(h), with exact
    polynomial coefficients.'''
    case: object
    coefficients: dict
    annulus: object = None

    @property
    def basis(self):
        return generator_list(self.case)

    @classmethod
    def zero(cls, case, annulus=None):
        return cls(case, {g: ZERO for g in generator_list(case)}, annulus)

    @classmethod
    def single(cls, case, idx, annulus=None):
        combination = cls.zero(case, annulus)
        combination.coefficients[tuple(idx)] = poly(1)
        return combination

    def __getitem__(self, idx):
        return self.coefficients[tuple(idx)]

    def add_scaled(self, multiplier, other):
        'self + multiplier*other, multiplier a polynomial in h.'
        multiplier = poly(multiplier)
        coefficients = {g: self.coefficients[g] + multiplier *
                        other.coefficients[g] for g in self.basis}
        return GeneratorCombination(self.case, coefficients, self.annulus)

    def __add__(self, other):
        return self.add_scaled(1, other)

    def scaled(self, multiplier):
        return GeneratorCombination.zero(self.case, self.annulus).add_scaled(
            multiplier, self)

    def is_zero(self):
        return all(c.is_zero for c in self.coefficients.values())

    def degrees(self):
        return [degree(self.coefficients[g]) for g in self.basis]

    def evaluate(self, at, values):
        '''Dot the coefficients at h=at with generator values, given either as
        a GeneratorVector or in basis order.'''
        if isinstance(values, GeneratorVector):
            values = values.values
        return float(sum(evaluate_float(self.coefficients[g], at) * value
                         for g, value in zip(self.basis, values)))

    def to_json(self):
        return {label(g): str(self.coefficients[g].as_expr())
                for g in self.basis}

    def __eq__(self, other):
        return (isinstance(other, GeneratorCombination) and
                self.case == other.case and
                all(self.coefficients[g] == other.coefficients[g]
                    for g in self.basis))


# Perturbations.
# --------------

@dataclasses.dataclass
class PerturbationSpec:
    '''p and q above (plus) and below (minus) the switching line y = 0, as
    maps (i, j) -> coefficient of x**i * y**j.'''
    n: int
    plus_p: dict = dataclasses.field(default_factory=dict)
    plus_q: dict = dataclasses.field(default_factory=dict)
    minus_p: dict = dataclasses.field(default_factory=dict)
    minus_q: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise error.BadPerturbationError("negative degree " + str(self.n))
        for name in ('plus_p', 'plus_q', 'minus_p', 'minus_q'):
            terms = {}
            for idx, value in getattr(self, name).items():
                i, j = idx
                if i < 0 or j < 0 or i + j > self.n:
                    raise error.BadPerturbationError(
                        "{} has term ({}, {}) outside degree {}".format(
                            name, i, j, self.n))
                value = rational(value)
                if value != 0:
                    terms[(int(i), int(j))] = value
            setattr(self, name, terms)

    def __add__(self, other):
        def merge(a, b):
            total = dict(a)
            for idx, value in b.items():
                total[idx] = total.get(idx, 0) + value
            return total
        return PerturbationSpec(
            max(self.n, other.n),
            merge(self.plus_p, other.plus_p), merge(self.plus_q, other.plus_q),
            merge(self.minus_p, other.minus_p),
            merge(self.minus_q, other.minus_q))

    def scaled(self, factor):
        factor = rational(factor)
        return PerturbationSpec(
            self.n,
            *({idx: factor * v for idx, v in getattr(self, name).items()}
              for name in ('plus_p', 'plus_q', 'minus_p', 'minus_q')))

    def field(self, x, y, upper):
        'Float (p, q) at a point, using the plus side when upper is true.'
        p, q = (self.plus_p, self.plus_q) if upper else \
            (self.minus_p, self.minus_q)
        return (sum(float(c) * x**i * y**j for (i, j), c in p.items()),
                sum(float(c) * x**i * y**j for (i, j), c in q.items()))

    def to_json(self):
        def encode(terms):
            return [[i, j, str(v)] for (i, j), v in sorted(terms.items())]
        return {
            'n': self.n,
            'plus': {'p': encode(self.plus_p), 'q': encode(self.plus_q)},
            'minus': {'p': encode(self.minus_p), 'q': encode(self.minus_q)},
        }


def parse_perturbation(obj):
    '''Read the JSON form {"n": 3, "plus": {"p": [[1, 0, "1/2"], ...],
    "q": [...]}, "minus": {...}}. Coefficients are "p/q" strings, decimals
    or ints. Repeated monomials add up.'''
    def decode(terms):
        decoded = {}
        for term in terms or []:
            try:
                i, j, value = term
                idx = (int(i), int(j))
                decoded[idx] = decoded.get(idx, 0) + Fraction(str(value))
            except (TypeError, ValueError, ZeroDivisionError) as e:
                raise error.BadPerturbationError(
                    "bad term {!r}".format(term)) from e
        return decoded
    try:
        n = int(obj['n'])
        sides = [obj.get(side, {}) for side in ('plus', 'minus')]
        terms = [side.get(name) for side in sides for name in ('p', 'q')]
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise error.BadPerturbationError(
            "perturbation needs an integer n and plus/minus maps") from e
    return PerturbationSpec(n, *map(decode, terms))


def load_perturbation(path):
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise error.BadPerturbationError(
                "{} is not JSON: {}".format(path, e)) from e
    return parse_perturbation(obj)


def random_perturbation(n, rng, bound=5):
    '''Integer coefficients drawn uniformly from [-bound, bound] for every
    monomial of degree at most n.'''
    indices = [(i, d - i) for d in range(n + 1) for i in range(d + 1)]

    def draw():
        return {idx: int(rng.integers(-bound, bound + 1)) for idx in indices}
    return PerturbationSpec(n, draw(), draw(), draw(), draw())


# Reduction rules.
# ----------------
#
# Each rule writes a non-generator J_ij as a combination of integrals with
# smaller i+j. All of them follow from two identities on the oval: multiply
# H = h by x**i * y**j dx, and integrate x**i * y**j dH = 0 by parts.

def _segment_rule(case, i, j):
    lam = case.lam
    if (i, j) == (2, 0):
        return [(2 * (lam - 1) / lam, (1, 0)), (-(lam - 2) / lam, (0, 0))]
    if j <= 1:
        divisor = (2 * i + 2 * j + 2) * lam
        return [((2 * i - j - 4) * h / divisor, (i - 3, j)),
                (3 * (lam - 1) * (2 * i + j) / divisor, (i - 1, j)),
                (-3 * (lam - 2) * (2 * i - 2) / divisor, (i - 2, j))]
    if i >= 1:
        divisor = sympy.Rational(2 * i + 2 * j + 2, j)
        return [(3 * h / divisor, (i - 1, j - 2)),
                (3 * (lam - 1) / divisor, (i + 1, j - 2)),
                (-6 * (lam - 2) / divisor, (i, j - 2))]
    factor = sympy.Rational(j, j - 2)
    return [(6 * (lam - 1) * factor, (1, j - 2)),
            (-3 * (lam - 2) * factor, (0, j - 2)),
            (-3 * lam * factor, (2, j - 2))]


def _triangle_rule(case, i, j):
    if (i, j) == (2, 0):
        return [(1, (1, 0))]
    if j <= 1:
        divisor = sympy.Rational(2 * i + 2 * j + 2, 3)
        terms = [(-(2 * i - 4 - j) * h / divisor, (i - 3, j)),
                 (sympy.Rational(2 * i + j, 2) / divisor, (i - 1, j))]
        if j:
            terms.append((-sympy.Rational(j, 2) / divisor, (i - 3, j + 2)))
        return terms
    if i >= 1:
        divisor = 2 * i + 2 * j + 2
        return [(-sympy.Rational(j, 2) / divisor, (i + 1, j - 2)),
                (-(i + sympy.Rational(3 * j, 2)) / divisor, (i - 1, j)),
                (3 * j * h / divisor, (i - 1, j - 2))]
    factor = sympy.Rational(j, j - 2)
    return [(factor, (2, j - 2)), (-factor, (1, j - 2))]


def _parabolic_rule(case, i, j):
    if (i, j) == (0, 0):
        return [(sympy.Rational(1, 2), (1, 0))]
    if j == 0:
        return [(sympy.Rational(4 * i, i + 1), (i - 1, 0)),
                (sympy.Rational(2 * (i - 1), i + 1) * h, (i - 2, 0))]
    if j == 1:
        return [(sympy.Rational(8 * i, 2 * i + 3), (i - 1, 1)),
                (sympy.Rational(2 * (2 * i - 3), 2 * i + 3) * h, (i - 2, 1))]
    if i >= 1:
        return [(h, (i - 1, j - 2)), (2, (i, j - 2)),
                (sympy.Rational(-1, 2), (i + 1, j - 2))]
    factor = sympy.Rational(j, 2 - j)
    return [(-2 * factor, (0, j - 2)), (factor, (1, j - 2))]


def reduction_rule(case, idx):
    '''One step: J_ij as [(multiplier, index), ...] over smaller indices.'''
    i, j = idx
    if i < 0 or j < 0:
        raise error.NegativeIndexError("negative index ({}, {})".format(i, j))
    if (i, j) in generator_list(case):
        raise error.UnsupportedIndexError(
            "{} is a generator and has no reduction rule".format(label(idx)))
    if case.segment:
        return _segment_rule(case, i, j)
    elif case.kind == Kind.TRIANGLE:
        return _triangle_rule(case, i, j)
    else:
        return _parabolic_rule(case, i, j)


@functools.lru_cache(maxsize=None)
def reduction_table(case, max_index=MAX_INDEX):
    '''Every J_ij with i+j <= max_index over the generators. Built level by
    level in i+j; the result is never mutated.'''
    table = {g: GeneratorCombination.single(case, g)
             for g in generator_list(case)}
    for level in range(max_index + 1):
        for i in range(level, -1, -1):
            idx = (i, level - i)
            if idx in table:
                continue
            combination = GeneratorCombination.zero(case)
            for multiplier, source in reduction_rule(case, idx):
                combination = combination.add_scaled(
                    poly(sympy.sympify(multiplier)), table[source])
            table[idx] = combination
    debug('reduction table for', case, 'up to level', max_index, ':',
          len(table), 'entries')
    return table


def reduce_monomial(case, idx, annulus=None):
    i, j = monomial_index(idx)
    combination = reduction_table(case)[(i, j)]
    return GeneratorCombination(case, dict(combination.coefficients), annulus)


# The Melnikov fold.
# ------------------

def fold(pert):
    '''The coefficients rho_ij with M(h) = sum rho_ij * J_ij(h). The lower
    arc runs from x_b back to x_a, so its monomials pick up (-1)**(j+1);
    the p dy terms are integrated by parts into dx terms.'''
    rho = {}

    def add(idx, value):
        rho[idx] = rho.get(idx, 0) + value
    for (i, j), b in pert.plus_q.items():
        add((i, j), b)
    for (i, j), b in pert.minus_q.items():
        add((i, j), (-1)**(j + 1) * b)
    for (i, j), a in pert.plus_p.items():
        if i:
            add((i - 1, j + 1), sympy.Rational(i, j + 1) * a)
    for (i, j), a in pert.minus_p.items():
        if i:
            add((i - 1, j + 1), (-1)**j * sympy.Rational(i, j + 1) * a)
    return {idx: value for idx, value in rho.items() if value != 0}


def melnikov_symbolic(case, annulus, pert):
    if pert.n > MAX_INDEX:
        raise error.UnsupportedIndexError(
            "degree {} needs indices beyond {}".format(pert.n, MAX_INDEX))
    table = reduction_table(case)
    combination = GeneratorCombination.zero(case, annulus)
    for idx, value in sorted(fold(pert).items()):
        combination = combination.add_scaled(poly(value), table[idx])
    return combination


# Degree audit.
# -------------

def degree_bounds(case, n):
    '''Ceilings on the coefficient degrees of M(h) in basis order. A
    negative ceiling means the coefficient vanishes.'''
    if case.kind == Kind.PARABOLIC:
        return [n // 2, n // 2 - 1, n // 2, (n - 2) // 3]
    return [n // 3, (n - 1) // 3, (n - 2) // 3, (n - 1) // 3, (n - 2) // 3,
            (n - 3) // 3]


@dataclasses.dataclass
class DegreeReport:
    labels: list
    actual: list
    bounds: list

    @property
    def passed(self):
        return all(a <= b or a == -1 for a, b in zip(self.actual, self.bounds))

    def to_json(self):
        return {
            'passed': self.passed,
            'degrees': {name: {'actual': a, 'bound': b}
                        for name, a, b in zip(self.labels, self.actual,
                                           self.bounds)},
        }


def verify_degrees(comb, n):
    return DegreeReport([label(g) for g in comb.basis], comb.degrees(),
                        degree_bounds(comb.case, n))


# Recurrence residuals.
# ---------------------

RECURRENCES = ('multiply', 'parts', 'rule', 'derivative', 'energy-derivative')


def _identity_terms(case, idx, which):
    '''An identity as [(coefficient, index, derivative order), ...] whose
    terms sum to zero.'''
    i, j = idx
    a0, a1 = case.a_coeffs
    v = case.v_coeffs
    if which == 'multiply':
        terms = [(a0, (i, j + 2), 0), (a1, (i + 1, j + 2), 0),
                 (-h, (i, j), 0)]
        terms += [(c, (i + k, j), 0) for k, c in enumerate(v)]
    elif which == 'parts':
        terms = [(2 * a1 * sympy.Rational(i + 1, j + 2) - a1, (i, j + 2), 0),
                 (2 * a0 * sympy.Rational(i, j + 2), (i - 1, j + 2), 0)]
        terms += [(-k * c, (i + k - 1, j), 0) for k, c in enumerate(v)]
    elif which == 'rule':
        terms = [(1, (i, j), 0)]
        terms += [(-m, source, 0) for m, source in reduction_rule(case, idx)]
    elif which == 'derivative':
        terms = [(1, (i, j), 0),
                 (-2 * a0 / (j + 2), (i, j + 2), 1),
                 (-2 * a1 / (j + 2), (i + 1, j + 2), 1)]
    elif which == 'energy-derivative':
        if not case.segment:
            raise ValueError("the energy-derivative identity needs the "
                             "elliptic or hyperbolic family")
        lam = case.lam
        terms = [(i + j + 1, (i, j), 0), (-3 * h, (i, j), 1),
                 (-3 * (lam - 1), (i + 2, j), 1),
                 (6 * (lam - 2), (i + 1, j), 1)]
    else:
        raise ValueError("unknown recurrence {!r}, expected one of {}".format(
            which, ', '.join(RECURRENCES)))
    terms = [(sympy.sympify(c), source, order) for c, source, order in terms]
    terms = [t for t in terms if t[0] != 0]
    for _, (p, q), _ in terms:
        if p < 0 or q < 0:
            raise error.NegativeIndexError(
                "{} identity at ({}, {}) needs J_{},{}".format(
                    which, i, j, p, q))
    return terms


def recurrence_residual(case, h_value, idx, which, annulus=None,
                        settings=DEFAULT_SETTINGS):
    '''|LHS - RHS| of one identity with every J from quadrature, divided by
    the sum of the absolute term sizes.'''
    terms = _identity_terms(case, idx, which)
    total = 0.0
    scale = 0.0
    for coefficient, source, order in terms:
        value = monomial_values(case, annulus, h_value, [source], settings,
                                order)[0]
        term = float(coefficient.subs(h, h_value)) * value
        total += term
        scale += abs(term)
    return abs(total) / max(scale, 1e-300)


# Command line.
# -------------

def get_perturbation(args, default_n=3):
    if args.get('--pert'):
        return load_perturbation(args['--pert'])
    n = int(args['--n']) if args.get('--n') else default_n
    seed = int(args['--seed']) if args.get('--seed') else 0
    return random_perturbation(n, numpy.random.default_rng(seed))


def do_reduce(args):
    case = get_case(args)
    interval = get_interval(args, case)
    pert = get_perturbation(args)
    combination = melnikov_symbolic(case, interval.annulus, pert)
    report = verify_degrees(combination, pert.n)
    print(json.dumps({
        'case': str(case),
        'perturbation': pert.to_json(),
        'melnikov': combination.to_json(),
        'degrees': report.to_json(),
    }, indent='  '))
    if not report.passed:
        raise error.VerificationError(
            "coefficient degrees exceed their ceilings")
