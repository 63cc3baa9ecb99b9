import dataclasses
import functools
import json
import math

import sympy

from . import error
from .debug import debug
from .exact import ONE, ZERO, coefficients, degree, evaluate_float, h, \
    integer_normalized, nullspace, poly
from .families import Kind, get_case
from .picard_fuchs import derive_blocks
from .quadrature import DEFAULT_SETTINGS, generator_vector, generators, \
    monomial_values
from .reduction import DegreeReport, GeneratorCombination, label
from .zeros import theorem_bound

# How far past order_ceiling synthesize_L keeps looking for a
# kernel before giving up.
MAX_EXTRA_ORDER = 24


def key_label(key):
    idx, order = key
    return label(idx).replace('J', 'J' + "'" * order, 1)


def derivative_keys(case):
    '''The basis F1 is written over, as ((i, j), derivative order) pairs.
    The first two make up Phi1, the rest Phi2.'''
    u1, u2 = generators(case)
    if case.kind == Kind.PARABOLIC:
        return tuple((g, 0) for g in u1 + u2)
    return tuple((g, 1) for g in u1[:2] + u2)


def _nth_derivative(p, count):
    for _ in range(count):
        p = p.diff(h)
    return p


@dataclasses.dataclass(frozen=True)
class ReducedForm:
    '''sum over keys of parts[key](h) * J_key(h), divided by denominator(h).
    For the segments Phi2 is kept over J'01, J'11, J'21; z_view rewrites
    it over J'01, J'11, Z' with Z = 3/8 (1/lambda - 1) J11 + 1/4 J21.'''
    case: object
    keys: tuple
    parts: dict
    denominator: sympy.Poly = ONE
    n: int = None

    def __getitem__(self, key):
        return self.parts[key]

    def _restricted(self, keys):
        return ReducedForm(self.case, keys, {k: self.parts[k] for k in keys},
                           self.denominator, self.n)

    @property
    def phi1(self):
        return self._restricted(self.keys[:2])

    @property
    def phi2(self):
        return self._restricted(self.keys[2:])

    @property
    def labels(self):
        return [key_label(k) for k in self.keys]

    def is_zero(self):
        return all(self.parts[k].is_zero for k in self.keys)

    def degrees(self):
        return [degree(self.parts[k]) for k in self.keys]

    def terms(self, annulus, at, settings=DEFAULT_SETTINGS, derivative=0):
        '''The individual products making up the derivative-th h derivative,
        before division by the denominator.'''
        if derivative and degree(self.denominator) > 0:
            raise ValueError("derivatives of a form with a denominator")
        live = [k for k in self.keys if not self.parts[k].is_zero]
        wanted = {}
        for idx, order in live:
            for r in range(derivative + 1):
                wanted.setdefault(order + r, set()).add(idx)
        values = {}
        for order, indices in wanted.items():
            indices = sorted(indices)
            found = monomial_values(self.case, annulus, at, indices, settings,
                                    order)
            values.update({(idx, order): v for idx, v in zip(indices, found)})
        terms = []
        for idx, order in live:
            for r in range(derivative + 1):
                coefficient = _nth_derivative(self.parts[(idx, order)],
                                              derivative - r)
                if coefficient.is_zero:
                    continue
                terms.append(math.comb(derivative, r) *
                             evaluate_float(coefficient, at) *
                             values[(idx, order + r)])
        return terms

    def evaluate(self, annulus, at, settings=DEFAULT_SETTINGS, derivative=0):
        total = sum(self.terms(annulus, at, settings, derivative), 0.0)
        return float(total / evaluate_float(self.denominator, at))

    def z_view(self):
        '''Phi2 over J'01, J'11 and Z', as a label to polynomial mapping.'''
        if not self.case.segment:
            raise ValueError("Z is only defined for the segments")
        k01, k11, k21 = ((0, 1), 1), ((1, 1), 1), ((2, 1), 1)
        shift = sympy.Rational(3, 2) * (1 / self.case.lam - 1)
        return {
            key_label(k01): self.parts[k01],
            key_label(k11): self.parts[k11] - self.parts[k21] * shift,
            "Z'": self.parts[k21] * 4,
        }

    def to_json(self):
        return {
            'parts': {key_label(k): str(self.parts[k].as_expr())
                      for k in self.keys},
            'denominator': str(self.denominator.as_expr()),
        }


# Elimination.
# ------------
#
# With U = A U' in each block, M = sigma.U = sigma A U' and
# M' = (sigma' A + sigma) U'. Eliminating J'02 between the two leaves F1.

@dataclasses.dataclass(frozen=True)
class EliminationResult:
    gamma1: sympy.Poly
    gamma2: sympy.Poly
    f1: ReducedForm
    degenerate: bool = False
    degrees: DegreeReport = None

    @property
    def convention(self):
        if self.f1.case.kind == Kind.TRIANGLE:
            return "gamma1*M' - gamma2*M = F1"
        return "gamma1*M - gamma2*M' = F1"

    def to_json(self):
        return {
            'convention': self.convention,
            'gamma1': str(self.gamma1.as_expr()),
            'gamma2': str(self.gamma2.as_expr()),
            'degenerate': self.degenerate,
            'F1': self.f1.to_json(),
            'degrees': self.degrees.to_json() if self.degrees else None,
        }


def f1_degree_bounds(case, n):
    '''Ceilings on the degrees of F1's coefficients, in derivative_keys
    order.'''
    a, b, c, d = n // 3, (n - 1) // 3, (n - 2) // 3, (n - 3) // 3
    if case.kind == Kind.PARABOLIC:
        return [n // 2, n // 2 - 1, n // 2, c]
    if case.kind == Kind.TRIANGLE:
        return [a + c + 1, b + c, b + c + 1, 2 * c + 1, d + c]
    return [a + c + 1, b + c + 1, b + c + 1, 2 * c, d + c + 1]


def _derivative_form(case, comb):
    'M and M\' over U\', as dicts keyed like derivative_keys.'
    direct = {}
    moved = {}
    for block, indices in zip(derive_blocks(case), generators(case)):
        sigma = sympy.Matrix([[comb[g].as_expr() for g in indices]])
        m = sigma * block.matrix
        m_tilde = sigma.diff(h) * block.matrix + sigma
        for k, g in enumerate(indices):
            direct[(g, 1)] = poly(m[0, k])
            moved[(g, 1)] = poly(m_tilde[0, k])
    return direct, moved


def eliminate_and_form_F1(case, comb, n=None):
    keys = derivative_keys(case)
    if case.kind == Kind.PARABOLIC:
        f1 = ReducedForm(case, keys, {(g, 0): comb[g] for g, _ in keys},
                         n=n)
        gamma1, gamma2, degenerate = ONE, ZERO, False
    else:
        direct, moved = _derivative_form(case, comb)
        if case.kind == Kind.TRIANGLE:
            first, second = moved, direct
        else:
            first, second = direct, moved
        pivot = ((0, 2), 1)
        gamma1, gamma2 = second[pivot], first[pivot]
        degenerate = gamma1.is_zero and gamma2.is_zero
        if degenerate:
            debug('elimination is degenerate for', case, '; F1 = M')
            parts = {k: direct[k] for k in keys}
            gamma1, gamma2 = (ZERO, -ONE) if case.kind == Kind.TRIANGLE \
                else (ONE, ZERO)
        else:
            parts = {k: gamma1 * first[k] - gamma2 * second[k] for k in keys}
            assert (gamma1 * first[pivot] - gamma2 * second[pivot]).is_zero
        f1 = ReducedForm(case, keys, parts, n=n)
    report = None
    if n is not None:
        report = DegreeReport(f1.labels, f1.degrees(),
                              f1_degree_bounds(case, n))
    return EliminationResult(gamma1, gamma2, f1, degenerate, report)


def elimination_residual(case, comb, result, annulus, at,
                         settings=DEFAULT_SETTINGS):
    '''Relative mismatch of the elimination identity with M and M' from
    quadrature.'''
    values = generator_vector(case, annulus, at, settings)
    slopes = generator_vector(case, annulus, at, settings, order=1)
    slope_coefficients = GeneratorCombination(
        case, {g: c.diff(h) for g, c in comb.coefficients.items()})
    m = comb.evaluate(at, values)
    dm = slope_coefficients.evaluate(at, values) + comb.evaluate(at, slopes)
    gamma1 = evaluate_float(result.gamma1, at)
    gamma2 = evaluate_float(result.gamma2, at)
    if case.kind == Kind.TRIANGLE:
        m, dm = dm, m
    rhs = result.f1.evaluate(annulus, at, settings)
    scale = abs(gamma1 * m) + abs(gamma2 * dm) + abs(rhs)
    return abs(gamma1 * m - gamma2 * dm - rhs) / max(scale, 1e-300)


# Annihilating operators.
# -----------------------
#
# If v' = (N/D) v then the k-th derivative of c.v is n_k.v / D**k with
#     n_0 = c,  n_{k+1} = n_k' D - k n_k D' + n_k N,
# so L(c.v) = (P2 n_2 + P1 D n_1 + P0 D**2 n_0).v / D**2.

@dataclasses.dataclass(frozen=True)
class AnnihilatorOperator:
    P2: sympy.Poly
    P1: sympy.Poly
    P0: sympy.Poly
    m2: int
    within_order_ceiling: bool = True
    equations: int = 0
    unknowns: int = 0

    def __post_init__(self):
        if self.P2.is_zero and self.P1.is_zero and self.P0.is_zero:
            raise ValueError("the zero operator")
        if (degree(self.P2) > self.m2 or degree(self.P1) > self.m2 - 1 or
                degree(self.P0) > self.m2 - 2):
            raise ValueError("operator coefficients exceed order " +
                             str(self.m2))

    def terms(self, at, values):
        'P2 f\'\', P1 f\' and P0 f at h=at, given values = (f, f\', f\'\').'
        f, df, ddf = values
        return (evaluate_float(self.P2, at) * ddf,
                evaluate_float(self.P1, at) * df,
                evaluate_float(self.P0, at) * f)

    def to_json(self):
        return {
            'P2': str(self.P2.as_expr()),
            'P1': str(self.P1.as_expr()),
            'P0': str(self.P0.as_expr()),
            'degrees': [degree(p) for p in (self.P2, self.P1, self.P0)],
            'm2': self.m2,
            'within_order_ceiling': self.within_order_ceiling,
            'equations': self.equations,
            'unknowns': self.unknowns,
        }


@functools.lru_cache(maxsize=None)
def _block_flow(case, which):
    '''(N, D) with v' = (N/D) v, for v the Phi1 (which=0) or Phi2 (which=1)
    part of the derivative basis.'''
    block = derive_blocks(case)[which]
    if case.kind == Kind.PARABOLIC:
        return sympy.ImmutableMatrix(block.matrix.adjugate()), \
            block.determinant
    if which == 0:
        M = block.second
        assert M[0, 2] == 0 and M[1, 2] == 0, "J'00, J'10 do not decouple"
        return M[0:2, 0:2], block.determinant
    return block.second, block.determinant


def _derivative_numerators(c, N, D, count):
    dD = sympy.diff(D, h)
    rows = [c]
    for k in range(count - 1):
        n = rows[-1]
        rows.append((n.diff(h) * D - k * n * dD + n * N).applyfunc(
            sympy.expand))
    return rows


def _applied(c, N, D, P2, P1, P0):
    'Numerators of L(c.v) over D**2.'
    n0, n1, n2 = _derivative_numerators(c, N, D, 3)
    return (P2 * n2 + P1 * D * n1 + P0 * D**2 * n0).applyfunc(sympy.expand)


def order_ceiling(case, n):
    'The order ceiling m2 on deg P2.'
    if case.kind == Kind.PARABOLIC:
        return 2 * (n // 2) + 2
    return n // 3 + (n - 1) // 3 + 2 * ((n - 2) // 3) + 13


def _system(c, N, D, m2):
    '''Rows of the homogeneous system in p2_0..p2_m2, p1_0..p1_{m2-1},
    p0_0..p0_{m2-2}: every coefficient of both numerator components of
    L(c.v) must vanish.'''
    n0, n1, n2 = _derivative_numerators(c, N, D, 3)
    pieces = [(m2 + 1, n2), (m2, (D * n1).applyfunc(sympy.expand)),
              (m2 - 1, (D**2 * n0).applyfunc(sympy.expand))]
    width = sum(count for count, _ in pieces)
    blocks = []
    for component in range(c.shape[1]):
        coefficient_lists = [coefficients(vector[component])
                             for _, vector in pieces]
        top = max((len(coeffs) + count - 1
                   for (count, _), coeffs in zip(pieces, coefficient_lists)
                   if coeffs), default=0)
        rows = [[0] * width for _ in range(top)]
        column = 0
        for (count, _), coeffs in zip(pieces, coefficient_lists):
            for shift in range(count):
                for d, value in enumerate(coeffs):
                    rows[d + shift][column] = value
                column += 1
        blocks.extend(rows)
    return blocks, width


def _choose_kernel_vector(kernel, m2):
    '''The kernel vector of least deg P2, made canonical by reduced row
    echelon form with the P2 columns taken from the top degree down, then
    scaled to coprime integers with a positive leading P2 coefficient.'''
    order = list(range(m2, -1, -1)) + list(range(m2 + 1, 3 * m2))
    matrix = sympy.Matrix([[vector[i] for i in order] for vector in kernel])
    reduced, pivots = matrix.rref()
    in_p2 = [row for row, column in enumerate(pivots) if column <= m2]
    choice = in_p2[-1] if in_p2 else 0
    permuted = integer_normalized(list(reduced.row(choice)))
    vector = [0] * len(order)
    for position, index in enumerate(order):
        vector[index] = permuted[position]
    return vector


def synthesize_L(case, phi1, n=None):
    '''A second order operator P2 d2/dh2 + P1 d/dh + P0 with polynomial
    coefficients that annihilates phi1.'''
    if n is None:
        n = phi1.n
    c = sympy.Matrix([[phi1[k].as_expr() for k in phi1.keys[:2]]])
    if all(entry == 0 for entry in c):
        raise error.DegenerateEliminationError(
            "F1 has no Phi1 part to annihilate")
    N, D = _block_flow(case, 0)
    D = D.as_expr()
    if n is not None:
        ceiling = order_ceiling(case, n)
    else:
        dalpha, dbeta = (degree(phi1[k]) for k in phi1.keys[:2])
        ceiling = max(dalpha, 0) + max(dbeta, 0) + 11
    for extra in range(MAX_EXTRA_ORDER + 1):
        m2 = ceiling + extra
        rows, width = _system(c, N, D, m2)
        kernel = nullspace(rows)
        debug('annihilator order', m2, ':', len(rows), 'equations,', width,
              'unknowns, kernel dimension', len(kernel))
        if kernel:
            break
    else:
        raise error.NoKernelError(
            "no annihilator of order up to {}".format(m2))
    vector = _choose_kernel_vector(kernel, m2)
    P2 = poly(vector[:m2 + 1])
    P1 = poly(vector[m2 + 1:2 * m2 + 1])
    P0 = poly(vector[2 * m2 + 1:])
    check = _applied(c, N, D, P2.as_expr(), P1.as_expr(), P0.as_expr())
    assert all(entry == 0 for entry in check), \
        "kernel vector does not annihilate"
    return AnnihilatorOperator(
        P2, P1, P0, m2, extra == 0,
        len(rows), width)


def annihilator_residual(case, L, phi1, at, annulus=None,
                         settings=DEFAULT_SETTINGS):
    '''|P2 phi1'' + P1 phi1' + P0 phi1| over the largest of the three terms,
    with the derivatives of phi1 taken from quadrature.'''
    values = [phi1.evaluate(annulus, at, settings, d) for d in range(3)]
    terms = L.terms(at, values)
    return abs(sum(terms)) / max(max(abs(t) for t in terms), 1e-300)


def remainder(case, L, f1):
    '''R = L(F1), exact. L kills the Phi1 part, so R lives on the Phi2 keys
    over the denominator D2**2.'''
    P2, P1, P0 = (p.as_expr() for p in (L.P2, L.P1, L.P0))
    parts = {}
    for which, keys in ((0, f1.keys[:2]), (1, f1.keys[2:])):
        N, D = _block_flow(case, which)
        c = sympy.Matrix([[f1[k].as_expr() for k in keys]])
        applied = _applied(c, N, D.as_expr(), P2, P1, P0)
        if which == 0:
            assert all(entry == 0 for entry in applied), \
                "operator does not annihilate Phi1"
        else:
            denominator = poly(D.as_expr()**2)
        parts.update({k: poly(entry) for k, entry in zip(keys, applied)})
    return ReducedForm(case, f1.keys, parts, denominator, f1.n)


def operator_residual(case, L, f1, R, at, annulus=None,
                      settings=DEFAULT_SETTINGS):
    'Relative mismatch of L(F1) = R with F1 and its derivatives numeric.'
    values = [f1.evaluate(annulus, at, settings, d) for d in range(3)]
    terms = L.terms(at, values)
    expected = R.evaluate(annulus, at, settings)
    scale = sum(abs(t) for t in terms) + abs(expected)
    return abs(sum(terms) - expected) / max(scale, 1e-300)


# Zero counting.
# --------------

def sqrt_mix_zero_bound(P0, parts):
    '''Zeros of P0(h) + sum_j Pj(h) * (h - cj)**(1/2)-type mixtures:
    k*(max deg Pj + 1) + deg P0, with deg 0 = -1.'''
    if not parts:
        return degree(P0)
    return len(parts) * (max(degree(p) for p, _ in parts) + 1) + degree(P0)


@dataclasses.dataclass(frozen=True)
class BoundChain:
    n: int
    m2: int
    m5: int
    m6: int
    total: int
    bound: int
    k0: int = None

    @property
    def within_bound(self):
        return self.total <= self.bound

    def to_json(self):
        out = dataclasses.asdict(self)
        out['within_bound'] = self.within_bound
        return out


def bound_chain(case, n):
    '''The intermediate zero counts behind theorem_bound. For the parabolic
    family m2, m5 and m6 stand for the order of L, the number of interval
    endpoints and the zero count of R.'''
    bound = theorem_bound(case, n)
    a, b, c, d = n // 3, (n - 1) // 3, (n - 2) // 3, (n - 3) // 3
    if case.kind == Kind.PARABOLIC:
        half = n // 2
        m2 = order_ceiling(case, n)
        m5 = 5 * half + 4
        m6 = 6 * half + 3 * c + 12
        total = m6 + 2 * (m5 + 1) + m5
        return BoundChain(n, m2, m5, m6, total, bound)
    m2 = order_ceiling(case, n)
    m5 = a + 2 * b + 3 * c + 9
    if case.kind == Kind.TRIANGLE:
        m6 = 7 * a + 9 * b + 25 * c + d + 105
        total = m6 + 3 * (m2 + m5 + 1) + c + 4
        k0 = a + b + 4 * c + 13
        return BoundChain(n, m2, m5, m6, total, bound, k0)
    m6 = 7 * a + 11 * b + 25 * c + 2 * d + 141
    total = m6 + 3 * (m2 + m5) + c + 4
    return BoundChain(n, m2, m5, m6, total, bound)


# Command line.
# -------------

def do_bound(args):
    case = get_case(args)
    n = int(args['--n'])
    if not args['--chain']:
        print(theorem_bound(case, n))
        return
    chain = bound_chain(case, n)
    report = chain.to_json()
    report['case'] = case.kind.value
    print(json.dumps(report, indent='  '))
