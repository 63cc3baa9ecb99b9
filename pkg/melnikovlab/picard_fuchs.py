import dataclasses
import functools

import numpy
import sympy

from . import error
from .debug import debug
from .exact import RatFunQ, degree, evaluate_float, h, poly, sturm_count
from .families import Annulus, FamilyCase, Kind, get_annulus
from .quadrature import (DEFAULT_SETTINGS, finite_difference,
                         generator_vector, generators)
from .reduction import label, reduction_table


@dataclasses.dataclass(frozen=True)
class PFBlock:
    '''U = A(h) U' for one generator block, with A = B*h + C. second is
    adj(A)(E - B), so that det(A) U'' = second U'.'''
    labels: tuple
    matrix: sympy.ImmutableMatrix
    B: sympy.ImmutableMatrix
    C: sympy.ImmutableMatrix
    determinant: sympy.Poly
    second: sympy.ImmutableMatrix

    @property
    def size(self):
        return len(self.labels)


@dataclasses.dataclass(frozen=True)
class PFSystem:
    case: object
    annulus: Annulus
    blocks: tuple

    @property
    def B1(self):
        return self.blocks[0].B

    @property
    def C1(self):
        return self.blocks[0].C

    @property
    def B2(self):
        return self.blocks[1].B

    @property
    def C2(self):
        return self.blocks[1].C

    @property
    def D1(self):
        return self.blocks[0].determinant

    @property
    def D2(self):
        return self.blocks[1].determinant

    @property
    def second_deriv(self):
        'U_b\'\' = second_deriv[b] U_b\', entries as reduced RatFunQ.'
        return [[[RatFunQ(poly(entry), block.determinant)
                  for entry in block.second.row(r)]
                 for r in range(block.size)]
                for block in self.blocks]

    def determinant_roots(self):
        'Distinct roots of D1 and D2 strictly inside the annulus.'
        interval = get_annulus(self.case, self.annulus)
        return [sturm_count(block.determinant, interval.lower, interval.upper)
                for block in self.blocks]


# Derivation.
# -----------
#
# Differentiating J_ij along the level set gives
#     J_ij = 2/(j+2) * (a0 J'_{i,j+2} + a1 J'_{i+1,j+2}).
# Reducing the right side to the generators of the same block and
# differentiating the reduction yields U = K U + Q U', so A = (E - K)^-1 Q.

def _linear(entry):
    value = RatFunQ.from_expr(entry)
    assert value.is_polynomial() and degree(value.numerator) <= 1, \
        "Picard-Fuchs entry is not linear in h: {}".format(entry)
    return value.as_expr()


@functools.lru_cache(maxsize=None)
def derive_blocks(case):
    table = reduction_table(case)
    a0, a1 = case.a_coeffs
    blocks = []
    for block in generators(case):
        size = len(block)
        position = {g: k for k, g in enumerate(block)}
        K = sympy.zeros(size, size)
        Q = sympy.zeros(size, size)
        for row, (i, j) in enumerate(block):
            for weight, source in ((2 * a0 / (j + 2), (i, j + 2)),
                                   (2 * a1 / (j + 2), (i + 1, j + 2))):
                if weight == 0:
                    continue
                for g, coefficient in table[source].coefficients.items():
                    if coefficient.is_zero:
                        continue
                    assert g in position, "reduction mixed the parity of j"
                    Q[row, position[g]] += weight * coefficient.as_expr()
                    K[row, position[g]] += \
                        weight * coefficient.diff(h).as_expr()
        A = ((sympy.eye(size) - K).inv() * Q).applyfunc(_linear)
        B = A.applyfunc(lambda entry: sympy.diff(entry, h))
        C = A.subs(h, 0)
        determinant = poly(sympy.expand(A.det()))
        second = (A.adjugate() * (sympy.eye(size) - B)).applyfunc(
            sympy.expand)
        blocks.append(PFBlock(
            tuple(label(g) for g in block), sympy.ImmutableMatrix(A),
            sympy.ImmutableMatrix(B), sympy.ImmutableMatrix(C), determinant,
            sympy.ImmutableMatrix(second)))
        debug('Picard-Fuchs block', [label(g) for g in block], 'of', case,
              'det =', sympy.factor(determinant.as_expr()))
    return tuple(blocks)


def pf_system(case, annulus=None, experimental=False):
    interval = get_annulus(case, annulus)
    if interval.annulus == Annulus.LEFT and not experimental:
        raise error.UnsupportedAnnulusError(
            "the left annulus of {} is only available as experimental".format(
                case))
    return PFSystem(case, interval.annulus, derive_blocks(case))


# Printed matrices.
# -----------------
#
# The matrices as printed for each family, kept to audit the derivation.
# Rows listed in MISPRINTED_ROWS disagree with the derivation and with
# quadrature; tabulated_differences reports them as known.

def _segment_tables(lam):
    L = sympy.Rational(lam)
    R = sympy.Rational
    B1 = [[3, 0, 0],
          [R(3, 2) - R(3, 2) / L, R(3, 2), 0],
          [-R(33, 8) * L + R(33, 4) + R(15, 8) / L, R(15, 8) * L - R(15, 8),
           1]]
    C1 = [[9 - 3 * L - 6 / L, 6 / L, 0],
          [-R(3, 2) * L + 6 - R(21, 2) / L + 9 / L**2,
           -R(3, 2) * L + R(9, 2) + 6 / L - 9 / L**2, 0],
          [R(33, 8) * L**2 - R(165, 8) * L + R(219, 8) + R(3, 8) / L
           - R(90, 8) / L**2,
           -R(15, 8) * L**2 + R(30, 4) * L - R(81, 8) + R(21, 8) / L
           + R(90, 8) / L**2, 0]]
    B2 = [[R(3, 2), 0, 0],
          [R(8, 5) * (1 - 1 / L), 1, 0],
          [3 * (-179 * L**2 + 358 * L + 77) / (320 * L**2),
           R(3, 8) * (1 - 1 / L), R(3, 4)]]
    C2 = [[0, -3 * L + 6, R(3, 2) * (L - 1)],
          [0, -R(21, 5) * L + R(63, 5) - R(42, 5) / L,
           R(8, 5) * L - R(16, 5) + R(18, 5) / L],
          [0, 3 * (318 * L**3 - 1272 * L**2 + 918 * L + 708) / (320 * L**2),
           3 * (-259 * L**3 + 777 * L**2 - 41 * L - 477) / (320 * L**2)]]
    return tuple([[b * h + c for b, c in zip(brow, crow)]
                  for brow, crow in zip(B, C)]
                 for B, C in ((B1, C1), (B2, C2)))


def tabulated_matrices(case):
    '''The printed A(h) of both blocks as nested lists, or None.'''
    if case.segment:
        return _segment_tables(case.lam)
    R = sympy.Rational
    if case.kind == Kind.PARABOLIC:
        return (
            [[R(4, 3) * h, R(4, 3)],
             [R(8, 15) * h, R(4, 5) * h + R(32, 15)]],
            [[2 * h + 4, 0],
             [h + 2, h]])
    if case.kind == Kind.TRIANGLE:
        return (
            [[3 * h, R(-1, 2), 0],
             [R(3, 4) * h, R(3, 2) * h - R(3, 8), 0],
             [R(3, 4) * h, -h / 2 - R(1, 24), h - R(1, 6)]],
            [[R(3, 2) * h, R(-1, 2), R(1, 4)],
             [0, h - R(1, 6), 0],
             [R(3, 16) * h, h / 8 + R(1, 96), R(3, 4) * h - R(3, 16)]])
    return None


# (block, row) pairs of the printed tables that are known to be wrong.
_SEGMENT_MISPRINTS = frozenset({(0, 2), (1, 1), (1, 2)})
MISPRINTED_ROWS = {
    Kind.ELLIPTIC: _SEGMENT_MISPRINTS,
    Kind.HYPERBOLIC: _SEGMENT_MISPRINTS,
    # J'11 and J'21 columns swapped in the first row.
    Kind.TRIANGLE: frozenset({(1, 0)}),
}


@dataclasses.dataclass(frozen=True)
class TableDifference:
    block: int
    row: int
    col: int
    derived: object
    tabulated: object
    known: bool


def tabulated_differences(system):
    '''Entries where the derived A(h) differs from the printed one. Empty
    when nothing is printed for the family or everything agrees.'''
    tables = tabulated_matrices(system.case)
    if tables is None:
        return []
    known = MISPRINTED_ROWS.get(system.case.kind, frozenset())
    differences = []
    for b, (block, table) in enumerate(zip(system.blocks, tables)):
        for r in range(block.size):
            for c in range(block.size):
                derived = block.matrix[r, c]
                expected = sympy.sympify(table[r][c])
                if sympy.expand(derived - expected) != 0:
                    differences.append(TableDifference(
                        b, r, c, derived, expected, (b, r) in known))
    return differences


def unexpected_differences(system):
    return [d for d in tabulated_differences(system) if not d.known]


def matrix_at(matrix, at):
    return numpy.array(matrix.subs(h, at).evalf(), dtype=float)


def fit_block(case, annulus, block_index, hs, settings=DEFAULT_SETTINGS):
    '''Least-squares fit of B and C from sampled U and U' alone. Agreement
    with the derived block is a check that does not go through the
    reduction table.'''
    rows = []
    targets = []
    for at in hs:
        values = generator_vector(case, annulus, at, settings)
        slopes = generator_vector(case, annulus, at, settings, order=1)
        u = (values.u1, values.u2)[block_index]
        du = (slopes.u1, slopes.u2)[block_index]
        rows.append(numpy.concatenate([at * du, du]))
        targets.append(u)
    design = numpy.array(rows)
    solution, *_ = numpy.linalg.lstsq(design, numpy.array(targets),
                                      rcond=None)
    size = design.shape[1] // 2
    return solution[:size].T, solution[size:].T


# Residuals.
# ----------

def _block_values(case, annulus, at, settings, order):
    vector = generator_vector(case, annulus, at, settings, order)
    return (vector.u1, vector.u2)


def tabulated_row_residual(case, annulus, at, block, row, printed=True,
                           settings=DEFAULT_SETTINGS):
    '''|u_row - A[row] U'| relative to max |U| of the block, using the
    printed row or the derived one.'''
    if printed:
        tables = tabulated_matrices(case)
        if tables is None:
            raise ValueError("nothing is printed for {}".format(case))
        entries = sympy.Matrix(tables[block]).row(row)
    else:
        entries = derive_blocks(case)[block].matrix.row(row)
    values = _block_values(case, annulus, at, settings, 0)[block]
    slopes = _block_values(case, annulus, at, settings, 1)[block]
    predicted = float(numpy.dot(matrix_at(entries, at)[0], slopes))
    return abs(values[row] - predicted) / \
        max(float(numpy.max(numpy.abs(values))), 1e-300)


def pf_residual(case, annulus, at, which='first', settings=DEFAULT_SETTINGS,
                experimental=False, method='analytic'):
    '''Max-norm residual of U - A U' (first) or U'' - adj(A)(E-B)U'/det A
    (second), over both blocks.'''
    system = pf_system(case, annulus, experimental)
    slopes = _block_values(case, annulus, at, settings, 1)
    worst = 0.0
    if which == 'first':
        values = _block_values(case, annulus, at, settings, 0)
        for block, u, du in zip(system.blocks, values, slopes):
            residual = u - matrix_at(block.matrix, at) @ du
            worst = max(worst, numpy.max(numpy.abs(residual)))
    elif which == 'second':
        if method == 'analytic':
            curvatures = _block_values(case, annulus, at, settings, 2)
        elif method == 'richardson':
            step = _step(case, annulus, at)
            curvatures = [
                finite_difference(
                    lambda x, b=b: _block_values(case, annulus, x, settings,
                                                 1)[b], at, step)
                for b in range(2)]
        else:
            raise ValueError("unknown method " + repr(method))
        for block, du, ddu in zip(system.blocks, slopes, curvatures):
            predicted = matrix_at(block.second, at) @ du / \
                evaluate_float(block.determinant, at)
            worst = max(worst, numpy.max(numpy.abs(ddu - predicted)))
    else:
        raise ValueError("which must be 'first' or 'second'")
    return float(worst)


def _step(case, annulus, at):
    interval = get_annulus(case, annulus)
    gap = min(at - float(interval.lower), float(interval.upper) - at)
    return min(1e-3 * interval.length, gap / 4)


# Riccati equations.
# ------------------
#
# If D (u1', u2') = m (u1, u2) then rho = u2/u1 satisfies
#     D rho' = -m12 rho**2 + (m22 - m11) rho + m21.

@dataclasses.dataclass(frozen=True)
class RiccatiSystem:
    '''components holds (order, block, weights) for u1 and u2, each a
    weighted sum of one generator block differentiated order times.'''
    name: str
    denominator: sympy.Poly
    m: sympy.ImmutableMatrix
    components: tuple

    def values(self, case, annulus, at, settings=DEFAULT_SETTINGS):
        vectors = {}
        out = []
        for order, block, weights in self.components:
            if order not in vectors:
                vectors[order] = generator_vector(case, annulus, at,
                                                  settings, order)
            vector = vectors[order]
            out.append(float(numpy.dot((vector.u1, vector.u2)[block],
                                       weights)))
        return out

    def terms(self, rho, at):
        'The three right-hand terms at h=at.'
        m = matrix_at(self.m, at)
        return (-m[0, 1] * rho**2, (m[1, 1] - m[0, 0]) * rho, m[1, 0])


def _cleared(entries):
    'Common monic denominator D and polynomial numerators of a 2x2 matrix.'
    fractions = [[RatFunQ.from_expr(e) for e in row] for row in entries]
    denominator = functools.reduce(
        lambda a, b: a.lcm(b),
        (f.denominator for row in fractions for f in row))
    numerators = [[(f.numerator * denominator.quo(f.denominator)).as_expr()
                   for f in row] for row in fractions]
    return denominator, sympy.ImmutableMatrix(numerators)


def _triangle_nu(block):
    """J''_21 / J'_01 for the triangle. J_11 is linear in h there, so
    J''_11 and J'''_11 vanish; one row of (E-B)U' = A U'' and two rows of
    its derivative (E-2B)U'' = A U''' close the system."""
    assert all(entry == 0 for entry in block.second.row(1)), \
        "J_11 is not linear in h"
    A, B = block.matrix, block.B
    p, q, s11, s21 = sympy.symbols('p q s11 s21')
    x01, y01, y21 = sympy.symbols('x01 y01 y21')
    E = sympy.eye(3)
    first = sympy.Matrix([p, s11, s21])
    second = sympy.Matrix([x01, 0, q])
    third = sympy.Matrix([y01, 0, y21])
    lower = ((E - B) * first - A * second)[0]
    upper = (E - 2 * B) * second - A * third
    solution, = sympy.solve([lower, upper[0], upper[2]], [x01, y01, y21],
                            dict=True)
    rows = [solution[x01], solution[y21]]
    for row in rows:
        assert not (row.has(s11) or row.has(s21))
    entries = [[sympy.cancel(sympy.diff(row, v)) for v in (p, q)]
               for row in rows]
    return _cleared(entries)


@functools.lru_cache(maxsize=None)
def riccati_system(case, which):
    first, second = derive_blocks(case)
    if which == 'omega':
        if case.kind == Kind.PARABOLIC:
            # omega = J11/J01 straight from U1 = A1 U1'.
            return RiccatiSystem('omega', first.determinant,
                                 sympy.ImmutableMatrix(
                                     first.matrix.adjugate()),
                                 ((0, 0, (1.0, 0.0)), (0, 0, (0.0, 1.0))))
        M = first.second
        assert M[0, 2] == 0 and M[1, 2] == 0, "J'00, J'10 do not decouple"
        return RiccatiSystem('omega', first.determinant, M[0:2, 0:2],
                             ((1, 0, (1.0, 0.0, 0.0)),
                              (1, 0, (0.0, 1.0, 0.0))))
    elif which == 'nu':
        if case.kind == Kind.PARABOLIC:
            raise error.UnsupportedIndexError(
                "the parabolic family has no nu ratio")
        if case.kind == Kind.TRIANGLE:
            denominator, m = _triangle_nu(second)
            return RiccatiSystem('nu', denominator, m,
                                 ((1, 1, (1.0, 0.0, 0.0)),
                                  (2, 1, (0.0, 0.0, 1.0))))
        # Z = 3/8 (1/lambda - 1) J11 + 1/4 J21 decouples from J'11.
        z11 = sympy.Rational(3, 8) * (1 / case.lam - 1)
        T = sympy.Matrix([[1, 0, 0], [0, 1, 0],
                          [0, z11, sympy.Rational(1, 4)]])
        M = (T * second.second * T.inv()).applyfunc(sympy.expand)
        assert M[0, 1] == 0 and M[2, 1] == 0, "J'01, Z' do not decouple"
        m = sympy.ImmutableMatrix([[M[0, 0], M[0, 2]], [M[2, 0], M[2, 2]]])
        return RiccatiSystem('nu', second.determinant, m,
                             ((1, 1, (1.0, 0.0, 0.0)),
                              (1, 1, (0.0, float(z11), 0.25))))
    raise ValueError("which must be 'omega' or 'nu'")


@dataclasses.dataclass(frozen=True)
class DerivativeRatios:
    h: float
    omega: float
    nu: float = None


def derivative_ratios(case, annulus, at, settings=DEFAULT_SETTINGS):
    ratios = []
    for which in ('omega', 'nu'):
        if which == 'nu' and case.kind == Kind.PARABOLIC:
            ratios.append(None)
            continue
        u1, u2 = riccati_system(case, which).values(case, annulus, at,
                                                    settings)
        _check_denominator(u1, u2, which, at)
        ratios.append(u2 / u1)
    return DerivativeRatios(float(at), *ratios)


def _check_denominator(u1, u2, which, at):
    if abs(u1) < 1e-12 * max(abs(u1), abs(u2)) or u1 == 0:
        raise error.DenominatorTooSmallError(
            "{} denominator {} at h={}".format(which, u1, at))


def riccati_residual(case, at, which, annulus=None, settings=DEFAULT_SETTINGS):
    '''|D rho' - (-m12 rho**2 + (m22 - m11) rho + m21)| relative to the sum of
    the term sizes, with rho' from Richardson differences of rho.'''
    system = riccati_system(case, which)
    u1, u2 = system.values(case, annulus, at, settings)
    _check_denominator(u1, u2, which, at)
    rho = u2 / u1

    def ratio(x):
        v1, v2 = system.values(case, annulus, x, settings)
        return v2 / v1
    slope = finite_difference(ratio, at, _step(case, annulus, at))
    lhs = evaluate_float(system.denominator, at) * slope
    terms = system.terms(rho, at)
    scale = abs(lhs) + sum(abs(t) for t in terms)
    return abs(lhs - sum(terms)) / max(scale, 1e-300)


# Parabolic second-derivative identities.
# ---------------------------------------

def parabolic_identities():
    '''Linear relations among J'10, J''10 and J''02 implied by the U2 block
    of the parabolic family: each entry is (name, c1, c2, c3) meaning
    c1 J'10 + c2 J''10 + c3 J''02 = 0.'''
    return [
        ('slope', 1, 4 + 2 * h, 0),
        ('row', 1, h + 2, h),
        ('curvature', 0, h + 2, -h),
    ]


def check_parabolic_identities():
    'Exact check of parabolic_identities against the derived U2 block.'
    block = derive_blocks(FamilyCase(Kind.PARABOLIC))[1]
    d10, d02 = sympy.symbols('d10 d02')
    curvature = block.second * sympy.Matrix([d10, d02]) / \
        block.determinant.as_expr()
    results = {}
    for name, c1, c2, c3 in parabolic_identities():
        expr = c1 * d10 + c2 * curvature[0] + c3 * curvature[1]
        results[name] = sympy.simplify(expr) == 0
    return results


def parabolic_identity_residuals(case, annulus, at, settings=DEFAULT_SETTINGS):
    slopes = generator_vector(case, annulus, at, settings, 1).u2
    curvatures = generator_vector(case, annulus, at, settings, 2).u2
    residuals = {}
    for name, c1, c2, c3 in parabolic_identities():
        terms = [float(sympy.sympify(c1).subs(h, at)) * slopes[0],
                 float(sympy.sympify(c2).subs(h, at)) * curvatures[0],
                 float(sympy.sympify(c3).subs(h, at)) * curvatures[1]]
        scale = sum(abs(t) for t in terms)
        residuals[name] = abs(sum(terms)) / max(scale, 1e-300)
    return residuals
