#! /usr/bin/env python3
# coding=utf8

import math

import numpy
import pytest
from scipy import optimize
import sympy

import melnikovlab
from melnikovlab.exact import evaluate_float
from melnikovlab.families import FamilyCase, Kind
from melnikovlab.quadrature import DEFAULT_SETTINGS, j_integral

ELLIPTIC = FamilyCase(Kind.ELLIPTIC, 1)
HYPERBOLIC = FamilyCase(Kind.HYPERBOLIC, '-1/2')
PARABOLIC = FamilyCase(Kind.PARABOLIC)
TRIANGLE = FamilyCase(Kind.TRIANGLE)

# One energy well inside each annulus.
MIDDLE = [(ELLIPTIC, -1.0), (FamilyCase(Kind.ELLIPTIC, '1/2'), -1.25),
          (HYPERBOLIC, -1.75), (PARABOLIC, -1.0), (TRIANGLE, 1 / 12)]


def pert(n, **terms):
    return melnikovlab.reduction.PerturbationSpec(n, **terms)


def crossing_perturbation(case, at):
    '''q+ = y - kappa, with kappa picked so that M = J01 - kappa*J00 has a
    simple zero at h=at.'''
    kappa = j_integral(case, None, at, (0, 1)) / \
        j_integral(case, None, at, (0, 0))
    return pert(1, plus_q={(0, 1): 1, (0, 0): -kappa})


# Ovals.
# ------

def test_parabolic_endpoints():
    for at in (-1.9, -1.0, -0.3):
        oval = melnikovlab.ovals.endpoints(PARABOLIC, None, at)
        root = math.sqrt(4 + 2 * at)
        assert oval.x_a == pytest.approx(2 - root, abs=1e-13)
        assert oval.x_b == pytest.approx(2 + root, abs=1e-13)
        assert oval.x_c is None
    oval = melnikovlab.ovals.endpoints(PARABOLIC, None, -2)
    assert oval.x_a == oval.x_b == 2
    oval = melnikovlab.ovals.endpoints(PARABOLIC, None, -1e-9)
    assert (oval.x_a, oval.x_b) == pytest.approx((0, 4), abs=1e-8)


def test_cubic_endpoints():
    oval = melnikovlab.ovals.endpoints(TRIANGLE, None, 1 / 6 - 1e-9)
    assert (oval.x_a, oval.x_b) == pytest.approx((-0.5, 1), abs=1e-3)
    for case, at in MIDDLE:
        oval = melnikovlab.ovals.endpoints(case, None, at)
        assert oval.x_a < oval.x_b
        for x in (oval.x_a, oval.x_b, oval.x_c or oval.x_a):
            assert case.potential(x) == pytest.approx(at, abs=1e-12)
    with pytest.raises(melnikovlab.error.OutsideAnnulusError):
        melnikovlab.ovals.endpoints(PARABOLIC, None, 0.5)
    with pytest.raises(melnikovlab.error.OutsideAnnulusError):
        melnikovlab.ovals.endpoints(ELLIPTIC, 'left', -1)


def test_cubic_roots_in_closed_form():
    # x**3 - 3x + 1 = 0 has the roots 2cos(2pi/9), 2cos(4pi/9), 2cos(8pi/9).
    oval = melnikovlab.ovals.endpoints(ELLIPTIC, 'right', -1.0)
    assert oval.x_a < 1 < oval.x_b
    assert oval.x_a == pytest.approx(2 * math.cos(4 * math.pi / 9),
                                     abs=1e-14)
    assert oval.x_b == pytest.approx(2 * math.cos(2 * math.pi / 9),
                                     abs=1e-14)
    assert oval.x_c == pytest.approx(2 * math.cos(8 * math.pi / 9),
                                     abs=1e-14)


@pytest.mark.parametrize('case', melnikovlab.families.all_cases())
def test_endpoints_across_annulus(case):
    interval = melnikovlab.families.get_annulus(case)
    for at in interval.grid(25, 1e-6):
        oval = melnikovlab.ovals.endpoints(case, None, float(at))
        assert oval.x_a < float(interval.center_x) < oval.x_b
        for x in (oval.x_a, oval.x_b):
            assert case.potential(x) == pytest.approx(float(at), abs=1e-11)


def test_upper_y():
    upper_y = melnikovlab.ovals.upper_y
    assert upper_y(PARABOLIC, -2, 2) == 0
    oval = melnikovlab.ovals.endpoints(ELLIPTIC, None, -1)
    assert upper_y(ELLIPTIC, -1, oval.x_a, oval=oval) == 0
    at = 1 / 8
    for x in numpy.linspace(-0.3, 0.6, 7):
        expected = optimize.brentq(
            lambda y: TRIANGLE.energy(x, y) - at, 0, 10, xtol=1e-15)
        assert upper_y(TRIANGLE, at, x) == pytest.approx(expected,
                                                         abs=1e-12)
    with pytest.raises(melnikovlab.error.OutsideArcError):
        upper_y(TRIANGLE, at, 0.9)


def test_dx_dh_on_axis():
    dx_dh = melnikovlab.ovals.dx_dh_on_axis
    assert dx_dh(ELLIPTIC, 2.0) == pytest.approx(1 / 9)
    for x in (0.5, 3.0, 3.9):
        assert dx_dh(PARABOLIC, x) == pytest.approx(1 / (x - 2))
    with pytest.raises(melnikovlab.error.CriticalAbscissaError):
        dx_dh(TRIANGLE, 1.0)
    # dx_b/dh from the closed form 2 + sqrt(4 + 2h).
    at = -1.0
    x_b = 2 + math.sqrt(4 + 2 * at)
    assert dx_dh(PARABOLIC, x_b) == pytest.approx(1 / math.sqrt(4 + 2 * at))


# Integrals.
# ----------

def test_parabolic_closed_forms():
    for at in (-1.8, -1.0, -0.2):
        root = math.sqrt(4 + 2 * at)
        assert j_integral(PARABOLIC, None, at, (0, 0)) == \
            pytest.approx(2 * root, rel=1e-10)
        assert j_integral(PARABOLIC, None, at, (1, 0)) == \
            pytest.approx(4 * root, rel=1e-10)
        derivative = melnikovlab.quadrature.j_derivative(
            PARABOLIC, None, at, (1, 0))
        assert derivative == pytest.approx(4 / root, rel=1e-10)


def test_interval_length():
    for case, at in MIDDLE:
        oval = melnikovlab.ovals.endpoints(case, None, at)
        assert j_integral(case, None, at, (0, 0)) == \
            pytest.approx(oval.length, rel=1e-10)
        assert j_integral(case, None, at, (0, 1)) > 0


def test_derivative_matches_finite_differences():
    for case, at in MIDDLE:
        for idx in ((0, 0), (1, 1), (0, 2)):
            slope = melnikovlab.quadrature.finite_difference(
                lambda x: j_integral(case, None, x, idx), at, 1e-3)
            derivative = melnikovlab.quadrature.j_derivative(case, None, at,
                                                             idx)
            assert derivative == pytest.approx(slope, rel=1e-6, abs=1e-9)
    # Second derivatives through the symbolic bracket.
    curvature = melnikovlab.quadrature.finite_difference(
        lambda x: j_integral(ELLIPTIC, None, x, (2, 1)), -1.0, 1e-2, order=2)
    assert melnikovlab.quadrature.j_derivative(
        ELLIPTIC, None, -1.0, (2, 1), order=2) == \
        pytest.approx(curvature, rel=1e-5)


def test_triangle_j11_vanishes():
    # The triangle is symmetric under rotation by 120 degrees, so every
    # oval has its centroid at the origin.
    for at in (0.02, 1 / 12, 0.15):
        scale = j_integral(TRIANGLE, None, at, (0, 1))
        assert abs(j_integral(TRIANGLE, None, at, (1, 1))) < 1e-9 * scale
        slope = melnikovlab.quadrature.j_derivative(TRIANGLE, None, at,
                                                    (0, 1))
        assert abs(melnikovlab.quadrature.j_derivative(
            TRIANGLE, None, at, (1, 1))) < 1e-9 * slope


def test_near_center_and_polycycle():
    vector = melnikovlab.quadrature.generator_vector(PARABOLIC, None,
                                                     -2 + 1e-10)
    assert numpy.all(numpy.abs(vector.values) < 1e-4)
    assert j_integral(TRIANGLE, None, 1e-10, (1, 2)) < 1e-4
    with pytest.raises(melnikovlab.error.OutsideAnnulusError):
        j_integral(PARABOLIC, None, -1e-7, (0, 1))
    with pytest.raises(melnikovlab.error.OutsideAnnulusError):
        melnikovlab.quadrature.j_derivative(PARABOLIC, None, -2, (0, 1))


def test_index_checks():
    with pytest.raises(melnikovlab.error.NegativeIndexError):
        j_integral(TRIANGLE, None, 0.1, (-1, 0))
    with pytest.raises(melnikovlab.error.UnsupportedIndexError):
        j_integral(TRIANGLE, None, 0.1, (7, 6))
    with pytest.raises(ValueError):
        melnikovlab.quadrature.QuadratureSettings(node_count=8)
    with pytest.raises(ValueError):
        melnikovlab.quadrature.QuadratureSettings(target_rel_tol=1e-16)


def test_lower_arc():
    lower = melnikovlab.quadrature.lower_arc_integral
    for case, at in MIDDLE:
        assert lower(case, None, at, (0, 0)) == \
            -j_integral(case, None, at, (0, 0))
        assert lower(case, None, at, (0, 1)) == \
            j_integral(case, None, at, (0, 1))
        for idx in ((0, 0), (2, 1), (1, 2), (0, 3)):
            folded = lower(case, None, at, idx)
            direct = lower(case, None, at, idx, direct=True)
            assert direct == pytest.approx(folded, rel=1e-7, abs=1e-12)


def test_generator_vector():
    at = 1 / 12
    vector = melnikovlab.quadrature.generator_vector(TRIANGLE, None, at)
    for g, value in vector.as_dict().items():
        assert value == pytest.approx(j_integral(TRIANGLE, None, at, g),
                                      rel=1e-14, abs=1e-300)
    vector = melnikovlab.quadrature.generator_vector(ELLIPTIC, None, -1.0)
    assert vector.z == pytest.approx(vector.u2[2] / 4)
    assert melnikovlab.quadrature.generator_vector(
        PARABOLIC, None, -1.0).z is None


# Reduction against quadrature.
# -----------------------------

@pytest.mark.parametrize('case, at', MIDDLE)
def test_reduction_matches_quadrature(case, at):
    vector = melnikovlab.quadrature.generator_vector(case, None, at)
    for level in range(7):
        for i in range(level + 1):
            idx = (i, level - i)
            reduced = melnikovlab.reduction.reduce_monomial(
                case, idx).evaluate(at, vector)
            direct = j_integral(case, None, at, idx)
            assert abs(reduced - direct) <= 1e-7 * max(1, abs(direct)), idx


@pytest.mark.parametrize('case, at', MIDDLE)
def test_recurrence_identities(case, at):
    residual = melnikovlab.reduction.recurrence_residual
    for idx in ((0, 0), (1, 1), (2, 3)):
        for which in ('multiply', 'derivative'):
            assert residual(case, at, idx, which) < 1e-8, (idx, which)
    for idx in ((1, 0), (1, 1), (2, 2)):
        assert residual(case, at, idx, 'parts') < 1e-8, idx
    assert residual(case, at, (3, 1), 'rule') < 1e-8
    if case.segment:
        assert residual(case, at, (1, 2), 'energy-derivative') < 1e-8


def test_melnikov_numeric_and_symbolic_agree():
    rng = numpy.random.default_rng(17)
    p = melnikovlab.reduction.random_perturbation(4, rng)
    at = 1 / 12
    numeric = melnikovlab.zeros.melnikov_numeric(TRIANGLE, None, p, at)
    symbolic = melnikovlab.zeros.melnikov_evaluator(TRIANGLE, None, p)(at)
    assert symbolic == pytest.approx(numeric, rel=1e-6)
    for case, at in MIDDLE[:3]:
        p = melnikovlab.reduction.random_perturbation(3, rng)
        numeric = melnikovlab.zeros.melnikov_numeric(case, None, p, at)
        symbolic = melnikovlab.zeros.melnikov_evaluator(case, None, p)(at)
        assert symbolic == pytest.approx(numeric, rel=1e-6, abs=1e-9)


def test_melnikov_is_linear():
    rng = numpy.random.default_rng(3)
    a = melnikovlab.reduction.random_perturbation(3, rng)
    b = melnikovlab.reduction.random_perturbation(2, rng)
    numeric = melnikovlab.zeros.melnikov_numeric
    at = -0.7
    assert numeric(PARABOLIC, None, a + b, at) == pytest.approx(
        numeric(PARABOLIC, None, a, at) + numeric(PARABOLIC, None, b, at))
    assert numeric(PARABOLIC, None, a.scaled(-3), at) == pytest.approx(
        -3 * numeric(PARABOLIC, None, a, at))


# Picard-Fuchs and Riccati residuals.
# -----------------------------------

def test_first_order_residuals():
    for case, at in ((PARABOLIC, -1.0), (TRIANGLE, 1 / 12), (ELLIPTIC, -1.0),
                     (HYPERBOLIC, -1.75)):
        values = melnikovlab.quadrature.generator_vector(case, None,
                                                         at).values
        residual = melnikovlab.picard_fuchs.pf_residual(case, None, at)
        assert residual <= 1e-8 * numpy.max(numpy.abs(values))


def test_second_order_residuals():
    pf_residual = melnikovlab.picard_fuchs.pf_residual
    slopes = melnikovlab.quadrature.generator_vector(ELLIPTIC, None, -1.0,
                                                     order=1).values
    scale = numpy.max(numpy.abs(slopes))
    assert pf_residual(ELLIPTIC, None, -1.0, 'second') <= 1e-6 * scale
    assert pf_residual(ELLIPTIC, None, -1.0, 'second',
                       method='richardson') <= 1e-5 * scale
    with pytest.raises(ValueError):
        pf_residual(ELLIPTIC, None, -1.0, 'third')


def test_left_annulus_residual():
    at = 1.0
    residual = melnikovlab.picard_fuchs.pf_residual(
        ELLIPTIC, 'left', at, experimental=True)
    values = melnikovlab.quadrature.generator_vector(ELLIPTIC, 'left',
                                                     at).values
    assert residual <= 1e-8 * numpy.max(numpy.abs(values))


def test_fit_block():
    hs = numpy.linspace(-1.8, -0.2, 12)
    B, C = melnikovlab.picard_fuchs.fit_block(PARABOLIC, None, 1, hs)
    assert B == pytest.approx(numpy.array([[2, 0], [1, 1]]), abs=1e-5)
    assert C == pytest.approx(numpy.array([[4, 0], [2, 0]]), abs=1e-5)


@pytest.mark.parametrize('case, at, block, row', [
    (TRIANGLE, 0.04, 1, 0), (TRIANGLE, 0.08, 1, 0), (TRIANGLE, 0.12, 1, 0),
    (ELLIPTIC, -1.0, 0, 2), (ELLIPTIC, -1.0, 1, 2),
    (FamilyCase(Kind.ELLIPTIC, '1/2'), -1.25, 1, 1)])
def test_misprinted_rows_fail_numerically(case, at, block, row):
    residual = melnikovlab.picard_fuchs.tabulated_row_residual
    assert residual(case, None, at, block, row, printed=False) <= 1e-8
    assert residual(case, None, at, block, row) > 1e-3


def test_printed_triangle_row_gives_wrong_j01():
    tables = melnikovlab.picard_fuchs.tabulated_matrices(TRIANGLE)
    printed = melnikovlab.picard_fuchs.matrix_at(
        sympy.Matrix(tables[1]), 0.04)
    slopes = melnikovlab.quadrature.generator_vector(TRIANGLE, None, 0.04,
                                                     order=1).u2
    j01 = j_integral(TRIANGLE, None, 0.04, (0, 1))
    assert j01 == pytest.approx(0.12936, abs=1e-5)
    assert printed[0] @ slopes == pytest.approx(0.23557, abs=1e-4)


def test_riccati_residuals():
    riccati_residual = melnikovlab.picard_fuchs.riccati_residual
    assert riccati_residual(ELLIPTIC, -1.0, 'omega') <= 1e-5
    assert riccati_residual(ELLIPTIC, -1.0, 'nu') <= 1e-5
    assert riccati_residual(TRIANGLE, 1 / 12, 'omega') <= 1e-5
    assert riccati_residual(TRIANGLE, 1 / 12, 'nu') <= 1e-5
    assert riccati_residual(PARABOLIC, -1.0, 'omega') <= 1e-5


def test_derivative_ratios():
    ratios = melnikovlab.picard_fuchs.derivative_ratios(PARABOLIC, None, -1.0)
    expected = j_integral(PARABOLIC, None, -1.0, (1, 1)) / \
        j_integral(PARABOLIC, None, -1.0, (0, 1))
    assert ratios.omega == pytest.approx(expected)
    assert ratios.nu is None
    ratios = melnikovlab.picard_fuchs.derivative_ratios(TRIANGLE, None,
                                                        1 / 12)
    assert ratios.nu is not None


def test_parabolic_identity_residuals():
    residuals = melnikovlab.picard_fuchs.parabolic_identity_residuals(
        PARABOLIC, None, -0.8)
    assert sorted(residuals) == ['curvature', 'row', 'slope']
    assert all(value < 1e-6 for value in residuals.values())


@pytest.mark.parametrize('case', melnikovlab.families.all_cases(), ids=str)
def test_residual_sweeps(case):
    verify = melnikovlab.verify
    interval = melnikovlab.families.get_annulus(case)
    hs = [float(x) for x in interval.grid(20, verify.SAMPLE_MARGIN)]
    checks = verify.pf_checks(case, interval.annulus, hs, DEFAULT_SETTINGS,
                              verify.DEFAULT_TOL)
    checks += verify.riccati_checks(case, interval.annulus, hs,
                                    DEFAULT_SETTINGS, verify.RICCATI_TOL)
    assert len([c for c in checks if c.name == 'second-order']) == 20
    assert [c.to_json() for c in checks if not c.passed] == []


# Elimination and annihilators.
# -----------------------------

@pytest.mark.parametrize('case, at', [(ELLIPTIC, -1.0), (TRIANGLE, 1 / 12)])
def test_annihilator_residuals(case, at):
    p = melnikovlab.reduction.random_perturbation(
        3, numpy.random.default_rng(8))
    combination = melnikovlab.reduction.melnikov_symbolic(case, None, p)
    result = melnikovlab.operators.eliminate_and_form_F1(case, combination, 3)
    assert melnikovlab.operators.elimination_residual(
        case, combination, result, None, at) <= 1e-7
    L = melnikovlab.operators.synthesize_L(case, result.f1.phi1, 3)
    assert melnikovlab.operators.annihilator_residual(
        case, L, result.f1.phi1, at) <= 1e-5
    R = melnikovlab.operators.remainder(case, L, result.f1)
    assert melnikovlab.operators.operator_residual(
        case, L, result.f1, R, at) <= 1e-5


def test_phi2_over_z():
    case = FamilyCase(Kind.ELLIPTIC, '1/2')
    combination = melnikovlab.reduction.melnikov_symbolic(
        case, None, melnikovlab.reduction.random_perturbation(
            3, numpy.random.default_rng(4)))
    result = melnikovlab.operators.eliminate_and_form_F1(case, combination, 3)
    phi2 = result.f1.phi2
    view = phi2.z_view()
    assert sorted(view) == ["J'01", "J'11", "Z'"]
    for at in (-2.0, -1.25, -0.5):
        slopes = melnikovlab.quadrature.generator_vector(case, None, at,
                                                         order=1)
        values = {"J'01": slopes.u2[0], "J'11": slopes.u2[1],
                  "Z'": slopes.z}
        total = sum(evaluate_float(view[name], at) * values[name]
                    for name in view)
        total /= evaluate_float(phi2.denominator, at)
        assert total == pytest.approx(phi2.evaluate(None, at), rel=1e-9,
                                      abs=1e-12)
    with pytest.raises(ValueError):
        melnikovlab.operators.ReducedForm(
            TRIANGLE, (), {}).z_view()


@pytest.mark.parametrize('case', [ELLIPTIC, TRIANGLE], ids=str)
def test_annihilator_sweep(case):
    verify = melnikovlab.verify
    interval = melnikovlab.families.get_annulus(case)
    hs = [float(x) for x in interval.grid(30, verify.SAMPLE_MARGIN)]
    checks = verify.annihilator_checks(case, interval.annulus, hs,
                                       DEFAULT_SETTINGS,
                                       verify.ANNIHILATOR_TOL, count=10)
    assert len(checks) == 3 * 10 * 30
    assert [c.to_json() for c in checks if not c.passed] == []


def test_verify_suites():
    verify = melnikovlab.verify
    annulus = melnikovlab.families.Annulus.SOLE
    hs = [0.04, 0.12]
    for checks in (
            verify.pf_checks(TRIANGLE, annulus, hs, DEFAULT_SETTINGS, 1e-8),
            verify.recurrence_checks(TRIANGLE, annulus, hs, DEFAULT_SETTINGS,
                                     1e-6),
            verify.riccati_checks(TRIANGLE, annulus, hs, DEFAULT_SETTINGS,
                                  1e-5)):
        assert checks
        assert [c.to_json() for c in checks if not c.passed] == []


# Zero scanning.
# --------------

def test_scan_zero_perturbation():
    report = melnikovlab.zeros.scan_zeros(PARABOLIC, None, pert(2), 100)
    assert report.zeros == []
    assert report.bound == 48
    assert report.within_bound


def test_scan_positive_melnikov():
    q_plus = pert(0, plus_q={(0, 0): 1})
    for case in (PARABOLIC, TRIANGLE):
        report = melnikovlab.zeros.scan_zeros(case, None, q_plus, 200)
        assert report.zeros == []
        assert report.dropped == 0


def test_scan_single_crossing():
    p = crossing_perturbation(PARABOLIC, -1.0)
    report = melnikovlab.zeros.scan_zeros(PARABOLIC, None, p, 200)
    assert report.count_sign_changes == 1
    zero, = report.zeros
    assert zero.kind == melnikovlab.zeros.ZeroKind.SIGN_CHANGE
    assert zero.h == pytest.approx(-1.0, abs=1e-6)
    assert zero.lo < zero.h < zero.hi
    # Scaling M moves no zeros.
    scaled = melnikovlab.zeros.scan_zeros(PARABOLIC, None, p.scaled(-5), 200)
    assert [z.h for z in scaled.zeros] == pytest.approx([zero.h], abs=1e-8)


def test_scan_grid_size():
    with pytest.raises(ValueError):
        melnikovlab.zeros.scan_zeros(PARABOLIC, None, pert(2), 10)


def test_scan_samples_and_csv(tmp_path):
    points = []
    p = crossing_perturbation(TRIANGLE, 0.1)
    report = melnikovlab.zeros.scan_zeros(TRIANGLE, None, p, 100,
                                          samples=points)
    assert len(points) == 100
    assert report.count_sign_changes == 1
    path = tmp_path / 'scan.csv'
    melnikovlab.zeros.write_csv(str(path), points)
    lines = path.read_text().splitlines()
    assert lines[0] == 'h,M'
    assert len(lines) == 101


@pytest.mark.parametrize('case', melnikovlab.families.all_cases(), ids=str)
def test_scan_stress(case):
    n = 2 if case.kind == Kind.PARABOLIC else 3
    rng = numpy.random.default_rng(17)
    bound = melnikovlab.zeros.theorem_bound(case, n)
    for _ in range(10):
        p = melnikovlab.reduction.random_perturbation(n, rng)
        report = melnikovlab.zeros.scan_zeros(case, None, p, 400)
        assert report.bound == bound
        assert report.within_bound, report.to_json()


# Piecewise flow.
# ---------------

def test_unperturbed_orbit_closes():
    oval = melnikovlab.ovals.endpoints(PARABOLIC, None, -1.0)
    trajectory = melnikovlab.odecheck.flow_piecewise(
        PARABOLIC, pert(1), 0.0, (oval.x_a, 0.0), crossings=2)
    (_, first), (_, second) = trajectory.events
    assert first == pytest.approx(2 + math.sqrt(2), abs=1e-8)
    assert second == pytest.approx(oval.x_a, abs=1e-8)
    assert trajectory.energy_drift(PARABOLIC) < 1e-8

    oval = melnikovlab.ovals.endpoints(TRIANGLE, None, 0.1)
    trajectory = melnikovlab.odecheck.flow_piecewise(
        TRIANGLE, pert(1), 0.0, (oval.x_a, 0.0), crossings=2)
    assert trajectory.events[-1][1] == pytest.approx(oval.x_a, abs=1e-8)


def test_perturbed_energy_drift():
    oval = melnikovlab.ovals.endpoints(ELLIPTIC, None, -1.0)
    p = pert(1, plus_q={(0, 0): 1}, minus_p={(1, 0): -1})
    trajectory = melnikovlab.odecheck.flow_piecewise(
        ELLIPTIC, p, 1e-3, (oval.x_a, 0.0), crossings=2)
    assert trajectory.energy_drift(ELLIPTIC) < 0.01
    assert trajectory.stats['segments'] == 2


def test_displacement_follows_melnikov():
    q_plus = pert(0, plus_q={(0, 0): 1})
    for case, at in ((PARABOLIC, -1.0), (ELLIPTIC, -1.0), (TRIANGLE, 0.1)):
        eps = 1e-3
        shift = melnikovlab.odecheck.displacement_map(case, q_plus, eps, at)
        c0 = melnikovlab.odecheck.melnikov_sign(case)
        value = j_integral(case, None, at, (0, 0))
        assert shift == pytest.approx(eps * c0 * value, rel=0.05)
    assert melnikovlab.odecheck.displacement_map(
        PARABOLIC, pert(2), 0.0, -1.0) == pytest.approx(0, abs=1e-9)


def test_flow_limits():
    with pytest.raises(ValueError):
        melnikovlab.odecheck.flow_piecewise(PARABOLIC, pert(1), 0.1,
                                            (1.0, 0.0))
    with pytest.raises(ValueError):
        melnikovlab.odecheck.flow_piecewise(PARABOLIC, pert(1), 0.0,
                                            (2.0, 0.0))
    with pytest.raises(melnikovlab.error.OutsideAnnulusError):
        melnikovlab.odecheck.displacement_map(PARABOLIC, pert(1), 1e-3,
                                              -1.99)


def test_limit_cycle_detection():
    p = crossing_perturbation(PARABOLIC, -1.0)
    cycles = melnikovlab.odecheck.detect_limit_cycles(PARABOLIC, p, 1e-3,
                                                      grid=12)
    assert len(cycles) == 1
    assert cycles[0] == pytest.approx(-1.0, abs=0.05)
    none = melnikovlab.odecheck.detect_limit_cycles(
        PARABOLIC, pert(0, plus_q={(0, 0): 1}), 1e-3, grid=8)
    assert none == []


def test_limit_cycles_converge_as_eps_shrinks():
    p = crossing_perturbation(PARABOLIC, -1.0)
    errors = []
    for eps in (1e-3, 5e-4, 2e-4):
        cycle, = melnikovlab.odecheck.detect_limit_cycles(PARABOLIC, p, eps,
                                                          grid=12)
        errors.append(abs(cycle + 1.0))
    assert max(errors) < 0.05
    assert errors[-1] <= errors[0] + 1e-4


def test_displacement_sign_across_annulus():
    p = crossing_perturbation(ELLIPTIC, -1.0)
    eps = 1e-3
    c0 = melnikovlab.odecheck.melnikov_sign(ELLIPTIC)
    for at in numpy.linspace(-1.85, -0.15, 8):
        shift = melnikovlab.odecheck.displacement_map(ELLIPTIC, p, eps, at)
        value = melnikovlab.zeros.melnikov_numeric(ELLIPTIC, None, p, at)
        assert numpy.sign(shift) == numpy.sign(c0 * value)
