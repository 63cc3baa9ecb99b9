import dataclasses
import json
import math

import numpy
from scipy import integrate, optimize

from . import error
from .config import parallel_map
from .debug import debug
from .families import get_annulus, get_case, get_interval
from .ovals import endpoints
from .quadrature import get_settings
from .reduction import get_perturbation
from .zeros import melnikov_evaluator

RTOL = 1e-12
ATOL = 1e-12
MAX_EPS = 0.05
MAX_EVENTS = 10**6
BLOWUP_NORM = 1e6
T_MAX = 1e3
# displacement_map stays this fraction of the annulus away from both ends.
DISPLACEMENT_MARGIN = 0.05
DEFAULT_EPS = 1e-3
DEFAULT_GRID = 40


@dataclasses.dataclass
class Trajectory:
    t: numpy.ndarray
    x: numpy.ndarray
    y: numpy.ndarray
    events: list
    stats: dict

    def energy_drift(self, case):
        'Largest |H - H(start)| along the samples.'
        energies = case.energy(self.x, self.y)
        return float(numpy.max(numpy.abs(energies - energies[0])))


def _terms(terms):
    return [(i, j, float(c)) for (i, j), c in terms.items()]


def _field(case, pert, eps, upper):
    '''The smooth field in force on one side of y = 0: the Hamiltonian part
    with the family's orientation plus eps*(p, q).'''
    s = case.orientation
    p_terms = _terms(pert.plus_p if upper else pert.minus_p)
    q_terms = _terms(pert.plus_q if upper else pert.minus_q)

    def rhs(t, state):
        x, y = state
        hx, hy = case.gradient(x, y)
        p = sum(c * x**i * y**j for i, j, c in p_terms)
        q = sum(c * x**i * y**j for i, j, c in q_terms)
        return [s * hy + eps * p, -s * hx + eps * q]
    return rhs


def _upper_side(case, x, y):
    if y != 0:
        return y > 0
    # On the switching line the unperturbed y' = -s*V'(x) picks the side.
    slope = -case.orientation * case.potential_slope(x)
    if slope == 0:
        raise error.CriticalAbscissaError(
            "the flow is tangent to y=0 at x={}".format(x))
    return slope > 0


def _segment(case, pert, eps, state, upper, t0, t_max):
    def crossing(t, s):
        return s[1]
    crossing.terminal = True
    crossing.direction = -1 if upper else 1

    def escape(t, s):
        return math.hypot(s[0], s[1]) - BLOWUP_NORM
    escape.terminal = True

    solution = integrate.solve_ivp(
        _field(case, pert, eps, upper), (t0, t_max), state, method='DOP853',
        rtol=RTOL, atol=ATOL, events=(crossing, escape))
    if solution.status == -1:
        raise error.NoConvergenceError(solution.message)
    if solution.t_events[1].size:
        raise error.BlowupError(
            "state norm passed {} at t={}".format(
                BLOWUP_NORM, solution.t_events[1][0]))
    return solution


def flow_piecewise(case, pert, eps, start, t_max=T_MAX, crossings=None):
    '''Integrate the piecewise system from start, switching between the
    upper and lower fields at every crossing of y = 0. Stops at t_max, or
    after the given number of crossings.'''
    if abs(eps) > MAX_EPS:
        raise ValueError("|eps| must be at most {}".format(MAX_EPS))
    x, y = (float(v) for v in start)
    if math.hypot(*case.gradient(x, y)) < 1e-12:
        raise ValueError("start ({}, {}) is a critical point".format(x, y))
    upper = _upper_side(case, x, y)
    t = 0.0
    ts, xs, ys = [numpy.array([t])], [numpy.array([x])], [numpy.array([y])]
    events = []
    evaluations = 0
    segments = 0
    while t < t_max:
        solution = _segment(case, pert, eps, [x, y], upper, t, t_max)
        evaluations += solution.nfev
        segments += 1
        ts.append(solution.t[1:])
        xs.append(solution.y[0, 1:])
        ys.append(solution.y[1, 1:])
        if solution.status != 1:
            break
        t = float(solution.t_events[0][0])
        x = float(solution.y_events[0][0][0])
        y = 0.0
        events.append((t, x))
        if len(events) > MAX_EVENTS:
            raise error.EventStallError(
                "more than {} crossings of y=0 by t={}".format(MAX_EVENTS, t))
        if crossings is not None and len(events) >= crossings:
            break
        upper = not upper
    return Trajectory(numpy.concatenate(ts), numpy.concatenate(xs),
                      numpy.concatenate(ys), events,
                      {'nfev': evaluations, 'segments': segments})


def melnikov_sign(case, annulus=None):
    '''c0 with displacement ~ eps * c0 * M(h). One turn changes H by eps
    times the loop integral of q dx - p dy taken along the flow, which runs
    the upper arc from x_a to x_b exactly when a(x) > 0 on the oval.'''
    interval = get_annulus(case, annulus)
    return 1 if case.weight(float(interval.center_x)) > 0 else -1


def displacement_map(case, pert, eps, at, annulus=None):
    '''H after one full turn from (x_a, 0), minus H at the start.'''
    interval = get_annulus(case, annulus)
    margin = DISPLACEMENT_MARGIN * interval.length
    if not (float(interval.lower) + margin <= at <=
            float(interval.upper) - margin):
        raise error.OutsideAnnulusError(
            "h={} is within {} of the ends of the {} annulus".format(
                at, margin, interval.annulus.value))
    oval = endpoints(case, interval.annulus, at)
    start = (oval.x_a, 0.0)
    trajectory = flow_piecewise(case, pert, eps, start, crossings=2)
    if len(trajectory.events) < 2:
        raise error.NoConvergenceError(
            "orbit from h={} did not return to y=0 twice".format(at))
    end = case.energy(trajectory.x[-1], trajectory.y[-1])
    debug('displacement at h={}, eps={}:'.format(at, eps),
          end - case.energy(*start), trajectory.stats)
    return float(end - case.energy(*start))


def displacement_grid(case, annulus, count):
    interval = get_annulus(case, annulus)
    return interval.grid(count, DISPLACEMENT_MARGIN)


def detect_limit_cycles(case, pert, eps, annulus=None, grid=DEFAULT_GRID,
                        xtol=1e-8):
    '''Energies of periodic orbits seen as sign changes of the displacement
    map over a grid, refined by Brent's method.'''
    interval = get_annulus(case, annulus)
    hs = displacement_grid(case, interval.annulus, grid)

    def displacement(at):
        return displacement_map(case, pert, eps, at, interval.annulus)
    values = parallel_map(displacement, hs)
    cycles = []
    for x0, x1, v0, v1 in zip(hs, hs[1:], values, values[1:]):
        if v0 * v1 < 0:
            cycles.append(float(optimize.brentq(displacement, x0, x1,
                                                xtol=xtol)))
    debug('detected', len(cycles), 'cycles for eps =', eps)
    return cycles


# Command line.
# -------------

def do_xcheck(args):
    case = get_case(args)
    interval = get_interval(args, case)
    pert = get_perturbation(args)
    eps = float(args['--eps']) if args['--eps'] else DEFAULT_EPS
    grid = int(args['--grid']) if args['--grid'] else DEFAULT_GRID
    settings = get_settings(args)
    hs = displacement_grid(case, interval.annulus, grid)
    melnikov = melnikov_evaluator(case, interval.annulus, pert, settings)
    c0 = melnikov_sign(case, interval.annulus)

    def row(at):
        value = melnikov(at)
        shift = displacement_map(case, pert, eps, at, interval.annulus)
        return {'h': float(at), 'displacement': shift, 'M': value,
                'signs_agree': bool(numpy.sign(shift) ==
                                    numpy.sign(eps * c0 * value))}
    rows = parallel_map(row, hs)
    cycles = detect_limit_cycles(case, pert, eps, interval.annulus, grid)
    print(json.dumps({
        'case': str(case),
        'annulus': interval.annulus.value,
        'eps': eps,
        'c0': c0,
        'samples': rows,
        'limit_cycles': cycles,
    }, indent='  '))
