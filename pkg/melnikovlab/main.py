import sys

import docopt

from . import debug
from . import error
from . import families
from . import odecheck
from . import operators
from . import quadrature
from . import reduction
from . import verify
from . import zeros

__doc__ = '''\
Usage:
    melnikovlab families [--family=<f>] [--lambda=<l>] [--svg=<file>] [options]
    melnikovlab integral [--family=<f>] [--lambda=<l>] [--annulus=<a>] [--derivative] [options] [--] <i> <j> <h>
    melnikovlab verify (pf|recurrence|riccati|annihilator) [--family=<f>] [--lambda=<l>] [--annulus=<a>] [--samples=<k>] [--tol=<t>] [--count=<c>] [--experimental] [options]
    melnikovlab reduce [--family=<f>] [--lambda=<l>] [--pert=<file>] [--n=<n>] [--seed=<s>] [options]
    melnikovlab melnikov [--family=<f>] [--lambda=<l>] [--annulus=<a>] [--pert=<file>] [--h=<h>] [--grid=<g>] [--csv=<file>] [--svg=<file>] [--json=<file>] [options]
    melnikovlab bound [--family=<f>] --n=<n> [--chain] [options]
    melnikovlab xcheck [--family=<f>] [--lambda=<l>] [--annulus=<a>] [--pert=<file>] [--eps=<e>] [--grid=<g>] [options]
    melnikovlab stress [--family=<f>] [--lambda=<l>] [--annulus=<a>] [--n=<n>] [--count=<c>] [--seed=<s>] [--grid=<g>] [options]

Families are elliptic (0 < lambda < 2, default 1), hyperbolic
(-1 < lambda < 0, default -1/2), parabolic and triangle. Lambda is exact:
write 1/2 or 0.5, not a rounded float. Without --pert, commands that need a
perturbation draw one of degree --n (default 3) with integer coefficients
from --seed (default 0). Negative numbers go after -- as positionals
or with = in options: integral --family parabolic -- 0 0 -1, --lambda=-1/4.

Options:
    --annulus=<a>      right or left for elliptic, sole otherwise
    --chain            print the intermediate zero counts behind the bound
    --count=<c>        number of random perturbations
    --csv=<file>       write the scanned (h, M) pairs as CSV
    --debug            debug mode
    --derivative       the first h derivative instead of the integral
    --eps=<e>          perturbation size for the ODE cross-check
    --experimental     allow the left elliptic annulus in verify pf
    --family=<f>       elliptic, hyperbolic, parabolic or triangle
    --grid=<g>         number of grid points in h
    --h=<h>            evaluate M at one energy instead of scanning
    --json=<file>      write the zero report as JSON
    --lambda=<l>       the segment parameter
    --n=<n>            perturbation degree
    --nodes=<k>        Gauss-Legendre nodes per panel, default 64
    --pert=<file>      perturbation JSON file
    --samples=<k>      number of energies to check
    --seed=<s>         random seed
    --svg=<file>       write a figure
    --tol=<t>          tolerance
'''

# Every failure kind the library raises on bad input or failed checks.
ERRORS = tuple(value for value in vars(error).values()
               if isinstance(value, type) and issubclass(value, RuntimeError))


def dispatch(args):
    if args['families']:
        families.do_families(args)
    elif args['integral']:
        quadrature.do_integral(args)
    elif args['verify']:
        verify.do_verify(args)
    elif args['reduce']:
        reduction.do_reduce(args)
    elif args['melnikov']:
        zeros.do_melnikov(args)
    elif args['bound']:
        operators.do_bound(args)
    elif args['xcheck']:
        odecheck.do_xcheck(args)
    elif args['stress']:
        zeros.do_stress(args)
    else:
        raise RuntimeError("unreachable")


def main():
    try:
        args = docopt.docopt(__doc__)
    except docopt.DocoptExit as e:
        print(e, file=sys.stderr)
        sys.exit(2)
    debug.DEBUG_MODE = args['--debug']

    try:
        dispatch(args)
    except ERRORS as e:
        print('error:', e, file=sys.stderr)
        sys.exit(1)
    except ValueError as e:
        print('error:', e, file=sys.stderr)
        sys.exit(2)
