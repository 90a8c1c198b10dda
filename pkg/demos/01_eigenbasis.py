"""The Galerkin basis: radial Sturm-Liouville modes on the unit interval.

The modes solve -(r^m xi')' + m r^(m-2) xi = lambda r^m xi with xi(0) = 0 and
xi'(1) = 0.  In the plane (m = 1) they are J_1(sqrt(lambda) r); in three
dimensions (m = 2) they are spherical Bessel functions j_1.  This script
compares the computed spectrum with roots of the Bessel derivatives.
"""
import numpy as np
from scipy.optimize import brentq
from scipy.special import jvp, spherical_jn

from lagvac.grid import build_grid
from lagvac.sturm_liouville import project, reconstruct, solve_eigenpairs


def bessel_lambdas(m, count):
    if m == 1:
        f = lambda x: jvp(1, x)
    else:
        f = lambda x: spherical_jn(1, x, derivative=True)
    xs = np.linspace(0.5, 40.0, 4000)
    vals = f(xs)
    roots = [brentq(f, xs[i], xs[i + 1]) for i in range(xs.size - 1) if vals[i] * vals[i + 1] < 0]
    return np.array(roots[:count]) ** 2


for m in (1, 2):
    grid = build_grid(m, 64, 8)
    basis = solve_eigenpairs(m, 32, grid)
    ref = bessel_lambdas(m, 5)
    print(f"m = {m}")
    for k in range(5):
        print(f"  lambda_{k + 1} = {basis.lambdas[k]:.10f}   Bessel {ref[k]:.10f}")

    # a smooth profile vanishing at the origin converges in the basis
    f = grid.nodes * (1 - grid.nodes) ** 2
    for N in (4, 8, 16, 32):
        c = project(f, basis, grid)[:N]
        err = np.abs(reconstruct(np.pad(c, (0, basis.N - N)), basis) - f).max()
        print(f"  {N:2d} modes: max error {err:.2e}")
