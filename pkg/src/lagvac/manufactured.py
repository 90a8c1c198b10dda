"""Manufactured solution U* = t r (1 - r)^2 with its flow map and body force.

The body force is the left-hand side of the momentum equation evaluated on
(U*, eta*) symbolically, so that (U*, eta*) solves the forced problem exactly.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

__all__ = ["ManufacturedProblem", "manufactured_problem"]


@dataclass(frozen=True, eq=False)
class ManufacturedProblem:
    U: Callable
    U_t: Callable
    eta: Callable
    eta_r: Callable
    forcing: Callable
    rho0: Callable
    dlog_rho0: Callable


def _lambdify(expr, t, r):
    f = sp.lambdify((t, r), expr, "numpy")
    return lambda tt, rr: np.broadcast_to(np.asarray(f(tt, rr), dtype=float), np.shape(rr)).copy()


def manufactured_problem(params, k=1, profile="t*r*(1-r)**2"):
    """Symbolic forcing for the example density (1 - r^(2k))^(1/beta)."""
    t, r = sp.symbols("t r", positive=True)
    m, mu, A = params.m, sp.nsimplify(params.mu), sp.nsimplify(params.A)
    gamma, beta = sp.nsimplify(params.gamma), sp.nsimplify(params.beta)
    U = sp.sympify(profile, locals={"t": t, "r": r})
    eta = r + sp.integrate(U, (t, 0, t))
    eta_r = sp.diff(eta, r)
    rho0 = (1 - r ** (2 * k)) ** (1 / beta)
    rho = r ** m * rho0 / (eta ** m * eta_r)
    D = lambda f: sp.diff(f, r) / eta_r
    lhs = (rho * sp.diff(U, t) + A * D(rho ** gamma)
           - 2 * mu * D(rho * (D(U) + m * U / eta)) + 2 * mu * m * U * D(rho) / eta)
    return ManufacturedProblem(
        U=_lambdify(U, t, r), U_t=_lambdify(sp.diff(U, t), t, r),
        eta=_lambdify(eta, t, r), eta_r=_lambdify(eta_r, t, r),
        forcing=_lambdify(lhs, t, r),
        rho0=_lambdify(rho0, t, r), dlog_rho0=_lambdify(sp.diff(sp.log(rho0), r), t, r),
    )
