"""Galerkin system  A mu' + B(t) mu = c(t)  for the linearized problem with a
prescribed background flow map, stepped by the implicit midpoint rule."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .errors import DegeneracyError, DomainError, NumericalError, ShapeError
from .lagrangian import Trajectory
from .sturm_liouville import project

__all__ = [
    "DEFAULT_BOUNDS",
    "BackgroundFlow",
    "GalerkinSystem",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_forcing",
    "build_system",
    "step_linear",
    "solve_linearized",
    "flow_history",
]

DEFAULT_BOUNDS = (0.5, 1.5)


@dataclass(frozen=True, eq=False)
class BackgroundFlow:
    """Background flow map at one time level (or a midpoint average)."""

    eta_bar: np.ndarray
    eta_bar_r: np.ndarray
    U_bar: Optional[np.ndarray] = None
    t: float = 0.0

    def check(self, grid, bounds=DEFAULT_BOUNDS):
        """Raise DegeneracyError unless eta_bar_r and eta_bar / r lie in ``bounds``."""
        grid.check(self.eta_bar, "eta_bar")
        grid.check(self.eta_bar_r, "eta_bar_r")
        lo, hi = bounds
        ratio = self.eta_bar / grid.nodes
        for name, f in (("eta_r", self.eta_bar_r), ("eta/r", ratio)):
            fmin, fmax = float(f.min()), float(f.max())
            if not (fmin >= lo and fmax <= hi):
                raise DegeneracyError(
                    f"background {name} range [{fmin:.4f}, {fmax:.4f}] leaves [{lo}, {hi}] at t={self.t:.6g}")
        return self

    @classmethod
    def identity(cls, grid, t=0.0):
        return cls(eta_bar=grid.nodes.copy(), eta_bar_r=np.ones(grid.size), t=t)

    @classmethod
    def midpoint(cls, a, b):
        U = None if a.U_bar is None or b.U_bar is None else 0.5 * (a.U_bar + b.U_bar)
        return cls(0.5 * (a.eta_bar + b.eta_bar), 0.5 * (a.eta_bar_r + b.eta_bar_r), U,
                   0.5 * (a.t + b.t))


def _density_weight(rho0, grid):
    rho0 = grid.check(rho0, "rho0")
    return grid.weights * grid.nodes ** grid.m * rho0


def assemble_mass(basis, rho0, grid):
    """Gram matrix A_kj = integral of r^m rho0 xi_k xi_j."""
    W = _density_weight(rho0, grid)
    A = (basis.xi * W) @ basis.xi.T
    A = 0.5 * (A + A.T)
    try:
        linalg.cho_factor(A)
    except linalg.LinAlgError as exc:
        raise DegeneracyError(f"mass matrix is not positive definite: {exc}") from exc
    return A


def assemble_stiffness(basis, rho0, bg, params, grid, bounds=DEFAULT_BOUNDS):
    """B_kj = 2 mu integral of r^m rho0 (D xi_k D xi_j + m xi_k xi_j / eta_bar^2)."""
    bg.check(grid, bounds)
    W = _density_weight(rho0, grid)
    Dxi = basis.xi_r / bg.eta_bar_r
    B = (Dxi * W) @ Dxi.T
    if params.m:
        B = B + params.m * (basis.xi * (W / bg.eta_bar ** 2)) @ basis.xi.T
    B = 2.0 * params.mu * B
    return 0.5 * (B + B.T)


def assemble_forcing(basis, rho0, bg, params, grid, external=None, bounds=DEFAULT_BOUNDS):
    """c_j = integral of P (D xi_j + m xi_j / eta_bar),  P = A (r^m rho0)^gamma / (eta_bar^m eta_bar_r)^(gamma-1).

    ``external`` is an optional nodal body force g in the form of the momentum
    equation (per unit volume); it enters as the integral of eta_bar^m eta_bar_r g xi_j.
    """
    bg.check(grid, bounds)
    rho0 = grid.check(rho0, "rho0")
    m, w = params.m, grid.weights
    c = np.zeros(basis.N)
    if params.A != 0.0:
        r = grid.nodes
        jac = (bg.eta_bar / r) ** m * bg.eta_bar_r
        # (r^m rho0)^gamma / (eta^m eta_r)^(gamma-1) = r^m rho0 (rho0 / jac)^(gamma-1)
        P = params.A * r ** m * rho0 * (rho0 / jac) ** (params.gamma - 1.0)
        c = basis.xi_r @ (w * P / bg.eta_bar_r)
        if m:
            c = c + m * (basis.xi @ (w * P / bg.eta_bar))
    if external is not None:
        g = grid.check(external, "external forcing")
        c = c + basis.xi @ (w * bg.eta_bar ** m * bg.eta_bar_r * g)
    return c


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    basis: object
    A_mass: np.ndarray
    rho0: np.ndarray
    params: object
    grid: object
    bounds: tuple = DEFAULT_BOUNDS
    forcing_fn: Optional[Callable] = field(default=None, repr=False)

    @property
    def N(self):
        return self.basis.N

    def B_of_t(self, bg):
        return assemble_stiffness(self.basis, self.rho0, bg, self.params, self.grid, self.bounds)

    def c_of_t(self, bg):
        g = None if self.forcing_fn is None else self.forcing_fn(bg.t)
        return assemble_forcing(self.basis, self.rho0, bg, self.params, self.grid, g, self.bounds)


def build_system(basis, rho0, params, grid, bounds=DEFAULT_BOUNDS, forcing_fn=None):
    """``forcing_fn(t)`` returns an optional nodal body force at time t."""
    return GalerkinSystem(basis, assemble_mass(basis, rho0, grid), grid.check(rho0, "rho0"),
                          params, grid, tuple(bounds), forcing_fn)


def step_linear(system, coeffs, bg_mid, dt):
    """(A + dt/2 B) mu_new = (A - dt/2 B) mu_old + dt c, with B and c at the midpoint."""
    if not dt > 0.0:
        raise DomainError(f"time step must be positive, got {dt!r}")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (system.N,):
        raise ShapeError(f"expected {system.N} coefficients, got shape {coeffs.shape}")
    B = system.B_of_t(bg_mid)
    c = system.c_of_t(bg_mid)
    half = 0.5 * dt * B
    rhs = (system.A_mass - half) @ coeffs + dt * c
    try:
        return linalg.solve(system.A_mass + half, rhs, assume_a="pos")
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"implicit midpoint matrix is singular: {exc}") from exc


def flow_history(eta0, vel, dt):
    """Trapezoidal running integral: eta0 + integral of vel from the first level."""
    out = np.empty_like(vel)
    out[0] = eta0
    if vel.shape[0] > 1:
        out[1:] = eta0 + np.cumsum(0.5 * dt * (vel[1:] + vel[:-1]), axis=0)
    return out


def solve_linearized(fields, bg_trajectory, basis, dt, T, grid, system=None, coeffs0=None,
                     start=None, t0=0.0):
    """Galerkin solve over [t0, t0 + T] against a background given at every time level.

    ``bg_trajectory`` is a sequence of steps + 1 BackgroundFlow objects.  The
    initial coefficients default to the projection of u0; ``start`` is an
    optional LagrangianState whose (eta, eta_r, eta_rr) starts the flow of the
    computed velocity (identity flow otherwise).  Returns a Trajectory whose flow
    map is eta_start + trapezoidal integral of the computed U.
    """
    steps = int(round(T / dt))
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(T, 1.0):
        raise DomainError(f"horizon T={T!r} is not a positive multiple of dt={dt!r}")
    if len(bg_trajectory) != steps + 1:
        raise ShapeError(f"background has {len(bg_trajectory)} levels, need {steps + 1}")
    if system is None:
        system = build_system(basis, fields.rho0, fields.params, grid)
    mu = project(fields.u0, basis, grid) if coeffs0 is None else np.asarray(coeffs0, dtype=float)
    modal = np.empty((steps + 1, basis.N))
    modal[0] = mu
    for n in range(steps):
        bg_mid = BackgroundFlow.midpoint(bg_trajectory[n], bg_trajectory[n + 1])
        mu = step_linear(system, mu, bg_mid, dt)
        modal[n + 1] = mu
    if not np.all(np.isfinite(modal)):
        raise NumericalError("non-finite modal coefficients")
    U = modal @ basis.xi
    U_r = modal @ basis.xi_r
    U_rr = modal @ basis.xi_rr
    r = grid.nodes
    if start is None:
        eta0, eta_r0, eta_rr0 = r, np.ones_like(r), np.zeros_like(r)
    else:
        eta0, eta_r0 = start.eta, start.eta_r
        eta_rr0 = start.eta_rr if start.eta_rr is not None else np.zeros_like(r)
    times = t0 + dt * np.arange(steps + 1)
    eta = flow_history(eta0, U, dt)
    eta_r = flow_history(eta_r0, U_r, dt)
    eta_rr = flow_history(eta_rr0, U_rr, dt)
    return Trajectory(times, U, eta, eta_r, fields.params, U_r=U_r, eta_rr=eta_rr, modal=modal)
