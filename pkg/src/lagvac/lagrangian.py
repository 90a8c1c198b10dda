"""Lagrangian state model: flow map, derived density, the Eulerian derivative
D_eta f = f_r / eta_r, the momentum residual and the effective velocity."""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DegeneracyError, DomainError, ShapeError
from .grid import differentiate

__all__ = [
    "LagrangianState",
    "EffectiveVelocityField",
    "Trajectory",
    "identity_state",
    "density_from_flow",
    "d_eta",
    "u_over_eta",
    "momentum_residual",
    "effective_velocity",
    "effective_velocity_closed_form",
    "advance_flow",
    "mass",
]


@dataclass(frozen=True, eq=False)
class LagrangianState:
    """Snapshot of (U, eta, eta_r) at time t.

    ``U_r`` and ``eta_rr`` are optional: a Galerkin solve knows them exactly from
    the modal representation, otherwise they are differentiated on demand.
    """

    t: float
    U: np.ndarray
    eta: np.ndarray
    eta_r: np.ndarray
    params: object
    modal_U: Optional[np.ndarray] = None
    U_r: Optional[np.ndarray] = field(default=None, repr=False)
    eta_rr: Optional[np.ndarray] = field(default=None, repr=False)

    def velocity_gradient(self, grid):
        return self.U_r if self.U_r is not None else differentiate(self.U, grid)

    def flow_curvature(self, grid):
        return self.eta_rr if self.eta_rr is not None else differentiate(self.eta_r, grid)

    def check(self, grid):
        for name in ("U", "eta", "eta_r"):
            grid.check(getattr(self, name), name)
        if np.any(self.eta_r <= 0.0):
            i = int(np.argmin(self.eta_r))
            raise DegeneracyError(
                f"flow map folded at t={self.t:.6g}: eta_r={self.eta_r[i]:.3e} at r={grid.nodes[i]:.4f}")
        return self


@dataclass(frozen=True, eq=False)
class EffectiveVelocityField:
    V: np.ndarray
    accumulated_damping: Optional[np.ndarray] = None


def identity_state(U, params, grid, t=0.0, modal_U=None, U_r=None):
    r = grid.nodes
    return LagrangianState(t=float(t), U=np.asarray(U, dtype=float), eta=r.copy(),
                           eta_r=np.ones_like(r), params=params, modal_U=modal_U,
                           U_r=U_r, eta_rr=np.zeros_like(r))


def _positive_jacobian(state, grid):
    state.check(grid)
    if np.any(state.eta <= 0.0):
        raise DegeneracyError(f"flow map non-positive at t={state.t:.6g}")


def density_from_flow(state, rho0, grid):
    """rho = r^m rho0 / (eta^m eta_r)."""
    _positive_jacobian(state, grid)
    rho0 = grid.check(rho0, "rho0")
    m = state.params.m
    # written as (r/eta)^m so that the ratio stays O(1) near the origin
    return (grid.nodes / state.eta) ** m * rho0 / state.eta_r


def mass(state, rho, grid):
    """Integral of eta^m eta_r rho over (0, 1)."""
    m = state.params.m
    return grid.integrate(state.eta ** m * state.eta_r * rho)


def d_eta(f, state, grid):
    """D_eta f = f_r / eta_r with the grid's differentiation stencil."""
    state.check(grid)
    return differentiate(f, grid) / state.eta_r


def u_over_eta(U, eta, grid):
    """U / eta evaluated as (U / r) * (r / eta); both factors are regular at r = 0."""
    r = grid.nodes
    return (U / r) * (r / eta)


def momentum_residual(state, fields, grid, forcing=None, U_t=None):
    """Pointwise residual of

        rho U_t + A D(rho^gamma) - 2 mu D(rho (D U + m U / eta)) + 2 mu m U D(rho) / eta - forcing

    with D = D_eta.  ``U_t`` is supplied by the caller (zero if omitted).
    """
    params = state.params
    m, mu, A, gamma = params.m, params.mu, params.A, params.gamma
    rho = density_from_flow(state, fields.rho0, grid)
    U = grid.check(state.U, "U")
    U_t = np.zeros_like(U) if U_t is None else grid.check(U_t, "U_t")
    eta_r = state.eta_r
    DU = state.velocity_gradient(grid) / eta_r
    ue = u_over_eta(U, state.eta, grid)
    D = lambda f: differentiate(f, grid) / eta_r
    res = rho * U_t
    if A != 0.0:
        res = res + A * D(rho ** gamma)
    res = res - 2.0 * mu * D(rho * (DU + m * ue)) + 2.0 * mu * m * ue * D(rho)
    if forcing is not None:
        res = res - grid.check(forcing, "forcing")
    return res


def log_density_gradient(state, fields, grid):
    """D_eta log rho from log rho = m log(r/eta) + log rho0 - log eta_r.

    Uses the closed-form (log rho0)_r when the initial fields carry it.
    """
    _positive_jacobian(state, grid)
    m = state.params.m
    r = grid.nodes
    dlog0 = fields.dlog_rho0
    if dlog0 is None:
        beta = fields.params.beta
        g = grid.check(fields.rho0, "rho0") ** beta
        dlog0 = differentiate(g, grid) / (beta * g)
    eta, eta_r = state.eta, state.eta_r
    # m/r - m eta_r/eta = m (eta - r eta_r) / (r eta)
    geom = m * (eta - r * eta_r) / (r * eta)
    return (geom + dlog0 - state.flow_curvature(grid) / eta_r) / eta_r


def effective_velocity(state, fields, grid):
    """V = U + 2 mu D_eta log rho."""
    rho0 = grid.check(fields.rho0, "rho0")
    if np.any(rho0 <= 0.0):
        raise DomainError("density must be positive at every interior node")
    V = state.U + 2.0 * state.params.mu * log_density_gradient(state, fields, grid)
    return EffectiveVelocityField(V=V)


def _cumtrapz(y, times):
    out = np.zeros_like(y)
    if len(times) > 1:
        dt = np.diff(times)[:, None]
        out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]), axis=0)
    return out


def effective_velocity_closed_form(v0, rho_history, U_history, params, times, return_history=False):
    """Duhamel solution of V_t + k rho^(gamma-1) (V - U) = 0, k = A gamma / (2 mu).

    Both time integrals are trapezoidal on the stored history.  Returns the
    field at the final time, or the whole history if ``return_history``.
    """
    rho_history = np.asarray(rho_history, dtype=float)
    U_history = np.asarray(U_history, dtype=float)
    times = np.asarray(times, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if rho_history.shape != U_history.shape or rho_history.ndim != 2:
        raise ShapeError(f"histories differ: {rho_history.shape} vs {U_history.shape}")
    if times.shape != (rho_history.shape[0],):
        raise ShapeError(f"{times.size} times for {rho_history.shape[0]} history rows")
    if v0.shape != rho_history.shape[1:]:
        raise ShapeError(f"v0 has shape {v0.shape}, histories have {rho_history.shape[1:]}")
    k = params.A * params.gamma / (2.0 * params.mu)
    damping = rho_history ** (params.gamma - 1.0)
    acc = _cumtrapz(damping, times)
    phi = k * acc
    shift = phi[-1]
    # factor exp(phi - shift) keeps the exponentials bounded
    src = _cumtrapz(k * damping * U_history * np.exp(phi - shift), times)
    V = np.exp(shift - phi) * (v0 * np.exp(-shift) + src)
    if return_history:
        return EffectiveVelocityField(V=V, accumulated_damping=acc)
    return EffectiveVelocityField(V=V[-1], accumulated_damping=acc[-1])


def advance_flow(state, U_next, dt, grid, U_r_next=None, U_rr=None, U_rr_next=None, modal_next=None):
    """Trapezoidal update eta += dt (U + U_next) / 2, and likewise for eta_r.

    eta_rr is advanced too when the state carries it and both ``U_rr`` (current
    level) and ``U_rr_next`` are given; otherwise it is dropped.
    """
    if not dt > 0.0:
        raise DomainError(f"time step must be positive, got {dt!r}")
    U_next = grid.check(U_next, "U_next")
    U_r = state.velocity_gradient(grid)
    if U_r_next is None:
        U_r_next = differentiate(U_next, grid)
    half = 0.5 * dt
    eta = state.eta + half * (state.U + U_next)
    eta_r = state.eta_r + half * (U_r + U_r_next)
    eta_rr = None
    if state.eta_rr is not None and U_rr is not None and U_rr_next is not None:
        eta_rr = state.eta_rr + half * (U_rr + U_rr_next)
    new = LagrangianState(t=state.t + dt, U=U_next, eta=eta, eta_r=eta_r, params=state.params,
                          modal_U=modal_next, U_r=U_r_next, eta_rr=eta_rr)
    return new.check(grid)


class Trajectory:
    """Time-indexed nodal history on a uniform time grid.

    Arrays have shape (steps + 1, nodes); ``modal`` is (steps + 1, N) or None.
    """

    def __init__(self, times, U, eta, eta_r, params, U_r=None, eta_rr=None, modal=None):
        self.times = np.asarray(times, dtype=float)
        self.U = np.asarray(U, dtype=float)
        self.eta = np.asarray(eta, dtype=float)
        self.eta_r = np.asarray(eta_r, dtype=float)
        self.U_r = None if U_r is None else np.asarray(U_r, dtype=float)
        self.eta_rr = None if eta_rr is None else np.asarray(eta_rr, dtype=float)
        self.modal = None if modal is None else np.asarray(modal, dtype=float)
        self.params = params
        nt = self.times.size
        for name in ("U", "eta", "eta_r", "U_r", "eta_rr", "modal"):
            a = getattr(self, name)
            if a is not None and (a.ndim != 2 or a.shape[0] != nt):
                raise ShapeError(f"trajectory field {name} has shape {a.shape}, expected ({nt}, ...)")

    def __len__(self):
        return self.times.size

    def __getitem__(self, i):
        pick = lambda a: None if a is None else a[i]
        return LagrangianState(
            t=float(self.times[i]), U=self.U[i], eta=self.eta[i], eta_r=self.eta_r[i],
            params=self.params, modal_U=pick(self.modal), U_r=pick(self.U_r), eta_rr=pick(self.eta_rr),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def densities(self, rho0, grid):
        m = self.params.m
        if np.any(self.eta_r <= 0.0):
            raise DegeneracyError("flow map folded somewhere in the trajectory")
        return (grid.nodes / self.eta) ** m * rho0 / self.eta_r

    def masses(self, rho0, grid):
        rho = self.densities(rho0, grid)
        return (self.eta ** self.params.m * self.eta_r * rho) @ grid.weights

    def tail(self, start):
        """Sub-trajectory from index ``start`` on."""
        cut = lambda a: None if a is None else a[start:]
        return Trajectory(self.times[start:], self.U[start:], self.eta[start:], self.eta_r[start:],
                          self.params, cut(self.U_r), cut(self.eta_rr), cut(self.modal))

    @staticmethod
    def concatenate(parts):
        """Join trajectories whose end and start states coincide (the shared state is kept once)."""
        parts = list(parts)
        if not parts:
            raise ShapeError("nothing to concatenate")
        out = [parts[0]] + [p.tail(1) for p in parts[1:]]

        def cat(name):
            arrs = [getattr(p, name) for p in out]
            return None if any(a is None for a in arrs) else np.concatenate(arrs)

        return Trajectory(cat("times"), cat("U"), cat("eta"), cat("eta_r"), parts[0].params,
                          cat("U_r"), cat("eta_rr"), cat("modal"))
