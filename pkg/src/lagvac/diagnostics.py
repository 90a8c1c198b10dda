"""Weighted energy and dissipation functionals, the fundamental energy balance
and the run-time bound monitors."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ShapeError
from .grid import differentiate, extrapolate_to_one, panel_derivative, zeta
from .lagrangian import density_from_flow, identity_state, log_density_gradient

__all__ = [
    "TimeDerivatives",
    "EnergyReport",
    "BalanceSeries",
    "BoundsReport",
    "select_epsilon0",
    "energy_functionals",
    "energy_history",
    "initial_energy",
    "initial_acceleration",
    "fundamental_energy_balance",
    "bd_entropy_interior",
    "bounds_monitor",
    "monitor_trajectory",
]

# the interior cut-off is 1 on [0, 1/2] and 0 on [5/8, 1]
INTERIOR_CUTOFF = 0.5
EXTERIOR_START = 0.5


def select_epsilon0(params):
    """Half of the admissible upper bound for the exterior weight parameter."""
    beta, gamma = params.beta, params.gamma
    cands = [1.5 - 0.5 / beta, 0.5]
    if not params.physical_vacuum:
        cands.append((gamma - 1.0) / beta - 1.0)
    bound = min(cands)
    if not bound > 0.0:
        raise ConfigurationError(f"no admissible epsilon0 for beta={beta!r}, gamma={gamma!r}")
    return 0.5 * bound


@dataclass(frozen=True, eq=False)
class TimeDerivatives:
    U_t: np.ndarray
    U_tt: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EnergyReport:
    epsilon0: float
    E_in: float
    E_ex: float
    D_in: float
    D_ex: float
    mass: float
    t: float = 0.0
    ring_E: Optional[float] = None
    ring_D: Optional[float] = None

    @property
    def E_total(self):
        return self.E_in + self.E_ex

    @property
    def D_total(self):
        return self.D_in + self.D_ex

    def to_record(self):
        return {"t": self.t, "epsilon0": self.epsilon0, "E_in": self.E_in, "E_ex": self.E_ex,
                "D_in": self.D_in, "D_ex": self.D_ex, "E_total": self.E_total,
                "D_total": self.D_total, "mass": self.mass, "ring_E": self.ring_E, "ring_D": self.ring_D}


def _sumsq(parts, weight, grid):
    return float(sum(grid.integrate(weight * p ** 2) for p in parts))


def _functionals(f, f_t, f_tt, eta, eta_r, rho0, eps0, params, grid):
    """(E_in, E_ex, D_in, D_ex) for the flow (eta, eta_r); D_* are None without f_tt."""
    r, m = grid.nodes, params.m
    D = lambda g: panel_derivative(g, grid) / eta_r
    over = lambda g: (g / r) * (r / eta)

    Df, Dft = D(f), D(f_t)
    D2f = D(Df)
    D3f = D(D2f)
    fe = over(f)
    Dfe = D(fe)
    D2fe = D(Dfe)
    inv_Dfe = over(Dfe)

    zeta_w = zeta(INTERIOR_CUTOFF, r) ** 2 * r ** m
    ext = (r > EXTERIOR_START).astype(float)
    w_half = ext * rho0
    w_high = ext * rho0 ** (2.0 * (1.5 - eps0) * params.beta)

    E_in = _sumsq([f, Df, fe, f_t, Dft, over(f_t)], zeta_w, grid)
    E_in += _sumsq([D2f, Dfe, D3f, D2fe, inv_Dfe], zeta_w, grid)
    E_ex = _sumsq([f, Df, f_t, Dft], w_half, grid) + _sumsq([D2f, D3f], w_high, grid)
    if f_tt is None:
        return E_in, E_ex, None, None
    D2ft = D(Dft)
    D4f = D(D3f)
    D_in = _sumsq([f_tt, D2ft, D(over(f_t)), D4f, D(D2fe), D(inv_Dfe)], zeta_w, grid)
    D_ex = _sumsq([f_tt], w_half, grid) + _sumsq([D2ft, D4f], w_high, grid)
    return E_in, E_ex, D_in, D_ex


def energy_functionals(state, state_t, fields, grid, ring=False, include_dissipation=True):
    """Energy/dissipation functionals of U at one time level.

    ``state_t`` carries U_t (and U_tt when the dissipation is requested).  With
    ``ring`` the same functionals are also evaluated with eta replaced by r.
    """
    if isinstance(state_t, dict):
        state_t = TimeDerivatives(**state_t)
    if state_t is None or state_t.U_t is None:
        raise ShapeError("energy functionals need the time derivative U_t")
    U_t = grid.check(state_t.U_t, "U_t")
    U_tt = None
    if include_dissipation:
        if state_t.U_tt is None:
            raise ShapeError("dissipation functionals need the second time derivative U_tt")
        U_tt = grid.check(state_t.U_tt, "U_tt")
    params = fields.params
    eps0 = select_epsilon0(params)
    rho0 = grid.check(fields.rho0, "rho0")
    U = grid.check(state.U, "U")
    state.check(grid)
    E_in, E_ex, D_in, D_ex = _functionals(U, U_t, U_tt, state.eta, state.eta_r, rho0, eps0, params, grid)
    ring_E = ring_D = None
    if ring:
        r = grid.nodes
        rE_in, rE_ex, rD_in, rD_ex = _functionals(U, U_t, U_tt, r, np.ones_like(r), rho0, eps0, params, grid)
        ring_E = rE_in + rE_ex
        ring_D = None if rD_in is None else rD_in + rD_ex
    rho = density_from_flow(state, rho0, grid)
    mass = grid.integrate(state.eta ** params.m * state.eta_r * rho)
    return EnergyReport(
        epsilon0=eps0, E_in=E_in, E_ex=E_ex, D_in=D_in or 0.0, D_ex=D_ex or 0.0, mass=mass,
        t=state.t, ring_E=ring_E, ring_D=ring_D,
    )


def time_derivatives(U_history, dt):
    """Centered differences in time (second-order one-sided at the ends)."""
    U_history = np.asarray(U_history, dtype=float)
    if U_history.shape[0] < 3:
        raise ShapeError("need at least three time levels for time derivatives")
    U_t = np.gradient(U_history, dt, axis=0, edge_order=2)
    U_tt = np.gradient(U_t, dt, axis=0, edge_order=2)
    return U_t, U_tt


def energy_history(traj, fields, grid, stride=1, ring=False):
    """EnergyReport at every ``stride``-th level of a trajectory."""
    U_t, U_tt = time_derivatives(traj.U, traj.dt)
    return [energy_functionals(traj[i], TimeDerivatives(U_t[i], U_tt[i]), fields, grid, ring=ring)
            for i in range(0, len(traj), stride)]


def initial_acceleration(fields, grid):
    """U_t at t = 0 from the momentum equation with eta = r:

        U_t = -A gamma rho0^(gamma-1) (log rho0)' + 2 mu [(u0' + m u0 / r)' + u0' (log rho0)'].
    """
    params = fields.params
    r, m = grid.nodes, params.m
    rho0 = grid.check(fields.rho0, "rho0")
    u0 = grid.check(fields.u0, "u0")
    dlog = fields.dlog_rho0
    if dlog is None:
        g = rho0 ** params.beta
        dlog = differentiate(g, grid) / (params.beta * g)
    du = panel_derivative(u0, grid)
    div = du + m * u0 / r
    visc = 2.0 * params.mu * (panel_derivative(div, grid) + du * dlog)
    return visc - params.A * params.gamma * rho0 ** (params.gamma - 1.0) * dlog


def initial_energy(fields, grid):
    """E(0, U) with U_t(0) from the momentum equation."""
    state = identity_state(fields.u0, fields.params, grid)
    report = energy_functionals(state, TimeDerivatives(initial_acceleration(fields, grid)), fields, grid,
                                include_dissipation=False)
    return report.E_total


@dataclass(frozen=True, eq=False)
class BalanceSeries:
    """Discrete fundamental energy balance on a trajectory.

    ``energy`` lives on the time levels, ``dissipation`` and ``residual`` on
    the midpoints: residual = (E_{n+1} - E_n) / dt + dissipation.
    """

    times: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    residual: np.ndarray

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0

    def nonincreasing(self, slack=0.0):
        return bool(np.all(np.diff(self.energy) <= slack))


def _basic_energy(U, eta, eta_r, rho0, params, grid):
    r, m = grid.nodes, params.m
    w = grid.weights
    kin = (U ** 2) @ (w * r ** m * rho0)
    if params.A == 0.0:
        return kin
    jac = (eta / r) ** m * eta_r
    # eta^m eta_r rho^gamma = r^m rho0 (rho0 / jac)^(gamma - 1)
    pot = (r ** m * rho0 * (rho0 / jac) ** (params.gamma - 1.0)) @ w
    return kin + 2.0 * params.A / (params.gamma - 1.0) * pot


def fundamental_energy_balance(traj, fields, grid):
    params = fields.params
    rho0 = grid.check(fields.rho0, "rho0")
    r, m = grid.nodes, params.m
    energy = _basic_energy(traj.U, traj.eta, traj.eta_r, rho0, params, grid)
    U_r = traj.U_r if traj.U_r is not None else traj.U @ grid.diff_matrix.T
    mid = lambda a: 0.5 * (a[1:] + a[:-1])
    U_m, Ur_m, eta_m, etar_m = mid(traj.U), mid(U_r), mid(traj.eta), mid(traj.eta_r)
    W = grid.weights * r ** m * rho0
    diss = 4.0 * params.mu * (((Ur_m / etar_m) ** 2 + m * (U_m / eta_m) ** 2) @ W)
    dt = np.diff(traj.times)
    residual = np.diff(energy) / dt + diss
    return BalanceSeries(times=mid(traj.times), energy=energy, dissipation=diss, residual=residual)


def bd_entropy_interior(state, V, a, fields, grid):
    """(|(zeta_a r^m rho0)^(1/2) V|_2, |(zeta_a eta^m eta_r)^(1/2) D_eta sqrt(rho)|_2)."""
    V = getattr(V, "V", V)
    V = grid.check(V, "V")
    r, m = grid.nodes, fields.params.m
    z = zeta(a, r)
    rho = density_from_flow(state, fields.rho0, grid)
    # D_eta sqrt(rho) = sqrt(rho) D_eta log(rho) / 2
    d_sqrt = 0.5 * np.sqrt(rho) * log_density_gradient(state, fields, grid)
    q1 = np.sqrt(grid.integrate(z * r ** m * fields.rho0 * V ** 2))
    q2 = np.sqrt(grid.integrate(z * state.eta ** m * state.eta_r * d_sqrt ** 2))
    return float(q1), float(q2)


@dataclass(frozen=True)
class BoundsReport:
    t: float
    eta_r_min: float
    eta_r_max: float
    eta_over_r_min: float
    eta_over_r_max: float
    rho_max: float
    rho_ratio_min: float
    rho_ratio_max: float
    rho_ratio_interior_min: float
    bd_velocity: float
    bd_density: float
    boundary_residual: float
    Ur_sup: float
    asymptotic_constant: float
    V_sup_interior: float
    V_sup_exterior_weighted: float

    def finite(self):
        return all(np.isfinite(v) for v in self.__dict__.values())

    def checks(self, interval=(0.5, 1.5), boundary_rel=1e-3):
        lo, hi = interval
        return {
            "finite": self.finite(),
            "eta_r": lo <= self.eta_r_min and self.eta_r_max <= hi,
            "eta_over_r": lo <= self.eta_over_r_min and self.eta_over_r_max <= hi,
            "boundary_residual": self.boundary_residual <= boundary_rel * max(self.Ur_sup, 1e-300)
            or self.Ur_sup == 0.0,
        }

    def passed(self, interval=(0.5, 1.5), boundary_rel=1e-3):
        return all(self.checks(interval, boundary_rel).values())

    def to_record(self):
        return {k: float(v) for k, v in self.__dict__.items()}


def bounds_monitor(state, fields, grid, a=INTERIOR_CUTOFF, V=None):
    from .lagrangian import effective_velocity

    r, m = grid.nodes, fields.params.m
    rho0 = grid.check(fields.rho0, "rho0")
    rho = density_from_flow(state, rho0, grid)
    ratio = (r / state.eta) ** m / state.eta_r
    inner = r <= a
    U_r = state.velocity_gradient(grid)
    if V is None:
        V = effective_velocity(state, fields, grid)
    Vn = getattr(V, "V", V)
    bd_v, bd_rho = bd_entropy_interior(state, Vn, a, fields, grid)
    outer = ~inner
    return BoundsReport(
        t=float(state.t),
        eta_r_min=float(state.eta_r.min()), eta_r_max=float(state.eta_r.max()),
        eta_over_r_min=float((state.eta / r).min()), eta_over_r_max=float((state.eta / r).max()),
        rho_max=float(rho.max()),
        rho_ratio_min=float(ratio.min()), rho_ratio_max=float(ratio.max()),
        rho_ratio_interior_min=float(ratio[inner].min()),
        bd_velocity=bd_v, bd_density=bd_rho,
        boundary_residual=abs(extrapolate_to_one(U_r, grid)),
        Ur_sup=float(np.abs(U_r).max()),
        asymptotic_constant=float(np.max(np.abs(U_r) / (1.0 - r))),
        V_sup_interior=float(np.abs(Vn[inner]).max()),
        V_sup_exterior_weighted=float(np.max(rho0[outer] ** fields.params.beta * np.abs(Vn[outer]))),
    )


def monitor_trajectory(traj, fields, grid, stride=1, a=INTERIOR_CUTOFF):
    return [bounds_monitor(traj[i], fields, grid, a) for i in range(0, len(traj), stride)]
