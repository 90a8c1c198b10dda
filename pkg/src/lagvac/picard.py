"""Picard iteration over linearized Galerkin solves, with window continuation
for longer horizons."""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConfigurationError, ContinuationError, DegeneracyError, NonConvergenceError, ShapeError
from .galerkin import BackgroundFlow, build_system, solve_linearized
from .lagrangian import Trajectory
from .sturm_liouville import project

__all__ = [
    "PicardConfig",
    "IterationTrace",
    "WindowResult",
    "SimulationRecord",
    "contraction_energy",
    "picard_window",
    "solve_global",
]

log = logging.getLogger(__name__)

# first contraction ratio above which solve_global halves the window
WINDOW_RATIO_MAX = 0.9


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-10
    k_max: int = 20
    T_window: float = 0.1
    dt: float = 1e-3
    N: int = 32
    safety: tuple = (0.4, 1.6)
    min_window: Optional[float] = None

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ConfigurationError(f"tol must be positive, got {self.tol!r}")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ConfigurationError(f"k_max must be >= 1, got {self.k_max!r}")
        if not (self.dt > 0.0 and self.T_window > 0.0):
            raise ConfigurationError("dt and T_window must be positive")
        if self.dt > self.T_window * (1.0 + 1e-12):
            raise ConfigurationError(f"dt={self.dt} exceeds T_window={self.T_window}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"mode count N must be >= 1, got {self.N!r}")
        lo, hi = self.safety
        if not 0.0 < lo < 1.0 < hi:
            raise ConfigurationError(f"safety interval must contain 1, got {self.safety!r}")

    @property
    def steps_per_window(self):
        return max(1, int(round(self.T_window / self.dt)))

    def to_record(self):
        return {"tol": self.tol, "k_max": self.k_max, "T_window": self.T_window, "dt": self.dt,
                "N": self.N, "safety": list(self.safety)}


@dataclass
class IterationTrace:
    energies: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.energies)

    @property
    def ratios(self):
        e = np.asarray(self.energies)
        with np.errstate(divide="ignore", invalid="ignore"):
            return list(e[1:] / e[:-1]) if e.size > 1 else []

    def to_record(self):
        return {"energies": [float(x) for x in self.energies],
                "ratios": [float(x) for x in self.ratios],
                "converged": self.converged, "iterations": self.iterations}


def contraction_energy(U_new, U_old, rho0, grid, times, U_r_new=None, U_r_old=None):
    """sup_t |(r^m rho0)^(1/2) dU|^2 + time integral of |(r^m rho0)^(1/2) (dU_r, sqrt(m) dU / r)|^2.

    ``U_*`` are (steps + 1, nodes) histories; the r-derivatives are taken from
    ``U_r_*`` when given and differentiated on the grid otherwise.
    """
    U_new = np.asarray(U_new, dtype=float)
    U_old = np.asarray(U_old, dtype=float)
    times = np.asarray(times, dtype=float)
    if U_new.shape != U_old.shape or U_new.ndim != 2 or U_new.shape[1] != grid.size:
        raise ShapeError(f"history shapes {U_new.shape} and {U_old.shape} do not match the grid")
    if times.shape != (U_new.shape[0],):
        raise ShapeError("time grid does not match the histories")
    dU = U_new - U_old
    if U_r_new is not None and U_r_old is not None:
        dU_r = np.asarray(U_r_new) - np.asarray(U_r_old)
    else:
        dU_r = dU @ grid.diff_matrix.T
    m, r = grid.m, grid.nodes
    W = grid.weights * r ** m * grid.check(rho0, "rho0")
    l2 = (dU ** 2) @ W
    h1 = (dU_r ** 2 + m * (dU / r) ** 2) @ W
    return float(l2.max() + trapezoid(h1, times)) if times.size > 1 else float(l2.max())


def _backgrounds(traj, bounds, grid):
    return [BackgroundFlow(traj.eta[i], traj.eta_r[i], traj.U[i], float(traj.times[i])).check(grid, bounds)
            for i in range(len(traj))]


def _frozen_guess(start, coeffs0, basis, times, grid, params):
    """U^0 = start velocity held constant, eta^0 = eta_start + t U^0."""
    U0 = coeffs0 @ basis.xi
    U0_r = coeffs0 @ basis.xi_r
    U0_rr = coeffs0 @ basis.xi_rr
    tau = (times - times[0])[:, None]
    nt = times.size
    return Trajectory(
        times, np.tile(U0, (nt, 1)), start.eta + tau * U0, start.eta_r + tau * U0_r, params,
        U_r=np.tile(U0_r, (nt, 1)), eta_rr=start.eta_rr + tau * U0_rr, modal=np.tile(coeffs0, (nt, 1)),
    )


@dataclass
class WindowResult:
    trajectory: Trajectory
    trace: IterationTrace


def picard_window(fields, eta_init, config, basis, grid, coeffs0=None, t0=0.0, T=None,
                  system=None, raise_on_failure=True):
    """Picard iteration on one window [t0, t0 + T].

    ``eta_init`` is the LagrangianState at the window start (its eta, eta_r and
    eta_rr start every flow map).  ``coeffs0`` are the modal coefficients of
    the starting velocity (projection of u0 by default).
    """
    T = config.T_window if T is None else T
    steps = max(1, int(round(T / config.dt)))
    times = t0 + config.dt * np.arange(steps + 1)
    if basis.N != config.N:
        raise ConfigurationError(f"basis has N={basis.N}, config asks for N={config.N}")
    if system is None:
        system = build_system(basis, fields.rho0, fields.params, grid, bounds=config.safety)
    if coeffs0 is None:
        coeffs0 = project(fields.u0, basis, grid)
    start = eta_init
    if start.eta_rr is None:
        start = replace(start, eta_rr=np.zeros(grid.size))

    current = _frozen_guess(start, coeffs0, basis, times, grid, fields.params)
    trace = IterationTrace()
    for k in range(config.k_max):
        bgs = _backgrounds(current, config.safety, grid)
        nxt = solve_linearized(fields, bgs, basis, config.dt, steps * config.dt, grid,
                               system=system, coeffs0=coeffs0, start=start, t0=t0)
        energy = contraction_energy(nxt.U, current.U, fields.rho0, grid, times, nxt.U_r, current.U_r)
        trace.energies.append(energy)
        current = nxt
        log.debug("window t0=%.4g iteration %d energy %.3e", t0, k + 1, energy)
        if energy <= config.tol:
            trace.converged = True
            break
    # the flow map of the accepted iterate must itself be admissible
    _backgrounds(current, config.safety, grid)
    if not trace.converged and raise_on_failure:
        raise NonConvergenceError(
            f"Picard iteration did not reach tol={config.tol:g} in {config.k_max} iterations "
            f"(last energy {trace.energies[-1]:.3e})", trace=trace)
    return current, trace


@dataclass
class SimulationRecord:
    trajectory: Trajectory
    traces: list
    windows: list
    config: PicardConfig
    T: float

    def to_record(self):
        return {
            "T": self.T,
            "config": self.config.to_record(),
            "windows": [[float(a), float(b)] for a, b in self.windows],
            "traces": [t.to_record() for t in self.traces],
        }


def solve_global(fields, T, config, basis, grid, start=None):
    """Chain Picard windows over [0, T].

    Each window starts from the user window length (clipped to the remaining
    horizon) and is halved until the first contraction ratio is at most 0.9
    and the iteration converges.  Window starts reuse the previous end state
    exactly, with the final velocity held constant as the first guess.
    """
    if not T > 0.0:
        raise ConfigurationError(f"horizon T must be positive, got {T!r}")
    total = int(round(T / config.dt))
    if total < 1 or abs(total * config.dt - T) > 1e-9 * max(T, 1.0):
        raise ConfigurationError(f"T={T!r} is not a positive multiple of dt={config.dt!r}")
    system = build_system(basis, fields.rho0, fields.params, grid, bounds=config.safety)
    min_steps = 1 if config.min_window is None else max(1, int(round(config.min_window / config.dt)))

    if start is None:
        from .lagrangian import identity_state
        start = identity_state(fields.u0, fields.params, grid)
    coeffs = project(fields.u0, basis, grid)
    done = 0
    parts, traces, windows = [], [], []
    while done < total:
        steps = min(config.steps_per_window, total - done)
        t0 = done * config.dt
        while True:
            try:
                traj, trace = picard_window(fields, start, config, basis, grid, coeffs0=coeffs, t0=t0,
                                            T=steps * config.dt, system=system, raise_on_failure=False)
            except DegeneracyError:
                if steps <= min_steps:
                    raise
                steps = max(min_steps, steps // 2)
                continue
            ratios = trace.ratios
            ok = trace.converged and (not ratios or ratios[0] <= WINDOW_RATIO_MAX)
            if ok:
                break
            if steps <= min_steps:
                partial = Trajectory.concatenate(parts) if parts else None
                raise ContinuationError(
                    f"window starting at t={t0:.6g} failed to converge at the smallest window",
                    last_good_time=t0,
                    record=None if partial is None else SimulationRecord(partial, traces, windows, config, t0))
            steps = max(min_steps, steps // 2)
        parts.append(traj)
        traces.append(trace)
        windows.append((t0, t0 + steps * config.dt))
        done += steps
        last = traj[len(traj) - 1]
        start, coeffs = last, traj.modal[-1]
    return SimulationRecord(Trajectory.concatenate(parts), traces, windows, config, total * config.dt)
