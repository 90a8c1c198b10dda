"""Inverse flow map, Eulerian fields on the moving ball, and the radial versus
multi-dimensional norm equivalences for radial vector fields f(r) x / r."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegeneracyError, DomainError
from .grid import extrapolate_to_one, interpolate, panel_derivative
from .lagrangian import density_from_flow

__all__ = [
    "RangeError",
    "EulerianSnapshot",
    "NormPair",
    "SURFACE_AREA",
    "boundary_radius",
    "invert_flow",
    "eulerian_fields",
    "eulerian_mass",
    "radial_md_norms",
    "gradient_moduli",
]

INVERSION_TOL = 1e-13
SURFACE_AREA = {1: 2.0 * np.pi, 2: 4.0 * np.pi}


class RangeError(DomainError):
    code = "range"


@dataclass(frozen=True, eq=False)
class EulerianSnapshot:
    t: float
    R_t: float
    x_samples: np.ndarray
    r_samples: np.ndarray
    rho: np.ndarray
    u: np.ndarray


def boundary_radius(state, grid):
    """R(t) = eta(t, 1-) by quadratic extrapolation."""
    return extrapolate_to_one(state.eta, grid)


def _flow_map(state, grid):
    if np.any(state.eta_r <= 0.0) or np.any(np.diff(state.eta) <= 0.0):
        raise DegeneracyError(f"flow map is not strictly increasing at t={state.t:.6g}")
    deta = panel_derivative(state.eta, grid)
    return (lambda r: interpolate(state.eta, grid, r)), (lambda r: interpolate(deta, grid, r))


def invert_flow(state, x, grid):
    """Lagrangian label r with eta(t, r) = x, for x in [0, R_t].

    eta(t, .) is the panelwise interpolant of the nodal flow map.  Samples are
    bracketed on the nodal values and refined by Newton steps that fall back to
    bisection whenever they leave the bracket.
    """
    eta_fn, deta_fn = _flow_map(state, grid)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    R = boundary_radius(state, grid)
    slack = 1e-12 * max(R, 1.0)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > R + slack):
        bad = x[(x < 0.0) | (x > R + slack) | ~np.isfinite(x)][0]
        raise RangeError(f"Eulerian radius {bad!r} outside [0, R_t={R!r}]")
    knots_r = np.concatenate(([0.0], grid.nodes, [1.0]))
    knots_x = np.concatenate(([0.0], state.eta, [max(R, state.eta[-1])]))
    j = np.clip(np.searchsorted(knots_x, x, side="right") - 1, 0, knots_r.size - 2)
    lo, hi = knots_r[j].copy(), knots_r[j + 1].copy()
    # widen by one cell: the interpolant and the nodal polyline differ slightly
    lo = knots_r[np.maximum(j - 1, 0)]
    hi = knots_r[np.minimum(j + 2, knots_r.size - 1)]
    r = knots_r[j] + (x - knots_x[j]) * (knots_r[j + 1] - knots_r[j]) / np.maximum(
        knots_x[j + 1] - knots_x[j], 1e-300)
    for _ in range(100):
        res = eta_fn(r) - x
        done = np.abs(res) <= INVERSION_TOL * max(R, 1.0)
        if np.all(done):
            break
        lo = np.where(res < 0.0, np.maximum(lo, r), lo)
        hi = np.where(res > 0.0, np.minimum(hi, r), hi)
        step = res / deta_fn(r)
        cand = r - step
        bad = ~((cand > lo) & (cand < hi))
        cand[bad] = 0.5 * (lo[bad] + hi[bad])
        r = np.where(done, r, cand)
    r = np.clip(r, 0.0, 1.0)
    return float(r[0]) if scalar else r


def eulerian_fields(state, fields, x_samples, grid):
    """rho(t, x) = varrho(t, eta_*(t, x)) and u(t, x) = U(t, eta_*(t, x))."""
    x = np.asarray(x_samples, dtype=float)
    r = invert_flow(state, x, grid)
    rho_lag = density_from_flow(state, fields.rho0, grid)
    rho = np.clip(interpolate(rho_lag, grid, r), 0.0, None)
    u = interpolate(state.U, grid, r)
    return EulerianSnapshot(t=float(state.t), R_t=boundary_radius(state, grid), x_samples=x,
                            r_samples=np.asarray(r), rho=np.asarray(rho), u=np.asarray(u))


def eulerian_mass(state, fields, grid):
    """Integral of x^m rho(t, x) over (0, R_t) on the grid rescaled to (0, R_t)."""
    R = boundary_radius(state, grid)
    x = R * grid.nodes
    snap = eulerian_fields(state, fields, x, grid)
    return float(R * np.dot(grid.weights, x ** fields.params.m * snap.rho))


# |grad^k (f x / r)|^2 = sum_i c_i g_i^2 at the identity flow
def _moduli_coefficients(order, m):
    return {
        0: [1.0],
        1: [1.0, m],
        2: [1.0, 3.0 * m],
        3: [1.0, 6.0 * m, 3.0 * m * m + 6.0 * m],
        4: [1.0, 10.0 * m, 15.0 * m * m + 30.0 * m],
    }[order]


def _components(f, order, eta, eta_r, grid):
    """Radial components for derivative order k, with D = d/dr / eta_r."""
    D = lambda g: panel_derivative(g, grid) / eta_r
    r = grid.nodes
    over = lambda g: (g / r) * (r / eta)
    if order == 0:
        return [f]
    if order == 1:
        return [D(f), over(f)]
    fe = over(f)
    Dfe = D(fe)
    D2f = D(D(f))
    if order == 2:
        return [D2f, Dfe]
    D3f = D(D2f)
    if order == 3:
        return [D3f, D(Dfe), over(Dfe)]
    return [D(D3f), D(D(Dfe)), D(over(Dfe))]


def gradient_moduli(f, order, grid):
    """Pointwise |grad^k F|^2 for F = f(r) x / r at the identity flow."""
    m = grid.m
    r = grid.nodes
    comps = _components(f, order, r, np.ones_like(r), grid)
    return sum(c * g ** 2 for c, g in zip(_moduli_coefficients(order, m), comps))


def _lq(g, weight, q, grid):
    if q == np.inf:
        return float(np.max(np.abs(g[weight > 0.0])))
    return float(np.dot(grid.weights, weight * np.abs(g) ** q) ** (1.0 / q))


@dataclass(frozen=True)
class NormPair:
    """``radial``: sum of component norms; ``md``: (integral of r^m |grad^k F|^q)^(1/q)
    (the n-dimensional norm divided by |S^m|^(1/q)); ``md`` is None off the identity flow."""

    radial: float
    md: object
    lower: float
    upper: float
    surface_area: float

    @property
    def ratio(self):
        if self.md is None or self.radial == 0.0:
            return None
        return self.md / self.radial

    @property
    def within_bounds(self):
        r = self.ratio
        return r is None or (self.lower * (1 - 1e-12) <= r <= self.upper * (1 + 1e-12))


def radial_md_norms(f, q, order, state, grid):
    if order not in (0, 1, 2, 3, 4):
        raise ConfigurationError(f"derivative order must be 0..4, got {order!r}")
    if not (q == np.inf or q >= 1.0):
        raise ConfigurationError(f"exponent q must lie in [1, inf], got {q!r}")
    f = grid.check(f, "f")
    m = grid.m
    eta, eta_r = state.eta, state.eta_r
    comps = _components(f, order, eta, eta_r, grid)
    weight = eta ** m * eta_r
    radial = sum(_lq(g, weight, q, grid) for g in comps)
    coeffs = _moduli_coefficients(order, m)
    identity = np.allclose(eta, grid.nodes, rtol=0.0, atol=1e-14) and np.allclose(eta_r, 1.0, rtol=0.0, atol=1e-14)
    md = None
    if identity:
        mod = np.sqrt(sum(c * g ** 2 for c, g in zip(coeffs, comps)))
        md = _lq(mod, grid.nodes ** m, q, grid)
    lower = np.sqrt(min(coeffs)) / len(coeffs)
    upper = np.sqrt(max(coeffs))
    return NormPair(radial=radial, md=md, lower=float(lower), upper=float(upper),
                    surface_area=SURFACE_AREA[m])
