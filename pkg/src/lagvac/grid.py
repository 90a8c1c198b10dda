"""Composite Gauss-Legendre grids on (0, 1), cutoff functions and nodal calculus.

The endpoints r = 0 (coordinate singularity) and r = 1 (vacuum boundary) are
never sampled: every node lies strictly inside a panel.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ConfigurationError, DomainError, ShapeError

__all__ = [
    "RadialGrid",
    "CutoffFamily",
    "build_grid",
    "fornberg_weights",
    "differentiate",
    "panel_derivative",
    "tail_integral",
    "cumulative_integral",
    "interpolate",
    "extrapolate_to_one",
    "zeta",
    "cutoff",
    "smooth_cutoff",
    "weighted_lp_norm",
]

CUTOFF_KINDS = ("smooth", "smooth-complement", "sharp", "sharp-complement")


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Quadrature nodes, weights and derivative stencils on the unit interval.

    ``m = n - 1`` is carried along because almost every integrand downstream is
    weighted by ``r**m``.
    """

    m: int
    panels: int
    nodes_per_panel: int
    stencil_order: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray = field(repr=False)
    # reference-panel data, reused by integration and interpolation
    ref_nodes: np.ndarray = field(repr=False)
    ref_integration: np.ndarray = field(repr=False)
    ref_bary: np.ndarray = field(repr=False)
    ref_diff: np.ndarray = field(repr=False)

    @property
    def r(self):
        return self.nodes

    @property
    def size(self):
        return self.nodes.size

    @property
    def exact_degree(self):
        """Highest polynomial degree integrated exactly."""
        return 2 * self.nodes_per_panel - 1

    @property
    def panel_width(self):
        return 1.0 / self.panels

    @property
    def rm(self):
        return self.nodes ** self.m

    def integrate(self, f):
        return float(np.dot(self.weights, f))

    def check(self, f, name="field"):
        f = np.asarray(f, dtype=float)
        if f.shape != self.nodes.shape:
            raise ShapeError(f"{name} has shape {f.shape}, grid has {self.nodes.shape}")
        return f

    def to_record(self):
        return {
            "m": self.m,
            "panels": self.panels,
            "nodes_per_panel": self.nodes_per_panel,
            "stencil_order": self.stencil_order,
        }

    @classmethod
    def from_record(cls, record):
        return build_grid(
            record["m"], record["panels"], record["nodes_per_panel"],
            record.get("stencil_order", 4),
        )


@dataclass(frozen=True, eq=False)
class CutoffFamily:
    a: float
    kind: str
    samples: np.ndarray


def fornberg_weights(z, x, order=1):
    """Finite-difference weights at ``z`` for derivatives 0..order on nodes ``x``.

    Returns an array of shape (order + 1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((order + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5 = 1.0, c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _diff_matrix(nodes, stencil_order):
    n = nodes.size
    width = min(stencil_order + 1, n)
    D = np.zeros((n, n))
    for i in range(n):
        start = min(max(i - width // 2, 0), n - width)
        idx = slice(start, start + width)
        D[i, idx] = fornberg_weights(nodes[i], nodes[idx], 1)[1]
    return D


def build_grid(m, panels, nodes_per_panel, stencil_order=4):
    """Composite Gauss-Legendre grid with ``panels * nodes_per_panel`` nodes."""
    if m not in (1, 2):
        raise ConfigurationError(f"dimension index m must be 1 or 2, got {m!r}")
    if int(panels) != panels or panels < 1:
        raise ConfigurationError(f"panels must be a positive integer, got {panels!r}")
    if int(nodes_per_panel) != nodes_per_panel or nodes_per_panel < 2:
        raise ConfigurationError(f"nodes_per_panel must be >= 2, got {nodes_per_panel!r}")
    if int(stencil_order) != stencil_order or stencil_order < 1:
        raise ConfigurationError(f"stencil_order must be >= 1, got {stencil_order!r}")
    panels, npp = int(panels), int(nodes_per_panel)

    x, w = npleg.leggauss(npp)
    h = 1.0 / panels
    left = np.arange(panels) * h
    nodes = (left[:, None] + 0.5 * h * (x + 1.0)[None, :]).ravel()
    weights = np.tile(0.5 * h * w, panels)

    # Lagrange basis on the reference panel, expressed in Legendre coefficients
    coef = np.linalg.inv(npleg.legvander(x, npp - 1))
    integ = np.empty((npp, npp))
    dref = np.empty((npp, npp))
    for j in range(npp):
        integ[:, j] = npleg.legval(x, npleg.legint(coef[:, j], lbnd=-1.0))
        dref[:, j] = npleg.legval(x, npleg.legder(coef[:, j]))
    diffs = x[:, None] - x[None, :]
    np.fill_diagonal(diffs, 1.0)
    bary = 1.0 / np.prod(diffs, axis=1)

    return RadialGrid(
        m=int(m), panels=panels, nodes_per_panel=npp, stencil_order=int(stencil_order),
        nodes=nodes, weights=weights,
        diff_matrix=_diff_matrix(nodes, int(stencil_order)),
        ref_nodes=x, ref_integration=integ, ref_bary=bary, ref_diff=dref,
    )


def differentiate(f, grid):
    """Nodal approximation of df/dr of order ``grid.stencil_order``."""
    f = grid.check(f)
    return grid.diff_matrix @ f


def panel_derivative(f, grid):
    """Exact derivative of the panelwise interpolating polynomial at the nodes."""
    f = grid.check(f).reshape(grid.panels, grid.nodes_per_panel)
    return (f @ grid.ref_diff.T).ravel() * (2.0 / grid.panel_width)


def cumulative_integral(f, grid):
    """Nodal values of the integral of f from 0 to r_i (panelwise interpolation)."""
    f = grid.check(f).reshape(grid.panels, grid.nodes_per_panel)
    half = 0.5 * grid.panel_width
    within = half * (f @ grid.ref_integration.T)
    totals = f @ grid.weights[: grid.nodes_per_panel]
    offsets = np.concatenate(([0.0], np.cumsum(totals)[:-1]))
    return (within + offsets[:, None]).ravel()


def tail_integral(f, grid):
    """Nodal values of the integral of f from r_i to 1."""
    return grid.integrate(f) - cumulative_integral(f, grid)


def interpolate(f, grid, r_new):
    """Evaluate the panelwise Lagrange interpolant of nodal ``f`` at ``r_new``.

    Points outside (0, 1) are extrapolated with the first or last panel.
    """
    f = grid.check(f).reshape(grid.panels, grid.nodes_per_panel)
    r_new = np.asarray(r_new, dtype=float)
    flat = np.atleast_1d(r_new).ravel()
    h = grid.panel_width
    p = np.clip(np.floor(flat / h).astype(int), 0, grid.panels - 1)
    s = 2.0 * (flat - p * h) / h - 1.0
    diff = s[:, None] - grid.ref_nodes[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    terms = grid.ref_bary[None, :] / diff
    vals = np.sum(terms * f[p], axis=1) / np.sum(terms, axis=1)
    rows, cols = np.nonzero(hit)
    vals[rows] = f[p[rows], cols]
    return vals.reshape(r_new.shape) if r_new.ndim else float(vals[0])


def extrapolate_to_one(f, grid):
    """Quadratic extrapolation of nodal f to r = 1 from the three outermost nodes."""
    f = grid.check(f)
    r3 = grid.nodes[-3:]
    coeffs = np.polyfit(r3 - 1.0, f[-3:], 2)
    return float(coeffs[-1])


def _bump_quotient(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        fx = np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)
        y = 1.0 - x
        fy = np.where(y > 0.0, np.exp(-1.0 / np.where(y > 0.0, y, 1.0)), 0.0)
    return fx / (fx + fy)


def zeta(a, r):
    """Smooth non-increasing cutoff: 1 on [0, a], 0 on [(1 + 3a)/4, 1]."""
    if not 0.0 < a < 1.0:
        raise ConfigurationError(f"cutoff center must lie in (0, 1), got {a!r}")
    s = 0.25 * (1.0 + 3.0 * a)
    return _bump_quotient((s - np.asarray(r, dtype=float)) / (s - a))


def cutoff(a, grid, kind="smooth"):
    if not 0.0 < a < 1.0:
        raise ConfigurationError(f"cutoff center must lie in (0, 1), got {a!r}")
    r = grid.nodes
    if kind == "smooth":
        vals = zeta(a, r)
    elif kind == "smooth-complement":
        vals = 1.0 - zeta(a, r)
    elif kind == "sharp":
        vals = (r <= a).astype(float)
    elif kind == "sharp-complement":
        vals = (r > a).astype(float)
    else:
        raise ConfigurationError(f"unknown cutoff kind {kind!r}; expected one of {CUTOFF_KINDS}")
    return CutoffFamily(a=float(a), kind=kind, samples=vals)


def smooth_cutoff(a, grid):
    return cutoff(a, grid, "smooth")


def weighted_lp_norm(f, weight, p, grid):
    """(integral of weight * |f|**p)**(1/p); for p = inf the max of |f| where weight > 0."""
    f = grid.check(f, "f")
    weight = grid.check(weight, "weight")
    if np.any(weight < 0.0):
        raise DomainError("weight must be non-negative")
    if p == np.inf:
        mask = weight > 0.0
        return float(np.max(np.abs(f[mask]))) if mask.any() else 0.0
    if p < 1:
        raise DomainError(f"exponent p must be >= 1, got {p!r}")
    return grid.integrate(weight * np.abs(f) ** p) ** (1.0 / p)
