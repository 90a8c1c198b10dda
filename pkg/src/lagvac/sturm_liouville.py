"""Galerkin eigenbasis of  -(r^m xi')' + m r^(m-2) xi = lambda r^m xi,
xi(0) = 0, xi'(1) = 0.

The eigenfunctions are computed by a Ritz method over the polynomials
``r * P_k(2r - 1)``, which builds in xi(0) = 0 and leaves the Neumann condition
at r = 1 natural.  Because the Ritz functions are polynomials they can be
evaluated anywhere in [0, 1], not only on the grid.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import linalg

from .errors import ConfigurationError, NumericalError, ShapeError

__all__ = ["EigenBasis", "solve_eigenpairs", "project", "reconstruct", "evaluate_modes"]


def _ritz_values(coeffs, r, deriv=0):
    """Values (deriv = 0, 1, 2) of sum_k coeffs[k] * r P_k(2r - 1) at r."""
    x = 2.0 * np.asarray(r, dtype=float) - 1.0
    p = npleg.legval(x, coeffs)
    if deriv == 0:
        return r * p
    dp = 2.0 * npleg.legval(x, npleg.legder(coeffs))
    if deriv == 1:
        return p + r * dp
    d2p = 4.0 * npleg.legval(x, npleg.legder(coeffs, 2))
    if deriv == 2:
        return 2.0 * dp + r * d2p
    raise ValueError("deriv must be 0, 1 or 2")


def evaluate_modes(coef, r, deriv=0):
    """Evaluate every mode (columns of ``coef``) at points r; shape (N, len(r))."""
    coef = np.asarray(coef)
    return np.stack([_ritz_values(coef[:, j], r, deriv) for j in range(coef.shape[1])])


@dataclass(frozen=True, eq=False)
class EigenBasis:
    m: int
    N: int
    lambdas: np.ndarray
    xi: np.ndarray
    xi_r: np.ndarray
    xi_rr: np.ndarray = field(repr=False)
    coef: np.ndarray = field(repr=False)

    def evaluate(self, r, deriv=0):
        return evaluate_modes(self.coef, r, deriv)

    def boundary_residuals(self):
        """(|xi_j(0)|, |xi_j'(1)|) scaled by sqrt(lambda_j)."""
        at0 = np.abs(self.evaluate(np.array([0.0]))[:, 0])
        at1 = np.abs(self.evaluate(np.array([1.0]), 1)[:, 0]) / np.sqrt(self.lambdas)
        return at0, at1

    def to_record(self):
        return {"m": self.m, "N": self.N, "lambdas": [float(x) for x in self.lambdas]}


def solve_eigenpairs(m, N, grid, n_poly=None):
    """First N eigenpairs, orthonormal in the r^m-weighted inner product of ``grid``.

    ``n_poly`` is the size of the Ritz space (default ``2N + 24``).
    """
    if m not in (1, 2):
        raise ConfigurationError(f"dimension index m must be 1 or 2, got {m!r}")
    if int(N) != N or N < 1:
        raise ConfigurationError(f"mode count N must be >= 1, got {N!r}")
    if m != grid.m:
        raise ConfigurationError(f"grid has m={grid.m}, basis requested m={m}")
    N = int(N)
    K = int(n_poly) if n_poly is not None else 2 * N + 24
    if K < N:
        raise ConfigurationError("Ritz space smaller than the requested mode count")

    # Gauss-Legendre rule exact for the degree 2K + m integrands below
    xq, wq = npleg.leggauss(K + 4)
    rq, wq = 0.5 * (xq + 1.0), 0.5 * wq
    eye = np.eye(K)
    P = npleg.legvander(2.0 * rq - 1.0, K - 1).T                     # P_k(x_q)
    dP = np.stack([npleg.legval(2.0 * rq - 1.0, npleg.legder(eye[k])) for k in range(K)]) * 2.0
    phi = rq * P
    dphi = P + rq * dP
    wm = wq * rq ** m
    # m r^(m-2) phi_i phi_j = m r^m P_i P_j
    S = (dphi * wm) @ dphi.T + m * (P * wm) @ P.T
    M = (phi * wm) @ phi.T
    try:
        lam, vec = linalg.eigh(S, M, subset_by_index=[0, N - 1])
    except linalg.LinAlgError as exc:
        raise NumericalError(f"generalized eigensolve failed: {exc}") from exc
    if np.any(np.diff(lam) <= 0.0):
        raise NumericalError("eigenvalues are not strictly increasing")

    coef = vec.copy()
    r = grid.nodes
    w = grid.weights * r ** m
    xi = evaluate_modes(coef, r)
    # modified Gram-Schmidt in the grid's r^m inner product
    for j in range(N):
        for i in range(j):
            c = np.dot(w * xi[i], xi[j])
            xi[j] -= c * xi[i]
            coef[:, j] -= c * coef[:, i]
        nrm = np.sqrt(np.dot(w * xi[j], xi[j]))
        xi[j] /= nrm
        coef[:, j] /= nrm
    slope0 = evaluate_modes(coef, np.array([0.0]), 1)[:, 0]
    sign = np.where(slope0 < 0.0, -1.0, 1.0)
    coef *= sign[None, :]
    xi *= sign[:, None]

    lam_resid = np.abs(M @ vec[:, :1] * lam[0] - S @ vec[:, :1]).max()
    if not np.isfinite(lam_resid):
        raise NumericalError("eigensolve produced non-finite residuals")
    return EigenBasis(
        m=m, N=N, lambdas=lam, xi=xi,
        xi_r=evaluate_modes(coef, r, 1), xi_rr=evaluate_modes(coef, r, 2), coef=coef,
    )


def project(f, basis, grid):
    """Modal coefficients c_j = <r^m f, xi_j>."""
    f = grid.check(f)
    if basis.xi.shape[1] != grid.size:
        raise ShapeError("basis and grid are inconsistent")
    return basis.xi @ (grid.weights * grid.nodes ** basis.m * f)


def reconstruct(c, basis):
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size > basis.N:
        raise ShapeError(f"expected at most {basis.N} coefficients, got shape {c.shape}")
    return c @ basis.xi[: c.size]
