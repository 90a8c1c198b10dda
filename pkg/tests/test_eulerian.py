import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from lagvac.errors import ConfigurationError, DegeneracyError
from lagvac.eulerian import (SURFACE_AREA, RangeError, boundary_radius, eulerian_fields, eulerian_mass,
                             gradient_moduli, invert_flow, radial_md_norms)
from lagvac.grid import build_grid, interpolate
from lagvac.initial_data import BumpSpec, PhysicalParams, make_initial_fields
from lagvac.lagrangian import LagrangianState, density_from_flow, identity_state


@pytest.fixture(scope="module")
def g():
    return build_grid(1, 32, 8)


@pytest.fixture(scope="module")
def fields(g):
    return make_initial_fields(PhysicalParams(n=2), g, k=1, bump=BumpSpec(0.4, 0.2, 0.1))


def warped(g, params, s=0.2):
    r = g.nodes
    return LagrangianState(t=0.3, U=np.sin(r), eta=r + s * r ** 2 * (1.5 - r),
                           eta_r=1 + s * (3 * r - 3 * r ** 2), params=params)


def test_invert_identity(g, fields):
    st0 = identity_state(fields.u0, fields.params, g)
    x = np.linspace(0, 1, 41)
    assert np.abs(invert_flow(st0, x, g) - x).max() <= 1e-13


@pytest.mark.parametrize("c", [0.7, 1.4])
def test_invert_dilation(g, fields, c):
    r = g.nodes
    st_ = LagrangianState(0.0, np.zeros(g.size), c * r, np.full(g.size, c), fields.params)
    assert boundary_radius(st_, g) == pytest.approx(c, abs=1e-13)
    x = np.linspace(0, c, 33)
    assert np.abs(invert_flow(st_, x, g) - x / c).max() <= 1e-13


@given(st.floats(-0.3, 0.3), st.integers(0, 2 ** 31))
@settings(max_examples=20, deadline=None)
def test_round_trip_and_order(s, seed):
    g = build_grid(1, 16, 8)
    st_ = warped(g, PhysicalParams(n=2), s)
    R = boundary_radius(st_, g)
    x = np.sort(np.random.default_rng(seed).uniform(0, R, 200))
    r = invert_flow(st_, x, g)
    assert np.abs(interpolate(st_.eta, g, r) - x).max() <= 1e-12
    assert np.all(np.diff(r) >= 0)


def test_range_and_degeneracy(g, fields):
    st_ = warped(g, fields.params)
    R = boundary_radius(st_, g)
    for bad in (-1e-3, R * 1.01, np.nan):
        with pytest.raises(RangeError):
            invert_flow(st_, bad, g)
    folded = LagrangianState(0.0, st_.U, st_.eta[::-1].copy(), st_.eta_r, st_.params)
    with pytest.raises(DegeneracyError):
        invert_flow(folded, 0.5, g)


def test_fields_at_identity(g, fields):
    st0 = identity_state(fields.u0, fields.params, g)
    snap = eulerian_fields(st0, fields, g.nodes, g)
    assert np.abs(snap.rho - fields.rho0).max() <= 1e-12
    assert np.abs(snap.u - fields.u0).max() <= 1e-12
    assert snap.R_t == pytest.approx(1.0, abs=1e-13)


def test_fields_compose_through_inverse(g, fields):
    st_ = warped(g, fields.params)
    snap = eulerian_fields(st_, fields, st_.eta, g)
    assert np.abs(snap.u - st_.U).max() <= 1e-10
    assert np.abs(snap.rho - density_from_flow(st_, fields.rho0, g)).max() <= 1e-10
    assert np.all(snap.rho[:-1] > 0)


def test_eulerian_mass(g, fields):
    m0 = g.integrate(g.nodes * fields.rho0)
    for st_ in (identity_state(fields.u0, fields.params, g), warped(g, fields.params)):
        assert eulerian_mass(st_, fields, g) == pytest.approx(m0, rel=1e-10)


def test_vacuum_decay_fast_profile(g):
    # beta = 1/2 gives rho0 = (1 - r^2)^2, which is below 1e-3 of the peak at 0.999 R
    f = make_initial_fields(PhysicalParams(n=2, gamma=2.0, beta=0.5), g, k=1)
    st_ = warped(g, f.params)
    R = boundary_radius(st_, g)
    snap = eulerian_fields(st_, f, np.array([0.0, 0.999 * R]), g)
    assert snap.rho[1] <= 1e-3 * density_from_flow(st_, f.rho0, g).max()


def test_vacuum_decay_physical_vacuum(g, fields):
    # beta = 1 vanishes only linearly: rho(x) / (R - x) tends to a finite positive limit
    st_ = warped(g, fields.params)
    R = boundary_radius(st_, g)
    d = np.array([1e-2, 5e-3, 2.5e-3])
    snap = eulerian_fields(st_, fields, R - d, g)
    slope = snap.rho / d
    assert np.all(slope > 0) and np.ptp(slope) <= 0.02 * slope.mean()


def _sympy_moduli(n, order, f_expr, rvals):
    """Sum of squares of all order-th partials of F = f(|x|) x / |x| on the x_1 axis."""
    xs = sp.symbols(f"x0:{n}", real=True)
    rho = sp.sqrt(sum(x * x for x in xs))
    r = sp.Symbol("r", positive=True)
    F = [sp.simplify(f_expr.subs(r, rho) / rho) * x for x in xs]
    total = 0
    for comp in F:
        for idx in itertools.product(range(n), repeat=order):
            d = comp
            for i in idx:
                d = sp.diff(d, xs[i])
            total += d ** 2
    fn = sp.lambdify(xs[0], total.subs({x: 0 for x in xs[1:]}), "numpy")
    return np.array([float(fn(v)) for v in rvals])


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_gradient_moduli_against_sympy(n, order):
    g = build_grid(n - 1, 8, 10)
    r = sp.Symbol("r", positive=True)
    f_expr = r + r ** 3 / 2 + r ** 5 / 5
    f = sp.lambdify(r, f_expr, "numpy")(g.nodes)
    sel = slice(0, None, 7)
    ref = _sympy_moduli(n, order, f_expr, g.nodes[sel])
    got = gradient_moduli(f, order, g)[sel]
    # nested numerical derivatives lose digits; a wrong coefficient would be off at O(1)
    rtol = {1: 1e-10, 2: 1e-9, 3: 1e-8, 4: 1e-5}[order]
    assert np.allclose(got, ref, rtol=rtol, atol=rtol)


@pytest.mark.parametrize("m", [1, 2])
def test_md_norm_order_one(m):
    g = build_grid(m, 16, 8)
    rs = sp.Symbol("r", positive=True)
    fs = rs * (1 - rs)
    exact = sp.integrate(rs ** m * (sp.diff(fs, rs) ** 2 + m * fs ** 2 / rs ** 2), (rs, 0, 1))
    pair = radial_md_norms(g.nodes * (1 - g.nodes), 2, 1, identity_state(np.zeros(g.size), PhysicalParams(n=m + 1), g), g)
    assert pair.md ** 2 == pytest.approx(float(exact), rel=1e-12)
    assert pair.surface_area == SURFACE_AREA[m]
    # the n-dimensional L2 norm squared of grad F
    assert pair.surface_area * pair.md ** 2 == pytest.approx(SURFACE_AREA[m] * float(exact), rel=1e-12)


def test_md_norm_trivial(g, fields):
    st0 = identity_state(np.zeros(g.size), fields.params, g)
    z = radial_md_norms(np.zeros(g.size), 2, 2, st0, g)
    assert z.radial == 0.0 and z.md == 0.0
    f = np.sin(g.nodes)
    for q in (1, 2, 3.5):
        p0 = radial_md_norms(f, q, 0, st0, g)
        ref = g.integrate(g.nodes * np.abs(f) ** q) ** (1 / q)
        assert p0.radial == pytest.approx(ref, rel=1e-14) and p0.md == pytest.approx(ref, rel=1e-14)


def test_md_norm_errors(g, fields):
    st0 = identity_state(np.zeros(g.size), fields.params, g)
    with pytest.raises(ConfigurationError):
        radial_md_norms(g.nodes, 2, 5, st0, g)
    with pytest.raises(ConfigurationError):
        radial_md_norms(g.nodes, 0.5, 1, st0, g)


def test_md_norm_off_identity_radial_only(g, fields):
    pair = radial_md_norms(g.nodes ** 3, 2, 2, warped(g, fields.params), g)
    assert pair.md is None and pair.radial > 0


@pytest.mark.parametrize("m", [1, 2])
def test_equivalence_random_suite(m):
    g = build_grid(m, 16, 8)
    st0 = identity_state(np.zeros(g.size), PhysicalParams(n=m + 1), g)
    rng = np.random.default_rng(7)
    r = g.nodes
    for _ in range(50):
        a = rng.normal(size=4)
        # odd polynomials are the smooth radial vector fields
        f = a[0] * r + a[1] * r ** 3 + a[2] * r ** 5 + a[3] * r ** 7
        for order in range(5):
            for q in (1, 2, 4, np.inf):
                pair = radial_md_norms(f, q, order, st0, g)
                assert pair.within_bounds, (order, q, pair)
