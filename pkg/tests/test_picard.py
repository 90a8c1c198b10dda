import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import run_window
from lagvac.diagnostics import time_derivatives
from lagvac.errors import ConfigurationError, ContinuationError, NonConvergenceError, ShapeError
from lagvac.grid import build_grid
from lagvac.initial_data import PhysicalParams, make_initial_fields
from lagvac.lagrangian import identity_state, momentum_residual
from lagvac.picard import PicardConfig, contraction_energy, picard_window, solve_global
from lagvac.sturm_liouville import solve_eigenpairs


@pytest.fixture(scope="module")
def small():
    g = build_grid(1, 16, 8)
    return g, solve_eigenpairs(1, 12, g)


def test_config_validation():
    for kw in (dict(tol=0.0), dict(k_max=0), dict(dt=0.0), dict(dt=0.2, T_window=0.1), dict(N=0),
               dict(safety=(1.1, 1.6))):
        with pytest.raises(ConfigurationError):
            PicardConfig(**kw)
    assert PicardConfig(T_window=0.1, dt=1e-3).steps_per_window == 100


def test_contraction_energy_zero(small):
    g, basis = small
    U = np.outer(np.linspace(0, 1, 5), np.sin(g.nodes))
    assert contraction_energy(U, U, np.ones(g.size), g, np.linspace(0, 1, 5)) == 0.0


def test_contraction_energy_first_mode(small):
    g, basis = small
    eps, T = 0.3, 0.25
    times = np.linspace(0, T, 11)
    dU = eps * np.tile(basis.xi[0], (11, 1))
    dU_r = eps * np.tile(basis.xi_r[0], (11, 1))
    E = contraction_energy(dU, np.zeros_like(dU), np.ones(g.size), g, times, dU_r, np.zeros_like(dU))
    assert E == pytest.approx(eps ** 2 * (1 + T * basis.lambdas[0]), rel=1e-10)


@given(st.floats(0.1, 10.0))
@settings(max_examples=20, deadline=None)
def test_contraction_energy_quadratic(s):
    g = build_grid(1, 4, 4)
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 6, g.size))
    times = np.linspace(0, 0.5, 6)
    e1 = contraction_energy(a, b, np.ones(g.size), g, times)
    e2 = contraction_energy(b + s * (a - b), b, np.ones(g.size), g, times)
    assert e2 == pytest.approx(s * s * e1, rel=1e-12)


def test_contraction_energy_shapes(small):
    g, _ = small
    with pytest.raises(ShapeError):
        contraction_energy(np.zeros((3, g.size)), np.zeros((4, g.size)), np.ones(g.size), g, np.arange(3.0))
    with pytest.raises(ShapeError):
        contraction_energy(np.zeros((3, g.size)), np.zeros((3, g.size)), np.ones(g.size), g, np.arange(4.0))


def test_zero_data_fixed_point(small):
    g, basis = small
    f = make_initial_fields(PhysicalParams(n=2, A=0.0), g, k=1)
    traj, trace = run_window(f, g, basis, dt=1e-2, T=0.1)
    assert trace.iterations == 1 and trace.converged
    assert trace.energies[0] == 0.0
    assert np.all(traj.U == 0.0) and np.all(traj.eta == g.nodes)


def test_benchmark_contraction(bench_run):
    traj, trace = bench_run
    ratios = trace.ratios
    assert trace.converged
    assert max(ratios) <= 0.5
    assert np.all(np.diff(trace.energies) < 0)


def test_halving_window_reduces_first_ratio(bench_fields, grid1, basis1):
    first = {}
    for T in (0.2, 0.1):
        _, trace = run_window(bench_fields, grid1, basis1, T=T, tol=1e-12, k_max=30)
        first[T] = trace.ratios[0]
    assert first[0.1] / first[0.2] <= 0.6


def test_nonconvergence_carries_trace(bench_fields, grid1, basis1):
    with pytest.raises(NonConvergenceError) as info:
        run_window(bench_fields, grid1, basis1, T=0.05, tol=1e-30, k_max=2)
    assert info.value.trace.iterations == 2 and not info.value.trace.converged


def test_basis_config_mismatch(bench_fields, grid1, basis1):
    cfg = PicardConfig(N=basis1.N + 1, T_window=0.01, dt=1e-3)
    with pytest.raises(ConfigurationError):
        picard_window(bench_fields, identity_state(bench_fields.u0, bench_fields.params, grid1), cfg, basis1, grid1)


def test_fixed_point_residual_decreases(bench_fields, grid1):
    w = grid1.weights * grid1.nodes
    inner = grid1.nodes < 0.9
    out = []
    for N, dt in ((16, 2e-3), (32, 1e-3)):
        basis = solve_eigenpairs(1, N, grid1)
        traj, _ = run_window(bench_fields, grid1, basis, dt=dt, T=0.1, tol=1e-14, k_max=40)
        U_t, _ = time_derivatives(traj.U, dt)
        i = len(traj) // 2
        res = momentum_residual(traj[i], bench_fields, grid1, U_t=U_t[i])
        out.append(np.sqrt(np.sum((w * res ** 2)[inner])))
    assert out[1] < 0.5 * out[0]


def test_single_window_matches_picard_window(bench_fields, grid1, basis1):
    cfg = PicardConfig(tol=1e-10, k_max=30, T_window=0.2, dt=1e-3, N=basis1.N)
    rec = solve_global(bench_fields, 0.05, cfg, basis1, grid1)
    traj, _ = run_window(bench_fields, grid1, basis1, T=0.05, tol=1e-10, k_max=30)
    assert len(rec.windows) == 1
    assert np.array_equal(rec.trajectory.U, traj.U)


def test_zero_data_global(small):
    g, basis = small
    f = make_initial_fields(PhysicalParams(n=2, A=0.0), g, k=1)
    rec = solve_global(f, 0.3, PicardConfig(T_window=0.1, dt=1e-2, N=basis.N), basis, g)
    assert np.all(rec.trajectory.U == 0.0)
    assert np.all(rec.trajectory.eta == g.nodes)
    assert len(rec.windows) == 3


def test_global_benchmark_bounds_and_seams(bench_fields, grid1, basis1):
    cfg = PicardConfig(tol=1e-10, k_max=30, T_window=0.2, dt=1e-3, N=basis1.N)
    rec = solve_global(bench_fields, 0.5, cfg, basis1, grid1)
    traj = rec.trajectory
    assert traj.times[-1] == pytest.approx(0.5)
    assert traj.times.size == 501
    ratio = traj.eta / grid1.nodes
    for f in (traj.eta_r, ratio):
        assert 0.5 <= f.min() and f.max() <= 1.5
    # window seams: the shared state is stored once and each window restarts from it
    for a, b in rec.windows[1:]:
        assert any(abs(t - a) < 1e-12 for t in traj.times)
    for trace in rec.traces:
        assert trace.converged and trace.ratios[0] <= 0.9


def test_restart_is_seamless(bench_fields, grid1, basis1):
    cfg = PicardConfig(tol=1e-10, k_max=30, T_window=0.05, dt=1e-3, N=basis1.N)
    first = solve_global(bench_fields, 0.05, cfg, basis1, grid1).trajectory
    end = first[len(first) - 1]
    second, _ = picard_window(bench_fields, end, cfg, basis1, grid1, coeffs0=first.modal[-1], t0=0.05)
    start = second[0]
    for name in ("U", "eta", "eta_r", "eta_rr"):
        assert np.array_equal(getattr(start, name), getattr(end, name))
    whole = solve_global(bench_fields, 0.1, cfg, basis1, grid1).trajectory
    assert np.array_equal(whole.U[50], end.U) and np.array_equal(whole.eta[50:], second.eta)


def test_continuation_error(bench_fields, grid1, basis1):
    cfg = PicardConfig(tol=1e-30, k_max=1, T_window=0.004, dt=1e-3, N=basis1.N, min_window=1e-3)
    with pytest.raises(ContinuationError) as info:
        solve_global(bench_fields, 0.01, cfg, basis1, grid1)
    assert info.value.last_good_time == 0.0


def test_global_rejects_bad_horizon(bench_fields, grid1, basis1):
    cfg = PicardConfig(N=basis1.N)
    with pytest.raises(ConfigurationError):
        solve_global(bench_fields, 0.0, cfg, basis1, grid1)
    with pytest.raises(ConfigurationError):
        solve_global(bench_fields, 0.0105, cfg, basis1, grid1)
