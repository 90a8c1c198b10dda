"""Back to physical space.

The solver lives in mass coordinates.  Inverting the flow map gives the
density and velocity on the moving domain [0, R(t)); the edge density vanishes
linearly, which is the physical vacuum condition.
"""
import numpy as np

from lagvac.eulerian import boundary_radius, eulerian_fields, eulerian_mass
from lagvac.grid import build_grid
from lagvac.initial_data import BumpSpec, PhysicalParams, make_initial_fields
from lagvac.picard import PicardConfig, solve_global
from lagvac.sturm_liouville import solve_eigenpairs

params = PhysicalParams(n=2, gamma=2.0, beta=1.0, mu=1.0, A=1.0)
grid = build_grid(1, 64, 8)
fields = make_initial_fields(params, grid, k=1, bump=BumpSpec(0.4, 0.2, 0.1))
basis = solve_eigenpairs(1, 32, grid)
traj = solve_global(fields, 0.2, PicardConfig(N=32), basis, grid).trajectory

state = traj[len(traj) - 1]
R = boundary_radius(state, grid)
print(f"R(0.2) = {R:.6f}")
x = np.linspace(0.0, R, 9)
snap = eulerian_fields(state, fields, x, grid)
for xi, rho, u in zip(x, snap.rho, snap.u):
    print(f"x = {xi:.4f}  rho = {rho:.6f}  u = {u + 0.0:+.6f}")

m0 = grid.integrate(grid.nodes * fields.rho0)
print(f"Eulerian mass {eulerian_mass(state, fields, grid):.15f} vs Lagrangian {m0:.15f}")

# near the edge rho / (R - x) settles to a constant
d = np.array([1e-2, 1e-3, 1e-4])
print("rho / (R - x):", eulerian_fields(state, fields, R - d, grid).rho / d)
