"""Command line front end: simulate, eigen, verify and transform.

Exit codes: 0 success, 1 a monitor failed, 2 configuration/domain error,
3 flow-map degeneracy, 4 non-convergence or failed continuation, 5 I/O error.
"""
import argparse
import copy
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as lio
from .diagnostics import (bounds_monitor, energy_functionals, fundamental_energy_balance,
                          select_epsilon0, time_derivatives, TimeDerivatives)
from .errors import (ArtifactIOError, ConfigurationError, ContinuationError, DegeneracyError,
                     LagvacError, NonConvergenceError, NumericalError)
from .eulerian import eulerian_fields, boundary_radius
from .grid import build_grid
from .initial_data import BumpSpec, PhysicalParams, make_initial_fields, validate_admissibility
from .lagrangian import Trajectory, effective_velocity
from .picard import PicardConfig, solve_global
from .sturm_liouville import solve_eigenpairs

__all__ = ["RunConfig", "cmd_simulate", "cmd_eigen", "cmd_verify", "cmd_transform", "main", "EXIT_CODES"]

log = logging.getLogger("lagvac")

EXIT_CODES = {
    "ok": 0, "monitors": 1, "configuration": 2, "domain": 2, "shape": 2, "range": 2,
    "degeneracy": 3, "nonconvergence": 4, "continuation": 4, "numerical": 4, "io": 5,
}

DEFAULTS = {
    "physical": {"n": 2, "gamma": 2.0, "beta": 1.0, "mu": 1.0, "A": 1.0},
    "initial": {"k": 1, "bump": {"center": 0.4, "radius": 0.2, "amplitude": 0.1}},
    "grid": {"panels": 64, "nodes_per_panel": 8, "stencil_order": 4},
    "picard": {"tol": 1e-10, "k_max": 20, "T_window": 0.2, "dt": 1e-3, "N": 32, "safety": [0.4, 1.6]},
    "T": 0.2,
    "output": None,
    "checkpoint_interval": 0,
    "monitor": {"interval": [0.5, 1.5], "boundary_rel": 1e-3, "stride": 10, "mass_rel": 1e-12},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def apply_override(doc, dotted, value):
    """Set ``doc[a][b]... = value`` for the dotted key ``a.b...``."""
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigurationError(f"unknown configuration section {dotted!r}")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigurationError(f"unknown configuration key {dotted!r}")
    node[keys[-1]] = value


def parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class RunConfig:
    """Nested run configuration; keys mirror the dotted command line flags."""

    doc: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, d=None, overrides=()):
        doc = _merge(DEFAULTS, d or {})
        for key, val in overrides:
            apply_override(doc, key, val)
        cfg = cls(doc)
        cfg.validate()
        return cfg

    def validate(self):
        self.params
        self.picard
        self.bump
        T = float(self.doc["T"])
        if not T > 0.0:
            raise ConfigurationError(f"horizon T must be positive, got {T!r}")
        return self

    @property
    def params(self):
        try:
            return PhysicalParams(**self.doc["physical"])
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @property
    def bump(self):
        b = self.doc["initial"].get("bump")
        if not b or float(b.get("amplitude", 0.0)) == 0.0:
            return None
        return BumpSpec(**b)

    @property
    def picard(self):
        d = dict(self.doc["picard"])
        d["safety"] = tuple(d.get("safety", (0.4, 1.6)))
        try:
            return PicardConfig(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @property
    def T(self):
        return float(self.doc["T"])

    def digest(self):
        text = json.dumps({k: v for k, v in self.doc.items() if k != "output"}, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def output_dir(self):
        if self.doc.get("output"):
            return Path(self.doc["output"])
        return lio.output_root() / f"run-{self.digest()}"


def build_problem(cfg):
    params = cfg.params
    g = cfg.doc["grid"]
    grid = build_grid(params.m, g["panels"], g["nodes_per_panel"], g.get("stencil_order", 4))
    fields = make_initial_fields(params, grid, k=int(cfg.doc["initial"]["k"]), bump=cfg.bump)
    basis = solve_eigenpairs(params.m, cfg.picard.N, grid)
    return grid, fields, basis


def evaluate_monitors(traj, fields, grid, monitor):
    """Recompute every monitor on a stored trajectory.  Returns (checks, series)."""
    lo, hi = monitor["interval"]
    stride = max(1, int(monitor.get("stride", 10)))
    masses = traj.masses(fields.rho0, grid)
    mass0 = grid.integrate(grid.nodes ** fields.params.m * fields.rho0)
    mass_dev = float(np.max(np.abs(masses - mass0)) / mass0)
    bal = fundamental_energy_balance(traj, fields, grid)
    dt = traj.dt
    idx = list(range(0, len(traj), stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    bounds = [bounds_monitor(traj[i], fields, grid) for i in idx]
    energies = []
    if len(traj) >= 3:
        U_t, U_tt = time_derivatives(traj.U, dt)
        energies = [energy_functionals(traj[i], TimeDerivatives(U_t[i], U_tt[i]), fields, grid) for i in idx]
    slack = dt * bal.max_residual + 1e-14 * max(1.0, float(np.abs(bal.energy).max()))
    checks = {
        "mass": mass_dev <= monitor.get("mass_rel", 1e-12),
        "energy_nonincreasing": bal.nonincreasing(slack),
        "bounds_finite": all(b.finite() for b in bounds),
        "eta_r_interval": all(lo <= b.eta_r_min and b.eta_r_max <= hi for b in bounds),
        "eta_over_r_interval": all(lo <= b.eta_over_r_min and b.eta_over_r_max <= hi for b in bounds),
        "boundary_residual": all(b.checks((lo, hi), monitor["boundary_rel"])["boundary_residual"]
                                 for b in bounds[1:] or bounds),
        "energy_functionals_finite": all(np.isfinite(e.E_total) and np.isfinite(e.D_total) for e in energies),
    }
    series = {"idx": idx, "bounds": bounds, "energies": energies, "balance": bal,
              "masses": masses, "mass0": mass0, "mass_dev": mass_dev}
    return checks, series


TRAJ_HEADER = ["step", "t", "r", "U", "U_r", "eta", "eta_r", "eta_rr", "rho", "V"]


def write_trajectory(path, traj, fields, grid):
    nt, nr = traj.U.shape
    rho = traj.densities(fields.rho0, grid)
    V = np.array([effective_velocity(traj[i], fields, grid).V for i in range(nt)])
    U_r = traj.U_r if traj.U_r is not None else traj.U @ grid.diff_matrix.T
    eta_rr = traj.eta_rr if traj.eta_rr is not None else traj.eta_r @ grid.diff_matrix.T
    cols = [np.repeat(np.arange(nt), nr), np.repeat(traj.times, nr), np.tile(grid.nodes, nt),
            traj.U.ravel(), U_r.ravel(), traj.eta.ravel(), traj.eta_r.ravel(), eta_rr.ravel(),
            rho.ravel(), V.ravel()]
    lio.write_csv(path, TRAJ_HEADER, cols)


def read_trajectory(path, params, grid, steps):
    header, arr, _ = lio.read_csv(path)
    if header != TRAJ_HEADER:
        raise ArtifactIOError(f"{path} has an unexpected header {header}")
    nr = grid.size
    if arr.shape[0] != (steps + 1) * nr:
        raise ArtifactIOError(f"{path} holds {arr.shape[0]} rows, expected {(steps + 1) * nr} (truncated?)")
    get = lambda name: arr[:, TRAJ_HEADER.index(name)].reshape(steps + 1, nr)
    times = get("t")[:, 0]
    return Trajectory(times, get("U"), get("eta"), get("eta_r"), params, U_r=get("U_r"), eta_rr=get("eta_rr"))


def _write_series(out, series, traj):
    bounds = series["bounds"]
    keys = list(bounds[0].to_record().keys())
    lio.write_csv(out / "bounds.csv", keys, [np.array([b.to_record()[k] for b in bounds]) for k in keys])
    if series["energies"]:
        ekeys = ["t", "E_in", "E_ex", "D_in", "D_ex", "E_total", "D_total", "mass"]
        recs = [e.to_record() for e in series["energies"]]
        lio.write_csv(out / "energy.csv", ekeys, [np.array([r[k] for r in recs]) for k in ekeys])
    bal = series["balance"]
    lio.write_csv(out / "balance.csv", ["t_mid", "energy_next", "dissipation", "residual"],
                  [bal.times, bal.energy[1:], bal.dissipation, bal.residual])
    lio.write_csv(out / "mass.csv", ["t", "mass"], [traj.times, series["masses"]])


def cmd_simulate(cfg):
    """Run the full pipeline and write artifacts.  Returns (exit status, output dir)."""
    out = cfg.output_dir()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ArtifactIOError(f"cannot create output directory {out}: {exc}") from exc
    grid, fields, basis = build_problem(cfg)
    admissibility = validate_admissibility(fields, grid)
    pc = cfg.picard
    record = solve_global(fields, cfg.T, pc, basis, grid)
    traj = record.trajectory
    checks, series = evaluate_monitors(traj, fields, grid, cfg.doc["monitor"])
    passed = all(checks.values())

    write_trajectory(out / "trajectory.csv", traj, fields, grid)
    _write_series(out, series, traj)
    ci = int(cfg.doc.get("checkpoint_interval") or 0)
    if ci > 0:
        for i in range(ci, len(traj) - 1, ci):
            lio.save_checkpoint(out / f"checkpoint_{i:06d}.json", traj[i])
    lio.save_checkpoint(out / "checkpoint.json", traj[len(traj) - 1], {"step": len(traj) - 1})
    manifest = {
        "config": cfg.doc,
        "grid": grid.to_record(),
        "initial": fields.to_record(),
        "epsilon0": select_epsilon0(fields.params),
        "admissibility": {"checks": admissibility.checks(), "initial_energy": admissibility.initial_energy},
        "eigenvalues": basis.lambdas[: min(8, basis.N)],
        "solve": record.to_record(),
        "steps": len(traj) - 1,
        "summary": {
            "mass": lio.fmt(series["mass0"]),
            "mass_max_rel_deviation": series["mass_dev"],
            "energy_balance_max_residual": series["balance"].max_residual,
            "final_time": float(traj.times[-1]),
            "R_final": boundary_radius(traj[len(traj) - 1], grid),
        },
        "checks": checks,
        "passed": passed,
    }
    lio.write_document(out / "manifest.json", "manifest", manifest)
    return (0 if passed else EXIT_CODES["monitors"]), out


def cmd_eigen(m, N, grid_spec=None, out=None):
    """Eigenvalues and sampled eigenfunctions.  Returns (exit status, lambdas)."""
    g = {**DEFAULTS["grid"], **(grid_spec or {})}
    grid = build_grid(m, g["panels"], g["nodes_per_panel"], g.get("stencil_order", 4))
    basis = solve_eigenpairs(m, N, grid)
    if out is not None:
        out = Path(out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ArtifactIOError(f"cannot create {out}: {exc}") from exc
        lio.write_document(out / "eigenvalues.json", "eigenvalues",
                           {"m": m, "N": N, "grid": grid.to_record(), "lambdas": [lio.fmt(x) for x in basis.lambdas]})
        lio.write_csv(out / "basis.csv", ["r"] + [f"xi_{j + 1}" for j in range(N)], [grid.nodes, *basis.xi])
    return 0, basis.lambdas


def load_run(run_dir):
    run_dir = Path(run_dir)
    manifest = lio.read_document(run_dir / "manifest.json", "manifest")
    try:
        cfg = RunConfig.from_dict(manifest["config"])
        steps = int(manifest["steps"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactIOError(f"corrupt manifest in {run_dir}: {exc}") from exc
    return manifest, cfg, steps


def cmd_verify(run_dir):
    """Recompute the monitors from a stored run.  Returns (exit status, report)."""
    manifest, cfg, steps = load_run(run_dir)
    params = cfg.params
    g = cfg.doc["grid"]
    grid = build_grid(params.m, g["panels"], g["nodes_per_panel"], g.get("stencil_order", 4))
    fields = make_initial_fields(params, grid, k=int(cfg.doc["initial"]["k"]), bump=cfg.bump)
    traj = read_trajectory(Path(run_dir) / "trajectory.csv", params, grid, steps)
    checks, series = evaluate_monitors(traj, fields, grid, cfg.doc["monitor"])
    stored = manifest.get("checks", {})
    same = {k: bool(v) for k, v in checks.items()} == {k: bool(v) for k, v in stored.items()}
    mass_ok = lio.fmt(series["mass0"]) == manifest.get("summary", {}).get("mass")
    report = {"checks": checks, "stored_checks": stored, "identical_pass_set": same,
              "mass": lio.fmt(series["mass0"]), "mass_reproduced": mass_ok}
    return (0 if same and mass_ok else EXIT_CODES["monitors"]), report


def cmd_transform(run_dir, step=None, samples=200, out=None):
    """Eulerian snapshot (x, rho, u) of a stored run.  Returns (exit status, snapshot)."""
    manifest, cfg, steps = load_run(run_dir)
    params = cfg.params
    g = cfg.doc["grid"]
    grid = build_grid(params.m, g["panels"], g["nodes_per_panel"], g.get("stencil_order", 4))
    fields = make_initial_fields(params, grid, k=int(cfg.doc["initial"]["k"]), bump=cfg.bump)
    if step is None:
        state, _ = lio.load_checkpoint(Path(run_dir) / "checkpoint.json")
        step = steps
    else:
        traj = read_trajectory(Path(run_dir) / "trajectory.csv", params, grid, steps)
        if not 0 <= step <= steps:
            raise ConfigurationError(f"step {step} outside 0..{steps}")
        state = traj[step]
    R = boundary_radius(state, grid)
    x = np.linspace(0.0, R, int(samples))
    snap = eulerian_fields(state, fields, x, grid)
    out = Path(out) if out is not None else Path(run_dir) / f"eulerian_{step:06d}.csv"
    lio.write_csv(out, ["x", "r", "rho", "u"], [snap.x_samples, snap.r_samples, snap.rho, snap.u],
                  comment=f"t={lio.fmt(snap.t)},R_t={lio.fmt(snap.R_t)}")
    return 0, snap


def _parser():
    p = argparse.ArgumentParser(prog="lagvac", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the Galerkin-Picard solver with monitors")
    s.add_argument("--config", help="JSON configuration file")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted override, e.g. physical.mu=0.5 (repeatable)")
    s.add_argument("--output", help="output directory (default under $LAGVAC_OUTPUT_ROOT)")

    e = sub.add_parser("eigen", help="Sturm-Liouville eigenpairs")
    e.add_argument("--m", type=int, default=1)
    e.add_argument("--N", type=int, default=8)
    e.add_argument("--panels", type=int, default=DEFAULTS["grid"]["panels"])
    e.add_argument("--nodes-per-panel", type=int, default=DEFAULTS["grid"]["nodes_per_panel"])
    e.add_argument("--output")

    v = sub.add_parser("verify", help="recompute monitors from a stored run")
    v.add_argument("run_dir")

    t = sub.add_parser("transform", help="Eulerian reconstruction of a stored run")
    t.add_argument("run_dir")
    t.add_argument("--step", type=int)
    t.add_argument("--samples", type=int, default=200)
    t.add_argument("--output")
    return p


def _config_from_args(args):
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot load configuration {args.config}: {exc}") from exc
    overrides = []
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not KEY=VALUE")
        k, v = item.split("=", 1)
        overrides.append((k.strip(), parse_value(v)))
    if args.output:
        overrides.append(("output", args.output))
    return RunConfig.from_dict(base, overrides)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            status, out = cmd_simulate(_config_from_args(args))
            print(json.dumps({"status": status, "output": str(out)}))
        elif args.command == "eigen":
            status, lambdas = cmd_eigen(args.m, args.N, {"panels": args.panels,
                                                         "nodes_per_panel": args.nodes_per_panel}, args.output)
            print(json.dumps({"m": args.m, "lambdas": [lio.fmt(x) for x in lambdas]}))
        elif args.command == "verify":
            status, report = cmd_verify(args.run_dir)
            print(lio.dumps(report), end="")
        else:
            status, snap = cmd_transform(args.run_dir, args.step, args.samples, args.output)
            print(json.dumps({"t": snap.t, "R_t": snap.R_t, "samples": int(snap.x_samples.size)}))
        return status
    except LagvacError as exc:
        code = getattr(exc, "code", "error")
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(code, 4)
