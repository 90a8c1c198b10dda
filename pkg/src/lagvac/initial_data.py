"""Physical parameters and admissible initial profiles (rho0, u0, v0)."""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import differentiate, tail_integral, zeta

__all__ = [
    "PhysicalParams",
    "BumpSpec",
    "InitialFields",
    "AdmissibilityReport",
    "density_profile_example",
    "envelope_constants",
    "bump_profile",
    "velocity_profile_example",
    "initial_effective_velocity",
    "make_initial_fields",
    "validate_admissibility",
]

ENVELOPE_SLACK = 1e-10
# |d log(rho0 / (1-r)^(1/beta)) / d log(1-r)| allowed on the outermost panel
ENVELOPE_TREND_TOL = 0.05


@dataclass(frozen=True)
class PhysicalParams:
    """Dimension, pressure law ``P = A rho**gamma`` and viscosity constant ``mu``.

    ``A = 0`` (pressureless) is accepted for test configurations.
    """

    n: int = 2
    gamma: float = 2.0
    beta: float = 1.0
    mu: float = 1.0
    A: float = 1.0

    def __post_init__(self):
        n, gamma, beta = self.n, self.gamma, self.beta
        if n not in (2, 3):
            raise ConfigurationError(f"dimension n must be 2 or 3, got {n!r}")
        if n == 2 and not gamma > 4.0 / 3.0:
            raise ConfigurationError(f"gamma outside (4/3, inf) for n=2: {gamma!r}")
        if n == 3 and not 4.0 / 3.0 < gamma < 3.0:
            raise ConfigurationError(f"gamma outside (4/3, 3) for n=3: {gamma!r}")
        if not (1.0 / 3.0 < beta <= gamma - 1.0 + 1e-14):
            raise ConfigurationError(f"beta outside (1/3, gamma-1]: beta={beta!r}, gamma={gamma!r}")
        if not self.mu > 0.0:
            raise ConfigurationError(f"viscosity mu must be positive, got {self.mu!r}")
        if self.A < 0.0:
            raise ConfigurationError(f"entropy constant A must be non-negative, got {self.A!r}")

    @property
    def m(self):
        return self.n - 1

    @property
    def physical_vacuum(self):
        """True on the branch beta = gamma - 1."""
        return abs(self.beta - (self.gamma - 1.0)) <= 1e-14

    @classmethod
    def shallow_water(cls, beta=1.0, mu=1.0, A=1.0):
        """Viscous Saint-Venant configuration: gamma = n = 2."""
        return cls(n=2, gamma=2.0, beta=beta, mu=mu, A=A)

    def to_record(self):
        return {"n": self.n, "gamma": self.gamma, "beta": self.beta, "mu": self.mu, "A": self.A}


@dataclass(frozen=True)
class BumpSpec:
    """Radial bump ``q * exp(-1 / (1 - ((r - c) / h)**2))`` supported in |r - c| < h."""

    center: float = 0.4
    radius: float = 0.2
    amplitude: float = 0.0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ConfigurationError("bump radius must be positive")
        if self.center - self.radius <= 0.0 or self.center + self.radius >= 1.0:
            raise ConfigurationError("bump support must lie strictly inside (0, 1)")


@dataclass(frozen=True, eq=False)
class InitialFields:
    params: PhysicalParams
    rho0: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    K1: float
    K2: float
    k_profile: Optional[int] = None
    dlog_rho0: Optional[np.ndarray] = field(default=None, repr=False)
    bump: Optional[BumpSpec] = None

    def with_velocity(self, u0, grid):
        """Copy with a new u0; v0 is recomputed."""
        out = replace(self, u0=np.asarray(u0, dtype=float))
        return replace(out, v0=initial_effective_velocity(out, grid))

    def to_record(self):
        rec = {
            "params": self.params.to_record(),
            "K1": self.K1,
            "K2": self.K2,
            "k_profile": self.k_profile,
        }
        if self.bump is not None:
            rec["bump"] = {"center": self.bump.center, "radius": self.bump.radius,
                           "amplitude": self.bump.amplitude}
        return rec


def envelope_constants(beta, k):
    """(K1, K2) for the profile (1 - r**(2k))**(1/beta): 1 - r**(2k) <= 2k (1 - r)."""
    return 1.0, float((2 * k) ** (1.0 / beta))


def density_profile_example(params, k, grid):
    """rho0(r) = (1 - r**(2k))**(1/beta) on the grid nodes."""
    if int(k) != k or k < 1:
        raise ConfigurationError(f"profile index k must be a positive integer, got {k!r}")
    r = grid.nodes
    return (1.0 - r ** (2 * int(k))) ** (1.0 / params.beta)


def example_log_derivative(params, k, r):
    """(log rho0)_r for the example family, in closed form."""
    r = np.asarray(r, dtype=float)
    return -2.0 * k * r ** (2 * k - 1) / (params.beta * (1.0 - r ** (2 * k)))


def bump_profile(bump, r):
    r = np.asarray(r, dtype=float)
    if bump is None or bump.amplitude == 0.0:
        return np.zeros_like(r)
    s = (r - bump.center) / bump.radius
    inside = np.abs(s) < 1.0
    out = np.zeros_like(r)
    out[inside] = bump.amplitude * np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def velocity_profile_example(params, rho0, bump, grid):
    """u0 from the example family; the pressure-balancing tail is added only when
    (2 gamma - 1)/5 <= beta < gamma - 1."""
    beta, gamma = params.beta, params.gamma
    if not (1.0 / 3.0 < beta <= gamma - 1.0 + 1e-14):
        raise ConfigurationError(f"beta outside (1/3, gamma-1]: beta={beta!r}")
    rho0 = grid.check(rho0, "rho0")
    u0 = bump_profile(bump, grid.nodes)
    if params.physical_vacuum or beta < (2.0 * gamma - 1.0) / 5.0:
        return u0
    sharp = 1.0 - zeta(1.0 / 3.0, grid.nodes)
    tail = tail_integral(rho0 ** (gamma - 1.0), grid)
    return u0 - sharp * params.A / (2.0 * params.mu) * tail


def initial_effective_velocity(fields, grid):
    """v0 = u0 + 2 mu (log rho0)_r."""
    rho0 = grid.check(fields.rho0, "rho0")
    if np.any(rho0 <= 0.0):
        raise DomainError("rho0 must be positive at every node")
    dlog = fields.dlog_rho0
    if dlog is None:
        beta = fields.params.beta
        g = rho0 ** beta
        dlog = differentiate(g, grid) / (beta * g)
    return fields.u0 + 2.0 * fields.params.mu * dlog


def make_initial_fields(params, grid, k=1, bump=None, rho0=None, u0=None, K1=None, K2=None):
    """Assemble InitialFields.

    With ``rho0`` omitted the example family of index ``k`` is used and its
    log-derivative is taken in closed form.  A custom ``rho0`` (nodal) needs its
    envelope constants; they default to the observed extremes of
    rho0 / (1 - r)**(1/beta).
    """
    r = grid.nodes
    if rho0 is None:
        rho0 = density_profile_example(params, k, grid)
        K1d, K2d = envelope_constants(params.beta, k)
        dlog = example_log_derivative(params, k, r)
        k_profile = int(k)
    else:
        rho0 = grid.check(rho0, "rho0")
        ratio = rho0 / (1.0 - r) ** (1.0 / params.beta)
        K1d, K2d = float(ratio.min()), float(ratio.max())
        dlog = None
        k_profile = None
    if u0 is None:
        u0 = velocity_profile_example(params, rho0, bump, grid)
    fields = InitialFields(
        params=params, rho0=rho0, u0=np.asarray(u0, dtype=float), v0=np.zeros_like(r),
        K1=float(K1 if K1 is not None else K1d), K2=float(K2 if K2 is not None else K2d),
        k_profile=k_profile, dlog_rho0=dlog, bump=bump,
    )
    return replace(fields, v0=initial_effective_velocity(fields, grid))


@dataclass
class AdmissibilityReport:
    envelope_min: float
    envelope_max: float
    envelope_trend: float
    lower_envelope_ok: bool
    upper_envelope_ok: bool
    seminorms: dict
    seminorms_finite: bool
    initial_energy: float
    initial_energy_finite: bool

    @property
    def passed(self):
        return (self.lower_envelope_ok and self.upper_envelope_ok
                and self.seminorms_finite and self.initial_energy_finite)

    def checks(self):
        return {
            "lower_envelope": self.lower_envelope_ok,
            "upper_envelope": self.upper_envelope_ok,
            "rho0_beta_seminorms": self.seminorms_finite,
            "initial_energy": self.initial_energy_finite,
        }


def validate_admissibility(fields, grid):
    """Report-only check of the envelope, the weighted H^3 seminorms of
    rho0**beta and finiteness of the discrete initial energy."""
    from .diagnostics import initial_energy

    params = fields.params
    r = grid.nodes
    rho0 = grid.check(fields.rho0, "rho0")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = rho0 / (1.0 - r) ** (1.0 / params.beta)
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    # the grid never reaches r = 1, so a ratio drifting to 0 or infinity shows
    # up only as a trend on the outermost panel
    outer = slice(-grid.nodes_per_panel, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        trend = float(np.polyfit(np.log(1.0 - r[outer]), np.log(ratio[outer]), 1)[0])
    lower_ok = bool(np.isfinite(lo) and lo > 0.0 and lo >= fields.K1 - ENVELOPE_SLACK
                    and trend <= ENVELOPE_TREND_TOL)
    upper_ok = bool(np.isfinite(hi) and hi <= fields.K2 + ENVELOPE_SLACK
                    and trend >= -ENVELOPE_TREND_TOL)

    g = np.clip(rho0, 0.0, None) ** params.beta
    if fields.k_profile is not None:
        k = fields.k_profile
        g1 = -2.0 * k * r ** (2 * k - 1)
        g2 = -2.0 * k * (2 * k - 1) * r ** (2 * k - 2)
        g3 = -2.0 * k * (2 * k - 1) * (2 * k - 2) * r ** max(2 * k - 3, 0) if k > 1 else np.zeros_like(r)
    else:
        g1 = differentiate(g, grid)
        g2 = differentiate(g1, grid)
        g3 = differentiate(g2, grid)
    g1_over_r = g1 / r
    comps = {
        "rho0^beta": g,
        "d/dr": g1,
        "d2/dr2": g2,
        "(d/dr)/r": g1_over_r,
        "d3/dr3": g3,
        "((d/dr)/r)_r": differentiate(g1_over_r, grid),
    }
    weight = r ** params.m
    semis = {key: float(np.sqrt(grid.integrate(weight * val ** 2))) for key, val in comps.items()}
    semis_ok = all(np.isfinite(v) for v in semis.values())

    energy = initial_energy(fields, grid)
    return AdmissibilityReport(
        envelope_min=lo, envelope_max=hi, envelope_trend=trend,
        lower_envelope_ok=lower_ok, upper_envelope_ok=upper_ok,
        seminorms=semis, seminorms_finite=semis_ok,
        initial_energy=energy, initial_energy_finite=bool(np.isfinite(energy)),
    )
