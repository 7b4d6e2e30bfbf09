"""Driver layer: single runs, central-density sweeps, transition search, checks.

Everything here is deterministic: a given RunSpec always produces
byte-identical output (single-threaded reference mode, no randomness).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .config import StarConfig, stability_threshold
from .phase import (
    buchdahl_bounds,
    fixed_points,
    phase_trajectory,
    radius_limit,
    tail_convergence_rate,
    vector_field,
)
from .spectral import (
    assemble,
    build_sl_data,
    classify_stability,
    eigen_residual_strongform,
    manufactured_sl_data,
    quadratic_form,
    smallest_eigenpair,
)
from .steady import (
    Profile,
    decay_bound,
    explicit_profile_critical,
    integrate_gas_profile,
    liquid_radius,
    pohozaev_residual,
    scale_profile,
    singular_star,
    truncate_liquid,
    write_profile_csv,
)

MARGINAL = "Marginal"
ERROR = "Error"

# (d, gamma, rho0) battery every analytic identity is checked on
PROFILE_BATTERY: Tuple[Tuple[int, float, float], ...] = tuple(
    (d, g, rho0) for d in (3, 4, 5) for g in (1.0, 1.2, 1.5, 2.0) for rho0 in (1.0, 10.0)
)


def _fmt(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.17g}"


@dataclass(frozen=True)
class RunSpec:
    """Resolved parameters of one CLI invocation."""

    d: int = 3
    gamma: float = 1.2
    rho0: Optional[float] = None
    rho0_min: Optional[float] = None
    rho0_max: Optional[float] = None
    points: int = 16
    log: bool = True
    mesh: int = 2048
    tol: float = 1e-10
    tol_eig: float = 1e-8
    tol_rho: float = 1e-3
    rmax: float = 50.0
    out: Optional[str] = None
    format: str = "csv"
    gas: bool = False

    def config(self) -> StarConfig:
        if self.rho0 is None:
            raise ValueError("a single rho0 is required")
        return StarConfig(self.d, self.gamma, self.rho0)

    def rho0_values(self) -> np.ndarray:
        if self.rho0_min is None or self.rho0_max is None:
            raise ValueError("rho0_min and rho0_max are required for a sweep")
        if not (self.rho0_min < self.rho0_max):
            raise ValueError("empty sweep range: need rho0_min < rho0_max")
        if self.points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if self.log:
            if self.rho0_min <= 0.0:
                raise ValueError("log spacing needs positive bounds")
            return np.geomspace(self.rho0_min, self.rho0_max, self.points)
        return np.linspace(self.rho0_min, self.rho0_max, self.points)


def run_profile(spec: RunSpec, csv_out: Optional[TextIO] = None) -> Tuple[Profile, dict]:
    """Integrate one star, emit its CSV, and return (profile, diagnostics).

    Liquid output (the default) requires rho0 > 1 and writes the profile
    truncated at R; with spec.gas the full gas profile is written instead.
    Diagnostics report the worst decay-bound slack and integral-identity
    residual over the grid, plus R and the total mass.
    """
    config = spec.config()
    if not spec.gas and config.rho_center <= 1.0:
        raise ValueError(
            "no liquid truncation exists for rho0 <= 1; pass gas=True for a gas profile"
        )
    profile = integrate_gas_profile(
        config, tol=spec.tol, r_max=spec.rmax, stop_at_liquid=not spec.gas
    )
    emitted = profile if spec.gas else truncate_liquid(profile)

    slack = float(np.max(profile.rho / decay_bound(config, profile.radii))) - 1.0
    poho = float(np.max(np.abs(pohozaev_residual(profile, profile.radii))))
    diagnostics = {
        "d": config.d,
        "gamma": config.gamma,
        "rho0": config.rho_center,
        "R": emitted.liquid_radius,
        "M_total": emitted.total_mass,
        "gas_radius": profile.gas_radius,
        "max_decay_slack": slack,
        "max_pohozaev_residual": poho,
        "grid_points": int(len(emitted.radii)),
    }
    if spec.out is not None:
        with open(spec.out, "w") as f:
            write_profile_csv(emitted, f)
    elif csv_out is not None:
        write_profile_csv(emitted, csv_out)
    return emitted, diagnostics


@dataclass(frozen=True)
class SweepRow:
    """One central density of a sweep: geometry, mass, and the verdict."""

    rho0: float
    R: float
    M_total: float
    mu_star: float
    verdict: str


def sweep_row(
    d: int,
    gamma: float,
    rho0: float,
    mesh: int = 2048,
    tol: float = 1e-10,
    tol_eig: float = 1e-8,
    rmax: float = 50.0,
) -> SweepRow:
    """Compute one sweep row from scratch (independent of any other row)."""
    profile = integrate_gas_profile(
        StarConfig(d, gamma, rho0), tol=tol, r_max=rmax, stop_at_liquid=True
    )
    R = liquid_radius(profile)
    result = classify_stability(profile, mesh_size=mesh, tol_eig=tol_eig)
    verdict = MARGINAL if result.marginal else result.verdict
    return SweepRow(
        rho0=rho0, R=R, M_total=profile.total_mass, mu_star=result.mu_star, verdict=verdict
    )


def run_sweep(spec: RunSpec) -> List[SweepRow]:
    """One SweepRow per central density; a failed row is recorded, not fatal."""
    values = spec.rho0_values()
    if np.any(values <= 1.0):
        raise ValueError("sweep densities must all exceed 1 (liquid stars)")
    rows = []
    for rho0 in values:
        try:
            rows.append(
                sweep_row(
                    spec.d,
                    spec.gamma,
                    float(rho0),
                    mesh=spec.mesh,
                    tol=spec.tol,
                    tol_eig=spec.tol_eig,
                    rmax=spec.rmax,
                )
            )
        except Exception:
            rows.append(
                SweepRow(
                    rho0=float(rho0),
                    R=math.nan,
                    M_total=math.nan,
                    mu_star=math.nan,
                    verdict=ERROR,
                )
            )
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], out: TextIO) -> None:
    out.write("rho0,R,M,mu_star,verdict\n")
    for row in rows:
        out.write(
            f"{_fmt(row.rho0)},{_fmt(row.R)},{_fmt(row.M_total)},"
            f"{_fmt(row.mu_star)},{row.verdict}\n"
        )


@dataclass(frozen=True)
class CriticalDensityResult:
    """Bisection result for the sign change of mu*(rho0)."""

    rho0_crit: float
    bracket: Tuple[float, float]
    mu_lo: float
    mu_hi: float
    history: Tuple[Tuple[float, float], ...]


def critical_density(
    d: int,
    gamma: float,
    bracket: Tuple[float, float],
    tol_rho: float = 1e-3,
    mesh: int = 2048,
    tol: float = 1e-10,
    tol_eig: float = 1e-8,
    rmax: float = 50.0,
) -> CriticalDensityResult:
    """Bisect (in log rho0) for the central density where mu* changes sign.

    Requires gamma < 2(d-1)/d (otherwise every liquid star is stable and no
    sign change exists) and opposite signs of mu* at the bracket ends.  The
    returned bracket has relative width <= tol_rho.  Bisection presumes a
    single crossing inside the bracket; the endpoint signs are certified, the
    interior is not scanned.
    """
    if gamma >= stability_threshold(d):
        raise ValueError(
            f"stable regime: gamma >= {stability_threshold(d):g} has no sign change"
        )
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (1.0 < lo < hi):
        raise ValueError("bracket must satisfy 1 < lo < hi")

    def mu_at(rho0: float) -> float:
        return sweep_row(d, gamma, rho0, mesh=mesh, tol=tol, tol_eig=tol_eig, rmax=rmax).mu_star

    mu_lo = mu_at(lo)
    mu_hi = mu_at(hi)
    if math.copysign(1.0, mu_lo) == math.copysign(1.0, mu_hi):
        raise ValueError(
            f"same-sign bracket: mu*({lo:g}) = {mu_lo:.3e}, mu*({hi:g}) = {mu_hi:.3e}"
        )
    history = [(lo, hi)]
    while hi - lo > tol_rho * 0.5 * (hi + lo):
        mid = math.exp(0.5 * (math.log(lo) + math.log(hi)))
        if not (lo < mid < hi):
            break
        mu_mid = mu_at(mid)
        if math.copysign(1.0, mu_mid) == math.copysign(1.0, mu_lo):
            lo = mid
        else:
            hi = mid
        history.append((lo, hi))
    return CriticalDensityResult(
        rho0_crit=math.exp(0.5 * (math.log(lo) + math.log(hi))),
        bracket=(lo, hi),
        mu_lo=mu_lo,
        mu_hi=mu_hi,
        history=tuple(history),
    )


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    passed: bool
    measure: float
    detail: str


SUITE_NAMES = (
    "explicit",
    "pohozaev",
    "decay",
    "buchdahl",
    "singular",
    "fixed-point",
    "tail",
    "radius-limit",
    "q-symmetry",
    "strongform",
)


def _battery_profiles(tol: float = 1e-10):
    for d, g, rho0 in PROFILE_BATTERY:
        yield (d, g, rho0), integrate_gas_profile(StarConfig(d, g, rho0), tol=tol, r_max=20.0)


def _check_explicit() -> VerifyCheck:
    worst = 0.0
    for C in (1.0, 32.0):
        star = explicit_profile_critical(3, C)
        profile = integrate_gas_profile(StarConfig(3, 1.2, C), tol=1e-10, r_max=5.0)
        exact = star.rho_at(profile.radii)
        worst = max(worst, float(np.max(np.abs(profile.rho - exact) / exact)))
        if C > 1.0:
            R = liquid_radius(profile)
            worst = max(worst, abs(R - star.radius) / star.radius)
    return VerifyCheck(
        "explicit", worst <= 1e-6, worst, "integrator vs closed form, max relative error"
    )


def _check_pohozaev() -> VerifyCheck:
    worst = 0.0
    for _, profile in _battery_profiles():
        worst = max(worst, float(np.max(np.abs(pohozaev_residual(profile, profile.radii)))))
    return VerifyCheck(
        "pohozaev", worst <= 1e-5, worst, "max normalized residual over the battery"
    )


def _check_decay() -> VerifyCheck:
    tol = 1e-10
    worst = -math.inf
    for (d, g, rho0), profile in _battery_profiles(tol):
        slack = float(np.max(profile.rho / decay_bound(profile.config, profile.radii))) - 1.0
        worst = max(worst, slack)
    return VerifyCheck(
        "decay", worst <= 10.0 * tol, worst, "max (rho/bound - 1) over the battery"
    )


def _check_buchdahl() -> VerifyCheck:
    tol = 1e-10
    worst = -math.inf
    for (d, g, rho0), profile in _battery_profiles(tol):
        if g >= 2.0:
            continue
        v1b, v2b = buchdahl_bounds(d, g)
        traj = phase_trajectory(profile)
        worst = max(worst, float(np.max(traj.v1 / v1b)) - 1.0)
        if v2b is not None:
            worst = max(worst, float(np.max(traj.v2 / v2b)) - 1.0)
    return VerifyCheck(
        "buchdahl", worst <= 10.0 * tol, worst, "max phase-bound slack over the battery"
    )


def _check_singular() -> VerifyCheck:
    worst = 0.0
    for d, g in ((3, 1.0), (3, 1.2), (4, 1.2), (5, 1.5), (9, 1.6)):
        star = singular_star(d, g)
        for r in (0.5, 1.0, 2.0):
            worst = max(worst, abs(star.ode_residual(r)))
    return VerifyCheck("singular", worst <= 1e-12, worst, "max normalized ODE residual")


def _check_fixed_point() -> VerifyCheck:
    worst = 0.0
    for d in range(3, 10):
        gmax = stability_threshold(d)
        for g in np.linspace(1.0, gmax - 1e-6, 50):
            _, vs = fixed_points(d, float(g))
            worst = max(worst, float(np.linalg.norm(vector_field(vs, d, float(g)))))
    return VerifyCheck("fixed-point", worst <= 1e-12, worst, "max ||F(v*)|| over the grid")


def _check_tail() -> VerifyCheck:
    ok = True
    worst = 0.0
    for g in (1.0, 1.1):
        profile = integrate_gas_profile(StarConfig(3, g, 1.0), tol=1e-10, r_max=1e3)
        fit = tail_convergence_rate(profile)
        _, vs = fixed_points(3, g)
        u1_at_1 = 1.0 ** (2.0 / (2.0 - g)) * float(profile.rho_at(1.0))
        initial = abs(u1_at_1 - vs[0])
        ok = ok and fit.exponent > 0.0 and fit.terminal_deviation < initial
        worst = max(worst, fit.terminal_deviation / vs[0])
    return VerifyCheck(
        "tail", ok, worst, "fitted exponent positive and terminal deviation below r=1 deviation"
    )


def _check_radius_limit() -> VerifyCheck:
    d, g = 3, 1.1
    base = integrate_gas_profile(StarConfig(d, g, 1.0), tol=1e-10, r_max=1e3)
    r_inf = radius_limit(d, g)
    devs = {}
    for kappa in (10.0, 1e6):
        scaled = scale_profile(base, kappa)
        devs[kappa] = abs(scaled.liquid_radius - r_inf) / r_inf
    direct = integrate_gas_profile(StarConfig(d, g, 32.0), tol=1e-10, r_max=5.0, stop_at_liquid=True)
    law = scale_profile(base, 32.0).liquid_radius
    cross = abs(direct.liquid_radius - law) / direct.liquid_radius
    ok = devs[1e6] < devs[10.0] and cross <= 1e-5
    return VerifyCheck(
        "radius-limit",
        ok,
        devs[1e6],
        "scaling law matches direct integration; far deviation below near deviation",
    )


def _check_q_symmetry() -> VerifyCheck:
    profile = integrate_gas_profile(StarConfig(3, 1.25, 10.0), tol=1e-10, r_max=50.0, stop_at_liquid=True)
    data = build_sl_data(profile)
    rng = np.random.default_rng(20240817)
    worst = 0.0
    for _ in range(5):
        c1 = rng.standard_normal(len(data.grid))
        c2 = rng.standard_normal(len(data.grid))
        a = quadratic_form(data, c1, c2)
        b = quadratic_form(data, c2, c1)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    op = assemble(data, 256)
    K = op.K.toarray()
    worst = max(worst, float(np.max(np.abs(K - K.T))) / float(np.max(np.abs(K))))
    return VerifyCheck("q-symmetry", worst <= 1e-12, worst, "relative symmetry defect of Q and K")


def _check_strongform() -> VerifyCheck:
    d = 3
    poly = lambda y: np.asarray(y, dtype=float) ** (d + 1)
    data = manufactured_sl_data(
        d, 1.5, 1.0, p_fn=poly, q_fn=lambda y: -poly(y), wgt_fn=poly, robin_weight=0.0
    )
    result = smallest_eigenpair(assemble(data, 512))
    manufactured = eigen_residual_strongform(data, result).interior_norm
    ok = manufactured <= 1e-8 and abs(result.mu_star + 1.0) <= 1e-10

    profile = integrate_gas_profile(StarConfig(3, 1.4, 10.0), tol=1e-10, r_max=50.0, stop_at_liquid=True)
    star_data = build_sl_data(profile)
    norms = {}
    for mesh in (512, 1024):
        res = smallest_eigenpair(assemble(star_data, mesh))
        norms[mesh] = eigen_residual_strongform(star_data, res).interior_norm
    ok = ok and norms[1024] <= 0.5 * norms[512] * 1.05
    return VerifyCheck(
        "strongform", ok, manufactured, "manufactured eigenpair residual and refinement decay"
    )


_CHECKS: Tuple[Tuple[str, Callable[[], VerifyCheck]], ...] = (
    ("explicit", _check_explicit),
    ("pohozaev", _check_pohozaev),
    ("decay", _check_decay),
    ("buchdahl", _check_buchdahl),
    ("singular", _check_singular),
    ("fixed-point", _check_fixed_point),
    ("tail", _check_tail),
    ("radius-limit", _check_radius_limit),
    ("q-symmetry", _check_q_symmetry),
    ("strongform", _check_strongform),
)


def verify_suite(selection: str = "all") -> dict:
    """Run the named analytic checks (or all) and return a machine-readable report."""
    names = [n for n, _ in _CHECKS]
    if selection != "all" and selection not in names:
        raise ValueError(f"unknown suite {selection!r}; choose from {['all'] + names}")
    checks = []
    for name, fn in _CHECKS:
        if selection in ("all", name):
            checks.append(fn())
    return {
        "passed": bool(all(c.passed for c in checks)),
        "checks": [
            {"name": c.name, "passed": bool(c.passed), "measure": float(c.measure), "detail": c.detail}
            for c in checks
        ],
    }


def report_json(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"
