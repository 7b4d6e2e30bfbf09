"""Radial steady-state profiles of self-gravitating polytropes.

The hydrostatic balance of a polytrope in dimension d reduces to a second
order ODE for the enthalpy variable (w = rho^(gamma-1) for gamma > 1,
h = ln rho at gamma = 1):

    w'' + (d-1)/r w' = -4 pi (gamma-1)/gamma w^alpha,   alpha = 1/(gamma-1)
    h'' + (d-1)/r h' = -4 pi e^h

Integration is done on the equivalent first-order integral form

    w'(r) = -((gamma-1)/gamma) m(r) / r^(d-1),    m' = 4 pi r^(d-1) rho,

(h'(r) = -m(r)/r^(d-1) at gamma = 1), with the cumulative mass m carried as
a state variable, so the enthalpy slope is always consistent with the mass.

A "liquid" star is the gas solution cut at the radius R where rho = 1; it
exists iff rho(0) > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, TextIO

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .config import StarConfig, support_threshold

FOUR_PI = 4.0 * math.pi

GAS = "gas"
LIQUID_TRUNCATED = "liquid-truncated"

COMPACT = "compact"
INFINITE = "infinite"

# 5-point Gauss-Legendre rule on [-1, 1], used for cumulative integrals
_GAUSS5_X = np.array(
    [-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640]
)
_GAUSS5_W = np.array(
    [0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891]
)


@dataclass(frozen=True)
class Profile:
    """Sampled radial profile of one star.

    radii starts at 0 and is strictly increasing; rho is strictly decreasing
    with rho[0] = rho_center; mass is the cumulative mass m(r); enthalpy holds
    w (gamma > 1) or h (gamma = 1) depending on config.  liquid_radius is the
    radius where rho = 1 (present iff rho_center > 1 and the grid reaches it);
    gas_radius is the compact-support surface where rho hits 0, if reached.
    """

    config: StarConfig
    radii: np.ndarray
    rho: np.ndarray
    enthalpy: np.ndarray
    mass: np.ndarray
    kind: str = GAS
    liquid_radius: Optional[float] = None
    gas_radius: Optional[float] = None

    def __post_init__(self):
        for name in ("radii", "rho", "enthalpy", "mass"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        r = self.radii
        if r.ndim != 1 or r.size < 2:
            raise ValueError("profile needs a 1-D grid with at least two radii")
        if r[0] != 0.0:
            raise ValueError("profile grid must start at r = 0")
        if not np.all(np.diff(r) > 0):
            raise ValueError("profile radii must be strictly increasing")
        for name in ("rho", "enthalpy", "mass"):
            a = getattr(self, name)
            if a.shape != r.shape:
                raise ValueError(f"{name} must match the grid shape")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite values in {name}")
        if self.rho[0] != self.config.rho_center:
            raise ValueError("rho[0] must equal config.rho_center")
        if self.mass[0] != 0.0:
            raise ValueError("mass must vanish at the center")
        if not np.all(np.diff(self.rho) < 0):
            raise ValueError("density must be strictly decreasing")
        if not np.all(np.diff(self.mass) > 0):
            raise ValueError("mass must be strictly increasing")

    @property
    def r_end(self) -> float:
        return float(self.radii[-1])

    @property
    def total_mass(self) -> float:
        """Mass inside the liquid radius if present, else inside the full grid."""
        if self.liquid_radius is not None:
            return float(self.mass_at(self.liquid_radius))
        return float(self.mass[-1])

    @cached_property
    def _enthalpy_interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.radii, self.enthalpy, extrapolate=False)

    @cached_property
    def _mass_hat_interp(self) -> PchipInterpolator:
        # interpolate m(r)/r^d, which tends to (4 pi / d) rho0 at the center,
        # so that the polynomial factor r^d never has to be resolved by the fit
        r = self.radii
        mhat = np.empty_like(r)
        mhat[0] = FOUR_PI / self.config.d * self.config.rho_center
        mhat[1:] = self.mass[1:] / r[1:] ** self.config.d
        return PchipInterpolator(r, mhat, extrapolate=False)

    def _check_range(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.radii[-1]):
            raise ValueError(f"radius outside the profile grid [0, {self.radii[-1]:g}]")
        return r

    def enthalpy_at(self, r):
        r = self._check_range(r)
        return self._enthalpy_interp(r)

    def rho_at(self, r):
        return self.config.rho_of_enthalpy(self.enthalpy_at(r))

    def mass_at(self, r):
        r = self._check_range(r)
        return self._mass_hat_interp(r) * r ** self.config.d


def _seed_coefficients(config: StarConfig):
    """Leading Taylor data at the center for the enthalpy ODE.

    Returns (e0, b, e4, rho2): enthalpy ~ e0 + b r^2 + e4 r^4 and
    rho ~ rho0 + rho2 r^2, accurate to O(r^6)/O(r^4) respectively.
    """
    d, rho0 = config.d, config.rho_center
    if config.isothermal:
        c = 1.0
        e0 = math.log(rho0)
        gprime = rho0                      # derivative of e^h at h0
        rho2_over_b = rho0
    else:
        c = (config.gamma - 1.0) / config.gamma
        e0 = config.enthalpy_center
        gprime = config.alpha * rho0 / e0  # derivative of w^alpha at w0
        rho2_over_b = config.alpha * rho0 / e0
    b = -(2.0 * math.pi / d) * c * rho0
    e4 = -math.pi * c * b * gprime / (d + 2)
    return e0, b, e4, rho2_over_b * b


def _refined_grid(steps: np.ndarray, n_target: int) -> np.ndarray:
    """Subdivide integrator steps (at least 4x, by length beyond that) to ~n_target points."""
    total = steps[-1] - steps[0]
    if total <= 0:
        return steps
    pieces = [np.array([steps[0]])]
    quantum = total / max(n_target, 1)
    for a, b in zip(steps[:-1], steps[1:]):
        n = max(4, int(math.ceil((b - a) / quantum)))
        pieces.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(pieces)


def integrate_gas_profile(
    config: StarConfig,
    tol: float = 1e-10,
    r_max: float = 50.0,
    *,
    min_points: int = 2048,
    stop_at_liquid: bool = False,
) -> Profile:
    """Integrate the gas steady state outward from the center.

    Integration halts at r_max, at the compact-support surface (w crossing 0,
    recorded as gas_radius), or at an enthalpy underflow guard.  When
    rho_center > 1 the crossing rho = 1 is located by the integrator's event
    root-finder and stored as liquid_radius (terminal if stop_at_liquid).

    tol is the delivered relative accuracy of the profile; the embedded
    Runge-Kutta pair runs at a 20x stricter per-step tolerance to absorb
    global error growth.  The grid is the adaptive steps refined to at least
    min_points samples.
    """
    if not (tol > 0.0 and math.isfinite(tol)):
        raise ValueError(f"tol must be positive, got {tol}")
    if not (r_max > 0.0 and math.isfinite(r_max)):
        raise ValueError(f"r_max must be positive and finite, got {r_max}")
    d, rho0 = config.d, config.rho_center
    e0, b, e4, rho2 = _seed_coefficients(config)

    # leave the removable 1/r^(d-1) singularity with a Taylor seed
    scale = math.sqrt((1.0 if config.isothermal else e0) / abs(b))
    r0 = 1e-2 * scale
    if rho0 > 1.0:
        gap = e0 - config.boundary_enthalpy
        r0 = min(r0, 1e-3 * math.sqrt(gap / abs(b)))
    r0 = min(r0, 1e-3 * r_max)
    e_seed = e0 + b * r0**2 + e4 * r0**4
    m_seed = FOUR_PI * (rho0 * r0**d / d + rho2 * r0 ** (d + 2) / (d + 2))

    if config.isothermal:

        def rhs(r, y):
            return (-y[1] / r ** (d - 1), FOUR_PI * r ** (d - 1) * math.exp(y[0]))

    else:
        cg = (config.gamma - 1.0) / config.gamma
        alpha = config.alpha

        def rhs(r, y):
            w = y[0]
            rho = w**alpha if w > 0.0 else 0.0
            return (-cg * y[1] / r ** (d - 1), FOUR_PI * r ** (d - 1) * rho)

    events = []

    def ev_liquid(r, y):
        return y[0] - config.boundary_enthalpy

    ev_liquid.terminal = bool(stop_at_liquid)
    ev_liquid.direction = -1
    if rho0 > 1.0:
        events.append(ev_liquid)

    def ev_surface(r, y):
        return y[0]

    ev_surface.terminal = True
    ev_surface.direction = -1
    if not config.isothermal:
        events.append(ev_surface)

    def ev_floor(r, y):
        return y[0] + 660.0

    ev_floor.terminal = True
    ev_floor.direction = -1
    if config.isothermal:
        events.append(ev_floor)

    sol = solve_ivp(
        rhs,
        (r0, r_max),
        (e_seed, m_seed),
        method="DOP853",
        rtol=0.05 * tol,
        atol=1e-300,
        dense_output=True,
        events=events,
    )
    if sol.status < 0 or not np.all(np.isfinite(sol.y)):
        raise RuntimeError(
            f"integration failed for {config}: {sol.message} "
            "(tolerance too loose or r_max too aggressive)"
        )

    liquid_r = None
    gas_r = None
    if rho0 > 1.0 and len(sol.t_events[0]):
        liquid_r = float(sol.t_events[0][0])
    if not config.isothermal:
        idx = 1 if rho0 > 1.0 else 0
        if len(sol.t_events[idx]):
            gas_r = float(sol.t_events[idx][0])

    grid = _refined_grid(sol.t, min_points)
    extra = [x for x in (liquid_r, gas_r) if x is not None and x < grid[-1]]
    if extra:
        grid = np.unique(np.concatenate([grid, np.array(extra)]))
    enth, mass = sol.sol(grid)
    if gas_r is not None and grid[-1] >= gas_r:
        enth[-1] = 0.0  # surface: w = 0 exactly

    # sample the Taylor seed inside (0, r0) so the interpolants see the curvature
    r_in = r0 * np.array([0.25, 0.5, 0.75])
    e_in = e0 + b * r_in**2 + e4 * r_in**4
    m_in = FOUR_PI * (rho0 * r_in**d / d + rho2 * r_in ** (d + 2) / (d + 2))

    radii = np.concatenate([[0.0], r_in, grid])
    enth = np.concatenate([[e0], e_in, enth])
    mass = np.concatenate([[0.0], m_in, mass])
    rho = config.rho_of_enthalpy(enth)
    rho[0] = rho0

    keep = np.concatenate([[True], np.diff(radii) > 0])
    radii, rho, enth, mass = radii[keep], rho[keep], enth[keep], mass[keep]

    return Profile(
        config=config,
        radii=radii,
        rho=rho,
        enthalpy=enth,
        mass=mass,
        kind=GAS,
        liquid_radius=liquid_r,
        gas_radius=gas_r,
    )


def liquid_radius(profile: Profile) -> float:
    """Radius R where rho(R) = 1, located to root-finding accuracy.

    Uses the radius recorded by the integrator when available; otherwise
    brackets rho - 1 between adjacent grid samples and refines with a
    safeguarded bisection/inverse-quadratic hybrid on the interpolant.
    """
    config = profile.config
    if config.rho_center <= 1.0:
        raise ValueError(
            f"no liquid truncation exists: rho_center = {config.rho_center} <= 1"
        )
    if profile.liquid_radius is not None:
        return float(profile.liquid_radius)
    target = config.boundary_enthalpy
    below = np.nonzero(profile.enthalpy < target)[0]
    if len(below) == 0:
        raise RuntimeError(
            "profile too short: grid ends before rho reaches 1 (increase r_max)"
        )
    i = below[0]
    if i == 0:
        raise RuntimeError("profile starts below the boundary density")
    f = lambda r: float(profile.enthalpy_at(r)) - target
    return float(brentq(f, profile.radii[i - 1], profile.radii[i], xtol=1e-15))


def truncate_liquid(profile: Profile) -> Profile:
    """Cut a gas profile at rho = 1, yielding the liquid star on [0, R]."""
    R = liquid_radius(profile)
    keep = profile.radii < R
    radii = np.concatenate([profile.radii[keep], [R]])
    rho = np.concatenate([profile.rho[keep], [1.0]])
    enth = np.concatenate([profile.enthalpy[keep], [profile.config.boundary_enthalpy]])
    mass = np.concatenate([profile.mass[keep], [float(profile.mass_at(R))]])
    return Profile(
        config=profile.config,
        radii=radii,
        rho=rho,
        enthalpy=enth,
        mass=mass,
        kind=LIQUID_TRUNCATED,
        liquid_radius=R,
    )


def decay_bound(config: StarConfig, r) -> np.ndarray:
    """Pointwise upper bound on the density of any steady state.

    Branches: gamma = 2 gives rho0 exp(-(2 pi / (d gamma)) r^2); gamma = 1
    gives 1/(1/rho0 + (2 pi / d) r^2); otherwise
    (rho0^-(2-gamma) + (2 pi / d)((2-gamma)/gamma) r^2)^(-1/(2-gamma)).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("radius must be non-negative")
    d, g, rho0 = config.d, config.gamma, config.rho_center
    if g == 2.0:
        return rho0 * np.exp(-(2.0 * math.pi / (d * g)) * r**2)
    if g == 1.0:
        return 1.0 / (1.0 / rho0 + (2.0 * math.pi / d) * r**2)
    # (rho0^-(2-g) + (2 pi / d)((2-g)/g) r^2)^(-1/(2-g)), written through
    # expm1/log1p so it stays exact as gamma approaches 2
    eps = 2.0 - g
    shift = np.expm1(-eps * math.log(rho0)) + (2.0 * math.pi / d) * (eps / g) * r**2
    return np.exp(-np.log1p(shift) / eps)


def _cumulative_gauss(radii: np.ndarray, f: Callable) -> np.ndarray:
    """Cumulative integral of f over [0, r_i] with 5-point Gauss per interval."""
    a, b = radii[:-1], radii[1:]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * _GAUSS5_X[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    per_interval = half * (vals * _GAUSS5_W[None, :]).sum(axis=1)
    out = np.zeros_like(radii)
    np.cumsum(per_interval, out=out[1:])
    return out


def _gauss_segment(f: Callable, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b) + half * _GAUSS5_X
    return half * float(np.dot(f(pts), _GAUSS5_W))


def pohozaev_residual(profile: Profile, r) -> np.ndarray:
    """Defect of the exact integral identity satisfied by steady states.

    For gamma > 1 the identity balances the cumulative integral of
    w^(alpha+1) y^(d-1) against boundary terms built from w and w' at r; at
    gamma = 1 it reduces to the mass relation -m(r) = h'(r) r^(d-1).  The
    residual is normalized by the largest participating term, so a correct
    profile yields values at the quadrature/integration error level.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    profile._check_range(r_arr)
    config = profile.config
    d = config.d

    if config.isothermal:
        integrand = lambda y: profile.rho_at(y) * y ** (d - 1)
    else:
        ap1 = config.alpha + 1.0
        integrand = lambda y: np.maximum(profile.enthalpy_at(y), 0.0) ** ap1 * y ** (d - 1)

    cum = _cumulative_gauss(profile.radii, integrand)
    cum_interp_idx = np.searchsorted(profile.radii, r_arr, side="right") - 1
    integral = np.empty_like(r_arr)
    for k, (rv, i) in enumerate(zip(r_arr, cum_interp_idx)):
        integral[k] = cum[i]
        if rv > profile.radii[i]:
            integral[k] += _gauss_segment(integrand, profile.radii[i], rv)

    m_r = np.asarray(profile.mass_at(r_arr), dtype=float)
    out = np.empty_like(r_arr)
    for k, rv in enumerate(r_arr):
        if rv == 0.0:
            out[k] = 0.0
            continue
        if config.isothermal:
            lhs = -FOUR_PI * integral[k]
            rhs = -m_r[k]  # h'(r) r^(d-1) via the mass identity
            scale = max(abs(lhs), abs(rhs))
            out[k] = (lhs - rhs) / scale if scale > 0 else 0.0
        else:
            g = config.gamma
            cg = (g - 1.0) / g
            alpha = config.alpha
            w = float(np.maximum(profile.enthalpy_at(rv), 0.0))
            wprime = -cg * m_r[k] / rv ** (d - 1)
            lhs = 2.0 * math.pi * cg * (2.0 * d / (1.0 + alpha) - (d - 2.0)) * integral[k]
            t1 = 0.5 * wprime**2 * rv**d
            t2 = FOUR_PI * cg**2 * w ** (alpha + 1.0) * rv**d
            t3 = 0.5 * (d - 2.0) * wprime * w * rv ** (d - 1)
            scale = max(abs(lhs), abs(t1), abs(t2), abs(t3))
            out[k] = (lhs - (t1 + t2 + t3)) / scale if scale > 0 else 0.0
    return out if np.ndim(r) else float(out[0])


def classify_support(d: int, gamma: float) -> str:
    """COMPACT iff gamma > 2d/(d+2), INFINITE otherwise (gas stars)."""
    StarConfig(d, gamma, 1.0)  # validate ranges
    return COMPACT if gamma > support_threshold(d) else INFINITE


def scale_profile(profile: Profile, kappa: float) -> Profile:
    """Rescaled steady state rho_k(r) = kappa rho(kappa^(1-gamma/2) r).

    The mass transforms as m_k(r) = kappa^(1-d(1-gamma/2)) m(kappa^(1-gamma/2) r).
    The liquid radius of the scaled star, kappa^-(1-gamma/2) rho^-1(1/kappa),
    is resolved when kappa rho0 > 1 and the base grid reaches density 1/kappa.
    """
    if not (kappa > 0.0 and math.isfinite(kappa)):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    if profile.kind != GAS:
        raise ValueError("only gas profiles can be rescaled")
    config = profile.config
    g = config.gamma
    lam = kappa ** (1.0 - g / 2.0)  # radius contraction factor
    new_config = StarConfig(config.d, g, kappa * config.rho_center)
    radii = profile.radii / lam
    rho = kappa * profile.rho
    mass = kappa ** (1.0 - config.d * (1.0 - g / 2.0)) * profile.mass
    if config.isothermal:
        enth = profile.enthalpy + math.log(kappa)
    else:
        enth = kappa ** (g - 1.0) * profile.enthalpy

    liquid_r = None
    if kappa * config.rho_center > 1.0:
        target = config.enthalpy_of_rho(1.0 / kappa)
        below = np.nonzero(profile.enthalpy < target)[0]
        if len(below) and below[0] > 0:
            i = below[0]
            f = lambda rr: float(profile.enthalpy_at(rr)) - target
            base_r = brentq(f, profile.radii[i - 1], profile.radii[i], xtol=1e-15)
            liquid_r = float(base_r / lam)
        elif kappa == 1.0:
            liquid_r = profile.liquid_radius
    gas_r = None if profile.gas_radius is None else profile.gas_radius / lam

    rho_arr = np.asarray(rho, dtype=float).copy()
    rho_arr[0] = new_config.rho_center
    return Profile(
        config=new_config,
        radii=radii,
        rho=rho_arr,
        enthalpy=np.asarray(enth, dtype=float),
        mass=mass,
        kind=GAS,
        liquid_radius=liquid_r,
        gas_radius=gas_r,
    )


@dataclass(frozen=True)
class ClosedFormStar:
    """An exact steady state known in closed form.

    variant "singular": rho = amplitude * r^exponent on (0, inf), valid when
    2(d-1) - d gamma >= 0.  variant "critical-explicit": the bounded solution
    at gamma = 2d/(d+2) with central density `amplitude`; `radius` is its
    liquid radius when amplitude >= 1.
    """

    variant: str
    d: int
    gamma: float
    amplitude: float
    exponent: Optional[float] = None
    radius: Optional[float] = None

    def rho_at(self, r):
        r = np.asarray(r, dtype=float)
        if self.variant == "singular":
            return self.amplitude * r**self.exponent
        q = (2.0 * math.pi / self.d**2) * self.amplitude ** (4.0 / (self.d + 2.0))
        return self.amplitude * (1.0 + q * r**2) ** (-1.0 - self.d / 2.0)

    def mass_at(self, r):
        r = np.asarray(r, dtype=float)
        d = self.d
        if self.variant == "singular":
            s = d + self.exponent  # d - 2/(2-gamma) > 0 in the admissible range
            return FOUR_PI * self.amplitude / s * r**s
        q = (2.0 * math.pi / d**2) * self.amplitude ** (4.0 / (d + 2.0))
        return (FOUR_PI / d) * self.amplitude * r**d * (1.0 + q * r**2) ** (-d / 2.0)

    def ode_residual(self, r) -> float:
        """Steady-state ODE defect at radius r, normalized by the largest term."""
        r = float(r)
        if r <= 0.0:
            raise ValueError("residual is evaluated at r > 0")
        d, g = self.d, self.gamma
        if self.variant == "singular" and g == 1.0:
            h1 = -2.0 / r  # h = ln A - 2 ln r
            t1, t2 = 2.0 / r**2, (d - 1.0) / r * h1
            t3 = FOUR_PI * self.amplitude * r**-2.0
            return (t1 + t2 + t3) / max(abs(t1), abs(t2), abs(t3))
        cg = (g - 1.0) / g
        alpha = 1.0 / (g - 1.0)
        if self.variant == "singular":
            s = self.exponent * (g - 1.0)  # power of r in w
            B = self.amplitude ** (g - 1.0)
            t1 = B * s * (s - 1.0) * r ** (s - 2.0)
            t2 = (d - 1.0) * B * s * r ** (s - 2.0)
            t3 = FOUR_PI * cg * B**alpha * r ** (s * alpha)
        else:
            q = (2.0 * math.pi / d**2) * self.amplitude ** (4.0 / (d + 2.0))
            Aw = self.amplitude ** ((d - 2.0) / (d + 2.0))
            a = 1.0 - d / 2.0
            base = 1.0 + q * r**2
            w1 = Aw * a * 2.0 * q * r * base ** (a - 1.0)
            w2 = Aw * a * 2.0 * q * (base ** (a - 1.0) + (a - 1.0) * 2.0 * q * r**2 * base ** (a - 2.0))
            t1, t2 = w2, (d - 1.0) / r * w1
            t3 = FOUR_PI * cg * (Aw * base**a) ** alpha
        return (t1 + t2 + t3) / max(abs(t1), abs(t2), abs(t3))

    def to_profile(self, radii) -> Profile:
        """Sample the critical-explicit solution into a Profile (grid must start at 0)."""
        if self.variant != "critical-explicit":
            raise ValueError("only the critical-explicit variant is bounded at r = 0")
        radii = np.asarray(radii, dtype=float)
        config = StarConfig(self.d, self.gamma, self.amplitude)
        rho = self.rho_at(radii)
        rho[0] = config.rho_center
        liquid_r = None
        if self.radius is not None and 0.0 < self.radius <= radii[-1]:
            liquid_r = self.radius
        return Profile(
            config=config,
            radii=radii,
            rho=rho,
            enthalpy=config.enthalpy_of_rho(rho),
            mass=self.mass_at(radii),
            kind=GAS,
            liquid_radius=liquid_r,
        )


def singular_star(d: int, gamma: float) -> ClosedFormStar:
    """The scale-invariant power-law solution rho = A r^(-2/(2-gamma)).

    Exists iff 2(d-1) - d gamma >= 0, with
    A = ((1/2pi)(-d gamma^2 + 2(d-1) gamma)/(2-gamma)^2)^(1/(2-gamma)).
    """
    StarConfig(d, gamma, 1.0)
    disc = 2.0 * (d - 1.0) - d * gamma
    if disc < 0.0:
        raise ValueError(
            f"no singular power-law solution: 2(d-1) - d*gamma = {disc:g} < 0"
        )
    base = (-d * gamma**2 + 2.0 * (d - 1.0) * gamma) / (2.0 * math.pi * (2.0 - gamma) ** 2)
    amplitude = base ** (1.0 / (2.0 - gamma))
    return ClosedFormStar(
        variant="singular",
        d=d,
        gamma=gamma,
        amplitude=amplitude,
        exponent=-2.0 / (2.0 - gamma),
    )


def explicit_profile_critical(d: int, C: float) -> ClosedFormStar:
    """Closed-form star at the critical index gamma = 2d/(d+2).

    rho(r) = C (1 + (2 pi / d^2) C^(4/(d+2)) r^2)^(-1-d/2); the liquid radius
    R = ((d^2/2pi) C^(-4/(d+2)) (C^(2/(d+2)) - 1))^(1/2) exists for C >= 1.
    """
    gamma = support_threshold(d)
    if not (C > 0.0 and math.isfinite(C)):
        raise ValueError(f"central density must be positive, got {C}")
    StarConfig(d, gamma, C)
    radius = None
    if C >= 1.0:
        radius = math.sqrt(
            d**2 / (2.0 * math.pi) * C ** (-4.0 / (d + 2.0)) * (C ** (2.0 / (d + 2.0)) - 1.0)
        )
    return ClosedFormStar(
        variant="critical-explicit", d=d, gamma=gamma, amplitude=C, radius=radius
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_profile_csv(profile: Profile, out: TextIO) -> None:
    """Emit the profile as CSV: one metadata line, then r,rho,enthalpy,mass rows."""
    R = profile.liquid_radius
    meta = (
        f"# d={profile.config.d} gamma={_fmt(profile.config.gamma)}"
        f" rho0={_fmt(profile.config.rho_center)}"
        f" R={_fmt(R) if R is not None else 'nan'}"
        f" M={_fmt(profile.total_mass)}"
        f" kind={profile.kind}"
    )
    if profile.gas_radius is not None:
        meta += f" Rgas={_fmt(profile.gas_radius)}"
    out.write(meta + "\n")
    out.write("r,rho,enthalpy,mass\n")
    for r, rho, w, m in zip(profile.radii, profile.rho, profile.enthalpy, profile.mass):
        out.write(f"{_fmt(r)},{_fmt(rho)},{_fmt(w)},{_fmt(m)}\n")


def read_profile_csv(src: TextIO) -> Profile:
    """Rebuild a Profile from the CSV emitted by write_profile_csv."""
    meta = {}
    header = None
    rows = []
    for line in src:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        if header is None:
            header = line
            if header != "r,rho,enthalpy,mass":
                raise ValueError(f"unexpected CSV header: {header!r}")
            continue
        rows.append([float(t) for t in line.split(",")])
    if header is None or not rows:
        raise ValueError("no profile data found")
    arr = np.array(rows, dtype=float)
    config = StarConfig(int(meta["d"]), float(meta["gamma"]), float(meta["rho0"]))
    R = float(meta.get("R", "nan"))
    gas_r = float(meta["Rgas"]) if "Rgas" in meta else None
    return Profile(
        config=config,
        radii=arr[:, 0],
        rho=arr[:, 1],
        enthalpy=arr[:, 2],
        mass=arr[:, 3],
        kind=meta.get("kind", GAS),
        liquid_radius=None if math.isnan(R) else R,
        gas_radius=gas_r,
    )
