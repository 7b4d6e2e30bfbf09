"""Radial-perturbation eigenproblem for a liquid star and its sign analysis.

A liquid equilibrium on [0, R] perturbed radially admits separated modes
chi(y) e^(lambda t) governed by a Sturm-Liouville pencil in weak form

    Q[chi, phi] = mu <chi, phi>_wgt        for all phi,

    Q[f, g] = int_0^R p f' g' + q f g dy + robin_weight f(R) g(R),

with p = gamma rhobar^gamma y^(d+1), q = (2(d-1) - d gamma) y^d (rhobar^gamma)',
wgt = y^(d+1) rhobar, robin_weight = d gamma R^d.  The free-surface condition
d chi(R) + R chi'(R) = 0 is natural (it is the boundary term above), and no
condition is needed at y = 0 where p and wgt vanish like y^(d+1).  The star
is linearly unstable iff the smallest eigenvalue mu* is negative, with growth
rate sqrt(-mu*).

q is evaluated through the equilibrium identity y^d (rhobar^gamma)' =
-y rhobar m, which avoids numerical differentiation of the profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional, TextIO

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import csr_matrix, diags_array

from .config import stability_threshold, support_threshold
from .steady import Profile, liquid_radius

STABLE = "Stable"
UNSTABLE = "Unstable"

# 3-point Gauss-Legendre rule on [-1, 1] (element quadrature)
_GAUSS3_X = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GAUSS3_W = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])

MESH_GRADING = 1.5


@dataclass(frozen=True)
class SturmLiouvilleData:
    """Coefficients of the pencil on [0, R].

    p, q, weight hold samples on `grid` (the profile radii restricted to
    [0, R]); the private callables evaluate the same coefficients anywhere in
    [0, R] through the profile's monotone-cubic interpolants and are what the
    quadrature consumes.
    """

    d: int
    gamma: float
    R: float
    robin_weight: float
    grid: np.ndarray
    p: np.ndarray
    q: np.ndarray
    weight: np.ndarray
    p_fn: Callable
    q_fn: Callable
    wgt_fn: Callable
    profile: Optional[Profile] = None


def build_sl_data(profile: Profile) -> SturmLiouvilleData:
    """Assemble the pencil coefficients for a liquid-truncated profile."""
    config = profile.config
    R = liquid_radius(profile)
    d, g = config.d, config.gamma
    coef = 2.0 * (d - 1.0) - d * g

    def p_fn(y):
        y = np.asarray(y, dtype=float)
        return g * profile.rho_at(y) ** g * y ** (d + 1)

    def q_fn(y):
        y = np.asarray(y, dtype=float)
        return -coef * y * profile.rho_at(y) * profile.mass_at(y)

    def wgt_fn(y):
        y = np.asarray(y, dtype=float)
        return y ** (d + 1) * profile.rho_at(y)

    inside = profile.radii < R
    grid = np.concatenate([profile.radii[inside], [R]])
    return SturmLiouvilleData(
        d=d,
        gamma=g,
        R=float(R),
        robin_weight=d * g * R**d,
        grid=grid,
        p=p_fn(grid),
        q=q_fn(grid),
        weight=wgt_fn(grid),
        p_fn=p_fn,
        q_fn=q_fn,
        wgt_fn=wgt_fn,
        profile=profile,
    )


def manufactured_sl_data(
    d: int,
    gamma: float,
    R: float,
    p_fn: Callable,
    q_fn: Callable,
    wgt_fn: Callable,
    robin_weight: float = 0.0,
    n_grid: int = 257,
) -> SturmLiouvilleData:
    """Pencil with user-supplied coefficients (for oracles and manufactured modes)."""
    if robin_weight < 0.0:
        raise ValueError("robin_weight must be non-negative")
    grid = np.linspace(0.0, R, n_grid)
    return SturmLiouvilleData(
        d=d,
        gamma=gamma,
        R=float(R),
        robin_weight=float(robin_weight),
        grid=grid,
        p=p_fn(grid),
        q=q_fn(grid),
        weight=wgt_fn(grid),
        p_fn=p_fn,
        q_fn=q_fn,
        wgt_fn=wgt_fn,
    )


def graded_mesh(R: float, mesh_size: int) -> np.ndarray:
    """Nodes R (i/M)^1.5: clustered at the center where the weight degenerates."""
    return R * (np.arange(mesh_size + 1) / mesh_size) ** MESH_GRADING


@dataclass(frozen=True)
class DiscreteOperator:
    """Tridiagonal stiffness/mass pencil of the weak form on `nodes`.

    mu_lower is a certified lower bound on the smallest generalized
    eigenvalue, obtained from min(q/wgt) over the quadrature points (the p and
    boundary parts of K are positive semidefinite).
    """

    nodes: np.ndarray
    k_diag: np.ndarray
    k_off: np.ndarray
    m_diag: np.ndarray
    m_off: np.ndarray
    mu_lower: float

    @cached_property
    def K(self) -> csr_matrix:
        return diags_array(
            (self.k_off, self.k_diag, self.k_off), offsets=(-1, 0, 1)
        ).tocsr()

    @cached_property
    def Mw(self) -> csr_matrix:
        return diags_array(
            (self.m_off, self.m_diag, self.m_off), offsets=(-1, 0, 1)
        ).tocsr()

    def apply_K(self, x: np.ndarray) -> np.ndarray:
        out = self.k_diag * x
        out[:-1] += self.k_off * x[1:]
        out[1:] += self.k_off * x[:-1]
        return out

    def apply_Mw(self, x: np.ndarray) -> np.ndarray:
        out = self.m_diag * x
        out[:-1] += self.m_off * x[1:]
        out[1:] += self.m_off * x[:-1]
        return out

    def rayleigh(self, x: np.ndarray) -> float:
        return float(x @ self.apply_K(x)) / float(x @ self.apply_Mw(x))


def _element_quadrature(data: SturmLiouvilleData, nodes: np.ndarray):
    """Coefficient values and P1 basis data at the per-element Gauss points."""
    yl, yr = nodes[:-1], nodes[1:]
    h = yr - yl
    if np.any(h <= 0.0):
        raise ValueError("degenerate mesh: nodes must be strictly increasing")
    pts = 0.5 * (yl + yr)[:, None] + 0.5 * h[:, None] * _GAUSS3_X[None, :]
    wq = 0.5 * h[:, None] * _GAUSS3_W[None, :]
    flat = pts.ravel()
    p = data.p_fn(flat).reshape(pts.shape)
    q = data.q_fn(flat).reshape(pts.shape)
    wgt = data.wgt_fn(flat).reshape(pts.shape)
    phi_l = (yr[:, None] - pts) / h[:, None]
    phi_r = (pts - yl[:, None]) / h[:, None]
    return h, wq, p, q, wgt, phi_l, phi_r


def assemble(data: SturmLiouvilleData, mesh_size: int) -> DiscreteOperator:
    """Weak-form stiffness and weighted mass on the graded mesh.

    K_ij = Q[phi_i, phi_j] and Mw_ij = <phi_i, phi_j>_wgt over the continuous
    piecewise-linear nodal basis; the boundary term robin_weight lands on the
    last diagonal entry and no essential condition is imposed anywhere.
    """
    if mesh_size < 16:
        raise ValueError(f"mesh_size must be >= 16, got {mesh_size}")
    nodes = graded_mesh(data.R, mesh_size)
    h, wq, p, q, wgt, phi_l, phi_r = _element_quadrature(data, nodes)
    int_p = (p * wq).sum(axis=1)

    n = mesh_size + 1
    k_diag = np.zeros(n)
    k_off = np.zeros(n - 1)
    m_diag = np.zeros(n)
    m_off = np.zeros(n - 1)
    k_diag[:-1] += int_p / h**2 + (q * phi_l**2 * wq).sum(axis=1)
    k_diag[1:] += int_p / h**2 + (q * phi_r**2 * wq).sum(axis=1)
    k_off[:] = -int_p / h**2 + (q * phi_l * phi_r * wq).sum(axis=1)
    m_diag[:-1] += (wgt * phi_l**2 * wq).sum(axis=1)
    m_diag[1:] += (wgt * phi_r**2 * wq).sum(axis=1)
    m_off[:] = (wgt * phi_l * phi_r * wq).sum(axis=1)
    k_diag[-1] += data.robin_weight

    ratio = q / wgt
    mu_lower = min(0.0, float(ratio.min()))
    mu_lower = mu_lower * (1.0 + 1e-12) - 1e-300
    return DiscreteOperator(
        nodes=nodes,
        k_diag=k_diag,
        k_off=k_off,
        m_diag=m_diag,
        m_off=m_off,
        mu_lower=mu_lower,
    )


def quadratic_form(data: SturmLiouvilleData, chi1, chi2, nodes: Optional[np.ndarray] = None) -> float:
    """Q[chi1, chi2] by elementwise Gauss quadrature of the P1 interpolants.

    chi1, chi2 are samples on `nodes` (default: the coefficient grid).
    """
    if nodes is None:
        nodes = data.grid
    chi1 = np.asarray(chi1, dtype=float)
    chi2 = np.asarray(chi2, dtype=float)
    if chi1.shape != nodes.shape or chi2.shape != nodes.shape:
        raise ValueError("mesh mismatch: test functions must be sampled on the nodes")
    if not np.all(np.isfinite(chi1)) or not np.all(np.isfinite(chi2)):
        raise ValueError("test functions must be finite")
    h, wq, p, q, wgt, phi_l, phi_r = _element_quadrature(data, nodes)
    d1 = np.diff(chi1) / h
    d2 = np.diff(chi2) / h
    v1 = chi1[:-1][:, None] * phi_l + chi1[1:][:, None] * phi_r
    v2 = chi2[:-1][:, None] * phi_l + chi2[1:][:, None] * phi_r
    grad_term = float(((p * wq).sum(axis=1) * d1 * d2).sum())
    pot_term = float((q * v1 * v2 * wq).sum())
    return grad_term + pot_term + data.robin_weight * float(chi1[-1] * chi2[-1])


def weighted_norm_sq(data: SturmLiouvilleData, chi, nodes: Optional[np.ndarray] = None) -> float:
    """<chi, chi>_wgt by the same quadrature as quadratic_form."""
    if nodes is None:
        nodes = data.grid
    chi = np.asarray(chi, dtype=float)
    if chi.shape != nodes.shape:
        raise ValueError("mesh mismatch: test function must be sampled on the nodes")
    h, wq, p, q, wgt, phi_l, phi_r = _element_quadrature(data, nodes)
    v = chi[:-1][:, None] * phi_l + chi[1:][:, None] * phi_r
    return float((wgt * v**2 * wq).sum())


@dataclass(frozen=True)
class SpectralResult:
    """Smallest eigenpair of the discrete pencil and the stability verdict."""

    mu_star: float
    chi_star: np.ndarray
    nodes: np.ndarray
    lam: Optional[float]
    verdict: str
    marginal: bool
    mesh_size: int
    residual: float
    robin_defect: float


def _pencil_inertia(kd, ke, md, me, sigma: float) -> int:
    """Number of generalized eigenvalues below sigma (Sturm count on K - sigma Mw)."""
    a = kd - sigma * md
    bsq = (ke - sigma * me) ** 2
    a_list = a.tolist()
    b_list = bsq.tolist()
    count = 0
    dv = a_list[0]
    if dv == 0.0:
        dv = -1e-300
    if dv < 0.0:
        count += 1
    for i in range(1, len(a_list)):
        dv = a_list[i] - b_list[i - 1] / dv
        if dv == 0.0:
            dv = -1e-300
        elif dv > 1e290:
            dv = 1e290
        elif dv < -1e290:
            dv = -1e290
        if dv < 0.0:
            count += 1
    return count


def smallest_eigenpair(op: DiscreteOperator, tol_eig: float = 1e-8) -> SpectralResult:
    """Smallest generalized eigenvalue by inertia bisection, then inverse iteration.

    The bisection brackets mu* between the certified lower bound and the
    Rayleigh quotient of the constant vector, halving until machine width, so
    the reported mu* is certified by inertia counts.  Inverse iteration with
    the shift at the bracket's lower edge recovers the eigenvector, normalized
    to unit weighted norm with a deterministic sign; its residual is accepted
    once ||K chi - mu Mw chi|| <= tol_eig * spectral_scale * ||Mw chi||, where
    spectral_scale is a Gershgorin bound on the pencil spectrum (the level a
    backward-stable solve can achieve regardless of |mu*|).  The verdict is
    Unstable iff mu* < -margin with margin = tol_eig * max(|mu*|, |RQ(1)|);
    |mu*| <= margin reports Stable with the marginal flag set.
    """
    if not (tol_eig > 0.0):
        raise ValueError("tol_eig must be positive")
    n = len(op.k_diag)
    ones = np.ones(n)
    rq_ones = op.rayleigh(ones)

    # symmetric Jacobi scaling: the weight degenerates like y^(d+1) at the
    # center, so the raw pencil spans hundreds of orders of magnitude; the
    # congruence (D K D, D M D) with D = diag(m_diag^-1/2) preserves the
    # eigenvalues and inertia while making the banded solves well-scaled
    s = 1.0 / np.sqrt(op.m_diag)
    kd = op.k_diag * s * s
    ke = op.k_off * s[:-1] * s[1:]
    md = np.ones(n)
    me = op.m_off * s[:-1] * s[1:]

    def apply_k(x):
        out = kd * x
        out[:-1] += ke * x[1:]
        out[1:] += ke * x[:-1]
        return out

    def apply_m(x):
        out = md * x
        out[:-1] += me * x[1:]
        out[1:] += me * x[:-1]
        return out

    lo = op.mu_lower
    hi = rq_ones + abs(rq_ones) * 1e-12 + 1e-300
    guard = 0
    while _pencil_inertia(kd, ke, md, me, lo) > 0:
        lo -= max(1.0, abs(lo))
        guard += 1
        if guard > 60:
            raise RuntimeError("eigensolver failed to certify a lower bound")
    if lo >= hi:
        lo = hi - max(abs(hi) * 1e-12, 1e-300)
    for _ in range(140):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        if _pencil_inertia(kd, ke, md, me, mid) >= 1:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)

    # Gershgorin bound on the scaled pencil spectrum: eigenvector residuals
    # can be driven to tol_eig relative to this scale, but no further
    row_sum = np.abs(kd).copy()
    row_sum[:-1] += np.abs(ke)
    row_sum[1:] += np.abs(ke)
    mass_floor = max(1.0 - 2.0 * float(np.abs(me).max()), 0.05)
    spectral_scale = float(row_sum.max()) / mass_floor

    sigma = lo
    z = ones.copy()
    residual = math.inf
    for attempt in range(5):
        ab = np.zeros((3, n))
        ab[0, 1:] = ke - sigma * me
        ab[1, :] = kd - sigma * md
        ab[2, :-1] = ke - sigma * me
        converged = False
        for _ in range(50):
            rhs = apply_m(z)
            try:
                with np.errstate(all="ignore"):
                    y = solve_banded((1, 1), ab, rhs)
            except np.linalg.LinAlgError:
                break  # shift landed on the eigenvalue to the ulp: back off
            if not np.all(np.isfinite(y)):
                break
            nrm = math.sqrt(abs(float(y @ apply_m(y))))
            if nrm == 0.0 or not math.isfinite(nrm):
                break
            z = y / nrm
            Kz = apply_k(z)
            Mz = apply_m(z)
            residual = float(np.linalg.norm(Kz - mu * Mz)) / (
                float(np.linalg.norm(Mz)) * spectral_scale
            )
            if residual <= tol_eig:
                converged = True
                break
        if converged:
            break
        # singular or stalled shift: back off proportionally and retry
        sigma -= max(abs(sigma), 1.0) * 10.0 ** (-12 + 2 * attempt)
        z = ones.copy()
    else:
        raise RuntimeError(
            f"eigensolver did not converge: residual {residual:.3e} (mesh/shift pathology)"
        )

    x = s * z  # back to nodal values
    x /= math.sqrt(abs(float(x @ op.apply_Mw(x))))
    imax = int(np.argmax(np.abs(x)))
    if x[imax] < 0.0:
        x = -x

    scale = max(abs(mu), abs(rq_ones))
    margin = tol_eig * scale
    unstable = mu < -margin
    return SpectralResult(
        mu_star=mu,
        chi_star=x,
        nodes=op.nodes,
        lam=math.sqrt(-mu) if unstable else None,
        verdict=UNSTABLE if unstable else STABLE,
        marginal=abs(mu) <= margin,
        mesh_size=n - 1,
        residual=residual,
        robin_defect=math.nan,
    )


@dataclass(frozen=True)
class StrongFormResidual:
    """Pointwise defect of the reconstructed eigenpair in the strong equation."""

    interior_norm: float
    robin_defect: float


def eigen_residual_strongform(data: SturmLiouvilleData, result: SpectralResult) -> StrongFormResidual:
    """Strong-form residual -(p chi')' + q chi - mu wgt chi from P1 reconstruction.

    The flux p chi' is formed per element (coefficient at the midpoint, slope
    from the nodal values) and differenced across interior nodes; the reported
    norm is a weighted RMS relative to the local term sizes, which decays at
    first order in the mesh.  The Robin defect is |d chi(R) + R chi'(R)| with
    chi'(R) from a one-sided quadratic fit.
    """
    nodes, chi, mu = result.nodes, result.chi_star, result.mu_star
    h = np.diff(nodes)
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    flux = data.p_fn(mid) * np.diff(chi) / h
    hbar = 0.5 * (nodes[2:] - nodes[:-2])
    div = (flux[1:] - flux[:-1]) / hbar
    yi = nodes[1:-1]
    qi = data.q_fn(yi)
    wi = data.wgt_fn(yi)
    res = -div + qi * chi[1:-1] - mu * wi * chi[1:-1]
    scale = np.abs(div) + np.abs(qi * chi[1:-1]) + np.abs(mu * wi * chi[1:-1])
    num = math.sqrt(float((hbar * res**2).sum()))
    den = math.sqrt(float((hbar * scale**2).sum()))
    interior = num / den if den > 0.0 else 0.0

    # one-sided quadratic reconstruction of chi'(R)
    y2, y1, y0 = nodes[-3], nodes[-2], nodes[-1]
    c2, c1, c0 = chi[-3], chi[-2], chi[-1]
    d01, d02, d12 = y0 - y1, y0 - y2, y1 - y2
    dchi_R = c0 * (1.0 / d01 + 1.0 / d02) - c1 * d02 / (d01 * d12) + c2 * d01 / (d02 * d12)
    robin = abs(data.d * c0 + data.R * dchi_R)
    return StrongFormResidual(interior_norm=interior, robin_defect=robin)


def classify_stability(profile: Profile, mesh_size: int = 2048, tol_eig: float = 1e-8) -> SpectralResult:
    """Assemble the pencil for a liquid profile and decide the verdict by sign of mu*."""
    data = build_sl_data(profile)
    op = assemble(data, mesh_size)
    result = smallest_eigenpair(op, tol_eig)
    defect = eigen_residual_strongform(data, result).robin_defect
    return replace(result, robin_defect=defect)


def instability_witness(profile: Profile, case: int, mesh_size: int = 4096) -> float:
    """Q evaluated on the closed-form destabilizing test function of one regime.

    case 1 (2d/(d+2) < gamma < 2(d-1)/d): the constant function.
    case 2 (gamma = 2d/(d+2)): the rho0-scaled constant family.
    case 3 (gamma < 2d/(d+2)): a power law y^-a capped at epsilon, with
    a = (d - 2 gamma/(2-gamma))/2 and epsilon = R/100 (falling back to a sweep
    over {R/10, R/100, R/1000} and returning the smallest value found).

    A negative return certifies linear instability without an eigensolve.
    """
    data = build_sl_data(profile)
    d, g, R = data.d, data.gamma, data.R
    t_sup, t_stab = support_threshold(d), stability_threshold(d)
    crit = math.isclose(g, t_sup, rel_tol=1e-12)
    if case == 1:
        if not (t_sup < g < t_stab) or crit:
            raise ValueError(f"case 1 requires {t_sup:g} < gamma < {t_stab:g}, got {g}")
        nodes = graded_mesh(R, mesh_size)
        chi = np.ones_like(nodes)
        return quadratic_form(data, chi, chi, nodes)
    if case == 2:
        if not crit:
            raise ValueError(f"case 2 requires gamma = {t_sup:g} exactly, got {g}")
        kappa = profile.config.rho_center
        nodes = graded_mesh(R, mesh_size)
        chi = np.full_like(nodes, kappa ** (d / (d + 2.0)))
        return quadratic_form(data, chi, chi, nodes)
    if case == 3:
        if not (g < t_sup) or crit:
            raise ValueError(f"case 3 requires gamma < {t_sup:g}, got {g}")
        a = 0.5 * (d - 2.0 * g / (2.0 - g))
        best = math.inf
        for frac in (100.0, 10.0, 1000.0):
            eps = R / frac
            nodes = np.unique(np.concatenate([graded_mesh(R, mesh_size), [eps]]))
            chi = np.minimum(eps**-a, nodes[1:] ** -a)
            chi = np.concatenate([[eps**-a], chi])
            val = quadratic_form(data, chi, chi, nodes)
            best = min(best, val)
            if best < 0.0:
                break
        return best
    raise ValueError(f"case must be 1, 2, or 3, got {case!r}")


def spectral_result_dict(result: SpectralResult) -> dict:
    """JSON-ready summary of a SpectralResult."""
    return {
        "mu_star": result.mu_star,
        "lambda": result.lam,
        "verdict": result.verdict,
        "marginal": result.marginal,
        "mesh_size": result.mesh_size,
        "robin_defect": None if math.isnan(result.robin_defect) else result.robin_defect,
    }


def write_eigenfunction_csv(result: SpectralResult, out: TextIO) -> None:
    """Emit the eigenfunction samples as CSV with header y,chi."""
    out.write("y,chi\n")
    for y, c in zip(result.nodes, result.chi_star):
        out.write(f"{y:.17g},{c:.17g}\n")
