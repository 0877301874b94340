"""Numerical Riemannian geometry of sampled immersions.

Curvature convention: R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
stored as ``R[l, i, j, k]`` = l-th component of R(d_i, d_j) d_k.  Christoffel
symbols are stored as ``G[k, i, j]`` = Gamma^k_ij.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .quat import AXES, apply_structure

COND_MAX = 1e8


class MetricError(ValueError):
    """Singular or badly conditioned metric."""


@dataclass
class MetricData:
    g: np.ndarray
    ginv: np.ndarray
    gamma: Optional[np.ndarray] = None
    riemann: Optional[np.ndarray] = None
    h: Optional[float] = None
    flatness_defect: Optional[float] = None


def _invert(g: np.ndarray, where=None) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise MetricError(f"non-finite metric at {where}")
    if np.linalg.cond(g) > COND_MAX:
        raise MetricError(f"degenerate metric (condition number > {COND_MAX:g}) at {where}")
    return np.linalg.inv(g)


def induced_metric(sampler, x) -> MetricData:
    J = sampler.jacobian(np.asarray(x, float))
    if not np.all(np.isfinite(J)):
        raise MetricError(f"non-finite derivative at {tuple(np.asarray(x).tolist())}")
    g = J @ J.T
    return MetricData(g=g, ginv=_invert(g, x))


def christoffel_projection(sampler, x) -> np.ndarray:
    """Gamma^k_ij = g^kl <d_i d_j L, d_l L> from second derivatives."""
    x = np.asarray(x, float)
    J = sampler.jacobian(x)
    H = sampler.hessian(x)
    g = J @ J.T
    ginv = _invert(g, x)
    return np.einsum("kl,ijl->kij", ginv, H @ J.T)


def christoffel_from_metric(metric_fn: Callable, x, h: float = 1e-4) -> np.ndarray:
    """Gamma from central differences of a metric function."""
    x = np.asarray(x, float)
    n = x.size
    dg = np.empty((n, n, n))  # dg[c, a, b] = d_c g_ab
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dg[c] = (metric_fn(x + e) - metric_fn(x - e)) / (2 * h)
    ginv = _invert(metric_fn(x), x)
    # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    low = 0.5 * (np.transpose(dg, (2, 0, 1)) + np.transpose(dg, (2, 1, 0)) - dg)
    return np.einsum("kl,lij->kij", ginv, low)


def christoffel_metric_path(sampler, x, h: float = 1e-4) -> np.ndarray:
    """Christoffels from differencing the induced metric of the sampler."""
    return christoffel_from_metric(lambda p: induced_metric(sampler, p).g, x, h)


def riemann_from_christoffel(gamma_fn: Callable, x, h: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, float)
    n = x.size
    G = gamma_fn(x)
    dG = np.empty((n, n, n, n))  # dG[m, k, i, j] = d_m Gamma^k_ij
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        dG[m] = (gamma_fn(x + e) - gamma_fn(x - e)) / (2 * h)
    # R^l_{kij} with (i, j) the antisymmetric pair, reordered to R[l, i, j, k]
    R = (
        np.einsum("iljk->lijk", dG)
        - np.einsum("jlik->lijk", dG)
        + np.einsum("mjk,lim->lijk", G, G)
        - np.einsum("mik,ljm->lijk", G, G)
    )
    return R


def normalized_riemann(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Fully lowered components divided by the lengths of the coordinate vectors."""
    low = np.einsum("lm,mijk->lijk", g, R)
    s = np.sqrt(np.diag(g))
    return low / np.einsum("l,i,j,k->lijk", s, s, s, s)


class CoordinateGeometry:
    """A metric on a coordinate patch, optionally with closed-form Christoffels."""

    def __init__(self, metric_fn: Callable, christoffel_fn: Optional[Callable] = None, fd_step: float = 1e-4):
        self.metric = metric_fn
        self._gamma = christoffel_fn
        self.fd_step = fd_step

    def christoffel(self, x) -> np.ndarray:
        if self._gamma is not None:
            return self._gamma(np.asarray(x, float))
        return christoffel_from_metric(self.metric, x, self.fd_step)

    def riemann(self, x, h: Optional[float] = None) -> np.ndarray:
        return riemann_from_christoffel(self.christoffel, x, h or self.fd_step)


def round_sphere_geometry() -> CoordinateGeometry:
    """Unit sphere in (theta, phi): g = d theta^2 + sin^2 theta d phi^2."""
    return CoordinateGeometry(lambda p: np.diag([1.0, np.sin(p[0]) ** 2]))


def sectional_curvature(R: np.ndarray, g: np.ndarray, i: int, j: int) -> float:
    """K(d_i, d_j) = <R(d_i, d_j) d_j, d_i> / (g_ii g_jj - g_ij^2)."""
    num = float(g[i] @ R[:, i, j, j])
    return num / (g[i, i] * g[j, j] - g[i, j] ** 2)


def curvature(sampler, x, h: float = 1e-4, method: Optional[str] = None) -> MetricData:
    """Metric, Christoffels and Riemann tensor at x, plus a flatness defect.

    ``method`` is "projection" (Christoffels from analytic second
    derivatives, the default for analytic samplers) or "metric" (Christoffels
    from differencing g).  The flatness defect is max |R_lijk| after dividing
    by the lengths of the four coordinate vectors.
    """
    x = np.asarray(x, float)
    if method is None:
        method = "projection" if sampler.analytic else "metric"
    if method == "projection":
        gamma_fn = lambda p: christoffel_projection(sampler, p)
    elif method == "metric":
        gamma_fn = lambda p: christoffel_metric_path(sampler, p, h)
    else:
        raise ValueError(f"unknown Christoffel method {method!r}")
    md = induced_metric(sampler, x)
    md.gamma = gamma_fn(x)
    md.riemann = riemann_from_christoffel(gamma_fn, x, h)
    md.h = h
    md.flatness_defect = float(np.max(np.abs(normalized_riemann(md.riemann, md.g))))
    return md


def lagrangian_defect(sampler, x) -> float:
    """max over I, J, K and i <= j of |<phi d_i L, d_j L>| / (|d_i L| |d_j L|)."""
    J = sampler.jacobian(np.asarray(x, float))
    norms = np.linalg.norm(J, axis=1)
    worst = 0.0
    for ax in AXES:
        M = apply_structure(ax, J) @ J.T
        worst = max(worst, float(np.max(np.abs(np.triu(M)) / np.outer(norms, norms))))
    return worst


@dataclass
class SFFData:
    h: np.ndarray  # h[i, j] normal vector of h(d_i, d_j)
    frame: np.ndarray  # rows e_a = d_a / |d_a|
    lam: np.ndarray  # (3,)
    mu: np.ndarray  # (n-1, 3): per j >= 2
    residual: float
    normality: float
    metric: MetricData = field(repr=False, default=None)

    @property
    def mu_mean(self) -> np.ndarray:
        return self.mu.mean(axis=0) if len(self.mu) else np.zeros(3)

    @property
    def mu_spread(self) -> float:
        return float(np.ptp(self.mu, axis=0).max()) if len(self.mu) else 0.0

    @property
    def mu_max(self) -> float:
        return float(np.max(np.abs(self.mu))) if self.mu.size else 0.0


def second_fundamental_form(sampler, x) -> SFFData:
    """h_ij = d_i d_j L - Gamma^k_ij d_k L and its H-umbilical coefficients.

    lambda_a = <h(e_1, e_1), phi_a e_1>; mu_a (per j >= 2) = <h(e_1, e_j), phi_a e_j>.
    The residual compares h in the frame against the H-umbilical form built
    from the measured lambda and the mean mu.
    """
    x = np.asarray(x, float)
    J = sampler.jacobian(x)
    H = sampler.hessian(x)
    g = J @ J.T
    ginv = _invert(g, x)
    gamma = np.einsum("kl,ijl->kij", ginv, H @ J.T)
    h = H - np.einsum("kij,kl->ijl", gamma, J)
    n = J.shape[0]
    scale = np.sqrt(np.diag(g))
    E = J / scale[:, None]
    hf = h / np.outer(scale, scale)[:, :, None]  # h(e_i, e_j)
    phiE = [apply_structure(ax, E) for ax in AXES]  # phiE[a][i] = phi_a e_i
    lam = np.array([hf[0, 0] @ phiE[a][0] for a in range(3)])
    mu = np.array([[hf[0, j] @ phiE[a][j] for a in range(3)] for j in range(1, n)]).reshape(n - 1, 3)
    mbar = mu.mean(axis=0) if n > 1 else np.zeros(3)

    resid = 0.0
    for i in range(n):
        for j in range(i, n):
            if i == 0 and j == 0:
                model = sum(lam[a] * phiE[a][0] for a in range(3))
            elif i == 0:
                model = sum(mbar[a] * phiE[a][j] for a in range(3))
            elif i == j:
                model = sum(mbar[a] * phiE[a][0] for a in range(3))
            else:
                model = np.zeros_like(hf[i, j])
            resid = max(resid, float(np.linalg.norm(hf[i, j] - model)))

    Jn = np.linalg.norm(J, axis=1)
    normality = 0.0
    # entries at roundoff level carry no direction
    floor = 1e-8 * max(1.0, float(np.max(np.abs(H))))
    for i in range(n):
        for j in range(n):
            hn = np.linalg.norm(h[i, j])
            if hn > floor:
                normality = max(normality, float(np.max(np.abs(J @ h[i, j]) / (hn * Jn))))
    md = MetricData(g=g, ginv=ginv, gamma=gamma)
    return SFFData(h=h, frame=E, lam=lam, mu=mu, residual=resid, normality=normality, metric=md)


def frame_defect(sampler, x) -> float:
    """Deviation of the normalized coordinate frame from orthonormality."""
    J = sampler.jacobian(np.asarray(x, float))
    E = J / np.linalg.norm(J, axis=1)[:, None]
    return float(np.max(np.abs(E @ E.T - np.eye(len(E)))))


def mixed_partial_defect(sampler, x) -> float:
    H = sampler.hessian(np.asarray(x, float))
    return float(np.max(np.abs(H - np.transpose(H, (1, 0, 2)))))


@dataclass
class CodazziReport:
    lambda_defect: float  # max |e_i(lambda_a) - omega_1^i(e_1) lambda_a|
    connection_defect: float  # max |nabla_{e_i} e_1|
    per_point: list
    note: str = (
        "connection form taken as omega_1^i(e_1) = <nabla_{e_1} e_1, e_i>; "
        "the index variant omega_i^i(e_1) is read as this same form"
    )


def _frame_connection(sampler, x):
    """omega_1^i(e_1) for i >= 2 and |nabla_{e_i} e_1| for i >= 2, at x."""
    x = np.asarray(x, float)
    J = sampler.jacobian(x)
    H = sampler.hessian(x)
    g = J @ J.T
    ginv = _invert(g, x)
    gamma = np.einsum("kl,ijl->kij", ginv, H @ J.T)
    n = len(g)
    g11 = g[0, 0]
    dg11 = 2.0 * (H[:, 0] @ J[0])  # d_i g_11
    omega = []
    conn = []
    for i in range(1, n):
        si = np.sqrt(g[i, i])
        # nabla_{e_1} e_1 = Gamma^k_11 d_k / g11 + e_1(1/sqrt g11) d_1
        v = gamma[:, 0, 0] / g11 - 0.5 * dg11[0] / g11**2 * np.eye(n)[0]
        omega.append(float(v @ g[:, i]) / si)
        # nabla_{e_i} e_1 = (Gamma^k_i1 / sqrt g11 + d_i(1/sqrt g11) delta^k_1) d_k / sqrt g_ii
        w = (gamma[:, i, 0] / np.sqrt(g11) - 0.5 * dg11[i] * g11**-1.5 * np.eye(n)[0]) / si
        conn.append(float(np.sqrt(w @ g @ w)))
    return np.array(omega), np.array(conn), np.sqrt(np.diag(g))


def codazzi_check(sampler, points, step: float = 1e-2) -> CodazziReport:
    """Check e_i(lambda_a) = omega_1^i(e_1) lambda_a and nabla_{e_i} e_1 = 0 (i >= 2).

    e_i(lambda_a) is a central difference of the measured lambda field along
    the coordinate direction, divided by |d_i|.
    """
    extent = np.min(sampler.domain[:, 1] - sampler.domain[:, 0])
    if step > extent / 10:
        raise ValueError(f"differencing step {step:g} exceeds a tenth of the domain extent ({extent:g})")
    worst_l = worst_c = 0.0
    records = []
    for p in np.atleast_2d(points):
        p = np.asarray(p, float)
        lam0 = second_fundamental_form(sampler, p).lam
        omega, conn, scale = _frame_connection(sampler, p)
        dl = 0.0
        for i in range(1, sampler.dim):
            e = np.zeros(sampler.dim)
            e[i] = step
            lp = second_fundamental_form(sampler, p + e).lam
            lm = second_fundamental_form(sampler, p - e).lam
            ei_lam = (lp - lm) / (2 * step) / scale[i]
            dl = max(dl, float(np.max(np.abs(ei_lam - omega[i - 1] * lam0))))
        dc = float(np.max(conn)) if conn.size else 0.0
        worst_l, worst_c = max(worst_l, dl), max(worst_c, dc)
        records.append({"point": p.tolist(), "codazzi_lambda": dl, "codazzi_connection": dc})
    return CodazziReport(worst_l, worst_c, records)


def twisted_christoffel(profile) -> Callable:
    """Closed-form Christoffels of f^2 dx_1^2 + sum dx_j^2 for a twist profile."""

    def gamma(x):
        x = np.asarray(x, float)
        n = x.size
        f = profile.f(x)
        df = profile.grad_f(x)
        G = np.zeros((n, n, n))
        G[0, 0, 0] = df[0] / f
        G[1:, 0, 0] = -f * df[1:]
        G[0, 0, 1:] = df[1:] / f
        G[0, 1:, 0] = df[1:] / f
        return G

    return gamma


def twisted_metric(profile) -> Callable:
    def metric(x):
        g = np.eye(len(x))
        g[0, 0] = profile.f(x) ** 2
        return g

    return metric


def twisted_geometry(profile, analytic: bool = True, fd_step: float = 1e-4) -> CoordinateGeometry:
    return CoordinateGeometry(twisted_metric(profile), twisted_christoffel(profile) if analytic else None, fd_step)


def christoffel_formula_check(profile, points, h: float = 1e-4, f_min: float = 1e-6) -> float:
    """Max deviation between differenced Christoffels of the twisted metric and the closed forms."""
    metric = twisted_metric(profile)
    closed = twisted_christoffel(profile)
    worst = 0.0
    for p in np.atleast_2d(points):
        if profile.f(p) < f_min:
            raise MetricError(f"twisting function below f_min at {tuple(p)}")
        num = christoffel_from_metric(metric, p, h)
        worst = max(worst, float(np.max(np.abs(num - closed(p)))))
    return worst
