"""Explicit flat Lagrangian immersions into H^n.

Every builder returns an :class:`ImmersionSampler`: an object evaluating
L(x), the first partials (rows of :meth:`jacobian`) and the second partials
(:meth:`hessian`) at a parameter point.  Curve-based immersions integrate
their curve once, on a fixed grid, and interpolate with cubic Hermite pieces.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .functions import ComposedRatio, ScalarFunction, as_function
from .legendre import (
    CurveState,
    LegendreCoefficients,
    Trajectory,
    _rhs,
    constraint_defect,
    integrate_curve,
    standard_initial_frame,
)
from .quat import left_mul


class DomainError(ValueError):
    """A construction precondition fails somewhere on the requested domain."""


def _box(domain) -> np.ndarray:
    box = np.asarray(domain, dtype=float).reshape(-1, 2)
    if np.any(box[:, 1] <= box[:, 0]):
        raise DomainError(f"empty domain box {box.tolist()}")
    return box


def grid_points(domain, counts) -> np.ndarray:
    """Tensor grid including the box corners."""
    box = _box(domain)
    if isinstance(counts, int):
        counts = [counts] * len(box)
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(box, counts)]
    return np.array(list(itertools.product(*axes)))


class ImmersionSampler:
    """Base class.  Subclasses override the analytic evaluators they have.

    Missing derivatives fall back to central differences with ``fd_step``;
    ``analytic`` is False in that case.
    """

    analytic = False
    fd_step = 1e-5

    def __init__(self, dim: int, quat_dim: int, domain):
        self.dim = dim
        self.quat_dim = quat_dim
        self.domain = _box(domain)
        if len(self.domain) != dim:
            raise DomainError(f"domain has {len(self.domain)} axes, immersion has {dim}")

    @property
    def ambient(self) -> int:
        return 4 * self.quat_dim

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = self.fd_step
        rows = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            rows.append((self.value(x + e) - self.value(x - e)) / (2 * h))
        return np.array(rows)

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = self.fd_step
        H = np.empty((self.dim, self.dim, self.ambient))
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            H[i] = (self.jacobian(x + e) - self.jacobian(x - e)) / (2 * h)
        return H

    def expected_metric(self, x) -> Optional[np.ndarray]:
        """Closed-form induced metric when the construction predicts one."""
        return None

    def expected_lambda(self, x) -> Optional[np.ndarray]:
        return None

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.domain[:, 0]) and np.all(x <= self.domain[:, 1]))

    def columns(self, derivatives: bool = False) -> list[str]:
        comp = "wxyz"
        vals = [f"L{q + 1}_{c}" for q in range(self.quat_dim) for c in comp]
        names = [f"x{i + 1}" for i in range(self.dim)] + vals
        if derivatives:
            for i in range(self.dim):
                names += [f"d{i + 1}_{v}" for v in vals]
        return names

    def write_csv(self, path, counts, derivatives: bool = False) -> None:
        pts = grid_points(self.domain, counts)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns(derivatives))
            for p in pts:
                row = list(p) + list(self.value(p))
                if derivatives:
                    row += list(self.jacobian(p).reshape(-1))
                w.writerow([format(float(v), ".17g") for v in row])


class FunctionSampler(ImmersionSampler):
    """Immersion given only by a value function; derivatives by differencing."""

    def __init__(self, fn: Callable, dim: int, quat_dim: int, domain, fd_step: float = 1e-5):
        super().__init__(dim, quat_dim, domain)
        self._fn = fn
        self.fd_step = fd_step

    def value(self, x):
        return np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=float)


class AffineSampler(ImmersionSampler):
    """L(x) = origin + sum_i x_i v_i, exact derivatives (e.g. the flat inclusion)."""

    analytic = True

    def __init__(self, vectors, domain, origin=None):
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        super().__init__(V.shape[0], V.shape[1] // 4, domain)
        self.V = V
        self.origin = np.zeros(V.shape[1]) if origin is None else np.asarray(origin, float)

    def value(self, x):
        return self.origin + np.asarray(x, float) @ self.V

    def jacobian(self, x):
        return self.V.copy()

    def hessian(self, x):
        return np.zeros((self.dim, self.dim, self.ambient))


def _integrate_both_ways(
    init: CurveState, coeffs, b, lo: float, hi: float, step: float
) -> Trajectory:
    """Integrate from init.s forward to ``hi`` and backward to ``lo``; merge."""
    s0 = init.s
    parts = []
    if lo < s0:
        back = integrate_curve(init, coeffs, b, s_end=lo - step, step=step)
        parts.append(back)
    fwd = integrate_curve(init, coeffs, b, s_end=max(hi, s0) + step, step=step)
    parts.append(fwd)
    if len(parts) == 1:
        return fwd
    back = parts[0]
    s = np.concatenate([back.s[:0:-1], fwd.s])
    Y = np.concatenate([back.Y[:0:-1], fwd.Y])
    dY = np.concatenate([back.dY[:0:-1], fwd.dY])
    return Trajectory(s, Y, dY, init.n, coeffs, b)


class TwistedLegendreSampler(ImmersionSampler):
    """L(t, u) = u_2 z(t) + sum_{j>=3} u_j P_j(t) + int^t b z'.

    Coordinates are (t, u_2, ..., u_n); the induced metric is
    ftilde^2 dt^2 + du^2 with ftilde = b(t) + u_2 + sum_j a_j(t) u_j.
    """

    analytic = True

    def __init__(self, traj: Trajectory, coeffs: LegendreCoefficients, b, domain):
        super().__init__(coeffs.n, coeffs.n, domain)
        self.traj = traj
        self.coeffs = coeffs
        self.b = b
        self._spline = traj.spline()

    def _state(self, t):
        n = self.quat_dim
        y = self._spline(t)
        return CurveState.unpack(t, y, n), y

    def ftilde(self, x) -> float:
        t, u = x[0], x[1:]
        val = self.b(t) + u[0]
        for a_j, uj in zip(self.coeffs.a, u[1:]):
            val += a_j(t) * uj
        return float(val)

    def ftilde_t(self, x) -> float:
        t, u = x[0], x[1:]
        val = self.b.deriv(t)
        for a_j, uj in zip(self.coeffs.a, u[1:]):
            val += a_j.deriv(t) * uj
        return float(val)

    def value(self, x):
        x = np.asarray(x, float)
        st, _ = self._state(x[0])
        out = st.accum + x[1] * st.z
        for P, uj in zip(st.P, x[2:]):
            out = out + uj * P
        return out

    def jacobian(self, x):
        x = np.asarray(x, float)
        st, _ = self._state(x[0])
        return np.array([self.ftilde(x) * st.zp, st.z, *st.P])

    def hessian(self, x):
        x = np.asarray(x, float)
        st, y = self._state(x[0])
        n = self.quat_dim
        m = 4 * n
        zpp = _rhs(x[0], y, self.coeffs, None, n)[m : 2 * m]
        H = np.zeros((n, n, m))
        H[0, 0] = self.ftilde_t(x) * st.zp + self.ftilde(x) * zpp
        H[0, 1] = H[1, 0] = st.zp
        for j, a_j in enumerate(self.coeffs.a):
            H[0, 2 + j] = H[2 + j, 0] = a_j(x[0]) * st.zp
        return H

    def expected_metric(self, x):
        g = np.eye(self.dim)
        g[0, 0] = self.ftilde(x) ** 2
        return g

    def expected_lambda(self, x):
        t = x[0]
        c = self.coeffs
        return np.array([c.alpha(t), c.beta(t), c.gamma(t)]) / self.ftilde(x)


def _check_init(init: CurveState, tol: float = 1e-12):
    d = constraint_defect(init)
    if d.max > tol:
        raise DomainError(f"initial curve state violates frame constraints (defect {d.max:.3e})")


def build_twisted_legendre(
    coeffs: LegendreCoefficients,
    b,
    domain,
    init: Optional[CurveState] = None,
    grid_step: float = 1e-3,
    f_min: float = 1e-6,
) -> TwistedLegendreSampler:
    """Immersion of the twisted product built on a special Legendre curve.

    Raises :class:`DomainError` if ftilde drops below ``f_min`` on the domain
    (checked at every curve grid node and every corner of the u-box, which is
    exhaustive in u because ftilde is affine there).
    """
    b = as_function(b)
    n = coeffs.n
    box = _box(domain)
    if len(box) != n:
        raise DomainError(f"domain must have {n} axes (t, u_2..u_n), got {len(box)}")
    init = standard_initial_frame(n) if init is None else init
    _check_init(init)
    t_nodes = np.linspace(box[0, 0], box[0, 1], max(2, int(math.ceil((box[0, 1] - box[0, 0]) / grid_step)) + 1))
    corners = np.array(list(itertools.product(*box[1:])))
    for t in t_nodes:
        base = b(t)
        for c in corners:
            f = base + c[0] + sum(a(t) * uj for a, uj in zip(coeffs.a, c[1:]))
            if f < f_min:
                raise DomainError(
                    f"twisting function {f:.6g} < f_min={f_min:g} at point "
                    f"(t={t:.6g}, u={tuple(float(v) for v in c)})"
                )
    traj = _integrate_both_ways(init, coeffs, b, box[0, 0], box[0, 1], grid_step)
    return TwistedLegendreSampler(traj, coeffs, b, box)


def build_surface_legendre(b, coeffs: LegendreCoefficients, domain, init=None, grid_step=1e-3):
    """L(x, y) = D(x) + y P(x) with P a special Legendre curve in S^7 and D' = b P'."""
    if coeffs.n != 2:
        raise DomainError("surface Legendre immersions live in H^2 (n = 2)")
    return build_twisted_legendre(coeffs, b, domain, init=init, grid_step=grid_step)


class CylinderSampler(ImmersionSampler):
    """L(x) = D(x_1) + sum_j x_j c_j."""

    analytic = True

    def __init__(self, spline, lam, rulings, domain, n):
        super().__init__(n, n, domain)
        self._spline = spline
        self.lam = lam
        self.rulings = np.asarray(rulings, float).reshape(n - 1, 4 * n)

    def speed(self, x1) -> float:
        return _lam_norm(self.lam, x1)

    def curve(self, x1):
        y = self._spline(x1)
        m = self.ambient
        return y[:m], y[m:]

    def value(self, x):
        x = np.asarray(x, float)
        D, _ = self.curve(x[0])
        return D + x[1:] @ self.rulings

    def jacobian(self, x):
        x = np.asarray(x, float)
        _, Dp = self.curve(x[0])
        return np.vstack([Dp, self.rulings])

    def hessian(self, x):
        x = np.asarray(x, float)
        D, Dp = self.curve(x[0])
        H = np.zeros((self.dim, self.dim, self.ambient))
        H[0, 0] = _cylinder_rhs(x[0], np.concatenate([D, Dp]), self.lam)[self.ambient :]
        return H

    def expected_metric(self, x):
        g = np.eye(self.dim)
        g[0, 0] = self.speed(x[0]) ** 2
        return g

    def expected_lambda(self, x):
        return np.array([l(x[0]) for l in self.lam])


def _lam_norm(lam, x1) -> float:
    return math.sqrt(sum(float(l(x1)) ** 2 for l in lam))


def _cylinder_rhs(x1, y, lam):
    """(D, D')' = (D', (f'/f) D' + f q D') with q = i l1 + j l2 + k l3, f = |l|."""
    m = y.size // 2
    Dp = y[m:]
    l = np.array([float(f(x1)) for f in lam])
    dl = np.array([float(f.deriv(x1)) for f in lam])
    f = math.sqrt(float(l @ l))
    fp = float(l @ dl) / f
    q = np.array([0.0, l[0], l[1], l[2]])
    Dpp = (fp / f) * Dp + f * left_mul(q, Dp)
    return np.concatenate([Dp, Dpp])


def build_cylinder(
    lam: Sequence,
    domain,
    rulings=None,
    D0=None,
    Dp0=None,
    grid_step: float = 1e-3,
    lam_min: float = 1e-6,
) -> CylinderSampler:
    """Lagrangian cylinder over the curve D solving D'' = (f'/f + q f) D'.

    By default D lies in the first quaternionic coordinate and c_j = E_j.
    ``Dp0`` only fixes the initial direction of D'; its length is set to
    |lambda|(0) so that the induced metric is f^2 dx_1^2 + sum dx_j^2.
    """
    lam = tuple(as_function(l) for l in lam)
    if len(lam) != 3:
        raise DomainError("need exactly three functions lambda_1, lambda_2, lambda_3")
    box = _box(domain)
    n = len(box)
    if n < 1:
        raise DomainError("empty domain")
    m = 4 * n
    nodes = np.linspace(box[0, 0], box[0, 1], max(2, int(math.ceil((box[0, 1] - box[0, 0]) / grid_step)) + 1))
    for x1 in np.append(nodes, 0.0):
        f = _lam_norm(lam, x1)
        if f < lam_min:
            raise DomainError(f"|lambda| = {f:.3g} < {lam_min:g} at x1={x1:.6g} (totally geodesic point)")
    E = np.eye(m)[::4]
    if rulings is None:
        rulings = E[1:n]
    rulings = np.asarray(rulings, float).reshape(n - 1, m)
    if n > 1:
        G = rulings @ rulings.T
        if np.max(np.abs(G - np.eye(n - 1))) > 1e-12:
            raise DomainError("rulings c_j must be unit and mutually orthogonal")
    D0 = np.zeros(m) if D0 is None else np.asarray(D0, float).reshape(m)
    direction = E[0] if Dp0 is None else np.asarray(Dp0, float).reshape(m)
    if np.linalg.norm(direction) == 0:
        raise DomainError("D'(0) must be nonzero")
    Dp0 = direction / np.linalg.norm(direction) * _lam_norm(lam, 0.0)

    y0 = np.concatenate([D0, Dp0])
    rhs = lambda s, y: _cylinder_rhs(s, y, lam)
    lo, hi = box[0]
    s_all, Y_all, dY_all = [], [], []
    for end in ([lo - grid_step] if lo < 0 else []) + [max(hi, 0.0) + grid_step]:
        s, Y = _rk4(rhs, 0.0, y0, end, grid_step)
        dY = np.array([rhs(si, yi) for si, yi in zip(s, Y)])
        s_all.append(s)
        Y_all.append(Y)
        dY_all.append(dY)
    if len(s_all) == 2:
        s = np.concatenate([s_all[0][:0:-1], s_all[1]])
        Y = np.concatenate([Y_all[0][:0:-1], Y_all[1]])
        dY = np.concatenate([dY_all[0][:0:-1], dY_all[1]])
    else:
        s, Y, dY = s_all[0], Y_all[0], dY_all[0]
    spline = CubicHermiteSpline(s, Y, dY, axis=0)
    return CylinderSampler(spline, lam, rulings, box, n)


def _rk4(rhs, s0, y0, s_end, step):
    """Fixed-step RK4 with compensated summation; returns (s grid, states)."""
    steps = max(1, int(round(abs(s_end - s0) / step)))
    h = (s_end - s0) / steps
    s = s0 + h * np.arange(steps + 1)
    Y = np.empty((steps + 1, y0.size))
    y = y0.copy()
    comp = np.zeros_like(y)
    Y[0] = y
    for k in range(steps):
        t = s[k]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        inc = h / 6 * (k1 + 2 * k2 + 2 * k3 + k4) - comp
        new = y + inc
        comp = (new - y) - inc
        y = new
        Y[k + 1] = y
    return s, Y


# --- cones -------------------------------------------------------------------


class CircleCurve:
    """A(y) = cos(y) u + sin(y) v."""

    def __init__(self, u, v):
        self.u = np.asarray(u, float).reshape(-1)
        self.v = np.asarray(v, float).reshape(-1)

    def __call__(self, y):
        c, s = math.cos(y), math.sin(y)
        return c * self.u + s * self.v, -s * self.u + c * self.v, -c * self.u - s * self.v


class TrajectoryCurve:
    """A curve read off an integrated Legendre trajectory: (z, z', z'')."""

    def __init__(self, traj: Trajectory):
        self.traj = traj
        self._spline = traj.spline()

    def __call__(self, y):
        n = self.traj.n
        m = 4 * n
        st = self._spline(y)
        zpp = _rhs(y, st, self.traj.coeffs, None, n)[m : 2 * m]
        return st[:m], st[m : 2 * m], zpp


def legendre_curve(coeffs: LegendreCoefficients, lo: float, hi: float, step: float = 1e-3) -> TrajectoryCurve:
    init = standard_initial_frame(coeffs.n)
    return TrajectoryCurve(_integrate_both_ways(init, coeffs, None, lo, hi, step))


class QuaternionFunction:
    """x -> w(x) + x(x) i + y(x) j + z(x) k from four scalar functions."""

    def __init__(self, parts):
        parts = [as_function(p) for p in parts]
        if len(parts) == 1:
            parts = parts + [ScalarFunction()] * 3
        if len(parts) != 4:
            raise ValueError("a quaternion-valued function needs 1 or 4 components")
        self.parts = tuple(parts)
        self._d = tuple(p.derivative() for p in parts)
        self._dd = tuple(p.derivative() for p in self._d)

    def __call__(self, x):
        return np.array([float(p(x)) for p in self.parts])

    def d1(self, x):
        return np.array([float(p(x)) for p in self._d])

    def d2(self, x):
        return np.array([float(p(x)) for p in self._dd])


class ConeSampler(ImmersionSampler):
    """L(x, y) = scale(x) A(y), scale acting by left multiplication."""

    analytic = True

    def __init__(self, scale: QuaternionFunction, curve, quat_dim, domain):
        super().__init__(2, quat_dim, domain)
        self.scale = scale
        self.curve = curve

    def value(self, p):
        A, _, _ = self.curve(p[1])
        return left_mul(self.scale(p[0]), A)

    def jacobian(self, p):
        A, Ap, _ = self.curve(p[1])
        return np.array([left_mul(self.scale.d1(p[0]), A), left_mul(self.scale(p[0]), Ap)])

    def hessian(self, p):
        A, Ap, App = self.curve(p[1])
        x = p[0]
        H = np.empty((2, 2, self.ambient))
        H[0, 0] = left_mul(self.scale.d2(x), A)
        H[0, 1] = H[1, 0] = left_mul(self.scale.d1(x), Ap)
        H[1, 1] = left_mul(self.scale(x), App)
        return H


def build_cone(scale, curve, domain, quat_dim: int = 2, check_points: int = 9) -> ConeSampler:
    """Cone over a curve in H^m; raises if {L_x, L_y} has rank < 2 at a sampled point."""
    if not isinstance(scale, QuaternionFunction):
        scale = QuaternionFunction(scale if isinstance(scale, (list, tuple)) else [scale])
    sampler = ConeSampler(scale, curve, quat_dim, domain)
    for p in grid_points(sampler.domain, check_points):
        J = sampler.jacobian(p)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[0] == 0 or sv[-1] <= 1e-10 * sv[0]:
            raise DomainError(f"not an immersion at {tuple(float(v) for v in p)}: rank of (L_x, L_y) < 2")
    return sampler


# --- twist profiles ----------------------------------------------------------


@dataclass(frozen=True)
class TwistProfile:
    """f(x) = beta(x_1) + sum_{j>=2} alpha_j(x_1) x_j with ratios r_i = f / f_i of x_1 only."""

    beta: object
    alpha: tuple
    ratios: tuple = field(default=(math.sqrt(3.0),) * 3)

    def __post_init__(self):
        object.__setattr__(self, "beta", as_function(self.beta))
        object.__setattr__(self, "alpha", tuple(as_function(a) for a in self.alpha))
        object.__setattr__(self, "ratios", tuple(as_function(r) for r in self.ratios))
        if len(self.ratios) != 3:
            raise ValueError("need three ratio functions r_1, r_2, r_3")
        if not self.alpha:
            raise ValueError("need at least alpha_2 (n >= 2)")

    @property
    def n(self) -> int:
        return len(self.alpha) + 1

    def f(self, x) -> float:
        x = np.asarray(x, float)
        return float(self.beta(x[0]) + sum(a(x[0]) * xj for a, xj in zip(self.alpha, x[1:])))

    def grad_f(self, x) -> np.ndarray:
        """(df/dx_1, ..., df/dx_n)."""
        x = np.asarray(x, float)
        d1 = self.beta.deriv(x[0]) + sum(a.deriv(x[0]) * xj for a, xj in zip(self.alpha, x[1:]))
        return np.array([d1] + [a(x[0]) for a in self.alpha], dtype=float)

    def normalization_defect(self, x1) -> float:
        """|sum_i r_i^-2 - 1|: zero exactly when f^2 = f_1^2 + f_2^2 + f_3^2."""
        return abs(sum(float(r(x1)) ** -2 for r in self.ratios) - 1.0)

    def validate(self, domain, f_min: float = 1e-6, strict: bool = False, samples: int = 201):
        """Check f >= f_min at the u-box corners over a sampled x_1 grid."""
        box = _box(domain)
        if len(box) != self.n:
            raise DomainError(f"profile has n={self.n}, domain has {len(box)} axes")
        corners = list(itertools.product(*box[1:]))
        for x1 in np.linspace(box[0, 0], box[0, 1], samples):
            for c in corners:
                f = self.f((x1, *c))
                if f < f_min:
                    raise DomainError(f"twisting function {f:.6g} < f_min at {(float(x1), *map(float, c))}")
            if strict and self.normalization_defect(x1) > 1e-10:
                raise DomainError(
                    f"sum of r_i^-2 differs from 1 by {self.normalization_defect(x1):.3e} at x1={x1:.6g}"
                )


@dataclass
class Reparametrization:
    """Twisted-Legendre data for a profile, in the variable t = int_0^{x_1} alpha_2."""

    profile: TwistProfile
    t_of_x: Callable
    x_of_t: Callable
    b: object
    a: tuple
    coeffs: LegendreCoefficients
    t_domain: tuple

    def ftilde(self, t, u) -> float:
        return float(self.b(t) + u[0] + sum(a(t) * uj for a, uj in zip(self.a, u[1:])))


def reparametrize_profile(profile: TwistProfile, domain, samples: int = 2001) -> Reparametrization:
    """Change of variable t = int_0^{x_1} alpha_2 turning f dx_1 into ftilde dt.

    With dt = alpha_2 dx_1 the metric f^2 dx_1^2 equals ftilde^2 dt^2 for
    ftilde = f / alpha_2 = b + u_2 + sum a_j u_j, so b = beta / alpha_2 and
    a_j = alpha_j / alpha_2.  The curvature data r_i become the Legendre
    coefficients r_i / alpha_2.
    """
    box = _box(domain)
    lo, hi = box[0]
    alpha2 = profile.alpha[0]
    xs = np.unique(np.concatenate([np.linspace(lo, hi, samples), [0.0] if lo <= 0 <= hi else []]))
    vals = np.asarray(alpha2(xs))
    if np.any(vals <= 0):
        bad = float(xs[np.argmax(vals <= 0)])
        raise DomainError(f"alpha_2 must be positive on the domain; alpha_2({bad:.6g}) = {float(alpha2(bad)):.3g}")

    if isinstance(alpha2, ScalarFunction) and alpha2.is_constant:
        c = float(alpha2(0.0))
        t_of_x = lambda x: c * x
        x_of_t = lambda t: t / c
        dx_dt = lambda t: 1.0 / c
    else:
        if isinstance(alpha2, ScalarFunction):
            T = alpha2.antiderivative()
        else:
            from scipy.integrate import quad

            T = lambda x: quad(alpha2, 0.0, x, epsabs=1e-14, epsrel=1e-13)[0]
        t_of_x = T
        # bracket generously: alpha_2 > 0 on the box, so t is strictly increasing there
        pad = 0.5 * (hi - lo)

        def x_of_t(t):
            a, b_ = lo - pad, hi + pad
            return brentq(lambda x: T(x) - t, a, b_, xtol=1e-15, rtol=4 * np.finfo(float).eps)

        dx_dt = lambda t: 1.0 / float(alpha2(x_of_t(t)))

    def over_alpha2(g):
        if isinstance(g, ScalarFunction) and isinstance(alpha2, ScalarFunction) and alpha2.is_constant:
            c = float(alpha2(0.0))
            # x = t / c: substitute into the polynomial and sinusoids exactly
            poly = tuple(p / c ** (k + 1) for k, p in enumerate(g.poly))
            sines = tuple((a_ / c, w / c, ph) for a_, w, ph in g.sines)
            return ScalarFunction(poly, sines)
        return ComposedRatio(g, alpha2, x_of_t, dx_dt)

    b = over_alpha2(profile.beta)
    a = tuple(over_alpha2(aj) for aj in profile.alpha[1:])
    r = tuple(over_alpha2(ri) for ri in profile.ratios)
    n = profile.n
    coeffs = LegendreCoefficients(r[0], r[1], r[2], a, n)
    return Reparametrization(profile, t_of_x, x_of_t, b, a, coeffs, (float(t_of_x(lo)), float(t_of_x(hi))))


class ProfileSampler(ImmersionSampler):
    """The immersion of a twisted product f R x E^{n-1}, in the original coordinates x."""

    analytic = True

    def __init__(self, inner: TwistedLegendreSampler, rep: Reparametrization, domain):
        super().__init__(inner.dim, inner.quat_dim, domain)
        self.inner = inner
        self.rep = rep
        self.profile = rep.profile
        self._alpha2 = rep.profile.alpha[0]

    def _t(self, x):
        y = np.array(x, dtype=float)
        y[0] = float(self.rep.t_of_x(x[0]))
        return y

    def value(self, x):
        return self.inner.value(self._t(x))

    def jacobian(self, x):
        J = self.inner.jacobian(self._t(x))
        J[0] *= float(self._alpha2(x[0]))
        return J

    def hessian(self, x):
        y = self._t(x)
        a2 = float(self._alpha2(x[0]))
        a2p = float(self._alpha2.deriv(x[0]))
        H = self.inner.hessian(y)
        Jt = self.inner.jacobian(y)[0]
        H[0, 0] = a2 * a2 * H[0, 0] + a2p * Jt
        H[0, 1:] *= a2
        H[1:, 0] *= a2
        return H

    def expected_metric(self, x):
        g = np.eye(self.dim)
        g[0, 0] = self.profile.f(x) ** 2
        return g

    def expected_lambda(self, x):
        f = self.profile.f(x)
        return np.array([float(r(x[0])) for r in self.profile.ratios]) / f


def build_from_profile(profile: TwistProfile, domain, init=None, grid_step=1e-3, strict=False, f_min=1e-6):
    """Realize a twist profile through its twisted-Legendre reparametrization."""
    box = _box(domain)
    profile.validate(box, f_min=f_min, strict=strict)
    rep = reparametrize_profile(profile, box)
    tbox = box.copy()
    tbox[0] = rep.t_domain
    inner = build_twisted_legendre(rep.coeffs, rep.b, tbox, init=init, grid_step=grid_step, f_min=f_min)
    return ProfileSampler(inner, rep, box)
