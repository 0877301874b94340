"""Special Legendre curves in the unit sphere of H^n.

A unit-speed curve z(s) with <z', iz> = <z', jz> = <z', kz> = 0 and moving
frame z, z', P_3..P_n.  A special curve satisfies

    z'' = alpha i z' + beta j z' + gamma k z' - z - sum_l a_l P_l

with the P_l parallel in the normal bundle.  Parallelism leaves only
tangential components in P_l'; differentiating <P_l, z> = 0 and
<P_l, z'> = 0 against the equation above fixes them, giving P_l' = a_l z'.
That closes the first-order system integrated here.  The optional
accumulator carries int_0^s b(r) z'(r) dr alongside the curve.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .functions import ScalarFunction, as_function
from .quat import AXES, apply_structure, real_inner


class IntegrationError(RuntimeError):
    pass


class DegenerateFrameError(ValueError):
    pass


@dataclass(frozen=True)
class LegendreCoefficients:
    alpha: object
    beta: object
    gamma: object
    a: tuple = ()
    n: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"ambient dimension n must be >= 2, got {self.n}")
        object.__setattr__(self, "alpha", as_function(self.alpha))
        object.__setattr__(self, "beta", as_function(self.beta))
        object.__setattr__(self, "gamma", as_function(self.gamma))
        object.__setattr__(self, "a", tuple(as_function(f) for f in self.a))
        if len(self.a) != self.n - 2:
            raise ValueError(f"expected {self.n - 2} normal coefficients a_l, got {len(self.a)}")

    @classmethod
    def zero(cls, n: int) -> "LegendreCoefficients":
        z = ScalarFunction()
        return cls(z, z, z, tuple(z for _ in range(n - 2)), n)


@dataclass(frozen=True)
class CurveState:
    """Position z, velocity zp, normal fields P (P_3..P_n) and accumulator, as flat 4n arrays."""

    s: float
    z: np.ndarray
    zp: np.ndarray
    P: tuple = ()
    accum: Optional[np.ndarray] = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "zp", np.asarray(self.zp, dtype=float))
        object.__setattr__(self, "P", tuple(np.asarray(p, dtype=float) for p in self.P))
        acc = np.zeros_like(z) if self.accum is None else np.asarray(self.accum, dtype=float)
        object.__setattr__(self, "accum", acc)
        if z.size % 4:
            raise ValueError("state vectors must have length 4n")
        for v in (self.zp, self.accum, *self.P):
            if v.shape != z.shape:
                raise ValueError("all state vectors must have the same length")

    @property
    def n(self) -> int:
        return self.z.size // 4

    def pack(self) -> np.ndarray:
        return np.concatenate([self.z, self.zp, *self.P, self.accum])

    @classmethod
    def unpack(cls, s: float, y: np.ndarray, n: int) -> "CurveState":
        blocks = np.asarray(y).reshape(n + 1, 4 * n)
        return cls(float(s), blocks[0], blocks[1], tuple(blocks[2:n]), blocks[n])

    def frame(self) -> np.ndarray:
        """Rows z, iz, jz, kz, zp, izp, ..., P_l, iP_l, jP_l, kP_l."""
        rows = []
        for v in (self.z, self.zp, *self.P):
            rows.append(v)
            rows.extend(apply_structure(ax, v) for ax in AXES)
        return np.array(rows)


def standard_initial_frame(n: int) -> CurveState:
    """z = E_1, z' = E_2, P_l = E_l: an exactly orthonormal Legendre frame."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    e = np.eye(4 * n)[::4]
    return CurveState(0.0, e[0], e[1], tuple(e[2:]), np.zeros(4 * n))


def _rhs(s: float, y: np.ndarray, coeffs: LegendreCoefficients, b, n: int) -> np.ndarray:
    m = 4 * n
    z, zp = y[:m], y[m : 2 * m]
    blocks = zp.reshape(n, 4)
    # i, j, k left actions written out; they only permute and negate entries
    w, x, yy, zz = blocks.T
    al, be, ga = coeffs.alpha(s), coeffs.beta(s), coeffs.gamma(s)
    acc = np.empty_like(blocks)
    acc[:, 0] = -al * x - be * yy - ga * zz
    acc[:, 1] = al * w + be * zz - ga * yy
    acc[:, 2] = -al * zz + be * w + ga * x
    acc[:, 3] = al * yy - be * x + ga * w
    zpp = acc.reshape(-1) - z
    out = np.empty_like(y)
    out[:m] = zp
    for l, a_l in enumerate(coeffs.a):
        av = a_l(s)
        P = y[(2 + l) * m : (3 + l) * m]
        zpp -= av * P
        out[(2 + l) * m : (3 + l) * m] = av * zp
    out[m : 2 * m] = zpp
    out[n * m :] = (b(s) * zp) if b is not None else 0.0
    return out


def special_legendre_rhs(
    state: CurveState, coeffs: LegendreCoefficients, b=None
) -> CurveState:
    """Derivative of every state component, returned in a CurveState container."""
    if state.n != coeffs.n:
        raise ValueError(f"state has n={state.n}, coefficients n={coeffs.n}")
    d = _rhs(state.s, state.pack(), coeffs, b, state.n)
    return CurveState.unpack(state.s, d, state.n)


def acceleration(state: CurveState, coeffs: LegendreCoefficients) -> np.ndarray:
    """z'' at the given state."""
    return special_legendre_rhs(state, coeffs).zp


def _orthonormalize(y: np.ndarray, n: int) -> np.ndarray:
    m = 4 * n
    blocks = y.reshape(n + 1, m).copy()
    frame = []
    for r in range(n):
        v = blocks[r]
        for e in frame:
            v = v - np.dot(v, e) * e
        v = v / np.linalg.norm(v)
        blocks[r] = v
        frame.append(v)
        frame.extend(apply_structure(ax, v) for ax in AXES)
    return blocks.reshape(-1)


@dataclass
class Trajectory:
    """Fixed-step samples of a curve: states and their derivatives at every step."""

    s: np.ndarray
    Y: np.ndarray
    dY: np.ndarray
    n: int
    coeffs: LegendreCoefficients
    b: object = None
    _spline: object = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.s)

    def __getitem__(self, k: int) -> CurveState:
        return CurveState.unpack(self.s[k], self.Y[k], self.n)

    def __iter__(self) -> Iterator[CurveState]:
        for k in range(len(self)):
            yield self[k]

    @property
    def end(self) -> CurveState:
        return self[len(self) - 1]

    def spline(self) -> CubicHermiteSpline:
        """Cubic Hermite interpolant of the packed state using the stored derivatives."""
        if self._spline is None:
            order = np.argsort(self.s)
            self._spline = CubicHermiteSpline(self.s[order], self.Y[order], self.dY[order], axis=0)
        return self._spline

    def state_at(self, s: float) -> CurveState:
        return CurveState.unpack(s, self.spline()(s), self.n)

    def columns(self) -> list[str]:
        comp = "wxyz"
        names = ["s"]
        names += [f"z{q + 1}_{c}" for q in range(self.n) for c in comp]
        names += [f"zp{q + 1}_{c}" for q in range(self.n) for c in comp]
        for l in range(3, self.n + 1):
            names += [f"P{l}_{q + 1}_{c}" for q in range(self.n) for c in comp]
        names += [f"acc{q + 1}_{c}" for q in range(self.n) for c in comp]
        return names

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns())
            for s, y in zip(self.s, self.Y):
                w.writerow([format(s, ".17g")] + [format(v, ".17g") for v in y])


def integrate_curve(
    init: CurveState,
    coeffs: LegendreCoefficients,
    b=None,
    s_end: float = 2 * math.pi,
    step: float = 1e-3,
    renormalize: bool = False,
    check_init: bool = True,
) -> Trajectory:
    """Classical RK4 from ``init.s`` to ``s_end`` with a fixed step.

    The step is shrunk slightly so that it divides the interval evenly; s_end
    may lie before init.s (the curve is then integrated backwards).  State
    updates use compensated summation so roundoff does not swamp the O(h^4)
    truncation error on long runs.  No projection back to the constraint set
    happens unless ``renormalize`` is set.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if init.n != coeffs.n:
        raise ValueError(f"state has n={init.n}, coefficients n={coeffs.n}")
    if check_init:
        d = constraint_defect(init)
        if d.max > 1e-12:
            raise ValueError(f"initial state violates the frame constraints (defect {d.max:.3e})")
    n = init.n
    span = s_end - init.s
    steps = max(1, int(round(abs(span) / step))) if span != 0 else 0
    h = span / steps if steps else 0.0

    y = init.pack()
    comp = np.zeros_like(y)
    s_grid = init.s + h * np.arange(steps + 1)
    if steps:
        s_grid[-1] = s_end
    Y = np.empty((steps + 1, y.size))
    dY = np.empty_like(Y)
    Y[0] = y
    f = lambda s, v: _rhs(s, v, coeffs, b, n)
    for k in range(steps):
        s = s_grid[k]
        k1 = f(s, y)
        dY[k] = k1
        k2 = f(s + h / 2, y + (h / 2) * k1)
        k3 = f(s + h / 2, y + (h / 2) * k2)
        k4 = f(s + h, y + h * k3)
        inc = (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4) - comp
        new = y + inc
        comp = (new - y) - inc
        y = new
        if renormalize:
            y = _orthonormalize(y, n)
            comp[:] = 0.0
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at s={s_grid[k + 1]!r}")
        Y[k + 1] = y
    dY[steps] = f(s_grid[steps], y)
    return Trajectory(s_grid, Y, dY, n, coeffs, b)


@dataclass(frozen=True)
class DefectReport:
    norm_z: float
    norm_zp: float
    legendre: tuple
    z_zp: float
    gram: float

    @property
    def max(self) -> float:
        return max(self.norm_z, self.norm_zp, *self.legendre, self.z_zp, self.gram)

    def as_dict(self) -> dict:
        return {
            "norm_z": self.norm_z,
            "norm_zp": self.norm_zp,
            "legendre_I": self.legendre[0],
            "legendre_J": self.legendre[1],
            "legendre_K": self.legendre[2],
            "z_zp": self.z_zp,
            "gram": self.gram,
        }


def frame_gram_deviation(state: CurveState) -> float:
    F = state.frame()
    return float(np.max(np.abs(F @ F.T - np.eye(F.shape[0]))))


def constraint_defect(state: CurveState) -> DefectReport:
    z, zp = state.z, state.zp
    return DefectReport(
        norm_z=abs(float(z @ z) - 1.0),
        norm_zp=abs(float(zp @ zp) - 1.0),
        legendre=tuple(abs(float(real_inner(zp, apply_structure(ax, z)))) for ax in AXES),
        z_zp=abs(float(z @ zp)),
        gram=frame_gram_deviation(state),
    )


@dataclass(frozen=True)
class AccelerationParts:
    """Components of z'' in the frame: the curve-equation coefficients and the rest."""

    alpha: float
    beta: float
    gamma: float
    a: tuple
    b: tuple
    c: tuple
    d: tuple
    z_coeff: float

    @property
    def off_special(self) -> float:
        vals = self.b + self.c + self.d
        return max((abs(v) for v in vals), default=0.0)


def decompose_acceleration(state: CurveState, zpp: np.ndarray) -> AccelerationParts:
    """Project z'' on i z', j z', k z', z and on P_l, iP_l, jP_l, kP_l.

    Signs follow the curve equation: a_l is the coefficient of -P_l.
    """
    if frame_gram_deviation(state) > 1e-3:
        raise DegenerateFrameError("frame Gram matrix deviates from identity by more than 1e-3")
    I, J, K = AXES
    zp = state.zp
    al = float(zpp @ apply_structure(I, zp))
    be = float(zpp @ apply_structure(J, zp))
    ga = float(zpp @ apply_structure(K, zp))
    a = tuple(-float(zpp @ P) for P in state.P)
    b = tuple(float(zpp @ apply_structure(I, P)) for P in state.P)
    c = tuple(float(zpp @ apply_structure(J, P)) for P in state.P)
    d = tuple(float(zpp @ apply_structure(K, P)) for P in state.P)
    return AccelerationParts(al, be, ga, a, b, c, d, float(zpp @ state.z))


@dataclass
class SpecialnessReport:
    s: np.ndarray
    off_special: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    a: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(self.off_special)) if self.off_special.size else 0.0


def specialness_defect(
    traj: Trajectory, coeffs: Optional[LegendreCoefficients] = None, method: str = "rhs"
) -> SpecialnessReport:
    """Per-sample size of the iP_l, jP_l, kP_l components of z''.

    ``method="rhs"`` takes z'' from the stored derivatives, ``"difference"``
    from central differences of z' (interior samples only).
    """
    n = traj.n
    m = 4 * n
    if method == "rhs":
        idx = range(len(traj))
        zpp_of = lambda k: traj.dY[k, m : 2 * m]
    elif method == "difference":
        idx = range(1, len(traj) - 1)
        zpp_of = lambda k: (traj.Y[k + 1, m : 2 * m] - traj.Y[k - 1, m : 2 * m]) / (
            traj.s[k + 1] - traj.s[k - 1]
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    rows = []
    for k in idx:
        parts = decompose_acceleration(traj[k], zpp_of(k))
        rows.append((traj.s[k], parts.off_special, parts.alpha, parts.beta, parts.gamma, parts.a))
    s = np.array([r[0] for r in rows])
    return SpecialnessReport(
        s=s,
        off_special=np.array([r[1] for r in rows]),
        alpha=np.array([r[2] for r in rows]),
        beta=np.array([r[3] for r in rows]),
        gamma=np.array([r[4] for r in rows]),
        a=np.array([r[5] for r in rows]).reshape(len(rows), n - 2),
    )


def coefficients_from_config(n: int, alpha, beta, gamma, a: Sequence = ()) -> LegendreCoefficients:
    return LegendreCoefficients(
        ScalarFunction.from_json(alpha),
        ScalarFunction.from_json(beta),
        ScalarFunction.from_json(gamma),
        tuple(ScalarFunction.from_json(f) for f in a),
        n,
    )
