"""Quaternions, vectors in H^n and the structures I, J, K.

Vectors in H^n are handled as flat real arrays of length 4n (last axis),
ordered quaternion by quaternion as (w, x, y, z).  :class:`HVector` is a thin
wrapper for code that prefers to think in quaternion entries.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


def qmul(p, q):
    """Hamilton product on arrays with trailing axis of length 4 (ij = k)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


@dataclass(frozen=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = (float(c) for c in a)
        return cls(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.as_array(), other.as_array()))
        if isinstance(other, (int, float)):
            return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.as_array() - other.as_array())

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)


ONE = Quaternion(1.0)
QI = Quaternion(0.0, 1.0)
QJ = Quaternion(0.0, 0.0, 1.0)
QK = Quaternion(0.0, 0.0, 0.0, 1.0)


def left_matrix(q) -> np.ndarray:
    """4x4 real matrix of v -> q v."""
    a = q.as_array() if isinstance(q, Quaternion) else np.asarray(q, dtype=float)
    return np.stack([qmul(a, e) for e in np.eye(4)], axis=1)


class StructureAxis(enum.Enum):
    I = "I"
    J = "J"
    K = "K"

    @property
    def unit(self) -> Quaternion:
        return {"I": QI, "J": QJ, "K": QK}[self.value]

    @property
    def matrix(self) -> np.ndarray:
        return _LEFT[self.value]


_LEFT = {name: left_matrix(q) for name, q in (("I", QI), ("J", QJ), ("K", QK))}
AXES = (StructureAxis.I, StructureAxis.J, StructureAxis.K)


def _flat(v):
    if isinstance(v, HVector):
        return v.flat
    return np.asarray(v, dtype=float)


def left_mul(q, v):
    """Componentwise left multiplication ``q * v`` for v in H^n (flat, trailing axis 4n).

    ``q`` may be a Quaternion, a length-4 array, or an array broadcastable
    against the quaternion entries of ``v`` (shape (..., 4)).
    """
    a = q.as_array() if isinstance(q, Quaternion) else np.asarray(q, dtype=float)
    flat = _flat(v)
    blocks = flat.reshape(flat.shape[:-1] + (-1, 4))
    out = qmul(a[..., None, :] if a.ndim > 1 else a, blocks).reshape(flat.shape)
    return HVector(out) if isinstance(v, HVector) else out


def apply_structure(axis: StructureAxis, v):
    """Return I v, J v or K v (left multiplication by i, j or k in every entry)."""
    flat = _flat(v)
    if flat.shape[-1] % 4:
        raise ValueError(f"length {flat.shape[-1]} is not a multiple of 4")
    blocks = flat.reshape(flat.shape[:-1] + (-1, 4))
    # Left multiplication by a unit imaginary only permutes and negates components.
    out = (blocks @ axis.matrix.T).reshape(flat.shape)
    return HVector(out) if isinstance(v, HVector) else out


def structure_matrix(axis: StructureAxis, n: int) -> np.ndarray:
    """The 4n x 4n real matrix of the structure on H^n."""
    return np.kron(np.eye(n), axis.matrix)


def real_inner(u, v):
    """Euclidean inner product on R^{4n}, i.e. sum of Re(u_k conj(v_k))."""
    a = _flat(u)
    b = _flat(v)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    return np.sum(a * b, axis=-1)


class HVector:
    """An element of H^n stored as an (n, 4) array of quaternion coefficients."""

    __slots__ = ("_q",)

    def __init__(self, data):
        a = np.array(data, dtype=float)
        if a.ndim == 1:
            if a.size % 4:
                raise ValueError("flat HVector data must have length 4n")
            a = a.reshape(-1, 4)
        if a.ndim != 2 or a.shape[1] != 4:
            raise ValueError(f"expected shape (n, 4), got {a.shape}")
        a.setflags(write=False)
        self._q = a

    @classmethod
    def zeros(cls, n: int) -> "HVector":
        return cls(np.zeros((n, 4)))

    @classmethod
    def basis(cls, n: int, k: int, q: Quaternion = ONE) -> "HVector":
        """q placed in entry k (0-based), zero elsewhere."""
        a = np.zeros((n, 4))
        a[k] = q.as_array()
        return cls(a)

    @classmethod
    def from_quaternions(cls, qs) -> "HVector":
        return cls([q.as_array() for q in qs])

    @property
    def n(self) -> int:
        return self._q.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self._q.reshape(-1)

    @property
    def quaternions(self) -> list[Quaternion]:
        return [Quaternion.from_array(r) for r in self._q]

    def __len__(self):
        return self.n

    def __getitem__(self, k) -> Quaternion:
        return Quaternion.from_array(self._q[k])

    def __add__(self, other: "HVector") -> "HVector":
        return HVector(self._q + other._q)

    def __sub__(self, other: "HVector") -> "HVector":
        return HVector(self._q - other._q)

    def __neg__(self) -> "HVector":
        return HVector(-self._q)

    def __mul__(self, c: float) -> "HVector":
        return HVector(self._q * float(c))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, HVector) and np.array_equal(self._q, other._q)

    def __hash__(self):
        return hash(self._q.tobytes())

    def __repr__(self):
        return f"HVector({self._q.tolist()})"

    def inner(self, other: "HVector") -> float:
        return float(real_inner(self, other))

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))
