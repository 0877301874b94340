"""The three structure conditions on a triple of TM-valued symmetric forms.

For sigma_1, sigma_2, sigma_3 on a coordinate patch with a metric, check

(a) <sigma_i(X, Y), Z> is totally symmetric,
(b) (nabla_X sigma_i)(Y, Z) - sigma_j(X, sigma_k(Y, Z)) + sigma_k(X, sigma_j(Y, Z))
    is totally symmetric for cyclic (i, j, k),
(c) R(X, Y)Z = sum_i sigma_i(sigma_i(Y, Z), X) - sigma_i(sigma_i(X, Z), Y),

on coordinate basis vectors (enough by multilinearity).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .diffgeo import CoordinateGeometry
from .functions import as_function

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


@dataclass(frozen=True)
class SigmaComponent:
    fn: object
    var: int = 0  # coordinate the function depends on (0-based)


class SigmaSpec:
    """Components S[i, a, b, c] with sigma_i(d_a, d_b) = sum_c S[i, a, b, c] d_c.

    Entries are keyed by 0-based (i, a, b, c).  The (b, a) partner of an entry
    is filled in automatically; giving both with different functions is an
    error.
    """

    def __init__(self, dim: int, components: dict | None = None):
        self.dim = dim
        comps: dict = {}
        for key, comp in (components or {}).items():
            i, a, b, c = key
            if not (0 <= i < 3 and all(0 <= v < dim for v in (a, b, c))):
                raise ValueError(f"component index {key} out of range for dim={dim}")
            if not isinstance(comp, SigmaComponent):
                comp = SigmaComponent(as_function(comp))
            twin = (i, b, a, c)
            if twin in comps and comps[twin] != comp:
                raise ValueError(f"sigma_{i + 1} is not symmetric: {key} and {twin} differ")
            comps[key] = comp
            comps[twin] = comp
        self.components = comps

    @classmethod
    def zero(cls, dim: int) -> "SigmaSpec":
        return cls(dim)

    @classmethod
    def canonical(cls, profile) -> "SigmaSpec":
        """sigma_i(d_1, d_1) = r_i(x_1) d_1, every other component zero."""
        return cls(profile.n, {(i, 0, 0, 0): SigmaComponent(r, 0) for i, r in enumerate(profile.ratios)})

    def with_component(self, key, fn, var: int = 0) -> "SigmaSpec":
        comps = {k: v for k, v in self.components.items() if k != key and k != (key[0], key[2], key[1], key[3])}
        comps[key] = SigmaComponent(as_function(fn), var)
        return SigmaSpec(self.dim, comps)

    def tensor(self, x) -> np.ndarray:
        S = np.zeros((3, self.dim, self.dim, self.dim))
        for (i, a, b, c), comp in self.components.items():
            S[i, a, b, c] = comp.fn(x[comp.var])
        return S

    def tensor_derivative(self, x) -> np.ndarray:
        """dS[m, i, a, b, c] = d_m S[i, a, b, c]."""
        dS = np.zeros((self.dim, 3, self.dim, self.dim, self.dim))
        for (i, a, b, c), comp in self.components.items():
            dS[comp.var, i, a, b, c] = comp.fn.deriv(x[comp.var])
        return dS


def _perm_gap(T: np.ndarray) -> float:
    """Max |T - T o sigma| over permutations of the last three axes."""
    nd = T.ndim
    lead = tuple(range(nd - 3))
    worst = 0.0
    for perm in itertools.permutations(range(3)):
        axes = lead + tuple(nd - 3 + p for p in perm)
        worst = max(worst, float(np.max(np.abs(T - np.transpose(T, axes)))))
    return worst


def check_symmetry_a(sigma: SigmaSpec, geometry: CoordinateGeometry, points) -> float:
    worst = 0.0
    for x in np.atleast_2d(points):
        S = sigma.tensor(x)
        T = np.einsum("iabd,dc->iabc", S, geometry.metric(x))  # <sigma_i(d_a, d_b), d_c>
        worst = max(worst, _perm_gap(T))
    return worst


def condition_b_tensor(sigma: SigmaSpec, geometry: CoordinateGeometry, x) -> np.ndarray:
    """B[i, a, b, c, d]: d-component of the condition-(b) expression at (d_a, d_b, d_c)."""
    x = np.asarray(x, float)
    S = sigma.tensor(x)
    dS = sigma.tensor_derivative(x)
    G = geometry.christoffel(x)  # G[k, i, j]
    # (nabla_a sigma_i)(d_b, d_c) = d_a S_ibc^d + S_ibc^e G^d_ae - G^e_ab S_iec^d - G^e_ac S_ibe^d
    nab = (
        np.einsum("aibcd->iabcd", dS)
        + np.einsum("ibce,dae->iabcd", S, G)
        - np.einsum("eab,iecd->iabcd", G, S)
        - np.einsum("eac,ibed->iabcd", G, S)
    )
    B = np.empty_like(nab)
    for i, j, k in CYCLIC:
        # sigma_j(d_a, sigma_k(d_b, d_c)) = S_k bc^e S_j ae^d
        t1 = np.einsum("bce,aed->abcd", S[k], S[j])
        t2 = np.einsum("bce,aed->abcd", S[j], S[k])
        B[i] = nab[i] - t1 + t2
    return B


def check_condition_b(sigma: SigmaSpec, geometry: CoordinateGeometry, points) -> float:
    worst = 0.0
    for x in np.atleast_2d(points):
        B = condition_b_tensor(sigma, geometry, x)
        # total symmetry in (a, b, c); the vector index d rides along
        worst = max(worst, _perm_gap(np.moveaxis(B, -1, 1)))
    return worst


def gauss_rhs(sigma: SigmaSpec, x) -> np.ndarray:
    """Q[l, a, b, c]: l-component of sum_i sigma_i(sigma_i(d_b, d_c), d_a) - sigma_i(sigma_i(d_a, d_c), d_b)."""
    S = sigma.tensor(x)
    # sigma_i(sigma_i(d_b, d_c), d_a) = S_i bc^e S_i ea^l
    first = np.einsum("ibce,ieal->labc", S, S)
    return first - np.transpose(first, (0, 2, 1, 3))


@dataclass
class GaussResult:
    defect: float
    flipped_defect: float
    sign_mismatch: bool


def check_gauss_c(sigma: SigmaSpec, geometry: CoordinateGeometry, points, h: float | None = None) -> GaussResult:
    """Compare R(d_a, d_b) d_c with the sigma expression.

    A systematic sign flip (the flipped comparison is much better and the
    straight one clearly fails) is reported, not corrected.
    """
    worst = flipped = 0.0
    for x in np.atleast_2d(points):
        R = geometry.riemann(x, h)
        Q = gauss_rhs(sigma, x)
        worst = max(worst, float(np.max(np.abs(R - Q))))
        flipped = max(flipped, float(np.max(np.abs(R + Q))))
    mismatch = worst > 1e-6 and flipped < 1e-3 * worst
    return GaussResult(worst, flipped, mismatch)


def low_discrepancy_points(domain, count: int, seed: int = 0, margin: float = 0.0) -> np.ndarray:
    """Deterministic scrambled Halton points inside the box shrunk by ``margin``."""
    box = np.asarray(domain, float).reshape(-1, 2)
    lo = box[:, 0] + margin
    hi = box[:, 1] - margin
    if np.any(hi <= lo):
        raise ValueError("margin leaves an empty box")
    u = qmc.Halton(d=len(box), scramble=True, seed=seed).random(count)
    return lo + u * (hi - lo)


@dataclass
class StructeqResult:
    symmetry_a: float
    condition_b: float
    gauss_c: GaussResult
    normalization: float | None = None
    extra: dict = field(default_factory=dict)


def run_structure_checks(sigma, geometry, points, profile=None, h=None) -> StructeqResult:
    pts = np.atleast_2d(points)
    norm = None
    if profile is not None:
        norm = max(profile.normalization_defect(p[0]) for p in pts)
    return StructeqResult(
        symmetry_a=check_symmetry_a(sigma, geometry, pts),
        condition_b=check_condition_b(sigma, geometry, pts),
        gauss_c=check_gauss_c(sigma, geometry, pts, h),
        normalization=norm,
    )
