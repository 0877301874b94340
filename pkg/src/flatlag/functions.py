"""Closed-form scalar functions of one variable.

:class:`ScalarFunction` is a polynomial plus a sum of sinusoids.  It is closed
under differentiation and integration, evaluates exactly, and round-trips
through JSON.  Everything else in the package only relies on the small
protocol ``f(s)`` / ``f.deriv(s)``, which :class:`ComposedRatio` also follows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ScalarFunction:
    """``sum_k poly[k] s**k + sum amp * sin(freq * s + phase)``."""

    poly: tuple[float, ...] = ()
    sines: tuple[tuple[float, float, float], ...] = ()
    _d: list = field(default_factory=list, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        object.__setattr__(
            self, "sines", tuple(tuple(float(v) for v in t) for t in self.sines)
        )
        for t in self.sines:
            if len(t) != 3:
                raise ValueError("sinusoid terms are (amplitude, frequency, phase)")

    @classmethod
    def constant(cls, c: float) -> "ScalarFunction":
        return cls(poly=(c,))

    @classmethod
    def sin(cls, amp: float = 1.0, freq: float = 1.0, phase: float = 0.0) -> "ScalarFunction":
        return cls(sines=((amp, freq, phase),))

    @classmethod
    def cos(cls, amp: float = 1.0, freq: float = 1.0) -> "ScalarFunction":
        return cls(sines=((amp, freq, math.pi / 2),))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c in reversed(self.poly):
            out = out * s + c
        for amp, freq, phase in self.sines:
            out = out + amp * np.sin(freq * s + phase)
        return float(out) if out.ndim == 0 else out

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ScalarFunction.constant(other)
        if not isinstance(other, ScalarFunction):
            return NotImplemented
        m = max(len(self.poly), len(other.poly))
        p = [0.0] * m
        for k, c in enumerate(self.poly):
            p[k] += c
        for k, c in enumerate(other.poly):
            p[k] += c
        return ScalarFunction(tuple(p), self.sines + other.sines)

    __radd__ = __add__

    def scaled(self, c: float) -> "ScalarFunction":
        return ScalarFunction(
            tuple(c * a for a in self.poly),
            tuple((c * a, w, ph) for a, w, ph in self.sines),
        )

    def derivative(self) -> "ScalarFunction":
        if not self._d:
            poly = tuple(k * c for k, c in enumerate(self.poly))[1:]
            sines = tuple(
                (a * w, w, ph + math.pi / 2) for a, w, ph in self.sines if a * w != 0.0
            )
            self._d.append(ScalarFunction(poly, sines))
        return self._d[0]

    def deriv(self, s):
        return self.derivative()(s)

    def antiderivative(self) -> "ScalarFunction":
        """Antiderivative that vanishes at s = 0."""
        poly = [0.0] + [c / (k + 1) for k, c in enumerate(self.poly)]
        sines = []
        for a, w, ph in self.sines:
            if w == 0.0:
                if len(poly) < 2:
                    poly.append(0.0)
                poly[1] += a * math.sin(ph)
            else:
                # integral of a sin(w s + ph) is -(a/w) cos(w s + ph)
                sines.append((a / w, w, ph - math.pi / 2))
                poly[0] += (a / w) * math.cos(ph)
        return ScalarFunction(tuple(poly), tuple(sines))

    @property
    def is_constant(self) -> bool:
        return len(self.poly) <= 1 and all(a == 0.0 or w == 0.0 for a, w, _ in self.sines)

    def to_json(self):
        return {"poly": list(self.poly), "sin": [list(t) for t in self.sines]}

    @classmethod
    def from_json(cls, data) -> "ScalarFunction":
        """Accepts a number (constant) or ``{"poly": [...], "sin": [[a, w, phase], ...]}``."""
        if isinstance(data, bool):
            raise TypeError("booleans are not scalar functions")
        if isinstance(data, (int, float)):
            return cls.constant(float(data))
        if not isinstance(data, dict):
            raise TypeError(f"cannot build a ScalarFunction from {type(data).__name__}")
        unknown = set(data) - {"poly", "sin"}
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        return cls(tuple(data.get("poly", ())), tuple(tuple(t) for t in data.get("sin", ())))


ZERO = ScalarFunction()


def as_function(f) -> ScalarFunction:
    if isinstance(f, (int, float)):
        return ScalarFunction.constant(float(f))
    return f


@dataclass(frozen=True)
class ComposedRatio:
    """``t -> num(x(t)) / den(x(t))`` for a monotone change of variable x(t).

    ``dx_dt`` is the derivative of the inverse map; the t-derivative is formed
    by the chain rule from the closed-form derivatives of ``num`` and ``den``.
    """

    num: object
    den: object
    x_of_t: Callable[[float], float]
    dx_dt: Callable[[float], float]

    def __call__(self, t):
        x = self.x_of_t(t)
        return self.num(x) / self.den(x)

    def deriv(self, t):
        x = self.x_of_t(t)
        n, d = self.num(x), self.den(x)
        return (self.num.deriv(x) * d - n * self.den.deriv(x)) / d**2 * self.dx_dt(t)
