"""
Polar-graph boundaries ``r(theta) = 1 + eps n(theta) + eps^2 m(theta)``.

Points and vectors in the plane are handled as complex numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .errors import GeometryError
from .fourier_profile import FourierProfile, evaluate

__all__ = ["DeformedBoundary", "circle"]

TWO_PI = 2 * math.pi
ARC_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class DeformedBoundary:
    """Circle deformed radially by the jets ``n`` and ``m``.

    Positivity of the radius is checked on construction; strict convexity
    is checked on demand by :meth:`convexity_check` (and by the orbit and
    dynamics routines that need it).
    """

    n: FourierProfile = field(default_factory=FourierProfile.zero)
    m: FourierProfile = field(default_factory=FourierProfile.zero)
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise GeometryError("epsilon must be non-negative")
        rmin = self._extremum(self.radius, minimize=True)
        if rmin <= 0:
            raise GeometryError(f"radius is not positive (min {rmin:.3g})")

    @classmethod
    def from_json(cls, data: Mapping) -> "DeformedBoundary":
        zero = {"kind": "exp", "terms": []}
        return cls(FourierProfile.from_json(data.get("n", zero)),
                   FourierProfile.from_json(data.get("m", zero)),
                   float(data.get("epsilon", 0.0)))

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "n": self.n.to_json(), "m": self.m.to_json()}

    @property
    def is_circle(self) -> bool:
        return self.epsilon == 0 or (self.n.is_zero() and self.m.is_zero())

    @property
    def grid_size(self) -> int:
        top = max(self.n.max_harmonic(), self.m.max_harmonic())
        return max(4096, 8 * top)

    # -- radial function -----------------------------------------------------

    def radius(self, theta, order: int = 0):
        e = self.epsilon
        base = 1.0 if order == 0 else 0.0
        if e == 0:
            th = np.asarray(theta, dtype=float)
            return base if th.ndim == 0 else np.full(th.shape, base)
        return base + e * evaluate(self.n, theta, order) + e * e * evaluate(self.m, theta, order)

    def radius_jet(self, theta):
        """``(r, r', r'')`` at ``theta``."""
        return self.radius(theta), self.radius(theta, 1), self.radius(theta, 2)

    def point(self, theta):
        """Boundary point as a complex number ``r e^{i theta}``."""
        return self.radius(theta) * np.exp(1j * np.asarray(theta, dtype=float))

    def point_xy(self, theta) -> tuple[float, float]:
        z = complex(self.point(theta))
        return z.real, z.imag

    def point_jet(self, theta):
        """``z, dz/dtheta, d2z/dtheta2`` as complex arrays."""
        r, r1, r2 = self.radius_jet(theta)
        e = np.exp(1j * np.asarray(theta, dtype=float))
        return r * e, (r1 + 1j * r) * e, (r2 - r + 2j * r1) * e

    def tangent_normal(self, theta):
        """Unit tangent (counterclockwise) and outward unit normal."""
        _, dz, _ = self.point_jet(theta)
        t = dz / np.abs(dz)
        return t, -1j * t

    def curvature(self, theta):
        r, r1, r2 = self.radius_jet(theta)
        return (r * r + 2 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5

    # -- arc length ----------------------------------------------------------

    def _speed(self, theta: float) -> float:
        r = self.radius(theta)
        r1 = self.radius(theta, 1)
        return math.sqrt(r * r + r1 * r1)

    @cached_property
    def perimeter(self) -> float:
        if self.is_circle:
            return TWO_PI
        # periodic integrand: the trapezoid rule is spectrally accurate
        npts = 2 * self.grid_size
        th = np.linspace(0.0, TWO_PI, npts, endpoint=False)
        r, r1, _ = self.radius_jet(th)
        return float(np.sum(np.sqrt(r * r + r1 * r1)) * TWO_PI / npts)

    def arc_length(self, theta: float) -> float:
        """Arc length from polar angle 0 to ``theta`` (any real ``theta``)."""
        if self.is_circle:
            return float(theta)
        turns, rest = divmod(float(theta), TWO_PI)
        if rest == 0.0:
            return turns * self.perimeter
        if rest > math.pi:
            part = self.perimeter - self._quad(rest, TWO_PI)
        else:
            part = self._quad(0.0, rest)
        return turns * self.perimeter + part

    def _quad(self, a: float, b: float) -> float:
        val, _ = quad(self._speed, a, b, epsabs=ARC_TOL, epsrel=ARC_TOL, limit=400)
        return val

    def theta_from_arc(self, s: float) -> float:
        """Inverse of :meth:`arc_length`."""
        if self.is_circle:
            return float(s)
        turns, rest = divmod(float(s), self.perimeter)
        if rest == 0.0:
            return turns * TWO_PI
        # arc length is monotone, so one full turn always brackets the root
        lo, hi = 0.0, TWO_PI
        th = brentq(lambda t: self.arc_length(t) - rest, lo, hi, xtol=1e-14,
                    rtol=4 * np.finfo(float).eps,
                    maxiter=200)
        return turns * TWO_PI + th

    # -- convexity -----------------------------------------------------------

    def _extremum(self, f, minimize: bool) -> float:
        npts = self.grid_size
        th = np.linspace(0.0, TWO_PI, npts, endpoint=False)
        vals = np.asarray(f(th))
        i = int(np.argmin(vals) if minimize else np.argmax(vals))
        h = TWO_PI / npts
        sign = 1.0 if minimize else -1.0
        res = minimize_scalar(lambda t: sign * float(f(t)), bounds=(th[i] - h, th[i] + h),
                              method="bounded", options={"xatol": 1e-12})
        best = sign * res.fun
        return float(min(vals[i], best) if minimize else max(vals[i], best))

    def convexity_check(self) -> tuple[bool, float]:
        """``(strictly convex, min curvature)`` from a fine grid plus local refinement."""
        if self.is_circle:
            return True, 1.0
        kmin = self._extremum(self.curvature, minimize=True)
        return kmin > 0, kmin

    def require_convex(self):
        ok, kmin = self.convexity_check()
        if not ok:
            raise GeometryError(f"boundary is not strictly convex (min curvature {kmin:.3g})")


def circle() -> DeformedBoundary:
    return DeformedBoundary()
