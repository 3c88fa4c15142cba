"""
Billiard map in ``(s, v)`` coordinates and the chord generating function.

``s`` is arc length measured from polar angle 0, ``s in [0, perimeter)``;
``v`` is the angle from the positive (counterclockwise) tangent to the
outgoing chord.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .boundary_geometry import TWO_PI, DeformedBoundary
from .errors import GeometryError, ValidationError

__all__ = [
    "PhasePoint",
    "OrbitConfiguration",
    "generating_h",
    "billiard_step",
    "reverse",
    "el_residual",
    "reflection_angles",
]

FD_STEP = 1e-6


@dataclass(frozen=True)
class PhasePoint:
    s: float
    v: float


@dataclass(frozen=True)
class OrbitConfiguration:
    """Lifted polar angles ``theta_0 .. theta_q`` with ``theta_q = theta_0 + 2 pi p``."""

    angles: tuple[float, ...]
    q: int
    p: int = 1

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if self.q < 2 or a.shape != (self.q + 1,):
            raise ValidationError("need q >= 2 and q + 1 lifted angles")
        if self.p < 1:
            raise ValidationError("winding number must be >= 1")
        if abs(a[-1] - a[0] - TWO_PI * self.p) > 1e-9:
            raise ValidationError("theta_q - theta_0 must equal 2 pi p")
        gaps = np.diff(a[:-1])
        if np.any(gaps < 0) or np.any(gaps >= TWO_PI):
            raise ValidationError("ordering rule violated: 0 <= theta_{i+1} - theta_i < 2 pi")
        object.__setattr__(self, "angles", tuple(float(x) for x in a))

    @classmethod
    def from_vertices(cls, vertices, p: int = 1) -> "OrbitConfiguration":
        """Close ``q`` vertex angles into a lifted configuration."""
        v = [float(x) for x in vertices]
        return cls(tuple(v + [v[0] + TWO_PI * p]), len(v), p)

    @property
    def vertices(self) -> np.ndarray:
        return np.asarray(self.angles[:-1])


def generating_h(b: DeformedBoundary, theta: float, theta2: float) -> float:
    """Negative chord length between the boundary points at two polar angles."""
    d = abs(complex(b.point(theta)) - complex(b.point(theta2)))
    if d < 1e-14:
        raise GeometryError("coincident boundary points")
    return -d


def _exit_angle(b: DeformedBoundary, theta0: float, direction: complex, v: float) -> float:
    """Polar angle in ``(theta0, theta0 + 2 pi)`` where the ray leaves the domain."""
    p0 = complex(b.point(theta0))

    def g(phi):
        w = complex(b.point(phi)) - p0
        return (direction.conjugate() * w).imag / abs(w)

    # g -> -sin v just after theta0 and -> +sin v just before theta0 + 2 pi
    delta = 1e-3 * min(v, math.pi - v)
    lo, hi = theta0 + delta, theta0 + TWO_PI - delta
    glo, ghi = g(lo), g(hi)
    if not (glo < 0 < ghi):
        raise GeometryError("could not bracket the next boundary intersection")
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=300)


def billiard_step(b: DeformedBoundary, pt: PhasePoint, check_convex: bool = True) -> PhasePoint:
    """One reflection ``(s, v) -> (s1, v1)``."""
    if not 0 < pt.v < math.pi:
        raise ValidationError("v must lie in (0, pi)")
    if check_convex and not b.is_circle:
        b.require_convex()
    theta0 = b.theta_from_arc(pt.s)
    t0, _ = b.tangent_normal(theta0)
    d = complex(t0) * complex(math.cos(pt.v), math.sin(pt.v))
    theta1 = _exit_angle(b, theta0, d, pt.v)
    t1, _ = b.tangent_normal(theta1)
    v1 = math.atan2((complex(t1) * d.conjugate()).imag, (complex(t1) * d.conjugate()).real)
    s1 = b.arc_length(theta1) % b.perimeter
    return PhasePoint(s1, v1)


def reverse(pt: PhasePoint) -> PhasePoint:
    """The reversing involution ``I(s, v) = (s, pi - v)``."""
    return PhasePoint(pt.s, math.pi - pt.v)


def _d1h(b, a, c, h=FD_STEP):
    return (generating_h(b, a + h, c) - generating_h(b, a - h, c)) / (2 * h)


def _d2h(b, a, c, h=FD_STEP):
    return (generating_h(b, a, c + h) - generating_h(b, a, c - h)) / (2 * h)


def el_residual(b: DeformedBoundary, config: OrbitConfiguration, step: float = FD_STEP) -> np.ndarray:
    """Discrete Euler-Lagrange residual per vertex, cyclically indexed.

    Component ``i`` is ``d1 h(x_i, x_{i+1}) + d2 h(x_{i-1}, x_i)`` with partials
    taken by central differences in the polar angle.
    """
    x = np.asarray(config.angles)
    q = config.q
    lift = TWO_PI * config.p
    out = np.empty(q)
    for i in range(q):
        prev = x[i - 1] if i > 0 else x[q - 1] - lift
        nxt = x[i + 1]
        if abs(nxt - x[i]) < 1e-12 or abs(x[i] - prev) < 1e-12:
            raise GeometryError("degenerate configuration: repeated vertex")
        out[i] = _d1h(b, x[i], nxt, step) + _d2h(b, prev, x[i], step)
    return out


def reflection_angles(b: DeformedBoundary, config: OrbitConfiguration) -> np.ndarray:
    """Angle ``v_i`` between the tangent at vertex ``i`` and the chord to vertex ``i+1``."""
    x = np.asarray(config.angles)
    z = np.asarray(b.point(x))
    t, _ = b.tangent_normal(x[:-1])
    chord = z[1:] - z[:-1]
    return np.angle(chord / t)
