"""
Independent numerical ground truth for the perturbative formulas.

Nothing here imports :mod:`caustic.perturbation_engine`; the expansion
coefficients are measured from actual maximal perimeters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .billiard_dynamics import el_residual
from .boundary_geometry import TWO_PI, DeformedBoundary
from .errors import ValidationError
from .fourier_profile import FourierProfile
from .variational_orbits import ActionSample, maximize_perimeter

__all__ = ["ExpansionEstimate", "DEFAULT_EPS", "default_eps_grid", "fd_expansion", "brute_pq",
           "el_orbit_check"]

DEFAULT_EPS = (1e-2, 7.5e-3, 5e-3, 2.5e-3, 1.25e-3)


@dataclass(frozen=True)
class ExpansionEstimate:
    """Measured ``P_q(theta, eps) ~ order0 + order1 eps + order2 eps^2``."""

    order0: float
    order1: float
    order2: float
    err0: float
    err1: float
    err2: float
    eps_grid: tuple[float, ...]
    richardson_order: int = 4

    def to_json(self) -> dict:
        return {"order0": self.order0, "order1": self.order1, "order2": self.order2,
                "err0": self.err0, "err1": self.err1, "err2": self.err2,
                "eps_grid": list(self.eps_grid), "richardson_order": self.richardson_order}


def default_eps_grid(n: FourierProfile, m: FourierProfile | None = None) -> tuple[float, ...]:
    """The default grid, shrunk by ``4/k_max^2`` for profiles with high harmonics.

    Curvature perturbations scale like ``eps k^2``, so the grid keeps
    ``eps k^2`` of order one or less.
    """
    top = max(n.max_harmonic(), m.max_harmonic() if m is not None else 0, 1)
    scale = min(1.0, 4.0 / top ** 2)
    return tuple(e * scale for e in DEFAULT_EPS)


def _fit(eps, y, powers):
    """Least squares in the monomials ``eps**powers``; returns coefficients and their spread."""
    A = np.vander(eps, max(powers) + 1, increasing=True)[:, powers]
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(eps) - len(powers), 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.pinv(A.T @ A)
    return coef, np.sqrt(np.maximum(np.diag(cov), 0.0))


def fd_expansion(n: FourierProfile, m: FourierProfile | None, q: int, theta: float,
                 eps_grid=None, seed: int = 0) -> ExpansionEstimate:
    """Extract the ``eps``-expansion of ``P_q(theta)`` from optimized perimeters.

    Each ``eps`` is sampled on both sides (``-eps`` is the boundary built from
    ``-n`` with the same ``m``).  The even part is fitted with
    ``1, eps^2, eps^4`` and the odd part with ``eps, eps^3, eps^5``, which
    removes the ``eps^3`` contamination of the second-order coefficient.
    Error bars combine the fit standard error with the change when the
    highest power is dropped.
    """
    m = m if m is not None else FourierProfile.zero()
    eps = np.array(sorted(eps_grid if eps_grid is not None else default_eps_grid(n, m)),
                   dtype=float)
    if eps.size < 3 or np.any(eps <= 0):
        raise ValidationError("need at least three positive eps values")
    plus, minus = [], []
    for e in eps:
        bp = DeformedBoundary(n, m, float(e))
        bm = DeformedBoundary(-n, m, float(e))
        plus.append(maximize_perimeter(bp, q, theta, seed=seed).value)
        minus.append(maximize_perimeter(bm, q, theta, seed=seed).value)
    plus, minus = np.array(plus), np.array(minus)
    even, odd = (plus + minus) / 2, (plus - minus) / 2
    ce, se = _fit(eps, even, [0, 2, 4])
    co, so = _fit(eps, odd, [1, 3, 5])
    ce_lo, _ = _fit(eps, even, [0, 2])
    co_lo, _ = _fit(eps, odd, [1, 3])
    err0 = float(se[0] + abs(ce[0] - ce_lo[0]))
    err2 = float(se[1] + abs(ce[1] - ce_lo[1]))
    err1 = float(so[0] + abs(co[0] - co_lo[0]))
    return ExpansionEstimate(float(ce[0]), float(co[0]), float(ce[1]), err0, err1, err2,
                             tuple(float(e) for e in eps))


def _chords(b: DeformedBoundary, angles: np.ndarray) -> np.ndarray:
    z = np.asarray(b.point(angles))
    return np.sum(np.abs(np.diff(z, axis=-1)), axis=-1)


def brute_pq(b: DeformedBoundary, q: int, theta: float, grid_density: int = 200) -> float:
    """Exhaustive grid maximum over the free vertices, then a local polish (q in {2, 3})."""
    if q not in (2, 3):
        raise ValidationError("brute force is limited to q in {2, 3}")
    theta = float(theta)
    g = theta + TWO_PI * (np.arange(grid_density) + 0.5) / grid_density
    end = theta + TWO_PI
    if q == 2:
        ang = np.stack([np.full_like(g, theta), g, np.full_like(g, end)], axis=-1)
        vals = _chords(b, ang)
        i = int(np.argmax(vals))
        h = TWO_PI / grid_density
        res = minimize_scalar(lambda t: -float(_chords(b, np.array([theta, t, end]))),
                              bounds=(g[i] - h, g[i] + h), method="bounded",
                              options={"xatol": 1e-13})
        return float(max(vals[i], -res.fun))
    t1, t2 = np.meshgrid(g, g, indexing="ij")
    ang = np.stack([np.full_like(t1, theta), t1, t2, np.full_like(t1, end)], axis=-1)
    vals = np.where(t1 < t2, _chords(b, ang), -np.inf)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x0 = np.array([g[i], g[j]])
    res = minimize(lambda x: -float(_chords(b, np.array([theta, x[0], x[1], end]))), x0,
                   method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return float(max(vals[i, j], -res.fun))


def el_orbit_check(b: DeformedBoundary, sample: ActionSample, tol: float = 1e-8) -> bool:
    """True when every free (interior) vertex satisfies the reflection law to ``tol``."""
    r = el_residual(b, sample.config)
    return bool(np.all(np.abs(r[1:]) <= tol))
