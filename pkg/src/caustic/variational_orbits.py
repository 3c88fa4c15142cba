"""
The pinned action ``P_q(theta)``: the largest perimeter of an inscribed
q-gon whose first vertex sits at polar angle ``theta``.

The interior vertices are found by coordinate ascent (one Newton step per
vertex) followed by a full Newton polish on the tridiagonal Hessian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .billiard_dynamics import OrbitConfiguration, el_residual
from .boundary_geometry import TWO_PI, DeformedBoundary
from .errors import ConvergenceError, ValidationError
from .tridiag import trisolve

__all__ = [
    "ActionSample",
    "PqProfile",
    "perimeter",
    "maximize_perimeter",
    "pq_profile",
    "rotation_number",
]

GRAD_TOL = 1e-13
MAX_NEWTON = 60
SWEEPS = 3
CURV_FLOOR = 0.25


@dataclass(frozen=True)
class ActionSample:
    theta: float
    q: int
    value: float
    config: OrbitConfiguration
    start_values: tuple[float, ...] = ()
    gradient_norm: float = 0.0

    @property
    def multistart_spread(self) -> float:
        return max(self.start_values) - min(self.start_values) if self.start_values else 0.0

    def to_json(self) -> dict:
        return {"theta": self.theta, "q": self.q, "value": self.value,
                "angles": list(self.config.angles), "p": self.config.p,
                "gradient_norm": self.gradient_norm,
                "multistart_spread": self.multistart_spread}


def perimeter(b: DeformedBoundary, config: OrbitConfiguration) -> float:
    z = np.asarray(b.point(np.asarray(config.angles)))
    return math.fsum(np.abs(np.diff(z)))


def _value(b, x):
    return math.fsum(np.abs(np.diff(np.asarray(b.point(x)))))


def _grad_hess(b, x):
    """Gradient and tridiagonal Hessian of the perimeter in the interior angles."""
    z, dz, d2z = b.point_jet(x)
    w = np.diff(z)
    c = np.abs(w)
    u = w / c
    # chord j joins vertex j (tail) and j + 1 (head)
    head_d = (np.conj(u) * dz[1:]).real           # d c_j / d x_{j+1}
    tail_d = -(np.conj(u) * dz[:-1]).real         # d c_j / d x_j
    perp_head = (np.conj(u) * dz[1:]).imag
    perp_tail = (np.conj(u) * dz[:-1]).imag
    head_dd = (np.conj(u) * d2z[1:]).real + perp_head ** 2 / c
    tail_dd = -(np.conj(u) * d2z[:-1]).real + perp_tail ** 2 / c
    cross = -perp_tail * perp_head / c            # d2 c_j / d x_j d x_{j+1}
    g = head_d[:-1] + tail_d[1:]
    diag = head_dd[:-1] + tail_dd[1:]
    off = cross[1:-1]
    return g, diag, off


def _shift(diag, off):
    """Smallest Levenberg shift ``mu >= 0`` (doubling) making ``H - mu I`` negative definite.

    A symmetric tridiagonal matrix is negative definite iff every Thomas pivot
    is negative.
    """
    mu = 0.0
    while True:
        piv = diag[0] - mu
        ok = piv < 0
        for i in range(1, diag.size):
            if not ok:
                break
            piv = diag[i] - mu - off[i - 1] ** 2 / piv
            ok = piv < 0
        if ok:
            return mu
        mu = max(2 * mu, CURV_FLOOR)


def _polish(b, x):
    """Coordinate ascent sweeps, then Newton on the interior angles."""
    x = x.copy()
    q = x.size - 1
    for _ in range(SWEEPS):
        for k in range(1, q):
            g, diag, _ = _grad_hess(b, x)
            step = g[k - 1] / max(-diag[k - 1], CURV_FLOOR)
            x[k] += float(np.clip(step, -0.5 * math.pi / q, 0.5 * math.pi / q))
    best = _value(b, x)
    gnorm = math.inf
    for _ in range(MAX_NEWTON):
        g, diag, off = _grad_hess(b, x)
        gnorm = float(np.max(np.abs(g)))
        if gnorm < GRAD_TOL:
            break
        step = trisolve(off, diag - _shift(diag, off), off, -g)
        alpha = 1.0
        while alpha > 1e-6:
            trial = x.copy()
            trial[1:-1] += alpha * step
            val = _value(b, trial)
            if val >= best - 1e-15 * abs(best):
                break
            alpha *= 0.5
        x = trial
        best = val
        if float(np.max(np.abs(alpha * step))) < 1e-16:
            g, _, _ = _grad_hess(b, x)
            gnorm = float(np.max(np.abs(g)))
            break
    return x, best, gnorm


def maximize_perimeter(b: DeformedBoundary, q: int, theta: float, p: int = 1,
                       seed: int = 0, jitter_starts: int = 2,
                       check_convex: bool = True) -> ActionSample:
    """Maximize the perimeter over the ``q - 1`` free vertices with vertex 0 pinned.

    Multistart: the equispaced polygon plus ``jitter_starts`` seeded random
    perturbations of it.  The best critical configuration is returned; the
    spread of the start values is kept on the sample.
    """
    if q < 2:
        raise ValidationError("q must be >= 2")
    if p != 1:
        raise NotImplementedError("only winding number 1 is supported")
    if check_convex and not b.is_circle:
        b.require_convex()
    theta = float(theta)
    base = theta + TWO_PI * np.arange(q + 1) / q
    starts = [base]
    rng = np.random.default_rng(seed)
    for _ in range(jitter_starts):
        x = base.copy()
        x[1:-1] += rng.normal(0.0, 0.05 * TWO_PI / q, q - 1)
        x[1:-1] = np.sort(x[1:-1])
        starts.append(x)
    results = []
    for x0 in starts:
        x, val, gnorm = _polish(b, x0)
        if gnorm < 1e-9 and np.all(np.diff(x) > 0):
            results.append((val, x, gnorm))
    if not results:
        raise ConvergenceError(f"no start converged for q={q}, theta={theta}")
    val, x, gnorm = max(results, key=lambda r: r[0])
    x[-1] = x[0] + TWO_PI
    config = OrbitConfiguration(tuple(x), q, p)
    return ActionSample(theta, q, val, config, tuple(r[0] for r in results), gnorm)


def interior_residual(b: DeformedBoundary, sample: ActionSample) -> float:
    """Largest Euler-Lagrange residual over the free (interior) vertices."""
    r = el_residual(b, sample.config)
    return float(np.max(np.abs(r[1:]))) if r.size > 1 else 0.0


@dataclass(frozen=True)
class PqProfile:
    q: int
    thetas: np.ndarray
    values: np.ndarray
    samples: list = field(repr=False)

    @property
    def spread(self) -> float:
        return float(np.max(self.values) - np.min(self.values))


def pq_profile(b: DeformedBoundary, q: int, grid_size: int = 64, seed: int = 0,
               workers: int = 1) -> PqProfile:
    """``P_q`` on an equispaced grid of base angles, with its max-min spread."""
    if grid_size < 8:
        raise ValidationError("grid_size must be >= 8")
    if not b.is_circle:
        b.require_convex()
    thetas = TWO_PI * np.arange(grid_size) / grid_size

    def one(t):
        return maximize_perimeter(b, q, float(t), seed=seed, check_convex=False)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            samples = list(ex.map(one, thetas))
    else:
        samples = [one(t) for t in thetas]
    return PqProfile(q, thetas, np.array([s.value for s in samples]), samples)


def rotation_number(config: OrbitConfiguration) -> Fraction:
    """``p/q`` in lowest terms from a lifted configuration."""
    a = config.angles
    p = (a[-1] - a[0]) / TWO_PI
    if abs(p - round(p)) > 1e-9:
        raise ValidationError("configuration does not close up")
    rho = Fraction(int(round(p)), config.q)
    if not 0 <= rho < 1:
        raise ValidationError(f"rotation number {rho} outside [0, 1)")
    return rho
