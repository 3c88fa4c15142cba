"""
Perturbative expansion of the pinned q-gon action around the circle.

For ``r = 1 + eps n + eps^2 m`` the action expands as

    P_q(theta) = 2 q sin(pi/q) + eps * 2 q sin(pi/q) n^(q)(theta)
                 + eps^2 * [D_q(theta) + 2 q sin(pi/q) m^(q)(theta)] + O(eps^3).

``D_q`` is a quadratic form in the values ``N_j = n(theta_j^0)`` and slopes
``N'_j = n'(theta_j^0)`` at the circle vertices ``theta_j^0 = theta + 2 pi j / q``.
It is assembled from the vertex shifts ``theta_k^1`` (first variation) and
the second-order vertex displacement ``xi_k``.

Two linear systems for ``theta_k^1`` are available:

``"printed"``
    ``4 t_k - t_{k+1} - 3 t_{k-1} = R_k`` (the published tridiagonal group).
``"variational"``
    ``2 t_k - t_{k+1} - t_{k-1} = R_k``, the stationarity condition of the
    second-order perimeter; this one agrees with the finite-difference
    oracle and is the default wherever an action value is produced.

Both share ``R_k = 4 n'(theta_k^0) - (n(theta_{k+1}^0) - n(theta_{k-1}^0)) / tan(pi/q)``
and ``t_0 = t_q = 0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import ConsistencyError, ValidationError
from .fourier_profile import FourierProfile, evaluate, q_average, tq_member
from .tridiag import trisolve

__all__ = [
    "FirstVariation",
    "DqSeries",
    "theta1_solve",
    "theta1_q2",
    "theta1_q3_closed_form",
    "first_variation",
    "first_order_term",
    "m_term",
    "second_order_form",
    "dq_evaluate",
    "d2_closed_form",
    "c2_coefficient",
    "c3_coefficient",
    "c3_matrix_path",
    "c3_exponential_sum",
    "c3_printed_scalars",
    "c3_scalar_report",
    "c3_vanishing_certificate",
    "quadratic_kernel",
    "kernel",
    "dq_fourier",
    "calibrate_printed",
]

SYSTEMS = ("printed", "variational")
SQ3 = math.sqrt(3.0)
OMEGA = cmath.exp(2j * math.pi / 3)


def _mod6(k: int) -> int:
    """Residue class of ``k`` in ``{6p+1, 6p-1}`` as +1 / -1, or 0 otherwise."""
    r = k % 6
    return 1 if r == 1 else -1 if r == 5 else 0


def _require_z23(*ks: int):
    for k in ks:
        if _mod6(int(k)) == 0:
            raise ValidationError(f"index {k} is not coprime to 6")


# -- first variation -----------------------------------------------------------


def _vertex_angles(theta, q):
    return np.add.outer(np.asarray(theta, dtype=float), 2 * math.pi * np.arange(q) / q)


def _rhs(N, dN, q):
    """``R_k`` for ``k = 1 .. q-1`` from vertex values (last axis = vertex)."""
    nxt = np.roll(N, -1, axis=-1)
    prv = np.roll(N, 1, axis=-1)
    return (4 * dN - (nxt - prv) / math.tan(math.pi / q))[..., 1:]


def _bands(q: int, system: str):
    size = q - 1
    if system == "printed":
        return np.full(size - 1, -3.0), np.full(size, 4.0), np.full(size - 1, -1.0)
    if system == "variational":
        return np.full(size - 1, -1.0), np.full(size, 2.0), np.full(size - 1, -1.0)
    raise ValidationError(f"unknown system {system!r}; expected one of {SYSTEMS}")


@lru_cache(maxsize=None)
def _inverse(q: int, system: str) -> np.ndarray:
    """Dense inverse of the (q-1)x(q-1) band matrix, built column by column with Thomas."""
    lo, di, up = _bands(q, system)
    eye = np.eye(q - 1)
    inv = np.column_stack([trisolve(lo, di, up, eye[:, j]) for j in range(q - 1)])
    inv.setflags(write=False)
    return inv


def _solve_from_values(N, dN, q, system):
    """Shifts ``t_0 .. t_{q-1}`` (``t_0 = 0``) from vertex values, any leading shape."""
    if q == 2 and system == "printed":
        raise ValidationError("the printed tridiagonal group needs q >= 3; use theta1_q2")
    rhs = _rhs(N, dN, q)
    t = rhs @ _inverse(q, system).T
    return np.concatenate([np.zeros(t.shape[:-1] + (1,)), t], axis=-1)


@dataclass(frozen=True)
class FirstVariation:
    """First-order vertex data for the q-gon based at ``theta``.

    ``theta1`` holds ``t_1 .. t_{q-1}``; the pinned ``t_0 = t_q = 0`` are implicit.
    """

    q: int
    theta: float
    theta1: np.ndarray
    eta_perp: np.ndarray
    eta_par: np.ndarray
    xi_perp: np.ndarray
    xi_par: np.ndarray
    system: str = "printed"
    residual: float = 0.0

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([[0.0], self.theta1, [0.0]])


def theta1_solve(n: FourierProfile, q: int, theta: float, system: str = "printed") -> np.ndarray:
    """Solve the tridiagonal group for ``t_1 .. t_{q-1}``.

    ``system="printed"`` (default) solves the published group and needs
    ``q >= 3``; ``system="variational"`` also accepts ``q = 2``.
    """
    if q < 2 or (q < 3 and system == "printed"):
        raise ValidationError("printed system needs q >= 3 (variational: q >= 2)")
    ang = _vertex_angles(float(theta), q)
    N = evaluate(n, ang)
    dN = evaluate(n, ang, order=1)
    rhs = _rhs(N, dN, q)
    lo, di, up = _bands(q, system)
    try:
        return trisolve(lo, di, up, rhs)
    except ZeroDivisionError as exc:  # pragma: no cover - both bands are nonsingular
        raise ConsistencyError(f"singular tridiagonal system for q={q}") from exc


def tridiagonal_residual(n: FourierProfile, q: int, theta: float, t1, system: str = "printed") -> float:
    """``max_k |lhs_k - R_k|`` for a candidate solution ``t1``."""
    ang = _vertex_angles(float(theta), q)
    rhs = _rhs(evaluate(n, ang), evaluate(n, ang, order=1), q)
    t = np.concatenate([[0.0], np.asarray(t1, dtype=float), [0.0]])
    a, b = (4.0, 3.0) if system == "printed" else (2.0, 1.0)
    lhs = a * t[1:-1] - t[2:] - b * t[:-2]
    return float(np.max(np.abs(lhs - rhs)))


def theta1_q2(n: FourierProfile, theta: float) -> float:
    """Printed two-gon shift ``n'(theta + pi) - n'(theta)``."""
    return float(evaluate(n, theta + math.pi, 1) - evaluate(n, theta, 1))


def theta1_q3_closed_form(n: FourierProfile, theta: float) -> tuple[float, float]:
    """Printed closed-form solution of the q = 3 group."""
    a, b, c = (float(theta) + 2 * math.pi * j / 3 for j in range(3))
    n0, n1, n2 = (evaluate(n, x) for x in (a, b, c))
    d1, d2 = evaluate(n, b, 1), evaluate(n, c, 1)
    t1 = 4 / 13 * (d2 + 4 * d1) + (3 * n0 + n1 - 4 * n2) / (13 * SQ3)
    t2 = 4 / 13 * (3 * d1 + 4 * d2) + (-n0 - 3 * n2 + 4 * n1) / (13 * SQ3)
    return t1, t2


def first_variation(n: FourierProfile, q: int, theta: float, m: FourierProfile | None = None,
                    system: str = "variational") -> FirstVariation:
    """Shifts plus the normal/tangential parts of ``eta_k`` and ``xi_k`` at each vertex."""
    ang = _vertex_angles(float(theta), q)
    N, dN = evaluate(n, ang), evaluate(n, ang, order=1)
    M = evaluate(m, ang) if m is not None else np.zeros(q)
    if q == 2 and system == "printed":
        t1 = np.array([theta1_q2(n, theta)])
        res = 0.0
    else:
        t1 = theta1_solve(n, q, theta, system)
        res = tridiagonal_residual(n, q, theta, t1, system)
    t = np.concatenate([[0.0], t1])
    return FirstVariation(
        q=q, theta=float(theta), theta1=t1,
        eta_perp=N, eta_par=t,
        xi_perp=-0.5 * t ** 2 + dN * t + M,
        xi_par=N * t,
        system=system, residual=res,
    )


# -- first and second order terms ---------------------------------------------


def first_order_term(n: FourierProfile, q: int, theta):
    """``2 q sin(pi/q) n^(q)(theta)``."""
    if q < 2:
        raise ValidationError("q must be >= 2")
    return 2 * q * math.sin(math.pi / q) * evaluate(q_average(n, q), theta)


def m_term(m: FourierProfile, q: int, theta):
    """The ``m`` contribution to the ``eps^2`` coefficient, ``2 q sin(pi/q) m^(q)(theta)``."""
    return first_order_term(m, q, theta)


def second_order_form(N, dN, t, q: int):
    """Second-order perimeter from vertex values, slopes and shifts (``m = 0``).

    All arrays carry the vertex index on the last axis (length ``q``, with
    ``t[..., 0] = 0``).  The shift ``t`` may be any vector: the expression is
    the exact ``eps^2`` coefficient of the perimeter of the polygon with
    vertices at angles ``theta_k^0 + eps t_k`` on the deformed boundary.
    """
    s = math.sin(math.pi / q)
    c2, s2 = math.cos(2 * math.pi / q), math.sin(2 * math.pi / q)
    N1, t1 = np.roll(N, -1, axis=-1), np.roll(t, -1, axis=-1)
    xi_perp = -0.5 * t ** 2 + dN * t
    proj = ((1 - c2) * (N + N1) + s2 * (t1 - t)) ** 2 / (16 * s ** 3)
    sq = (N ** 2 + t ** 2 + N1 ** 2 + t1 ** 2) / (4 * s)
    cross = (-2 * (N * N1 + t * t1) * c2 + 2 * s2 * (N * t1 - N1 * t)) / (4 * s)
    return np.sum(2 * s * xi_perp - proj + sq + cross, axis=-1)


def dq_evaluate(n: FourierProfile, q: int, theta, system: str = "variational"):
    """``D_q(theta)``: the ``eps^2`` coefficient of ``P_q`` without the ``m`` part.

    ``system="variational"`` gives the true coefficient (it is what the
    oracle measures).  ``system="printed"`` feeds the published shifts into
    the same second-order expression and is kept for comparison.
    """
    if q < 2:
        raise ValidationError("q must be >= 2")
    th = np.asarray(theta, dtype=float)
    ang = _vertex_angles(th, q)
    N, dN = evaluate(n, ang), evaluate(n, ang, order=1)
    if q == 2 and system == "printed":
        t = np.stack([np.zeros_like(N[..., 0]), dN[..., 1] - dN[..., 0]], axis=-1)
    else:
        t = _solve_from_values(N, dN, q, system)
    out = second_order_form(N, dN, t, q)
    return float(out) if th.ndim == 0 else out


def d2_closed_form(n: FourierProfile, theta, check: bool = True, tol: float = 1e-12):
    """Published two-gon closed form ``(3 n'^2(t+pi) - n'^2(t))/2 - n'(t) n'(t+pi)``.

    For ``n`` in ``T_2`` it must coincide with ``2 n'(theta)^2``; with ``check``
    a mismatch raises :class:`ConsistencyError`.
    """
    a = evaluate(n, theta, 1)
    b = evaluate(n, np.asarray(theta) + math.pi, 1)
    val = (3 * b * b - a * a) / 2 - a * b
    if check and tq_member(n, 2):
        ref = 2 * a * a
        scale = max(1.0, float(np.max(np.abs(ref))))
        if float(np.max(np.abs(val - ref))) > tol * scale:
            raise ConsistencyError("two-gon closed form differs from 2 n'^2 on T_2")
    return val


# -- printed coefficient tables --------------------------------------------------

# Published three-gon matrices, stored with their irrational factor pulled out:
# A = A_INT, B = sqrt(3) * B_INT, C = C_INT, all over 13 sqrt(3).
A_INT = np.array([[4, -2, -2], [-2, 4, -2], [-2, -2, 4]])
B_INT = np.array([[0, 3, -3], [0, 3, 6], [0, -6, -3]])
C_INT = np.array([[0, 0, 0], [0, 36, 30], [0, 6, 36]])
C3_SCALE = 1 / (13 * SQ3)


def c2_coefficient(k: int, l: int) -> float:
    """Published two-gon table: zero within a residue class, ``2 k l`` across classes."""
    _require_z23(k, l)
    return 0.0 if _mod6(k) == _mod6(l) else 2.0 * k * l


def _v3(k: int) -> np.ndarray:
    # reduce the phase mod 3 first so large k does not lose digits
    return np.exp(2j * math.pi * (k * np.arange(3) % 3) / 3)


def c3_matrix_path(k: int, l: int) -> complex:
    """``[V(k)^T A V(l) + l V(k)^T B V(l) + k l V(k)^T C V(l)] / (13 sqrt 3)``."""
    vk, vl = _v3(k), _v3(l)
    a = vk @ A_INT @ vl
    b = SQ3 * (vk @ B_INT @ vl)
    c = vk @ C_INT @ vl
    return complex(C3_SCALE * (a + l * b + k * l * c))


def c3_exponential_sum(k: int, l: int, corrected: bool = True) -> complex:
    """The expanded exponential sum for ``c^(3)(k, l)``.

    ``corrected=False`` evaluates the sum exactly as printed.  The corrected
    form fixes two transcription slips so that each term is one matrix entry:
    the ``e^{i 2 pi l/3}`` weight is ``3 sqrt3 l - 2`` and the first
    ``36 k l`` term carries ``e^{i 2 pi (k+l)/3}``.
    """
    e = lambda a, b: cmath.exp(2j * math.pi * ((a * k + b * l) % 3) / 3)  # noqa: E731
    w01 = (3 * SQ3 * l - 2) if corrected else (3 * SQ3 - 2)
    e11 = e(1, 1) if corrected else e(2, 2)
    total = (4 - 2 * e(1, 0) - 2 * e(2, 0) + w01 * e(0, 1)
             + (4 + 3 * SQ3 * l + 36 * k * l) * e11
             + (6 * k * l - 2 - 6 * SQ3 * l) * e(2, 1)
             - (2 + 3 * SQ3 * l) * e(0, 2)
             + (-2 + 6 * SQ3 * l + 30 * k * l) * e(1, 2)
             + (4 - 3 * SQ3 * l + 36 * k * l) * e(2, 2))
    return complex(C3_SCALE * total)


def c3_coefficient(k: int, l: int, tol: float = 1e-10) -> complex:
    """Published ``c^(3)(k, l)``, evaluated through the matrix form and the
    (corrected) exponential sum; disagreement raises :class:`ConsistencyError`."""
    a = c3_exponential_sum(k, l)
    b = c3_matrix_path(k, l)
    if abs(a - b) > tol * max(1.0, abs(b)):
        raise ConsistencyError(f"c3({k},{l}): exponential sum {a} != matrix form {b}")
    return b


def c3_printed_scalars(k: int, l: int) -> dict[str, complex]:
    """The two printed closed forms for a cross-class pair (``k``, ``l`` in opposite classes).

    ``four_case`` is the short four-case table entry; ``expanded`` is the
    scalar written out from the three-gon matrices.
    """
    _require_z23(k, l)
    ck, cl = _mod6(k), _mod6(l)
    if ck == cl:
        return {"four_case": 0j, "expanded": 0j}
    sgn = 1 if ck == 1 else -1  # +1 for (6p+1, 6q-1)
    cor = (36 + 108 * k * l) + sgn * 1j * (27 * (l + k) + 24 * SQ3 * k * l)
    app = 18 - sgn * 27j * l + k * l * (66 + 24 * (OMEGA ** 2 if sgn == 1 else OMEGA))
    return {"four_case": C3_SCALE * cor, "expanded": C3_SCALE * app}


def c3_scalar_report(bound: int = 50) -> dict:
    """Largest deviation of each printed scalar from the matrix form over cross-class pairs."""
    idx = [k for k in range(-bound, bound + 1) if _mod6(k)]
    dev = {"four_case": 0.0, "expanded": 0.0}
    for k in idx:
        for l in idx:
            if _mod6(k) == _mod6(l):
                continue
            ref = c3_matrix_path(k, l)
            for name, val in c3_printed_scalars(k, l).items():
                dev[name] = max(dev[name], abs(val - ref) / max(1.0, abs(ref)))
    matches = sorted(name for name, d in dev.items() if d <= 1e-10)
    return {"bound": bound, "max_rel_deviation": dev, "matches": matches}


def c3_vanishing_certificate() -> dict:
    """Exact integer check that same-class pairs cancel in every matrix.

    For a same-class pair, ``V(k)^T X V(l)`` collects the entries of ``X`` in
    three groups ``{11,23,32}``, ``{21,12,33}``, ``{31,22,13}`` (1-based)
    weighted by ``1, w, w^2``; it vanishes when the three group sums agree.
    """
    groups = [((0, 0), (1, 2), (2, 1)), ((1, 0), (0, 1), (2, 2)), ((2, 0), (1, 1), (0, 2))]
    out = {}
    for name, X in (("A", A_INT), ("B/sqrt3", B_INT), ("C", C_INT)):
        sums = [int(sum(X[i, j] for i, j in g)) for g in groups]
        out[name] = {"group_sums": sums, "equal": len(set(sums)) == 1}
    out["all_equal"] = all(v["equal"] for v in out.values())
    return out


# -- derived kernel ---------------------------------------------------------------


@lru_cache(maxsize=None)
def quadratic_kernel(q: int) -> np.ndarray:
    """Symmetric ``2q x 2q`` matrix ``M`` with ``D_q = u^T M u``, ``u = (N, N')``.

    Built by polarization of :func:`second_order_form` with the variational
    shifts, so it carries no transcribed constants.
    """
    if q < 2:
        raise ValidationError("q must be >= 2")
    dim = 2 * q

    def form(u):
        N, dN = u[..., :q], u[..., q:]
        return second_order_form(N, dN, _solve_from_values(N, dN, q, "variational"), q)

    eye = np.eye(dim)
    diag = form(eye)
    pairs = eye[:, None, :] + eye[None, :, :]
    M = (form(pairs) - diag[:, None] - diag[None, :]) / 2
    np.fill_diagonal(M, diag)
    M = (M + M.T) / 2
    M.setflags(write=False)
    return M


def _w(q: int, ks) -> np.ndarray:
    """Columns ``(V(k), i k V(k))`` mapping a harmonic to its vertex values and slopes."""
    ks = np.asarray(ks)
    V = np.exp(2j * math.pi * (np.outer(np.arange(q), ks) % q) / q)
    return np.vstack([V, 1j * ks * V])


def kernel(q: int, k, l):
    """Derived ``K_q(k, l)`` with ``D_q = sum_{k,l} n_k n_l K_q(k,l) e^{i(k+l)theta}``."""
    M = quadratic_kernel(q)
    K = _w(q, np.atleast_1d(k)).T @ M @ _w(q, np.atleast_1d(l))
    return complex(K[0, 0]) if np.ndim(k) == 0 and np.ndim(l) == 0 else K


@dataclass(frozen=True)
class DqSeries:
    """Fourier coefficients ``D_{q,h}`` of the second-order term."""

    q: int
    coeffs: Mapping[int, complex] = field(default_factory=dict)
    source: str = "convolution"

    def __getitem__(self, h: int) -> complex:
        return self.coeffs.get(int(h), 0j)

    def harmonics(self) -> list[int]:
        return sorted(self.coeffs)

    def evaluate(self, theta):
        th = np.asarray(theta, dtype=float)
        if not self.coeffs:
            return np.zeros_like(th) if th.ndim else 0.0
        hs = np.array(self.harmonics())
        cs = np.array([self.coeffs[h] for h in hs])
        val = (np.exp(1j * np.multiply.outer(th, hs)) @ cs).real
        return float(val) if th.ndim == 0 else val

    def to_json(self) -> dict:
        return {"q": self.q, "source": self.source,
                "coeffs": [[h, self.coeffs[h].real, self.coeffs[h].imag] for h in self.harmonics()]}


def _convolve(n: FourierProfile, K: np.ndarray, zero_tol: float) -> dict[int, complex]:
    ks, cs = n._ks, n._cs
    weights = np.outer(cs, cs) * K
    sums = np.add.outer(ks, ks)
    hs, inv = np.unique(sums, return_inverse=True)
    acc = np.zeros(hs.size, dtype=complex)
    np.add.at(acc, inv.ravel(), weights.ravel())
    scale = float(np.sum(np.abs(weights))) or 1.0
    return {int(h): complex(c) for h, c in zip(hs, acc) if abs(c) > zero_tol * scale}


def dq_fourier(n: FourierProfile, q: int, cutoff: int | None = None, strict: bool = True,
               zero_tol: float = 1e-15) -> DqSeries:
    """Fourier series of ``D_q`` by convolution with the derived kernel.

    With ``strict`` the published preconditions apply: ``q`` in {2, 3} and
    ``n`` in ``T_2`` and ``T_3``.  Coefficients below ``zero_tol`` times the
    l1 mass of the products are dropped as round-off.
    """
    if cutoff is not None and n.max_harmonic() > cutoff:
        raise ValidationError(f"profile harmonic {n.max_harmonic()} exceeds cutoff {cutoff}")
    if strict:
        if q not in (2, 3):
            raise ValidationError("strict mode supports q in {2, 3}")
        if not (tq_member(n, 2) and tq_member(n, 3)):
            raise ValidationError("profile must lie in T_2 and T_3")
    if n.is_zero():
        return DqSeries(q, {}, "convolution")
    K = kernel(q, n._ks, n._ks)
    return DqSeries(q, _convolve(n, K, zero_tol), "convolution")


def printed_series(n: FourierProfile, q: int, diagonal_weight: float = 1.0) -> DqSeries:
    """Series from the published tables, ``sum_{k >= l} 2 n_k n_l c(k, l)``.

    Diagonal pairs get ``diagonal_weight`` instead of the factor 2 product
    rule.  Only defined on ``Z_{2,3}`` indices.
    """
    table = c2_coefficient if q == 2 else c3_coefficient if q == 3 else None
    if table is None:
        raise ValidationError("published tables exist for q in {2, 3} only")
    acc: dict[int, complex] = {}
    for k, ck in n.coeffs.items():
        for l, cl in n.coeffs.items():
            if k < l:
                continue
            w = diagonal_weight if k == l else 2.0
            acc[k + l] = acc.get(k + l, 0j) + w * ck * cl * table(k, l)
    return DqSeries(q, {h: c for h, c in acc.items() if c != 0}, "closed-form")


@dataclass(frozen=True)
class Calibration:
    q: int
    factor: complex
    residual: float
    scale: float

    @property
    def ok(self) -> bool:
        return self.residual <= 1e-9 * max(1.0, self.scale)

    def to_json(self) -> dict:
        return {"q": self.q, "factor": [self.factor.real, self.factor.imag],
                "residual": self.residual, "ok": self.ok}


def calibrate_printed(q: int, probe: FourierProfile | None = None, grid: int = 256) -> Calibration:
    """Least-squares global factor matching the published-table series to ``dq_evaluate``.

    Only harmonics that a constant multiple of the table could reach enter the
    fit; the residual over the full grid says whether one factor suffices.
    """
    from .fourier_profile import profile_from_terms

    if probe is None:
        probe = profile_from_terms([(5, 1.0), (7, -1.0)])
    th = 2 * math.pi * np.arange(grid) / grid
    truth = dq_evaluate(probe, q, th)
    pred = printed_series(probe, q).evaluate(th)
    denom = float(np.dot(pred, pred))
    factor = float(np.dot(pred, truth)) / denom if denom else 0.0
    resid = float(np.max(np.abs(truth - factor * pred)))
    return Calibration(q, complex(factor), resid, float(np.max(np.abs(truth))))
