"""
Harmonic obstruction to the coexistence of 1/2 and 1/3 rational caustics.

If both caustics survive, ``P_2`` and ``P_3`` are constant in ``theta`` to
every order.  At order ``eps^2`` this means ``D_2 + 4 m^(2)`` and
``D_3 + 3 sqrt3 m^(3)`` are constants.  Since ``m^(2)`` lives on even
harmonics and ``m^(3)`` on multiples of 3:

* ``D_{2,h} = 0`` for odd ``h`` (spade),
* ``D_{3,h} = 0`` for ``h`` not divisible by 3 (club, heart),
* ``(3 sqrt3 / 4) D_{2,6l} = D_{3,6l}`` for ``l != 0`` (diamond), because both
  sides equal ``-3 sqrt3 m_{6l}``.

The diamond residual is therefore ``|(3 sqrt3/4) D_{2,6l} - D_{3,6l}|``.  The
residual of the published form ``|4 D_{2,6l} - 3 sqrt3 D_{3,6l}|`` is
reported alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .fourier_profile import (FourierProfile, ModularEstimate, check_constraints, decay_condition,
                              slowest_decay, sup_norm, tq_member)
from .perturbation_engine import (DqSeries, c2_coefficient, c3_matrix_path, dq_fourier, kernel)

__all__ = [
    "z23_sieve",
    "generation",
    "PyramidIndexSet",
    "pyramid_set",
    "d_index_check",
    "couple_check",
    "projection_check",
    "diamond_residuals",
    "pair_coefficient",
    "delta_chain",
    "ObstructionReport",
    "coexistence_verdict",
]

SQ3 = math.sqrt(3.0)
DIAMOND = 3 * SQ3 / 4
VERDICT_TOL = 1e-6
NOISE_TOL = 1e-10


# -- arithmetic -------------------------------------------------------------------


def _in_z23(k: int) -> bool:
    return k % 2 != 0 and k % 3 != 0


def z23_sieve(L: int) -> list[int]:
    """Integers in ``[-L, L]`` coprime to 6, cross-checked against ``{6l +- 1}``."""
    if L < 1:
        raise ValidationError("L must be >= 1")
    sieve = [k for k in range(-L, L + 1) if _in_z23(k)]
    forms = sorted({6 * j + s for j in range(-(L // 6) - 1, L // 6 + 2) for s in (1, -1)
                    if abs(6 * j + s) <= L})
    if sieve != forms:  # pragma: no cover - arithmetic identity
        raise AssertionError("sieve and 6l+-1 enumeration disagree")
    return sieve


def _level(L: int) -> int:
    """The ``P`` with ``L = 6P + 1`` or ``L = 6P - 1`` (the larger when both apply)."""
    if L < 1 or not _in_z23(L):
        raise ValidationError(f"L={L} must be a positive index coprime to 6")
    return (L + 1) // 6 if L % 6 == 5 else (L - 1) // 6


def generation(k: int, P: int) -> int:
    """``G(k) = P + 1 - max(ceil(|k|/6), floor(|k|/6))``."""
    if not _in_z23(k):
        raise ValidationError(f"index {k} is not coprime to 6")
    a = abs(k)
    return P + 1 - max(-(-a // 6), a // 6)


@dataclass(frozen=True)
class PyramidIndexSet:
    L: int
    P: int
    K: int
    pairs: tuple[tuple[int, int], ...]

    @property
    def cardinality(self) -> int:
        return len(self.pairs)

    @property
    def expected(self) -> int:
        return 1 + 2 * self.P - abs(self.K)

    @property
    def cardinality_ok(self) -> bool:
        return self.cardinality == self.expected


def pyramid_set(L: int, K: int) -> PyramidIndexSet:
    """Pairs ``k > l`` in ``Z_{2,3}`` with ``k + l = 6K`` and ``|k|, |l| <= L``."""
    P = _level(L)
    if abs(K) > 2 * P:
        raise ValidationError(f"|K| must be <= 2P = {2 * P}")
    pairs = tuple((k, 6 * K - k) for k in sorted(z23_sieve(L), reverse=True)
                  if k > 6 * K - k and abs(6 * K - k) <= L)
    return PyramidIndexSet(L, P, K, pairs)


def d_index_check(L: int) -> list[dict]:
    """Per-pair generation bookkeeping for ``0 < K <= 2P``.

    Each record carries the published identity (``G(k)+G(l) = 2P-K+2`` when
    both indices are positive, ``G(k)-G(l) = K-2P`` when ``l < 0``) and the
    value actually taken by ``G``.
    """
    P = _level(L)
    out = []
    for K in range(1, 2 * P + 1):
        for k, l in pyramid_set(L, K).pairs:
            gk, gl = generation(k, P), generation(l, P)
            if l > 0:
                kind, value, stated = "sum", gk + gl, 2 * P - K + 2
            else:
                kind, value, stated = "difference", gk - gl, K - 2 * P
            out.append({"K": K, "k": k, "l": l, "kind": kind, "value": value,
                        "stated": stated, "holds": value == stated})
    return out


def couple_check(L: int) -> dict:
    """First coordinates of ``N(K-1)`` inside the coordinates of ``N(K)``.

    Returns per-``K`` booleans for the ``K - 1 > 0`` branch and for the
    ``K < 0`` branch (``pi_1 N(K)`` inside the coordinates of ``N(K-1)``).
    """
    P = _level(L)
    coords = lambda s: {x for p in s.pairs for x in p}  # noqa: E731
    first = lambda s: {p[0] for p in s.pairs}  # noqa: E731
    upper = {K: first(pyramid_set(L, K - 1)) <= coords(pyramid_set(L, K))
             for K in range(2, 2 * P + 1)}
    lower = {K: first(pyramid_set(L, K)) <= coords(pyramid_set(L, K - 1))
             for K in range(-2 * P + 1, 0)}
    return {"positive": upper, "negative": lower}


# -- harmonic equalities ------------------------------------------------------------


def _require_t23(n: FourierProfile):
    if not (tq_member(n, 2) and tq_member(n, 3)):
        raise ValidationError("profile must lie in T_2 and T_3")


def projection_check(n: FourierProfile, cutoff: int | None = None) -> dict[str, float]:
    """Largest violating coefficient of the spade, club and heart families."""
    _require_t23(n)
    d2 = dq_fourier(n, 2, cutoff)
    d3 = dq_fourier(n, 3, cutoff)
    return {
        "spade": max((abs(c) for h, c in d2.coeffs.items() if h % 2), default=0.0),
        "club": max((abs(c) for h, c in d3.coeffs.items() if h % 3 == 1), default=0.0),
        "heart": max((abs(c) for h, c in d3.coeffs.items() if h % 3 == 2), default=0.0),
    }


def diamond_residuals(n: FourierProfile, cutoff: int | None = None,
                      d2: DqSeries | None = None, d3: DqSeries | None = None) -> dict[int, dict]:
    """Residuals at harmonics ``6l`` for ``|6l| <= 2 * cutoff``, keyed by ``l``.

    ``residual`` is ``|(3 sqrt3/4) D_{2,6l} - D_{3,6l}|``; ``printed_residual``
    is ``|4 D_{2,6l} - 3 sqrt3 D_{3,6l}|``.  ``l = 0`` is included for the
    record, although constants are unconstrained.
    """
    _require_t23(n)
    cutoff = n.max_harmonic() if cutoff is None else cutoff
    d2 = d2 or dq_fourier(n, 2, cutoff)
    d3 = d3 or dq_fourier(n, 3, cutoff)
    out = {}
    for l in range(-(2 * cutoff // 6), 2 * cutoff // 6 + 1):
        a, b = d2[6 * l], d3[6 * l]
        out[l] = {"harmonic": 6 * l, "d2": a, "d3": b,
                  "residual": abs(DIAMOND * a - b),
                  "printed_residual": abs(4 * a - 3 * SQ3 * b)}
    return out


def averaged_diamond(d2: DqSeries, d3: DqSeries, grid: int = 256) -> float:
    """Grid form of the diamond test: the non-constant part of
    ``(3 sqrt3/4) * (3-average of D_2) - (2-average of D_3)``, as a sup over the grid."""
    th = 2 * math.pi * np.arange(grid) / grid
    a = DqSeries(2, {h: c for h, c in d2.coeffs.items() if h % 3 == 0 and h}).evaluate(th)
    b = DqSeries(3, {h: c for h, c in d3.coeffs.items() if h % 2 == 0 and h}).evaluate(th)
    return float(np.max(np.abs(DIAMOND * a - b))) if np.ndim(a) else 0.0


def pair_coefficient(k: int, l: int) -> complex:
    """Weight of ``n_k n_l`` (unordered pair) in ``(3 sqrt3/4) D_{2,k+l} - D_{3,k+l}``.

    Closed form for ``k, l`` coprime to 6 with ``k + l`` divisible by 6:
    ``sqrt3 (k - 1)(l + 1)`` when ``k = 1 mod 6``.
    """
    sym = lambda q: kernel(q, k, l) + (kernel(q, l, k) if k != l else 0)  # noqa: E731
    return DIAMOND * sym(2) - sym(3)


def delta_chain(n: FourierProfile, L: int | None = None) -> dict:
    """``Delta_K`` over the pyramid levels ``0 < K <= 2P`` with the recursion flags
    ``Delta_K <= L^3 sqrt(Delta_{K+1})``.  Heuristic: finite data only.

    ``Delta_K`` uses the derived pair weight; ``Delta_K_printed`` uses the
    published ``|c2 - c3|``.
    """
    if any(not _in_z23(k) for k in n.indices() if n[k] != 0):
        raise ValidationError("profile indices must be coprime to 6")
    if L is None:
        L = max(n.max_harmonic(), 1)
    P = _level(L)
    levels = []
    for K in range(1, 2 * P + 1):
        best = best_printed = 0.0
        arg = None
        for k, l in pyramid_set(L, K).pairs:
            w = abs(n[k] * n[l])
            if w == 0:
                continue
            val = abs(pair_coefficient(k, l)) * w
            if val > best:
                best, arg = val, (k, l)
            best_printed = max(best_printed, abs(c2_coefficient(k, l) - c3_matrix_path(k, l)) * w)
        levels.append({"K": K, "delta": best, "delta_printed": best_printed, "argmax": arg})
    for i, rec in enumerate(levels):
        if i + 1 < len(levels):
            nxt = levels[i + 1]["delta"]
            rec["recursion_ok"] = rec["delta"] <= L ** 3 * math.sqrt(nxt)
        else:
            rec["recursion_ok"] = True  # top level has no successor
    return {"L": L, "P": P, "levels": levels, "heuristic": True}


# -- verdict --------------------------------------------------------------------


@dataclass
class ObstructionReport:
    verdict: str
    reason: str = ""
    cutoff: int = 0
    normalization: float = 1.0
    d2: DqSeries | None = None
    d3: DqSeries | None = None
    projection: dict = field(default_factory=dict)
    diamond: dict = field(default_factory=dict)
    diamond_max: float = 0.0
    diamond_argmax: int | None = None
    averaged_diamond: float = 0.0
    delta: dict | None = None
    constraints: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    tol: float = VERDICT_TOL

    def residual_rows(self) -> list[tuple]:
        rows = []
        for l in sorted(self.diamond):
            r = self.diamond[l]
            rows.append((r["harmonic"], r["d2"], r["d3"], r["residual"], r["printed_residual"]))
        return rows

    def to_json(self) -> dict:
        cplx = lambda z: [z.real, z.imag]  # noqa: E731
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "cutoff": self.cutoff,
            "tol": self.tol,
            "normalization": self.normalization,
            "caveat": "finite-cutoff statement; 'consistent-at-cutoff' is not a proof of coexistence",
            "constraints": self.constraints,
            "projection": self.projection,
            "diamond": {
                "max_residual": self.diamond_max,
                "argmax_harmonic": self.diamond_argmax,
                "averaged_form": self.averaged_diamond,
                "rows": [{"harmonic": r["harmonic"], "d2": cplx(r["d2"]), "d3": cplx(r["d3"]),
                          "residual": r["residual"], "printed_residual": r["printed_residual"]}
                         for _, r in sorted(self.diamond.items())],
            },
            "d2": self.d2.to_json() if self.d2 else None,
            "d3": self.d3.to_json() if self.d3 else None,
            "delta_chain": self.delta,
            "diagnostics": self.diagnostics,
        }


def _pair_diagnostics(n: FourierProfile) -> dict:
    """Opposite-pair and cross-class product counts used by the avalanche argument."""
    pos = [k for k in n.indices() if k > 0 and n[k] != 0]
    cross = [(a, b) for a in pos for b in pos if a % 6 == 1 and b % 6 == 5]
    return {"opposite_pairs": len(pos), "cross_class_products": len(cross),
            "unit_harmonic_only": pos == [1]}


def coexistence_verdict(n: FourierProfile, cutoff: int | None = None, tol: float = VERDICT_TOL,
                        noise: float = NOISE_TOL, modular: ModularEstimate | None = None,
                        normalize: bool = True) -> ObstructionReport:
    """Second-order test for the coexistence of 1/2 and 1/3 caustics.

    Verdicts: ``inapplicable`` (zero, not even, or outside ``T_2 and T_3``),
    ``obstructed`` (a diamond residual at ``l != 0`` above ``tol``),
    ``indeterminate`` (largest residual between ``noise`` and ``tol``) and
    ``consistent-at-cutoff``.  Residuals refer to the sup-normalized profile.
    """
    cutoff = n.max_harmonic() if cutoff is None else int(cutoff)
    cons = check_constraints(n).to_json()
    if n.is_zero():
        return ObstructionReport("inapplicable", "zero profile (rescale constraint fails)",
                                 cutoff, constraints=cons, tol=tol)
    if n.max_harmonic() > cutoff:
        raise ValidationError(f"profile harmonic {n.max_harmonic()} exceeds cutoff {cutoff}")
    if not n.is_even():
        return ObstructionReport("inapplicable", "profile is not even", cutoff,
                                 constraints=cons, tol=tol)
    if not (tq_member(n, 2) and tq_member(n, 3)):
        missing = [q for q in (2, 3) if not tq_member(n, q)]
        return ObstructionReport("inapplicable", f"not in T_{missing[0]}", cutoff,
                                 constraints=cons, tol=tol)
    scale = sup_norm(n) if normalize else 1.0
    nn = n.scaled(1.0 / scale)
    d2, d3 = dq_fourier(nn, 2, cutoff), dq_fourier(nn, 3, cutoff)
    proj = projection_check(nn, cutoff)
    dia = diamond_residuals(nn, cutoff, d2, d3)
    live = {l: r for l, r in dia.items() if l != 0}
    if live:
        # |D_{-h}| = |D_h| for real profiles: prefer the positive harmonic on ties
        arg = max(live, key=lambda l: (round(live[l]["residual"], 12), l))
        worst = live[arg]["residual"]
    else:
        arg, worst = None, 0.0
    if worst > tol:
        verdict, reason = "obstructed", f"diamond residual {worst:.3g} at harmonic {6 * arg}"
    elif worst > noise:
        verdict, reason = "indeterminate", f"diamond residual {worst:.3g} inside the noise band"
    else:
        verdict, reason = "consistent-at-cutoff", "all diamond residuals at noise level"
    if max(proj.values()) > noise:
        reason += "; projection self-test failed"
    diag = _pair_diagnostics(nn)
    est = slowest_decay(nn)
    diag["decay_condition"] = {"verdict": decay_condition(est), "heuristic": True}
    if modular is not None:
        diag["remainder_bound"] = modular.remainder_bound(cutoff)
    try:
        delta = delta_chain(nn, max(k for k in range(1, cutoff + 1) if _in_z23(k)))
    except ValueError:
        delta = None
    return ObstructionReport(
        verdict=verdict, reason=reason, cutoff=cutoff, normalization=1.0 / scale,
        d2=d2, d3=d3, projection=proj, diamond=dia, diamond_max=worst,
        diamond_argmax=None if arg is None else 6 * arg,
        averaged_diamond=averaged_diamond(d2, d3), delta=delta,
        constraints=cons, diagnostics=diag, tol=tol)
