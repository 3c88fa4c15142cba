"""
Real trigonometric series used as radial deformation jets.

A profile stores the exponential-form coefficients ``n_k`` of

    n(theta) = sum_k n_k exp(i k theta)

in a sparse map.  Realness (``n_{-k} = conj(n_k)``) is enforced on
construction, so every evaluation is real up to round-off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError

__all__ = [
    "FourierProfile",
    "ConstraintReport",
    "ModularEstimate",
    "evaluate",
    "derivative",
    "q_average",
    "check_constraints",
    "sup_norm",
    "tq_member",
    "slowest_decay",
    "decay_condition",
]

SUP_GRID = 4096
REALNESS_TOL = 1e-12


@dataclass(frozen=True)
class FourierProfile:
    """Sparse, immutable real trigonometric series.

    Parameters
    ----------
    coeffs : mapping int -> complex
        Exponential-form coefficients.  Missing indices are zero.  Both
        ``k`` and ``-k`` must be present with conjugate values.
    cutoff : int, optional
        Largest admissible ``|k|``; defaults to the largest stored index.
    truncated : bool
        True when the stored coefficients are a truncation of an infinite
        series (affects the decay classification only).
    """

    coeffs: Mapping[int, complex]
    cutoff: int = -1
    truncated: bool = False
    _ks: np.ndarray = field(init=False, repr=False, compare=False)
    _cs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        clean = {}
        for k, c in self.coeffs.items():
            if int(k) != k:
                raise ValidationError(f"non-integer harmonic index {k!r}")
            c = complex(c)
            if c != 0:
                clean[int(k)] = c
        for k, c in clean.items():
            partner = clean.get(-k, 0j)
            if abs(partner - c.conjugate()) > REALNESS_TOL * max(1.0, abs(c)):
                raise ValidationError(
                    f"realness violated at k={k}: n_k={c}, n_-k={partner}")
        top = max((abs(k) for k in clean), default=0)
        cutoff = top if self.cutoff < 0 else int(self.cutoff)
        if cutoff < top:
            raise ValidationError(f"cutoff {cutoff} below stored index {top}")
        ks = np.array(sorted(clean), dtype=int)
        object.__setattr__(self, "coeffs", dict((int(k), clean[k]) for k in ks))
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "_ks", ks)
        object.__setattr__(self, "_cs", np.array([clean[k] for k in ks], dtype=complex))

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls) -> "FourierProfile":
        return cls({})

    @classmethod
    def from_trig(cls, cos: Mapping[int, float] | None = None,
                  sin: Mapping[int, float] | None = None,
                  const: float = 0.0, **kw) -> "FourierProfile":
        """Build from ``const + sum a_k cos(k t) + b_k sin(k t)``."""
        coeffs: dict[int, complex] = {}
        if const:
            coeffs[0] = complex(const)
        for k in set(cos or {}) | set(sin or {}):
            if k < 1:
                raise ValidationError(f"trig harmonic must be >= 1, got {k}")
            a = float((cos or {}).get(k, 0.0))
            b = float((sin or {}).get(k, 0.0))
            coeffs[k] = coeffs.get(k, 0j) + complex(a, -b) / 2
            coeffs[-k] = coeffs.get(-k, 0j) + complex(a, b) / 2
        return cls(coeffs, **kw)

    @classmethod
    def from_json(cls, data: Mapping | str) -> "FourierProfile":
        """Load the ``{"kind": "exp"|"trig", "terms": [...]}`` schema."""
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, Mapping) or "terms" not in data:
            raise ValidationError("profile JSON needs a 'terms' list")
        kind = data.get("kind", "exp")
        extra = {"truncated": bool(data.get("truncated", False))}
        if "cutoff" in data:
            extra["cutoff"] = int(data["cutoff"])
        try:
            if kind == "exp":
                coeffs: dict[int, complex] = {}
                for t in data["terms"]:
                    k = int(t["k"])
                    coeffs[k] = coeffs.get(k, 0j) + complex(float(t.get("re", 0.0)),
                                                            float(t.get("im", 0.0)))
                prof = cls(coeffs, **extra)
            elif kind == "trig":
                cos, sin, const = {}, {}, 0.0
                for t in data["terms"]:
                    k = int(t["k"])
                    if k == 0:
                        const += float(t.get("cos", 0.0))
                        continue
                    cos[k] = cos.get(k, 0.0) + float(t.get("cos", 0.0))
                    sin[k] = sin.get(k, 0.0) + float(t.get("sin", 0.0))
                prof = cls.from_trig(cos, sin, const, **extra)
            else:
                raise ValidationError(f"unknown profile kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed profile term: {exc}") from exc
        if data.get("even") and not prof.is_even():
            raise ValidationError("profile flagged even but has sine terms")
        return prof

    def to_json(self) -> dict:
        return {
            "kind": "exp",
            "terms": [{"k": k, "re": c.real, "im": c.imag} for k, c in self.coeffs.items()],
            "even": self.is_even(),
            "cutoff": self.cutoff,
            "truncated": self.truncated,
        }

    # -- basic queries -------------------------------------------------------

    def __getitem__(self, k: int) -> complex:
        return self.coeffs.get(int(k), 0j)

    def __call__(self, theta):
        return evaluate(self, theta)

    def indices(self) -> np.ndarray:
        return self._ks.copy()

    def max_harmonic(self) -> int:
        return int(np.max(np.abs(self._ks))) if self._ks.size else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_even(self, tol: float = REALNESS_TOL) -> bool:
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.coeffs.values())

    def scaled(self, factor: float) -> "FourierProfile":
        return FourierProfile({k: factor * c for k, c in self.coeffs.items()},
                              cutoff=self.cutoff, truncated=self.truncated)

    def __add__(self, other: "FourierProfile") -> "FourierProfile":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        return FourierProfile(out, cutoff=max(self.cutoff, other.cutoff),
                              truncated=self.truncated or other.truncated)

    def __neg__(self) -> "FourierProfile":
        return self.scaled(-1.0)

    def normalized(self) -> "FourierProfile":
        """Rescale to unit sup-norm; the zero profile is returned unchanged."""
        s = sup_norm(self)
        return self if s == 0 else self.scaled(1.0 / s)


def evaluate(profile: FourierProfile, theta, order: int = 0):
    """Evaluate the ``order``-th derivative of the series at ``theta``.

    Accepts scalars or arrays.  The imaginary round-off residue is checked
    against ``1e-12`` (relative to the coefficient l1 mass) and dropped.
    """
    th = np.asarray(theta, dtype=float)
    if profile._ks.size == 0:
        return np.zeros_like(th) if th.ndim else 0.0
    cs = profile._cs * (1j * profile._ks) ** order if order else profile._cs
    phase = np.exp(1j * np.multiply.outer(th, profile._ks))
    val = phase @ cs
    scale = float(np.sum(np.abs(cs))) or 1.0
    if np.max(np.abs(val.imag)) > REALNESS_TOL * max(1.0, scale):
        raise ValidationError("profile evaluation is not real")
    out = val.real
    return float(out) if th.ndim == 0 else out


def derivative(profile: FourierProfile, order: int = 1) -> FourierProfile:
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    return FourierProfile({k: (1j * k) ** order * c for k, c in profile.coeffs.items()},
                          cutoff=profile.cutoff, truncated=profile.truncated)


def q_average(profile: FourierProfile, q: int) -> FourierProfile:
    """Keep the harmonics divisible by ``q`` (the 1/q-frequency average)."""
    if q < 2:
        raise ValueError("q must be >= 2")
    return FourierProfile({k: c for k, c in profile.coeffs.items() if k % q == 0},
                          cutoff=profile.cutoff, truncated=profile.truncated)


def tq_member(profile: FourierProfile, q: int, tol: float = 1e-12) -> bool:
    """True when every stored harmonic divisible by ``q`` is below ``tol``."""
    if q < 2:
        raise ValueError("q must be >= 2")
    return all(abs(c) <= tol for k, c in profile.coeffs.items() if k % q == 0)


def sup_norm(profile: FourierProfile) -> float:
    """``max |n(theta)|`` by dense grid plus bounded refinement of the best cell."""
    if profile.is_zero():
        return 0.0
    npts = max(SUP_GRID, 8 * profile.max_harmonic())
    grid = np.linspace(0.0, 2 * np.pi, npts, endpoint=False)
    vals = np.abs(evaluate(profile, grid))
    i = int(np.argmax(vals))
    h = 2 * np.pi / npts
    res = minimize_scalar(lambda t: -abs(evaluate(profile, t)),
                          bounds=(grid[i] - h, grid[i] + h), method="bounded",
                          options={"xatol": 1e-12})
    return float(max(vals[i], -res.fun))


@dataclass(frozen=True)
class ConstraintReport:
    sup_norm: float
    rescale_dev: float
    value_at_zero: float
    slope_at_zero: float
    mean: float
    tol: float

    @property
    def rescale_ok(self) -> bool:
        return self.rescale_dev <= self.tol

    @property
    def rigid_ok(self) -> bool:
        return abs(self.value_at_zero) <= self.tol and abs(self.slope_at_zero) <= self.tol

    @property
    def flux_ok(self) -> bool:
        return abs(self.mean) <= self.tol

    def to_json(self) -> dict:
        return {
            "sup_norm": self.sup_norm,
            "rescale": {"deviation": self.rescale_dev, "pass": self.rescale_ok},
            "rigid": {"n(0)": self.value_at_zero, "n'(0)": self.slope_at_zero,
                      "pass": self.rigid_ok},
            "flux": {"mean": self.mean, "pass": self.flux_ok},
            "tol": self.tol,
        }


def check_constraints(profile: FourierProfile, tol: float = 1e-10) -> ConstraintReport:
    """Rescale (unit sup-norm), rigid (``n(0) = n'(0) = 0``) and flux (zero mean)."""
    s = sup_norm(profile)
    return ConstraintReport(
        sup_norm=s,
        rescale_dev=abs(s - 1.0),
        value_at_zero=evaluate(profile, 0.0),
        slope_at_zero=evaluate(profile, 0.0, order=1),
        mean=abs(profile[0]),
        tol=tol,
    )


@dataclass(frozen=True)
class ModularEstimate:
    """Slowest-decaying coefficient subsequence and its decay exponents.

    ``w = -log|n_k|`` is used as the modular function value.
    """

    indices: tuple[int, ...]
    magnitudes: tuple[float, ...]
    truncated: bool = False

    @property
    def w(self) -> tuple[float, ...]:
        return tuple(-math.log(m) for m in self.magnitudes)

    @property
    def ratio_2exp(self) -> tuple[float, ...]:
        return tuple(w / 2.0 ** k for w, k in zip(self.w, self.indices))

    def remainder_bound(self, L: int) -> float:
        """Fourier remainder scale ``exp(-w(L)) L^2`` at the largest selected index <= L."""
        ws = [w for k, w in zip(self.indices, self.w) if k <= L]
        if not ws:
            return float("nan")
        return math.exp(-ws[-1]) * L ** 2


def slowest_decay(profile: FourierProfile, rtol: float = 1e-12) -> ModularEstimate:
    """Sup-selection: ``k_1`` attains the sup of ``|n_k|`` (ties to larger ``|k|``),
    each next index attains the sup over ``|k| > |k_i|``.  The mean ``n_0`` is skipped."""
    mags: dict[int, float] = {}
    for k, c in profile.coeffs.items():
        if k != 0:
            mags[abs(k)] = max(mags.get(abs(k), 0.0), abs(c))
    if not mags:
        raise ValidationError("slowest_decay needs a profile with a nonzero harmonic")
    indices, magnitudes = [], []
    floor = 0
    while True:
        pool = [(m, k) for k, m in mags.items() if k > floor]
        if not pool:
            break
        top = max(m for m, _ in pool)
        k = max(k for m, k in pool if m >= top * (1 - rtol))
        indices.append(k)
        magnitudes.append(mags[k])
        floor = k
    return ModularEstimate(tuple(indices), tuple(magnitudes), truncated=profile.truncated)


def decay_condition(est: ModularEstimate, threshold: float = 1.0, tail: int = 3) -> str:
    """Heuristic classification of ``w(k)/2^k`` over finite data.

    Returns ``"polynomial"`` for genuine trigonometric polynomials,
    ``"super-exponential"`` when the last ``tail`` ratios increase and the last
    one exceeds ``threshold``, else ``"fails"``.  Finite data cannot establish
    the limit; callers should report the verdict as heuristic.
    """
    if not est.truncated:
        return "polynomial"
    r = est.ratio_2exp[-tail:]
    if len(r) >= 2 and all(b > a for a, b in zip(r, r[1:])) and r[-1] > threshold:
        return "super-exponential"
    return "fails"


def profile_from_terms(terms: Iterable[tuple[int, float]]) -> FourierProfile:
    """Cosine-only shorthand: ``[(5, 1.0), (7, -1.0)]`` is ``cos 5t - cos 7t``."""
    cos: dict[int, float] = {}
    const = 0.0
    for k, a in terms:
        if k == 0:
            const += a
        else:
            cos[k] = cos.get(k, 0.0) + a
    return FourierProfile.from_trig(cos=cos, const=const)
