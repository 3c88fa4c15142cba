"""
Command-line front end: ``caustic {validate,expand,obstruct,oracle,orbit}``.

JSON goes to ``--out`` (or stdout); tables are RFC-4180 CSV.  Floats are
written with 17 significant digits.  Exit codes: 0 success (mathematical
verdicts live in the payload), 2 parse or I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

import numpy as np

from .billiard_dynamics import el_residual, reflection_angles
from .boundary_geometry import TWO_PI, DeformedBoundary
from .errors import CausticError, ConvergenceError, GeometryError, ValidationError
from .fourier_profile import (FourierProfile, check_constraints, decay_condition, slowest_decay,
                              tq_member)
from .obstruction_analyzer import VERDICT_TOL, coexistence_verdict
from .oracle import default_eps_grid, fd_expansion
from .perturbation_engine import dq_evaluate, dq_fourier, first_order_term, m_term
from .variational_orbits import maximize_perimeter

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# -- output ---------------------------------------------------------------------


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj: Any) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON with 17-significant-digit floats and ``null`` for non-finite values."""
    return _encode(obj) + "\n"


def _cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return fmt(v) if math.isfinite(v) else ""
    return str(v)


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# -- input ----------------------------------------------------------------------


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_profile(path: str) -> FourierProfile:
    data = _read_json(path)
    if "n" in data and "terms" not in data:
        data = data["n"]
    return FourierProfile.from_json(data)


def _load_pair(path: str) -> tuple[FourierProfile, FourierProfile]:
    """``(n, m)`` from a profile file or a boundary file."""
    data = _read_json(path)
    if "terms" in data:
        return FourierProfile.from_json(data), FourierProfile.zero()
    zero = {"kind": "exp", "terms": []}
    return FourierProfile.from_json(data.get("n", zero)), FourierProfile.from_json(data.get("m", zero))


def _load_boundary(path: str, epsilon: float | None) -> DeformedBoundary:
    data = _read_json(path)
    if "terms" in data:
        return DeformedBoundary(FourierProfile.from_json(data), epsilon=epsilon or 0.0)
    if epsilon is not None:
        data = dict(data, epsilon=epsilon)
    return DeformedBoundary.from_json(data)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CAUSTIC_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(fn, items))


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


# -- commands ---------------------------------------------------------------------


def cmd_validate(args) -> int:
    n = _load_profile(args.input)
    report = {
        "input": args.input,
        "max_harmonic": n.max_harmonic(),
        "cutoff": n.cutoff,
        "even": n.is_even(),
        "constraints": check_constraints(n, args.tol).to_json(),
        "T_2": tq_member(n, 2),
        "T_3": tq_member(n, 3),
    }
    report["membership"] = " ".join(
        f"{'in' if report[f'T_{q}'] else 'not in'} T_{q}" for q in (2, 3))
    if not n.is_zero():
        est = slowest_decay(n)
        report["decay"] = {"indices": list(est.indices), "w": list(est.w),
                           "verdict": decay_condition(est), "heuristic": True}
    _emit(dumps(report), args.out)
    return EXIT_OK


def _grid(size: int) -> np.ndarray:
    return TWO_PI * np.arange(size) / size


def cmd_expand(args) -> int:
    n, m = _load_pair(args.input)
    th = _grid(args.grid)
    rows = []
    for q in args.q:
        first = first_order_term(n, q, th)
        dq = dq_evaluate(n, q, th)
        series = dq_fourier(n, q, strict=False).evaluate(th)
        mt = m_term(m, q, th)
        for i, t in enumerate(th):
            rows.append((q, t, first[i], dq[i], series[i], abs(dq[i] - series[i]), mt[i]))
    _emit(csv_text(("q", "theta", "first_order", "d_q", "series_eval", "diff", "m_term"), rows),
          args.out)
    return EXIT_OK


def cmd_obstruct(args) -> int:
    n = _load_profile(args.input)
    cutoff = args.cutoff if args.cutoff is not None else n.max_harmonic()
    report = coexistence_verdict(n, cutoff, tol=args.tol if args.tol is not None else VERDICT_TOL)
    _emit(dumps(report.to_json()), args.out)
    if args.table:
        _emit(csv_text(("harmonic", "d2_re", "d2_im", "d3_re", "d3_im", "residual",
                        "printed_residual"),
                       [(h, a.real, a.imag, b.real, b.imag, r, pr)
                        for h, a, b, r, pr in report.residual_rows()]), args.table)
    return EXIT_OK


ORACLE_HEADER = ("theta", "q", "quantity", "predicted", "oracle", "err_bar", "abs_err", "rel_err",
                 "status", "message")


def cmd_oracle(args) -> int:
    n, m = _load_pair(args.input)
    eps = args.eps or list(default_eps_grid(n, m))
    th = [args.theta] if args.theta is not None else list(_grid(args.grid))
    jobs = [(q, t) for q in args.q for t in th]

    def run(job):
        q, t = job
        try:
            est = fd_expansion(n, m, q, float(t), eps, seed=args.seed)
        except CausticError as exc:
            return [(t, q, "all", float("nan"), float("nan"), float("nan"), float("nan"),
                     float("nan"), "error", f"{type(exc).__name__}: {exc}")]
        pred1 = float(first_order_term(n, q, t))
        pred2 = float(dq_evaluate(n, q, t) + m_term(m, q, t))
        out = []
        for name, p, o, e in (("order0", 2 * q * math.sin(math.pi / q), est.order0, est.err0),
                              ("order1", pred1, est.order1, est.err1),
                              ("order2", pred2, est.order2, est.err2)):
            ae = abs(o - p)
            out.append((t, q, name, p, o, e, ae, ae / max(abs(p), 1.0), "ok", ""))
        return out

    rows = [r for block in _map(run, jobs) for r in block]
    _emit(csv_text(ORACLE_HEADER, rows), args.out)
    return EXIT_OK


def cmd_orbit(args) -> int:
    b = _load_boundary(args.input, args.epsilon)
    theta = args.theta if args.theta is not None else 0.0
    rows, summary = [], []
    for q in args.q:
        s = maximize_perimeter(b, q, theta, seed=args.seed)
        res = el_residual(b, s.config)
        ang = np.asarray(s.config.angles[:-1])
        v = reflection_angles(b, s.config)
        for i, t in enumerate(ang):
            rows.append((q, i, t, b.arc_length(t) % b.perimeter, v[i], res[i]))
        summary.append({"q": q, "theta": theta, "perimeter": s.value,
                        "interior_residual": float(np.max(np.abs(res[1:]))),
                        "multistart_spread": s.multistart_spread})
    _emit(csv_text(("q", "i", "theta", "s", "v", "el_residual"), rows), args.out)
    sys.stderr.write(dumps({"orbits": summary}))
    return EXIT_OK


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="caustic", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, q_default="2"):
        sp.add_argument("--input", required=True, help="profile or boundary JSON")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--q", type=_ints, default=_ints(q_default), help="comma-separated q values")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    v = sub.add_parser("validate", help="constraint report for a profile")
    v.add_argument("--input", required=True)
    v.add_argument("--out", default=None)
    v.add_argument("--tol", type=float, default=1e-10)
    v.set_defaults(func=cmd_validate)

    e = common(sub.add_parser("expand", help="first-order term, D_q and series spot checks"))
    e.add_argument("--grid", type=int, default=64)
    e.set_defaults(func=cmd_expand)

    o = sub.add_parser("obstruct", help="coexistence verdict for 1/2 and 1/3 caustics")
    o.add_argument("--input", required=True)
    o.add_argument("--out", default=None)
    o.add_argument("--cutoff", type=int, default=None)
    o.add_argument("--tol", type=float, default=None)
    o.add_argument("--table", default=None, help="also write the residual table as CSV")
    o.set_defaults(func=cmd_obstruct)

    r = common(sub.add_parser("oracle", help="finite-difference expansion vs formulas"))
    r.add_argument("--eps", type=_floats, default=None, help="comma-separated eps grid")
    r.add_argument("--grid", type=int, default=8, help="number of base angles")
    r.add_argument("--theta", type=float, default=None, help="single base angle")
    r.set_defaults(func=cmd_oracle)

    b = common(sub.add_parser("orbit", help="maximal pinned q-gon and its EL residuals"), "3")
    b.add_argument("--theta", type=float, default=None)
    b.add_argument("--epsilon", type=float, default=None,
                   help="deformation size when --input is a bare profile")
    b.set_defaults(func=cmd_orbit)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    for name in ("tol",):
        val = getattr(args, name, None)
        if val is not None and val <= 0:
            sys.stderr.write("caustic: tolerances must be positive\n")
            return EXIT_INPUT
    try:
        return args.func(args)
    except ConvergenceError as exc:
        sys.stderr.write(f"caustic: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, ValidationError, GeometryError, ValueError) as exc:
        sys.stderr.write(f"caustic: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
