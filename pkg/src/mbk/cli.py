"""Command-line front end: ``mbk <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 undecidable boundary case,
4 verification failure, 5 budget exhausted.  Rationals are written
``num/den``; the exact commands (``sp``, ``thresholds``) refuse decimal p.
Every option can also come from a JSON file given with ``--config`` whose
keys are the option names (``box``, ``p``, ...); command-line values win.
The environment variable MBK_THREADS caps worker processes for ``verify``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import geometry as g
from . import indexsets as ix
from . import kernel as kn
from . import norms as nm
from . import verify as vf
from .errors import (
    AlgebraNodeNotSupported,
    BoundaryUndecidable,
    EmptyRegionSuspected,
    EnvelopeViolated,
    NotConverged,
    OracleInconclusive,
    SequenceNotIncreasing,
    ToleranceNotReached,
    ValidationError,
)

EXIT_OK, EXIT_INPUT, EXIT_UNDECIDABLE, EXIT_VERIFY, EXIT_BUDGET = 0, 2, 3, 4, 5


class VerificationFailed(Exception):
    def __init__(self, payload):
        super().__init__("verification failed")
        self.payload = payload


# ---------------------------------------------------------------------------
# Parsing helpers


def exact_p(text) -> Fraction:
    s = str(text).strip()
    if any(ch in s for ch in ".eE"):
        raise ValidationError(f"p = {s!r}: give an exact rational num/den, not a decimal")
    return g.to_fraction(s)


def real_p(text) -> Fraction:
    return g.to_fraction(str(text).strip())


def parse_ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"cannot parse integer list {text!r}") from exc


def parse_point(text) -> list[complex]:
    if isinstance(text, (list, tuple)):
        return [complex(v) for v in text]
    try:
        return [complex(v.strip().replace(" ", "")) for v in str(text).split(",")]
    except ValueError as exc:
        raise ValidationError(f"cannot parse point {text!r}") from exc


def parse_box_arg(text, dim):
    if isinstance(text, list):
        return [tuple(map(int, r)) for r in text]
    box = ix.parse_box(text)
    if len(box) != dim:
        raise ValidationError(f"box has {len(box)} ranges but the domain has dimension {dim}")
    return box


def domain_arg(value) -> g.Domain:
    if isinstance(value, dict):
        return g.from_json(value)
    if value is None:
        raise ValidationError("--domain is required")
    return g.parse_domain(value)


# ---------------------------------------------------------------------------
# Output


def emit(args, payload, rows=None, header=None):
    """Write JSON (or CSV when rows are given and requested) to --out or stdout."""
    fmt = args.format or "json"
    if fmt == "csv":
        if rows is None:
            raise ValidationError("this command has no tabular output; use --format json")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_sp(args):
    d = domain_arg(args.domain)
    p = exact_p(args.p)
    box = parse_box_arg(args.box, d.dim)
    conds = ix.conditions_for(d)
    indices = ix.enumerate_sp(d, p, box)
    emit(args, {
        "domain": d.to_json(),
        "p": g.fraction_str(p),
        "box": [list(r) for r in box],
        "conditions": conds.to_json(),
        "indices": [list(a) for a in indices],
    }, rows=[list(a) for a in indices], header=[f"alpha{i + 1}" for i in range(d.dim)])


def cmd_thresholds(args):
    d = domain_arg(args.domain)
    ts = ix.thresholds(d)
    payload = {"domain": d.to_json(), **ts.to_json()}
    box = parse_box_arg(args.box, d.dim) if args.box else None
    candidates = list(ts.values)
    if args.candidates:
        candidates = [exact_p(c) for c in str(args.candidates).split(",")]
        payload["candidates"] = [g.fraction_str(c) for c in candidates]
    if ts.kind == "finite" and not args.no_verify:
        scans = ix.threshold_scan(d, candidates, box)
        payload["witnesses"] = [s.to_json() for s in scans]
        failed = [s.to_json() for s in scans if not s.confirmed]
        if failed:
            payload["discrepancies"] = failed
            raise VerificationFailed(payload)
    rows = [[g.fraction_str(v)] for v in ts.values]
    emit(args, payload, rows=rows, header=["p"])


def cmd_norm(args):
    d = domain_arg(args.domain)
    alpha = parse_ints(args.alpha)
    p = exact_p(args.p)
    payload = {"domain": d.to_json(), "alpha": list(alpha), "p": g.fraction_str(p)}
    try:
        cf = nm.closed_form_norm_p(d, alpha, p)
        payload["closed_form"] = cf.to_json()
    except AlgebraNodeNotSupported:
        cf = None
        payload["closed_form"] = None
    if args.oracle or cf is None:
        rep = nm.quadrature_norm_p(d, alpha, p, rel_tol=args.rel_tol or 1e-8)
        payload["oracle"] = rep.to_json()
        if cf is not None:
            agree = cf.finite == rep.in_ap
            if agree and cf.finite:
                gap = abs(rep.estimate - cf.value) / cf.value
                payload["relative_gap"] = gap
                agree = gap <= 1e-6
            payload["agree"] = agree
            if not agree:
                raise VerificationFailed(payload)
    emit(args, payload)


def cmd_kernel(args):
    d = domain_arg(args.domain)
    p = real_p(args.p)
    z, w = parse_point(args.z), parse_point(args.w)
    kv = kn.evaluate_kernel(d, p, z, w, int(args.N if args.N is not None else 60), rel_tol=args.rel_tol or 1e-10)
    payload = kv.to_json()
    rows = [[m, s.real, s.imag] for m, s in enumerate(kv.shells)]
    emit(args, payload, rows=rows, header=["shell", "re", "im"])


def cmd_verify(args):
    results = vf.run_suite(args.suite or "all", seed=int(args.seed or 0), quick=bool(args.quick))
    for r in results:
        print(r.line(), file=sys.stderr)
    payload = {
        "suite": args.suite or "all",
        "seed": int(args.seed or 0),
        "passed": all(r.passed for r in results),
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
    }
    rows = [[r.name, "pass" if r.passed else "fail"] for r in results]
    if not payload["passed"]:
        emit(args, payload, rows=rows, header=["check", "status"])
        raise VerificationFailed(None)
    emit(args, payload, rows=rows, header=["check", "status"])


def cmd_experiment(args):
    seed = int(args.seed or 0)
    kind = args.kind
    N = int(args.N) if args.N is not None else 200
    if kind == "continuity":
        d = domain_arg(args.domain or "hartogs:1")
        p = real_p(args.p or "2")
        grid = kn.interior_grid(d, int(args.grid or 9), float(args.delta or 0.3), seed)
        qs = [p + Fraction(1, 2 ** k) for k in range(1, int(args.steps or 8) + 1)]
        rows = [[g.fraction_str(q), v] for q, v in kn.continuity_experiment(d, p, grid, qs, N=N)]
        emit(args, {"kind": kind, "domain": d.to_json(), "p": g.fraction_str(p), "rows": rows}, rows, ["q", "sup_diff"])
    elif kind == "ramadanov":
        p = real_p(args.p or "2")
        seq = vf.ramadanov_sequence(int(args.steps or 12))
        grid = kn.interior_grid(seq[0], int(args.grid or 9), float(args.delta or 0.3), seed)
        res = kn.ramadanov_experiment(seq, g.DISC, p, grid, N=N)
        emit(args, {"kind": kind, "p": g.fraction_str(p), **res.to_json()}, [list(r) for r in res.rows], ["j", "sup_diff"])
    elif kind == "domination":
        d = domain_arg(args.domain or "disc")
        lo, _, hi = str(args.p or "2").partition(":")
        rep = kn.domination_check(d, (real_p(lo), real_p(hi or lo)), float(args.delta or 0.5), int(args.N or 40), seed=seed)
        rows = [[m, v] for m, v in enumerate(rep.shell_max)]
        emit(args, {"kind": kind, "domain": d.to_json(), **rep.to_json()}, rows, ["shell", "max_summand"])
    else:
        raise ValidationError(f"unknown experiment {kind!r}")


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbk",
        description="Allowable index sets, thresholds, monomial norms and p-monomial basis kernels "
        "of Reinhardt monomial polyhedra.",
        epilog="Domains: JSON or compact syntax such as omega_a:1,1,1,2, type1:1,2, type2:1,1,1, disc, "
        "hartogs:3/2, hartogs:sqrt(2), union(A,B), intersection(A,B), product(A,B), dilate(A,r). "
        "Environment: MBK_THREADS caps worker processes.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the options")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["json", "csv"], help="output format (default json)")
    common.add_argument("--domain", help="domain as JSON or compact syntax")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sp", parents=[common], help="enumerate S_p over a box")
    sp.add_argument("--p", help="exponent, exact num/den")
    sp.add_argument("--box", help="per-coordinate ranges, e.g. -4:4,-4:4")
    sp.set_defaults(func=cmd_sp)

    th = sub.add_parser("thresholds", parents=[common], help="threshold exponents with witnesses")
    th.add_argument("--no-verify", action="store_true", default=None, help="skip the witness scan")
    th.add_argument("--box", help="witness box (default: radius rule)")
    th.add_argument("--candidates", help="comma-separated rationals to scan instead of the computed set")
    th.set_defaults(func=cmd_thresholds)

    no = sub.add_parser("norm", parents=[common], help="closed-form ||e_alpha||_p^p")
    no.add_argument("--alpha", help="multi-index, e.g. 0,-1")
    no.add_argument("--p", help="exponent, num/den")
    no.add_argument("--oracle", action="store_true", default=None, help="also run the quadrature oracle")
    no.add_argument("--rel-tol", type=float, help="oracle relative tolerance")
    no.set_defaults(func=cmd_norm)

    ke = sub.add_parser("kernel", parents=[common], help="truncated p-monomial basis kernel")
    ke.add_argument("--p", help="exponent (decimals allowed)")
    ke.add_argument("--z", help="point, e.g. 0.5,0.3+0.1j")
    ke.add_argument("--w", help="point")
    ke.add_argument("--N", type=int, help="truncation radius |alpha|_1 <= N (default 60)")
    ke.add_argument("--rel-tol", type=float, help="early-stop tolerance (default 1e-10)")
    ke.set_defaults(func=cmd_kernel)

    ve = sub.add_parser("verify", parents=[common], help="run a property suite")
    ve.add_argument("--suite", help="one of: " + ", ".join(vf.SUITES) + ", all")
    ve.add_argument("--seed", type=int, help="random seed (default 0)")
    ve.add_argument("--quick", action="store_true", default=None, help="smaller instance counts")
    ve.set_defaults(func=cmd_verify)

    ex = sub.add_parser("experiment", parents=[common], help="continuity / ramadanov / domination tables")
    ex.add_argument("kind", choices=["continuity", "ramadanov", "domination"])
    ex.add_argument("--p", help="exponent; for domination an interval lo:hi")
    ex.add_argument("--grid", type=int, help="number of (z, w) pairs (default 9)")
    ex.add_argument("--delta", type=float, help="log-margin of the compact set")
    ex.add_argument("--steps", type=int, help="number of q_k or domains (default 8 / 12)")
    ex.add_argument("--N", type=int, help="truncation radius")
    ex.add_argument("--seed", type=int, help="random seed (default 0)")
    ex.set_defaults(func=cmd_experiment)
    return parser


def _apply_config(args):
    if not args.config:
        return
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if attr in ("command", "func", "config"):
            continue
        if not hasattr(args, attr):
            raise ValidationError(f"unknown config key {key!r} for command {args.command}")
        if getattr(args, attr) is None:
            if isinstance(value, dict) and attr == "domain":
                value = json.dumps(value)
            setattr(args, attr, value)


_VALUE_FLAGS = {"--box", "--alpha", "--z", "--w", "--candidates", "--p"}


def _join_negative_values(argv):
    """Let ``--box -4:4,...`` through: argparse would read the value as a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    try:
        _apply_config(args)
        args.func(args)
        return EXIT_OK
    except VerificationFailed as exc:
        if exc.payload is not None:
            emit(args, exc.payload)
        print("verification failed", file=sys.stderr)
        return EXIT_VERIFY
    except BoundaryUndecidable as exc:
        print(f"undecidable: {exc}; alphas: {exc.alphas}", file=sys.stderr)
        return EXIT_UNDECIDABLE
    except (ToleranceNotReached, NotConverged, EmptyRegionSuspected, OracleInconclusive) as exc:
        print(f"budget exhausted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (EnvelopeViolated, SequenceNotIncreasing) as exc:
        print(f"verification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValidationError, AlgebraNodeNotSupported) as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
