"""Property suites comparing the exact machinery with independent oracles.

Each suite returns a list of :class:`CheckResult`; a suite passes when all
of its checks pass.  Suites are deterministic for a fixed seed.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import geometry as g
from . import indexsets as ix
from . import kernel as kn
from . import norms as nm
from .errors import DisjointUnion, MBKError, ValidationError

F = Fraction


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = ", ".join(f"{k}={v}" for k, v in self.detail.items() if not isinstance(v, (list, dict)))
        return f"{status}  {self.name}  ({self.seconds:.1f}s)  {extra}"

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3), "detail": self.detail}


def workers() -> int:
    try:
        return max(1, int(os.environ.get("MBK_THREADS", "1")))
    except ValueError:
        return 1


def _timed(name, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Instances

ORACLE_INSTANCES = (
    "omega_a:1,1,1,2",
    "omega_a:2,1,1,1",
    "omega_a:3,1,1,2",
    "type1:1,1",
    "type1:1,2",
    "type1:2,3",
    "type2:1,1",
    "type2:1,2",
    "type2:3,2",
    "hartogs:1",
    "hartogs:3/2",
    "hartogs:5/2",
)
ORACLE_PS = (F(1), F(3, 2), F(2), F(3), F(4))


def random_leaf(rng: np.random.Generator, dim: int = 2) -> g.Domain:
    """A random valid leaf with small parameters."""
    while True:
        kind = rng.integers(4) if dim == 2 else 1 + rng.integers(2)
        try:
            if kind == 0:
                a, b, c, d = (int(v) for v in rng.integers(1, 5, size=4))
                return g.OmegaA(a, b, c, d)
            if kind in (1, 2):
                k = tuple(int(v) for v in rng.integers(1, 4, size=dim))
                return g.Type1(k) if kind == 1 else g.Type2(k)
            num, den = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            if num < den:
                num, den = den, num
            return g.Hartogs(F(num, den), swap=bool(rng.integers(2)), inverse=bool(rng.integers(2)))
        except ValidationError:
            continue


def random_box(rng, dim, radius=4):
    out = []
    for _ in range(dim):
        lo = int(rng.integers(-radius, 1))
        hi = int(rng.integers(0, radius + 1))
        out.append((lo, hi))
    return out


def random_p(rng, lo=1, hi=6, den=12) -> Fraction:
    return F(int(rng.integers(lo * den, hi * den + 1)), den)


# ---------------------------------------------------------------------------
# Suites


def _oracle_instance(spec: str):
    d = g.parse_domain(spec)
    mismatches, worst, count = [], 0.0, 0
    for p in ORACLE_PS:
        for a in itertools.product(range(-4, 5), repeat=d.dim):
            cf = nm.closed_form_norm_p(d, a, p)
            rep = nm.quadrature_norm_p(d, a, p, rel_tol=1e-8)
            count += 1
            if cf.finite != rep.in_ap or cf.finite != ix.is_allowable(d, a, p):
                mismatches.append([list(a), g.fraction_str(p)])
            elif cf.finite:
                worst = max(worst, abs(rep.estimate - cf.value) / cf.value)
    return spec, count, mismatches, worst


def suite_oracle_equivalence(seed=0, quick=False):
    specs = ORACLE_INSTANCES[::4] if quick else ORACLE_INSTANCES
    out = []
    if workers() > 1:
        with ProcessPoolExecutor(workers()) as pool:
            results = list(pool.map(_oracle_instance, specs))
    else:
        results = [_oracle_instance(s) for s in specs]
    for spec, count, mism, worst in results:
        out.append(CheckResult(
            f"oracle-equivalence {spec}",
            not mism and worst <= 1e-6,
            {"cases": count, "disagreements": len(mism), "max_rel_err": f"{worst:.2e}", "examples": mism[:5]},
        ))
    return out


def suite_union_law(seed=0, quick=False):
    rng = np.random.default_rng(seed)
    pairs = 5 if quick else 20
    out = []
    made = 0
    while made < pairs:
        d1, d2 = random_leaf(rng), random_leaf(rng)
        try:
            u = g.Union(d1, d2)
        except DisjointUnion:
            continue
        made += 1
        box = random_box(rng, 2, 3)
        p = random_p(rng)

        def check(u=u, d1=d1, d2=d2, box=box, p=p):
            exact = set(ix.enumerate_sp(u, p, box))
            laws = set(ix.enumerate_sp(d1, p, box)) & set(ix.enumerate_sp(d2, p, box))
            # independent check of a few indices through the signed-cell oracle
            pts = ix.box_points(box)
            picks = pts[rng.choice(len(pts), size=min(4, len(pts)), replace=False)] if len(pts) else []
            oracle_bad = [list(map(int, a)) for a in picks if nm.oracle_allowable(u, tuple(a), p) != (tuple(a) in exact)]
            return exact == laws and not oracle_bad, {
                "pair": f"{d1.dumps()} | {d2.dumps()}", "p": g.fraction_str(p), "size": len(exact),
                "overlap": u.overlap_method, "oracle_mismatch": oracle_bad,
            }

        out.append(_timed(f"union-law #{made}", check))
    return out


def suite_product_law(seed=0, quick=False):
    rng = np.random.default_rng(seed + 1)
    out = []
    for i in range(5 if quick else 20):
        d1, d2 = random_leaf(rng), random_leaf(rng)
        if rng.integers(3) == 0:
            d2 = g.DISC
        prod = g.Product(d1, d2)
        b1, b2 = random_box(rng, d1.dim, 3), random_box(rng, d2.dim, 3)
        p = random_p(rng)

        def check(prod=prod, d1=d1, d2=d2, b1=b1, b2=b2, p=p):
            got = ix.enumerate_sp(prod, p, b1 + b2)
            want = [a + b for a in ix.enumerate_sp(d1, p, b1) for b in ix.enumerate_sp(d2, p, b2)]
            fin_bad = 0
            for a in got[:10]:
                if not nm.closed_form_norm_p(prod, a, p).finite:
                    fin_bad += 1
            return got == sorted(want) and fin_bad == 0, {"p": g.fraction_str(p), "size": len(got), "norm_mismatch": fin_bad}

        out.append(_timed(f"product-law #{i + 1}", check))
    return out


def suite_intersection_inclusion(seed=0, quick=False):
    rng = np.random.default_rng(seed + 2)
    out = []
    made = 0
    while made < (3 if quick else 8):
        d1, d2 = random_leaf(rng), random_leaf(rng)
        inter = g.Intersection(d1, d2)
        try:
            g.sample_shadow(inter, 20, seed=0, max_attempts=20000)
        except MBKError:
            continue
        made += 1
        box = [(-2, 1), (-2, 1)]
        p = random_p(rng, 1, 4, 4)

        def check(inter=inter, d1=d1, d2=d2, box=box, p=p):
            union = set(ix.enumerate_sp(d1, p, box)) | set(ix.enumerate_sp(d2, p, box))
            missing = [list(a) for a in sorted(union) if not ix.is_allowable(inter, a, p)]
            return not missing, {"p": g.fraction_str(p), "operand_union": len(union), "missing": missing}

        out.append(_timed(f"intersection-inclusion #{made}", check))
    d1, d2 = two_hartogs()

    def excess():
        got = ix.intersection_excess(d1, d2, F(3, 2), [(-4, 4), (-4, 4)])
        return bool(got), {"p": "3/2", "excess": [list(a) for a in got]}

    out.append(_timed("intersection strict excess", excess))
    return out


WORKED_CASES = (
    (F(2), []),
    (F(3), []),
    (F(3, 2), [(-1, -1)]),
    (F(11, 10), [(-2, -1), (-1, -2), (-1, -1)]),
)


def two_hartogs(gamma1=2, gamma2=2):
    return g.Hartogs(F(gamma1), inverse=True), g.Hartogs(F(gamma2), swap=True, inverse=True)


def suite_worked_example(seed=0, quick=False):
    d1, d2 = two_hartogs()
    out = []
    for p, want in WORKED_CASES:
        out.append(_timed(
            f"worked-example p={g.fraction_str(p)}",
            lambda p=p, want=want: (
                (got := ix.intersection_excess(d1, d2, p, [(-4, 4), (-4, 4)])) == sorted(want),
                {"excess": [list(a) for a in got]},
            ),
        ))
    return out


def suite_monotone_chain(seed=0, quick=False):
    rng = np.random.default_rng(seed + 3)
    out = []
    violations, checked = [], 0

    def run():
        nonlocal checked
        for _ in range(10 if quick else 50):
            d = random_leaf(rng)
            box = random_box(rng, 2, 5)
            p1, p2, p3 = sorted(random_p(rng) for _ in range(3))
            s1, s2, s3 = (set(ix.enumerate_sp(d, q, box)) for q in (p1, p2, p3))
            checked += 1
            if not (s1 & s3) <= s2:
                violations.append([d.dumps(), *(g.fraction_str(q) for q in (p1, p2, p3))])
        return not violations, {"triples": checked, "violations": len(violations)}

    out.append(_timed("monotone-chain", run))
    return out


def suite_thresholds(seed=0, quick=False):
    out = []
    targets = {
        "omega_a:1,1,1,2": [F(6), F(4), F(3), F(2), F(3, 2), F(4, 3), F(6, 5)],
        "type1:1,1": [F(4), F(2), F(4, 3)],
    }
    rng = np.random.default_rng(seed + 4)
    for spec, want in targets.items():
        d = g.parse_domain(spec)

        def check(d=d, want=want):
            ts = ix.thresholds(d)
            scans = ix.threshold_scan(d, ts.values)
            witnesses = {g.fraction_str(s.p): list(s.witness) if s.witness else None for s in scans}
            # no change at random non-threshold rationals
            box = ix.default_box(d)
            false_hits = []
            tried = 0
            while tried < (40 if quick else 200):
                q = random_p(rng, 1, 8, int(rng.integers(1, 40)))
                if q in ts.values:
                    continue
                tried += 1
                if ix.threshold_scan(d, [q], box)[0].confirmed:
                    false_hits.append(g.fraction_str(q))
            ok = list(ts.values) == want and all(s.confirmed for s in scans) and not false_hits
            return ok, {"values": [g.fraction_str(v) for v in ts.values], "witnesses": witnesses,
                        "random_p_tested": tried, "spurious_changes": false_hits}

        out.append(_timed(f"thresholds {spec}", check))
    return out


def disc_bergman(z, w):
    return 1.0 / (math.pi * (1 - z * np.conj(w)) ** 2)


def suite_kernel_oracle(seed=0, quick=False):
    out = []
    ref = 16 / (9 * math.pi)

    def disc():
        kv = kn.evaluate_kernel(g.DISC, 2, [0.5], [0.5], 60, rel_tol=1e-13)
        err = abs(kv.value - ref) / ref
        return err <= 1e-8, {"value": kv.value.real, "rel_err": f"{err:.2e}", "converged": kv.converged}

    def poly():
        d = g.Product(g.DISC, g.DISC)
        kv = kn.evaluate_kernel(d, 2, [0.5, 0.5], [0.5, 0.5], 120, rel_tol=1e-13)
        err = abs(kv.value - ref ** 2) / ref ** 2
        return err <= 1e-8, {"value": kv.value.real, "rel_err": f"{err:.2e}", "converged": kv.converged}

    out.append(_timed("kernel-oracle disc", disc))
    out.append(_timed("kernel-oracle polydisc", poly))
    return out


def continuity_rows(seed=0):
    h = g.Hartogs(F(1))
    grid = kn.interior_grid(h, 9, delta=0.3, seed=seed)
    qs = [2 + F(1, 2 ** k) for k in range(1, 9)]
    return kn.continuity_experiment(h, 2, grid, qs)


def decreasing_with_noise(values, noise=0.05) -> bool:
    return all(b <= a * (1 + noise) for a, b in zip(values, values[1:]))


def suite_continuity(seed=0, quick=False):
    def run():
        rows = continuity_rows(seed)
        vals = [v for _, v in rows]
        return decreasing_with_noise(vals) and vals[-1] < 1e-3, {
            "final": f"{vals[-1]:.3e}", "monotone": decreasing_with_noise(vals),
            "rows": [[g.fraction_str(q), v] for q, v in rows],
        }

    return [_timed("continuity hartogs(1) p=2", run)]


def ramadanov_sequence(count=12):
    return [g.Dilate(g.DISC, 1 - F(1, j + 1)) for j in range(1, count + 1)]


def suite_ramadanov(seed=0, quick=False):
    out = []
    seq = ramadanov_sequence()
    grid = kn.interior_grid(seq[0], 9, delta=0.3, seed=seed)
    for p in (2, 3):
        def run(p=p):
            res = kn.ramadanov_experiment(seq, g.DISC, p, grid)
            vals = [v for _, v in res.rows]
            mono = all(b < a for a, b in zip(vals, vals[1:]))
            return mono and vals[-1] < 1e-3 and res.norm_violations == 0, {
                "final": f"{vals[-1]:.3e}", "monotone": mono, "norm_violations": res.norm_violations,
                "rows": [list(r) for r in res.rows],
            }

        out.append(_timed(f"ramadanov dilated discs p={p}", run))
    return out


def suite_domination(seed=0, quick=False):
    out = []
    for spec in ("disc", "hartogs:1"):
        d = g.parse_domain(spec)

        def run(d=d):
            rep = kn.domination_check(d, (2, 2), 0.5, 40, seed=seed)
            ok = rep.theta < 1 and rep.max_violation_ratio <= 1 + 1e-9 and rep.sample_violation_ratio <= 1 + 1e-9
            return ok, {"C": f"{rep.C:.4g}", "theta": f"{rep.theta:.4f}", "violation": rep.max_violation_ratio,
                        "sample_violation": f"{rep.sample_violation_ratio:.3g}"}

        out.append(_timed(f"domination {spec}", run))
    return out


def suite_dense_probe(seed=0, quick=False):
    rng = np.random.default_rng(seed + 5)
    d = g.parse_domain("hartogs:sqrt(2)")

    def run():
        dense = ix.thresholds(d).kind == "dense"
        found = []
        for _ in range(3 if quick else 10):
            p = random_p(rng, 1, 6, 97)
            hit = ix.dense_probe(d, p)
            found.append([g.fraction_str(p), list(hit[0]) if hit else None])
        return dense and all(h for _, h in found), {"dense": dense, "probes": found}

    return [_timed("dense-probe hartogs sqrt(2)", run)]


def suite_localization(seed=0, quick=False):
    h = g.Hartogs(F(1))
    notched = g.Intersection(h, g.Notch((F(1, 4), F(1, 2)), (F(1, 2), F(3, 4))))

    def run():
        box = [(-1, 2), (-3, 1)]
        bad = []
        for p in (F(2), F(3, 2)):
            for a in ix.box_points(box):
                a = tuple(int(v) for v in a)
                if nm.oracle_allowable(notched, a, p) != ix.is_allowable(h, a, p):
                    bad.append([list(a), g.fraction_str(p)])
        return not bad, {"box": box, "mismatches": bad}

    return [_timed("localization hartogs(1) with notch", run)]


def suite_countable_union(seed=0, quick=False):
    def run():
        box = [(-2, 2), (-2, 2)]
        want = [a for a in map(tuple, ix.box_points(box).tolist()) if min(a) >= 0]
        same, norms = True, []
        for N in range(1, 9):
            d = g.Product(g.DISC, g.Dilate(g.DISC, N))
            same &= ix.enumerate_sp(d, 2, box) == want
            norms.append(nm.closed_form_norm_p(d, (0, 0), 2).value)
        growing = all(b > a for a, b in zip(norms, norms[1:])) and abs(norms[-1] / norms[0] - 64) < 1e-9
        return same and growing, {"constant_sp": same, "norm_ratio": norms[-1] / norms[0]}

    return [_timed("countable-union disc x B(0,N)", run)]


SUITES = {
    "union-law": suite_union_law,
    "product-law": suite_product_law,
    "intersection-inclusion": suite_intersection_inclusion,
    "worked-example": suite_worked_example,
    "monotone-chain": suite_monotone_chain,
    "thresholds": suite_thresholds,
    "oracle-equivalence": suite_oracle_equivalence,
    "kernel-oracle": suite_kernel_oracle,
    "continuity": suite_continuity,
    "ramadanov": suite_ramadanov,
    "domination": suite_domination,
    "dense-probe": suite_dense_probe,
    "localization": suite_localization,
    "countable-union": suite_countable_union,
}


def run_suite(name: str, seed: int = 0, quick: bool = False) -> list[CheckResult]:
    if name == "all":
        return [r for key in SUITES for r in SUITES[key](seed, quick)]
    if name not in SUITES:
        raise ValidationError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return SUITES[name](seed, quick)
