"""Allowable index sets and threshold exponents.

For every family the allowable indices at exponent ``p`` are cut out by
affine-in-``p`` conditions ``(v . alpha) p + c > 0`` with integer ``v`` and
``c``, plus sign conditions ``alpha_j >= 0`` on coordinates whose axis
``{z_j = 0}`` meets the domain (a negative power there has a pole).  With
rational ``p = P/Q`` every decision reduces to integer arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from . import geometry as g
from .errors import (
    AlgebraNodeNotSupported,
    BoundaryUndecidable,
    DimensionMismatch,
    OracleInconclusive,
    ValidationError,
)

Box = Sequence[tuple[int, int]]


@dataclass(frozen=True)
class AffineCondition:
    """``(v . alpha) p + c > 0`` (kind ``strict``) or ``alpha[index] >= 0`` (kind ``sign``)."""

    v: tuple
    c: int = 0
    kind: str = "strict"
    index: int | None = None

    @classmethod
    def sign(cls, n: int, index: int) -> "AffineCondition":
        v = tuple(int(i == index) for i in range(n))
        return cls(v, 0, "sign", index)

    def holds(self, alpha: Sequence[int], p: Fraction) -> bool:
        if self.kind == "sign":
            return alpha[self.index] >= 0
        s = sum(a * b for a, b in zip(self.v, alpha))
        return s * p.numerator + self.c * p.denominator > 0

    def mask(self, alphas: np.ndarray, p: Fraction) -> np.ndarray:
        if self.kind == "sign":
            return alphas[:, self.index] >= 0
        s = alphas @ np.asarray(self.v, dtype=np.int64)
        return s * p.numerator + self.c * p.denominator > 0

    def shifted(self, offset: int, n: int) -> "AffineCondition":
        v = (0,) * offset + self.v + (0,) * (n - offset - len(self.v))
        index = None if self.index is None else self.index + offset
        return AffineCondition(v, self.c, self.kind, index)

    def __str__(self):
        if self.kind == "sign":
            return f"alpha{self.index + 1} >= 0"
        terms = " + ".join(f"{c}*alpha{i + 1}" for i, c in enumerate(self.v) if c)
        return f"({terms})*p + {self.c} > 0"

    def to_json(self):
        if self.kind == "sign":
            return {"kind": "sign", "index": self.index, "text": str(self)}
        return {"kind": "strict", "v": list(self.v), "c": self.c, "text": str(self)}


@dataclass(frozen=True)
class HartogsIrrational:
    """``gamma (p a_s + 2) + (p a_t + 2) > 0``; with ``inverse`` the roles of the
    two brackets' weights swap.  Coordinates are absolute indices."""

    gamma: g.PositiveReal
    small: int
    large: int
    inverse: bool = False

    def value(self, alpha, p) -> mpmath.mpf:
        with mpmath.workdps(g.PRECISION_DIGITS):
            pm = mpmath.mpf(p.numerator) / p.denominator if isinstance(p, Fraction) else mpmath.mpf(p)
            u = pm * alpha[self.small] + 2
            w = pm * alpha[self.large] + 2
            return u + self.gamma.approx * w if self.inverse else self.gamma.approx * u + w

    def holds(self, alpha, p) -> bool:
        val = self.value(alpha, p)
        scale = 10 * self.gamma.rel_error * (1 + abs(float(self.gamma.approx)) * (abs(float(p)) * max(map(abs, alpha), default=0) + 2))
        if abs(val) <= scale:
            raise BoundaryUndecidable(
                f"alpha={tuple(alpha)} is within representation error of the boundary", [tuple(alpha)]
            )
        return val > 0

    def shifted(self, offset: int, n: int) -> "HartogsIrrational":
        return HartogsIrrational(self.gamma, self.small + offset, self.large + offset, self.inverse)

    def __str__(self):
        gs = self.gamma.to_json()
        s, t = self.small + 1, self.large + 1
        if self.inverse:
            return f"(p*alpha{s} + 2) + {gs}*(p*alpha{t} + 2) > 0"
        return f"{gs}*(p*alpha{s} + 2) + (p*alpha{t} + 2) > 0"


@dataclass(frozen=True)
class AllowabilityConditions:
    dim: int
    conditions: tuple = ()
    special: tuple = ()
    sampling_only: bool = False
    reduced_from: str | None = None

    def holds(self, alpha, p: Fraction) -> bool:
        if self.sampling_only:
            raise OracleInconclusive("no exact conditions; use the divergence oracle")
        return all(c.holds(alpha, p) for c in self.conditions) and all(
            s.holds(alpha, p) for s in self.special
        )

    @property
    def strict(self) -> list[AffineCondition]:
        return [c for c in self.conditions if c.kind == "strict"]

    def to_json(self):
        out = {
            "conditions": [c.to_json() for c in self.conditions],
            "special": [str(s) for s in self.special],
            "sampling_only": self.sampling_only,
        }
        if self.reduced_from:
            out["reduced_from"] = self.reduced_from
        return out


@dataclass(frozen=True)
class ThresholdSet:
    kind: str  # "finite" | "dense"
    values: tuple = ()

    def to_json(self):
        if self.kind == "dense":
            return {"kind": "dense"}
        return {"kind": "finite", "values": [g.fraction_str(v) for v in self.values]}


@dataclass(frozen=True)
class ScanResult:
    p: Fraction
    witness: tuple | None
    side: str | None = None  # "left", "right" or "both"

    @property
    def confirmed(self) -> bool:
        return self.witness is not None

    def to_json(self):
        out = {"p": g.fraction_str(self.p)}
        if self.witness is None:
            out["status"] = "NoWitnessInBox"
        else:
            out["alpha"] = list(self.witness)
            out["side"] = self.side
        return out


# ---------------------------------------------------------------------------
# Conditions


def _hartogs_conditions(d: g.Hartogs) -> AllowabilityConditions:
    s, t = d.small, d.large
    sign = AffineCondition.sign(2, s)
    if not d.gamma.is_rational:
        return AllowabilityConditions(2, (sign,), (HartogsIrrational(d.gamma, s, t, d.inverse),))
    a, b = d.gamma.exact.numerator, d.gamma.exact.denominator
    v = [0, 0]
    # gamma = a/b; clear the denominator of gamma*(p*a_s + 2) + (p*a_t + 2) > 0
    if d.inverse:
        v[s], v[t] = b, a
    else:
        v[s], v[t] = a, b
    return AllowabilityConditions(2, (sign, AffineCondition(tuple(v), 2 * (a + b))))


def reduce_intersection(d: g.Intersection) -> g.OmegaA | None:
    """Recognise an intersection of two leaves that is itself an ``OmegaA``.

    Works from the combined log-shadow rows: rows with only non-negative
    coefficients are implied by a cone with ``det > 0``; the remaining two
    must have sign patterns ``(+, -)`` and ``(-, +)``.
    """
    if d.dim != 2:
        return None
    try:
        rows = list(g.shadow_polytope(d.left).rows) + list(g.shadow_polytope(d.right).rows)
    except AlgebraNodeNotSupported:
        return None
    if not all(isinstance(c, Fraction) for row in rows for c in row):
        return None
    ints = []
    for row in rows:
        den = math.lcm(*(c.denominator for c in row))
        vec = [int(c * den) for c in row]
        gg = math.gcd(*vec)
        ints.append(tuple(v // gg for v in vec))
    first = [r for r in ints if r[0] > 0 and r[1] < 0]
    second = [r for r in ints if r[0] < 0 and r[1] > 0]
    rest = [r for r in ints if r not in first and r not in second]
    if len(set(first)) != 1 or len(set(second)) != 1 or any(min(r) < 0 for r in rest):
        return None
    (a, mb), (mc, dd) = first[0], second[0]
    try:
        return g.OmegaA(a, -mb, -mc, dd)
    except g.ValidationError:
        return None


def conditions_for(d: g.Domain) -> AllowabilityConditions:
    if isinstance(d, g.OmegaA):
        a, b, c, dd = d.a, d.b, d.c, d.d
        return AllowabilityConditions(
            2, (AffineCondition((b, a), 2 * (a + b)), AffineCondition((dd, c), 2 * (c + dd)))
        )
    if isinstance(d, g.Type1):
        n, k = d.dim, d.k
        conds = [AffineCondition.sign(n, 0), AffineCondition(tuple(int(i == 0) for i in range(n)), 2)]
        for j in range(1, n):
            v = [0] * n
            v[0], v[j] = k[j], k[0]
            conds.append(AffineCondition(tuple(v), 2 * (k[0] + k[j])))
        return AllowabilityConditions(n, tuple(conds))
    if isinstance(d, g.Type2):
        n, k = d.dim, d.k
        conds = [AffineCondition.sign(n, 0)]
        for i in range(n):
            prod = math.prod(k[: i + 1])
            v = [prod // k[j] if j <= i else 0 for j in range(n)]
            conds.append(AffineCondition(tuple(v), 2 * sum(v)))
        return AllowabilityConditions(n, tuple(conds))
    if isinstance(d, g.Hartogs):
        return _hartogs_conditions(d)
    if isinstance(d, g.Dilate):
        return conditions_for(d.inner)
    if isinstance(d, g.Product):
        left, right = conditions_for(d.left), conditions_for(d.right)
        if left.sampling_only or right.sampling_only:
            return AllowabilityConditions(d.dim, sampling_only=True)
        n, n1 = d.dim, d.left.dim
        conds = tuple(c.shifted(0, n) for c in left.conditions) + tuple(
            c.shifted(n1, n) for c in right.conditions
        )
        special = tuple(s.shifted(0, n) for s in left.special) + tuple(
            s.shifted(n1, n) for s in right.special
        )
        return AllowabilityConditions(n, conds, special)
    if isinstance(d, g.Union):
        left, right = conditions_for(d.left), conditions_for(d.right)
        if left.sampling_only or right.sampling_only:
            return AllowabilityConditions(d.dim, sampling_only=True)
        conds = tuple(dict.fromkeys(left.conditions + right.conditions))
        return AllowabilityConditions(d.dim, conds, left.special + right.special)
    if isinstance(d, g.Intersection):
        red = reduce_intersection(d)
        if red is not None:
            base = conditions_for(red)
            return AllowabilityConditions(base.dim, base.conditions, base.special, reduced_from=red.dumps())
        return AllowabilityConditions(d.dim, sampling_only=True)
    if isinstance(d, g.Notch):
        return AllowabilityConditions(d.dim, sampling_only=True)
    raise TypeError(d)


# ---------------------------------------------------------------------------
# Membership and enumeration


def _check_p(p) -> Fraction:
    q = g.to_fraction(p)
    if q < 1:
        raise ValidationError(f"p = {q} must be >= 1")
    return q


def is_allowable(d: g.Domain, alpha: Sequence[int], p) -> bool:
    p = _check_p(p)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d.dim:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries, domain has dimension {d.dim}")
    conds = conditions_for(d)
    if conds.sampling_only:
        from .norms import oracle_allowable

        return oracle_allowable(d, alpha, p)
    return conds.holds(alpha, p)


def box_points(box: Box) -> np.ndarray:
    """All integer points of the box in lexicographic order, shape ``(N, n)``."""
    box = [(int(lo), int(hi)) for lo, hi in box]
    n = len(box)
    if any(lo > hi for lo, hi in box):
        return np.zeros((0, n), dtype=np.int64)
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in box]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([gr.ravel() for gr in grids], axis=1)


def parse_box(text: str) -> list[tuple[int, int]]:
    """``"-4:4,-4:4"`` -> ``[(-4, 4), (-4, 4)]``."""
    out = []
    for part in text.split(","):
        lo, sep, hi = part.strip().rpartition(":")
        if not sep:
            raise ValidationError(f"bad box component {part!r}; expected lo:hi")
        try:
            out.append((int(lo), int(hi)))
        except ValueError as exc:
            raise ValidationError(f"bad box component {part!r}") from exc
    return out


def _allowable_mask(d: g.Domain, conds: AllowabilityConditions, alphas: np.ndarray, p: Fraction) -> np.ndarray:
    if conds.sampling_only:
        from .norms import oracle_allowable

        return np.array([oracle_allowable(d, tuple(a), p) for a in alphas], dtype=bool)
    mask = np.ones(len(alphas), dtype=bool)
    for c in conds.conditions:
        mask &= c.mask(alphas, p)
    if conds.special:
        undecided = []
        for i in np.nonzero(mask)[0]:
            try:
                mask[i] = all(s.holds(tuple(alphas[i]), p) for s in conds.special)
            except BoundaryUndecidable:
                undecided.append(tuple(int(x) for x in alphas[i]))
        if undecided:
            raise BoundaryUndecidable(f"{len(undecided)} indices undecidable", undecided)
    return mask


def enumerate_sp(d: g.Domain, p, box: Box) -> list[tuple[int, ...]]:
    """Allowable indices in the box, lexicographic order."""
    p = _check_p(p)
    if len(box) != d.dim:
        raise DimensionMismatch(f"box has {len(box)} ranges, domain has dimension {d.dim}")
    alphas = box_points(box)
    if len(alphas) == 0:
        return []
    mask = _allowable_mask(d, conditions_for(d), alphas, p)
    return [tuple(int(x) for x in a) for a in alphas[mask]]


# ---------------------------------------------------------------------------
# Threshold exponents


def _leaf_for_thresholds(d: g.Domain) -> g.Domain:
    while isinstance(d, g.Dilate):
        d = d.inner
    if isinstance(d, g.Intersection):
        red = reduce_intersection(d)
        if red is not None:
            return red
    if not isinstance(d, (g.OmegaA, g.Type1, g.Type2, g.Hartogs)):
        raise AlgebraNodeNotSupported(f"thresholds are not defined here for {type(d).__name__}")
    return d


def _family(numer: int, count: int) -> set[Fraction]:
    return {Fraction(numer, ell) for ell in range(1, count + 1)}


def witness_radius(d: g.Domain) -> int:
    """Half-width of the default witness box: twice the total coefficient mass."""
    conds = conditions_for(_leaf_for_thresholds(d))
    total = sum(sum(abs(x) for x in c.v) + abs(c.c) for c in conds.strict)
    return max(2, 2 * total)


def default_box(d: g.Domain) -> list[tuple[int, int]]:
    R = witness_radius(d)
    return [(-R, R)] * d.dim


def thresholds(d: g.Domain) -> ThresholdSet:
    leaf = _leaf_for_thresholds(d)
    vals: set[Fraction] = set()
    if isinstance(leaf, g.OmegaA):
        vals |= _family(2 * (leaf.a + leaf.b), 2 * (leaf.a + leaf.b) - 1)
        vals |= _family(2 * (leaf.c + leaf.d), 2 * (leaf.c + leaf.d) - 1)
    elif isinstance(leaf, g.Type1):
        k = leaf.k
        for j in range(1, len(k)):
            R = 2 * (k[0] + k[j]) // math.gcd(k[0], k[j])
            vals |= _family(R, R - 1)
    elif isinstance(leaf, g.Type2):
        k = leaf.k
        # i = 1 would come from alpha1 * p = -2, excluded by alpha1 >= 0
        for i in range(1, len(k)):
            prod = math.prod(k[: i + 1])
            K = [prod // k[j] for j in range(i + 1)]
            m = math.gcd(*K)
            L = 2 * sum(K) // m
            vals |= _family(L, L - 1)
    elif isinstance(leaf, g.Hartogs):
        if not leaf.gamma.is_rational:
            return ThresholdSet("dense")
        candidates = _hartogs_candidates(leaf)
        scans = threshold_scan(leaf, sorted(candidates))
        vals = {s.p for s in scans if s.confirmed}
    return ThresholdSet("finite", tuple(sorted(vals, reverse=True)))


def _hartogs_candidates(d: g.Hartogs) -> set[Fraction]:
    """Solve ``(v . alpha) p = -c`` over alpha_s >= 0 for the single strict condition."""
    cond = _hartogs_conditions(d).strict[0]
    vs, vt = cond.v[d.small], cond.v[d.large]
    out = set()
    for t in range(1, cond.c):
        # need vs*a_s + vt*a_t = -t with a_s >= 0; gcd(vs, vt) = 1
        for a_s in range(0, vt + 1):
            if (-t - vs * a_s) % vt == 0:
                out.add(Fraction(cond.c, t))
                break
    return out


def _critical_values(conds: AllowabilityConditions, alphas: np.ndarray) -> set[Fraction]:
    out = set()
    for c in conds.strict:
        s = alphas @ np.asarray(c.v, dtype=np.int64)
        for t in np.unique(-s[s < 0]):
            out.add(Fraction(int(c.c), int(t)))
    return out


def threshold_scan(d: g.Domain, candidates: Iterable, witness_box: Box | None = None) -> list[ScanResult]:
    """Confirm candidate thresholds by an explicit membership flip inside the box.

    For each candidate ``p`` the comparison points are the midpoints between
    ``p`` and the adjacent critical values of the box (values where some
    condition of some box index becomes an equality), so no other change can
    sit between them.  The reported witness is the flipping index of least
    l1 norm, ties broken lexicographically.
    """
    candidates = [g.to_fraction(c) for c in candidates]
    if not candidates:
        return []
    leaf = _leaf_for_thresholds(d)
    conds = conditions_for(leaf)
    if conds.special or conds.sampling_only:
        raise AlgebraNodeNotSupported("scan needs exact rational conditions")
    box = witness_box if witness_box is not None else default_box(leaf)
    alphas = box_points(box)
    if len(alphas) == 0:
        return [ScanResult(p, None) for p in candidates]
    order = np.lexsort(tuple(alphas[:, i] for i in reversed(range(alphas.shape[1]))) + (np.abs(alphas).sum(axis=1),))
    alphas = alphas[order]
    crit = sorted(_critical_values(conds, alphas) | set(candidates))
    results = []
    for p in candidates:
        if p < 1:
            raise ValidationError(f"candidate {p} < 1")
        below = [c for c in crit if c < p]
        above = [c for c in crit if c > p]
        at = _allowable_mask(leaf, conds, alphas, p)
        flips = np.zeros(len(alphas), dtype=bool)
        sides = {}
        if p > 1:
            left = (max(below[-1], Fraction(1)) + p) / 2 if below else (1 + p) / 2
            lmask = _allowable_mask(leaf, conds, alphas, left) != at
            flips |= lmask
            sides["left"] = lmask
        right = (p + above[0]) / 2 if above else p + 1
        rmask = _allowable_mask(leaf, conds, alphas, right) != at
        flips |= rmask
        sides["right"] = rmask
        idx = np.nonzero(flips)[0]
        if len(idx) == 0:
            results.append(ScanResult(p, None))
            continue
        i = idx[0]
        hit = [name for name, m in sides.items() if m[i]]
        side = hit[0] if len(hit) == 1 else "both"
        results.append(ScanResult(p, tuple(int(x) for x in alphas[i]), side))
    return results


def dense_probe(d: g.Hartogs, p, window: float = 0.05, max_small: int = 2000):
    """Search an index whose membership flips at some ``q`` with ``|q - p| < window``.

    Only meaningful for irrational exponents, where such indices exist for
    every ``p``.  Returns ``(alpha, q_below, q_above)`` with rationals
    bracketing the flip, or ``None``.
    """
    cond = _hartogs_conditions(d).special
    if not cond:
        raise ValidationError("dense_probe expects an irrational Hartogs exponent")
    h = cond[0]
    p = mpmath.mpf(float(g.to_fraction(p)))
    with mpmath.workdps(g.PRECISION_DIGITS):
        G = d.gamma.approx
        for a_s in range(0, max_small + 1):
            # boundary: weights * (q*a + 2) sum to zero; solve for a_t near target p
            if h.inverse:
                # (q a_s + 2) + G (q a_t + 2) = 0  ->  a_t = (-(2 + 2G)/q - a_s)/G
                target = (-(2 + 2 * G) / p - a_s) / G
            else:
                target = -(2 + 2 * G) / p - G * a_s
            for a_t in (int(mpmath.floor(target)), int(mpmath.ceil(target))):
                lin = (a_s + G * a_t) if h.inverse else (G * a_s + a_t)
                if lin >= 0:
                    continue
                q = -(2 + 2 * G) / lin
                if q < 1 or abs(q - p) >= window:
                    continue
                alpha = [0, 0]
                alpha[h.small - min(h.small, h.large)], alpha[h.large - min(h.small, h.large)] = a_s, a_t
                alpha = tuple(alpha)
                eps = min(abs(q - p) / 2 + mpmath.mpf("1e-12"), window / 4)
                lo = Fraction(mpmath.nstr(q - eps / 2, 40)).limit_denominator(10**30)
                hi = Fraction(mpmath.nstr(q + eps / 2, 40)).limit_denominator(10**30)
                if lo < 1:
                    continue
                if is_allowable(d, alpha, lo) and not is_allowable(d, alpha, hi):
                    return alpha, lo, hi
    return None


def intersection_excess(d1: g.Domain, d2: g.Domain, p, box: Box) -> list[tuple[int, ...]]:
    """Indices allowable on the intersection but on neither operand."""
    p = _check_p(p)
    inter = g.Intersection(d1, d2)
    s_int = set(enumerate_sp(inter, p, box))
    s1 = set(enumerate_sp(d1, p, box))
    s2 = set(enumerate_sp(d2, p, box))
    return sorted(s_int - (s1 | s2))
