"""Domain families, their set algebra, and Reinhardt-shadow geometry.

A domain is described symbolically by one of the frozen dataclasses below.
Every family is a monomial polyhedron, so in logarithmic coordinates
``x_i = log|z_i|`` its shadow is an open polyhedron ``{x : M x < 0}``.
Algebra nodes (union, intersection, product) and the two helper nodes
(:class:`Dilate`, :class:`Notch`) are evaluated recursively.
"""
from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence, Union as TUnion

import mpmath
import numpy as np

from .errors import (
    AlgebraNodeNotSupported,
    DeterminantNotPositive,
    DimensionMismatch,
    DisjointUnion,
    EmptyRegionSuspected,
    GammaBelowOne,
    GcdNotOne,
    NonPositiveParameter,
    ValidationError,
)

PRECISION_DIGITS = 50
MIN_IRRATIONAL_DIGITS = 30
DEFAULT_TOL = 1e-12


def to_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, float or ``"num/den"`` string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse rational {value!r}") from exc
    raise ValidationError(f"cannot interpret {value!r} as a rational")


def fraction_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class PositiveReal:
    """A positive real known either exactly (rational) or to ``digits`` digits."""

    exact: Fraction | None
    approx: mpmath.mpf
    digits: int = PRECISION_DIGITS

    @classmethod
    def rational(cls, value) -> "PositiveReal":
        q = to_fraction(value)
        if q <= 0:
            raise NonPositiveParameter(f"expected a positive value, got {q}")
        with mpmath.workdps(PRECISION_DIGITS):
            approx = mpmath.mpf(q.numerator) / q.denominator
        return cls(q, approx)

    @classmethod
    def irrational(cls, value) -> "PositiveReal":
        with mpmath.workdps(PRECISION_DIGITS):
            if isinstance(value, str):
                text = value.strip()
                m = re.fullmatch(r"sqrt\((\d+)\)", text)
                if m:
                    approx = mpmath.sqrt(int(m.group(1)))
                    digits = PRECISION_DIGITS
                else:
                    mantissa = re.sub(r"[^0-9]", "", text.split("e")[0]).lstrip("0")
                    digits = len(mantissa)
                    if digits < MIN_IRRATIONAL_DIGITS:
                        raise ValidationError(
                            f"irrational value needs >= {MIN_IRRATIONAL_DIGITS} "
                            f"significant digits, got {digits}"
                        )
                    approx = mpmath.mpf(text)
            else:
                approx = mpmath.mpf(value)
                digits = PRECISION_DIGITS
        if approx <= 0:
            raise NonPositiveParameter(f"expected a positive value, got {approx}")
        return cls(None, approx, digits)

    @property
    def is_rational(self) -> bool:
        return self.exact is not None

    @property
    def rel_error(self) -> float:
        return 0.0 if self.is_rational else 10.0 ** (-self.digits + 1)

    def __float__(self) -> float:
        return float(self.exact) if self.exact is not None else float(self.approx)

    def to_json(self):
        if self.exact is not None:
            return fraction_str(self.exact)
        with mpmath.workdps(self.digits):
            return mpmath.nstr(self.approx, self.digits)


class Membership(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


# ---------------------------------------------------------------------------
# Domain nodes


class Domain:
    """Common behaviour of all domain nodes."""

    is_leaf = False

    @property
    def dim(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    def to_json(self) -> dict:  # pragma: no cover - overridden
        raise NotImplementedError

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _check_positive_ints(values, name):
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ValidationError(f"{name} must be integers, got {v!r}")
        if v <= 0:
            raise NonPositiveParameter(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class OmegaA(Domain):
    """``{|z1|^a < |z2|^b, |z2|^d < |z1|^c}``."""

    a: int
    b: int
    c: int
    d: int
    is_leaf = True

    def __post_init__(self):
        _check_positive_ints((self.a, self.b, self.c, self.d), "a, b, c, d")
        det = self.a * self.d - self.b * self.c
        if det <= 0:
            raise DeterminantNotPositive(f"ad - bc = {det} must be positive")
        if math.gcd(self.a, self.b) != 1 or math.gcd(self.c, self.d) != 1:
            raise GcdNotOne("require gcd(a, b) = gcd(c, d) = 1")

    @property
    def dim(self):
        return 2

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def to_json(self):
        return {"family": "omega_a", "a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class _KFamily(Domain):
    k: tuple
    is_leaf = True

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if not self.k:
            raise ValidationError("k must be non-empty")
        _check_positive_ints(self.k, "k")
        if reduce(math.gcd, self.k) != 1:
            raise GcdNotOne(f"gcd{self.k} = {reduce(math.gcd, self.k)} must be 1")

    @property
    def dim(self):
        return len(self.k)


@dataclass(frozen=True)
class Type1(_KFamily):
    """``{|z1|^k1 < |z2|^k2 ... |zn|^kn, |zj| < 1 for j >= 2}``."""

    def to_json(self):
        return {"family": "type1", "k": list(self.k)}


@dataclass(frozen=True)
class Type2(_KFamily):
    """``{|z1|^k1 < |z2|^k2 < ... < |zn|^kn < 1}``; ``Type2((1,))`` is the unit disc."""

    def to_json(self):
        if self.k == (1,):
            return {"family": "disc"}
        return {"family": "type2", "k": list(self.k)}


@dataclass(frozen=True)
class Hartogs(Domain):
    """Generalised Hartogs triangle.

    With ``s`` the small coordinate (``z1``, or ``z2`` when ``swap``) and ``t``
    the other one, the domain is ``{|z_s| < |z_t|^g, |z_t| < 1}`` where
    ``g = gamma`` or, when ``inverse``, ``g = 1/gamma``.  The inverse form
    ``{|z_s|^gamma < |z_t| < 1}`` is the fat triangle that appears in
    intersection examples.
    """

    gamma: PositiveReal
    swap: bool = False
    inverse: bool = False
    is_leaf = True

    def __post_init__(self):
        if not isinstance(self.gamma, PositiveReal):
            object.__setattr__(self, "gamma", PositiveReal.rational(self.gamma))
        if self.gamma.approx < 1:
            raise GammaBelowOne(f"gamma = {self.gamma.to_json()} must be >= 1")

    @property
    def dim(self):
        return 2

    @property
    def small(self) -> int:
        return 1 if self.swap else 0

    @property
    def large(self) -> int:
        return 0 if self.swap else 1

    def to_json(self):
        out = {"family": "hartogs", "gamma": self.gamma.to_json()}
        if not self.gamma.is_rational:
            out["irrational"] = True
        if self.swap:
            out["swap"] = True
        if self.inverse:
            out["inverse"] = True
        return out


@dataclass(frozen=True)
class Notch(Domain):
    """Complement of the closed radial box ``prod [lo_i, hi_i]``.

    Unbounded on its own; meant to be intersected with a bounded domain to
    cut a hole away from the coordinate axes.
    """

    lo: tuple
    hi: tuple
    is_leaf = True

    def __post_init__(self):
        lo = tuple(to_fraction(v) for v in self.lo)
        hi = tuple(to_fraction(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise DimensionMismatch("lo and hi must have the same non-zero length")
        if any(v <= 0 for v in lo) or any(l >= h for l, h in zip(lo, hi)):
            raise NonPositiveParameter("need 0 < lo_i < hi_i")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    def to_json(self):
        return {
            "family": "notch",
            "lo": [fraction_str(v) for v in self.lo],
            "hi": [fraction_str(v) for v in self.hi],
        }


@dataclass(frozen=True)
class Dilate(Domain):
    """``radius * inner``."""

    inner: Domain
    radius: Fraction

    def __post_init__(self):
        r = to_fraction(self.radius)
        if r <= 0:
            raise NonPositiveParameter(f"radius must be positive, got {r}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.inner.dim

    def to_json(self):
        return {"op": "dilate", "radius": fraction_str(self.radius), "inner": self.inner.to_json()}


@dataclass(frozen=True)
class Product(Domain):
    left: Domain
    right: Domain

    @property
    def dim(self):
        return self.left.dim + self.right.dim

    def to_json(self):
        return {"op": "product", "left": self.left.to_json(), "right": self.right.to_json()}


@dataclass(frozen=True)
class Intersection(Domain):
    left: Domain
    right: Domain

    def __post_init__(self):
        if self.left.dim != self.right.dim:
            raise DimensionMismatch("intersection operands differ in dimension")

    @property
    def dim(self):
        return self.left.dim

    def to_json(self):
        return {"op": "intersection", "left": self.left.to_json(), "right": self.right.to_json()}


@dataclass(frozen=True)
class Union(Domain):
    """Union of two overlapping domains.

    ``overlap_method`` records how overlap was certified: ``"lp"`` (exact
    feasibility of the combined log-polytope) or ``"sampling"`` (heuristic).
    """

    left: Domain
    right: Domain
    overlap_method: str = field(default="", compare=False)

    def __post_init__(self):
        if self.left.dim != self.right.dim:
            raise DimensionMismatch("union operands differ in dimension")
        method = _certify_overlap(self.left, self.right)
        if method is None:
            raise DisjointUnion("union operands do not overlap; the union is not connected")
        object.__setattr__(self, "overlap_method", method)

    @property
    def dim(self):
        return self.left.dim

    def to_json(self):
        return {"op": "union", "left": self.left.to_json(), "right": self.right.to_json()}


DISC = Type2((1,))


def build_domain(family: str, **params) -> Domain:
    """Validated domain from a family name and its parameters."""
    family = family.lower()
    if family == "omega_a":
        return OmegaA(params["a"], params["b"], params["c"], params["d"])
    if family == "type1":
        return Type1(tuple(params["k"]))
    if family == "type2":
        return Type2(tuple(params["k"]))
    if family == "disc":
        radius = params.get("radius")
        return DISC if radius is None else Dilate(DISC, radius)
    if family == "hartogs":
        gamma = params["gamma"]
        if not isinstance(gamma, PositiveReal):
            gamma = (
                PositiveReal.irrational(gamma)
                if params.get("irrational")
                else PositiveReal.rational(gamma)
            )
        return Hartogs(gamma, bool(params.get("swap", False)), bool(params.get("inverse", False)))
    if family == "notch":
        return Notch(tuple(params["lo"]), tuple(params["hi"]))
    raise ValidationError(f"unknown family {family!r}")


def from_json(obj) -> Domain:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise ValidationError("domain JSON must be an object")
    if "op" in obj:
        op = obj["op"]
        if op == "dilate":
            return Dilate(from_json(obj["inner"]), obj["radius"])
        kinds = {"union": Union, "intersection": Intersection, "product": Product}
        if op not in kinds:
            raise ValidationError(f"unknown op {op!r}")
        return kinds[op](from_json(obj["left"]), from_json(obj["right"]))
    if "family" not in obj:
        raise ValidationError("domain JSON needs 'family' or 'op'")
    params = {k: v for k, v in obj.items() if k != "family"}
    return build_domain(obj["family"], **params)


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def parse_domain(text: str) -> Domain:
    """Parse JSON or the compact syntax used on the command line.

    Compact forms: ``omega_a:1,1,1,2``, ``type1:1,2``, ``type2:1,1,1``,
    ``disc``, ``disc:1/2``, ``hartogs:3/2[:swap][:inverse]``,
    ``hartogs:sqrt(2)``, ``hartogs~1.4142...``, ``notch:lo1,lo2:hi1,hi2``,
    ``union(A,B)``, ``intersection(A,B)``, ``product(A,B)``, ``dilate(A,r)``.
    """
    text = text.strip()
    if text.startswith("{"):
        return from_json(text)
    m = re.fullmatch(r"(union|intersection|product|dilate)\((.*)\)", text, flags=re.S)
    if m:
        op, body = m.groups()
        pieces = _split_top(body)
        if op == "dilate":
            if len(pieces) < 2:
                raise ValidationError("dilate(...) takes a domain and a radius")
            return Dilate(parse_domain(",".join(pieces[:-1])), to_fraction(pieces[-1]))
        kinds = {"union": Union, "intersection": Intersection, "product": Product}
        # Leaf parameters also use commas, so try each top-level split point.
        for cut in range(1, len(pieces)):
            try:
                left = parse_domain(",".join(pieces[:cut]))
                right = parse_domain(",".join(pieces[cut:]))
            except ValidationError:
                continue
            return kinds[op](left, right)
        raise ValidationError(f"{op}(...) takes two domain arguments")
    if text.startswith("hartogs~"):
        return Hartogs(PositiveReal.irrational(text[len("hartogs~"):]))
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    if family == "disc":
        return build_domain("disc", radius=rest or None)
    if family == "hartogs":
        bits = rest.split(":")
        flags = {b.strip() for b in bits[1:]}
        unknown = flags - {"swap", "inverse"}
        if unknown:
            raise ValidationError(f"unknown hartogs flags {sorted(unknown)}")
        g = bits[0].strip()
        gamma = PositiveReal.irrational(g) if g.startswith("sqrt(") else PositiveReal.rational(g)
        return Hartogs(gamma, "swap" in flags, "inverse" in flags)
    if family == "notch":
        lo, _, hi = rest.partition(":")
        return Notch(tuple(_split_top(lo)), tuple(_split_top(hi)))
    try:
        nums = [int(v) for v in rest.split(",")] if rest else []
    except ValueError as exc:
        raise ValidationError(f"cannot parse parameters {rest!r}") from exc
    if family == "omega_a":
        if len(nums) != 4:
            raise ValidationError("omega_a needs four integers a,b,c,d")
        return OmegaA(*nums)
    if family in ("type1", "type2"):
        return build_domain(family, k=nums)
    raise ValidationError(f"unknown domain {text!r}")


# ---------------------------------------------------------------------------
# Shadows in logarithmic coordinates


@dataclass(frozen=True)
class LogShadowPolytope:
    """``{x : sum_i rows[j][i] * x_i < 0 for all j}`` in ``x = log r``.

    Coefficients are exact Fractions except for irrational Hartogs exponents,
    which are stored as high-precision mpf values.
    """

    dim: int
    rows: tuple

    def as_arrays(self):
        A = np.array([[float(c) for c in row] for row in self.rows], dtype=float)
        return A, np.zeros(len(self.rows))

    def contains_log(self, x) -> bool:
        A, _ = self.as_arrays()
        return bool(np.all(A @ np.asarray(x, dtype=float) < 0))


def _gamma_coeff(g: PositiveReal):
    return g.exact if g.is_rational else g.approx


def shadow_polytope(d: Domain) -> LogShadowPolytope:
    """Defining monomial inequalities of a leaf family, in log coordinates."""
    if isinstance(d, OmegaA):
        F = Fraction
        rows = ((F(d.a), F(-d.b)), (F(-d.c), F(d.d)))
        return LogShadowPolytope(2, rows)
    if isinstance(d, Type1):
        n = d.dim
        first = (Fraction(d.k[0]),) + tuple(Fraction(-v) for v in d.k[1:])
        rows = [first]
        for j in range(1, n):
            rows.append(tuple(Fraction(int(i == j)) for i in range(n)))
        return LogShadowPolytope(n, tuple(rows))
    if isinstance(d, Type2):
        n = d.dim
        rows = []
        for i in range(n):
            row = [Fraction(0)] * n
            row[i] = Fraction(d.k[i])
            if i + 1 < n:
                row[i + 1] = Fraction(-d.k[i + 1])
            rows.append(tuple(row))
        return LogShadowPolytope(n, tuple(rows))
    if isinstance(d, Hartogs):
        g = _gamma_coeff(d.gamma)
        s, t = d.small, d.large
        first = [Fraction(0), Fraction(0)]
        if d.inverse:
            first[s], first[t] = g, Fraction(-1)
        else:
            first[s], first[t] = Fraction(1), -g
        second = [Fraction(0), Fraction(0)]
        second[t] = Fraction(1)
        return LogShadowPolytope(2, (tuple(first), tuple(second)))
    raise AlgebraNodeNotSupported(f"{type(d).__name__} has no single shadow polytope")


def _leaf_rel_error(d: Domain) -> float:
    return d.gamma.rel_error if isinstance(d, Hartogs) else 0.0


def log_upper_bounds(d: Domain) -> np.ndarray:
    """Coordinatewise upper bound on ``log|z_i|`` over the domain (may be inf)."""
    if isinstance(d, (OmegaA, Type1, Type2, Hartogs)):
        return np.zeros(d.dim)
    if isinstance(d, Notch):
        return np.full(d.dim, np.inf)
    if isinstance(d, Dilate):
        return log_upper_bounds(d.inner) + math.log(d.radius)
    if isinstance(d, Product):
        return np.concatenate([log_upper_bounds(d.left), log_upper_bounds(d.right)])
    if isinstance(d, Intersection):
        return np.minimum(log_upper_bounds(d.left), log_upper_bounds(d.right))
    if isinstance(d, Union):
        return np.maximum(log_upper_bounds(d.left), log_upper_bounds(d.right))
    raise TypeError(d)


def log_cells(d: Domain) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Signed decomposition of the log-shadow into convex polyhedra.

    Returns ``[(sign, A, b), ...]`` with each cell ``{x : A x <= b}`` so that
    the indicator of the shadow equals ``sum sign * indicator(cell)`` almost
    everywhere.  Unions use inclusion-exclusion; a notch contributes the
    whole space minus its box.
    """
    n = d.dim
    if isinstance(d, (OmegaA, Type1, Type2, Hartogs)):
        A, b = shadow_polytope(d).as_arrays()
        return [(1, A, b)]
    if isinstance(d, Notch):
        lo = np.log([float(v) for v in d.lo])
        hi = np.log([float(v) for v in d.hi])
        eye = np.eye(n)
        box_A = np.vstack([-eye, eye])
        box_b = np.concatenate([-lo, hi])
        return [(1, np.zeros((0, n)), np.zeros(0)), (-1, box_A, box_b)]
    if isinstance(d, Dilate):
        shift = math.log(d.radius)
        return [(s, A, b + A.sum(axis=1) * shift) for s, A, b in log_cells(d.inner)]
    if isinstance(d, Product):
        n1 = d.left.dim
        out = []
        for s1, A1, b1 in log_cells(d.left):
            for s2, A2, b2 in log_cells(d.right):
                A = np.zeros((len(A1) + len(A2), n))
                A[: len(A1), :n1] = A1
                A[len(A1):, n1:] = A2
                out.append((s1 * s2, A, np.concatenate([b1, b2])))
        return out
    if isinstance(d, Intersection):
        return _intersect_cells(log_cells(d.left), log_cells(d.right))
    if isinstance(d, Union):
        left, right = log_cells(d.left), log_cells(d.right)
        both = [(-s, A, b) for s, A, b in _intersect_cells(left, right)]
        return left + right + both
    raise TypeError(d)


def _intersect_cells(left, right):
    return [
        (s1 * s2, np.vstack([A1, A2]), np.concatenate([b1, b2]))
        for s1, A1, b1 in left
        for s2, A2, b2 in right
    ]


# ---------------------------------------------------------------------------
# Membership


def _log_coords(r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(r)


def _linear_margin(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``-(A x)`` per row with the limit convention for ``x_i = -inf``."""
    with np.errstate(invalid="ignore"):
        terms = np.where(A[None, :, :] == 0, 0.0, A[None, :, :] * X[:, None, :])
        vals = -terms.sum(axis=2)
    # +inf and -inf in one row means 0 * inf style ambiguity: treat as outside.
    return np.where(np.isnan(vals), -np.inf, vals)


def signed_margin(d: Domain, X: np.ndarray) -> np.ndarray:
    """Signed log-margin of points ``X`` (shape ``(N, n)``, log coordinates).

    Positive inside, negative outside, magnitude the slack of the tightest
    defining inequality.  Used for vectorised membership.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(d, (OmegaA, Type1, Type2, Hartogs)):
        A, _ = shadow_polytope(d).as_arrays()
        return _linear_margin(A, X).min(axis=1)
    if isinstance(d, Notch):
        lo = np.log([float(v) for v in d.lo])
        hi = np.log([float(v) for v in d.hi])
        return np.maximum(lo[None, :] - X, X - hi[None, :]).max(axis=1)
    if isinstance(d, Dilate):
        return signed_margin(d.inner, X - math.log(d.radius))
    if isinstance(d, Product):
        n1 = d.left.dim
        return np.minimum(signed_margin(d.left, X[:, :n1]), signed_margin(d.right, X[:, n1:]))
    if isinstance(d, Intersection):
        return np.minimum(signed_margin(d.left, X), signed_margin(d.right, X))
    if isinstance(d, Union):
        return np.maximum(signed_margin(d.left, X), signed_margin(d.right, X))
    raise TypeError(d)


def _rep_error(d: Domain) -> float:
    if isinstance(d, Hartogs):
        return d.gamma.rel_error
    if isinstance(d, Dilate):
        return _rep_error(d.inner)
    if isinstance(d, (Product, Intersection, Union)):
        return max(_rep_error(d.left), _rep_error(d.right))
    return 0.0


def _classify(margin: np.ndarray, tol) -> list[Membership]:
    out = []
    for m, t in zip(np.atleast_1d(margin), np.broadcast_to(tol, np.shape(np.atleast_1d(margin)))):
        if m > t:
            out.append(Membership.INSIDE)
        elif m < -t:
            out.append(Membership.OUTSIDE)
        else:
            out.append(Membership.BOUNDARY)
    return out


def contains_point(d: Domain, z: Sequence[complex], tol: float = DEFAULT_TOL) -> Membership:
    """Tri-state membership of a complex point, decided in log coordinates."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or len(z) != d.dim:
        raise DimensionMismatch(f"point has {z.size} coordinates, domain has {d.dim}")
    X = _log_coords(np.abs(z))[None, :]
    margin = signed_margin(d, X)
    finite = np.abs(X[np.isfinite(X)]).sum() if np.isfinite(X).any() else 0.0
    eff_tol = max(tol, 10.0 * _rep_error(d) * (1.0 + finite))
    return _classify(margin, eff_tol)[0]


def contains_radial(d: Domain, R: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Boolean mask: which radial points (rows of ``R``) are strictly inside."""
    X = _log_coords(np.atleast_2d(np.asarray(R, dtype=float)))
    return signed_margin(d, X) > tol


def meets_axis(d: Domain, i: int) -> bool:
    """Whether the domain contains points with ``z_i = 0``.

    Decides if a negative power of ``z_i`` has a pole inside the domain.
    """
    if isinstance(d, (OmegaA, Type1, Type2, Hartogs)):
        A, _ = shadow_polytope(d).as_arrays()
        # Sending x_i -> -inf keeps every row satisfied iff no row has a
        # negative x_i coefficient.
        return bool(np.all(A[:, i] >= 0))
    if isinstance(d, Notch):
        return True
    if isinstance(d, Dilate):
        return meets_axis(d.inner, i)
    if isinstance(d, Product):
        n1 = d.left.dim
        return meets_axis(d.left, i) if i < n1 else meets_axis(d.right, i - n1)
    if isinstance(d, Union):
        return meets_axis(d.left, i) or meets_axis(d.right, i)
    if isinstance(d, Intersection):
        if not (meets_axis(d.left, i) and meets_axis(d.right, i)):
            return False
        pts = sample_shadow(d, 200, seed=0).points.copy()
        pts[:, i] = 0.0
        return bool(contains_radial(d, pts).any())
    raise TypeError(d)


# ---------------------------------------------------------------------------
# Sampling and the mixed geometric mean


@dataclass(frozen=True)
class ShadowSample:
    points: np.ndarray
    acceptance_rate: float
    attempts: int


def sample_shadow(
    d: Domain, count: int, seed: int, max_attempts: int | None = None
) -> ShadowSample:
    """Deterministic rejection sample of ``count`` points of the shadow."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    upper = np.exp(log_upper_bounds(d))
    if not np.all(np.isfinite(upper)):
        raise AlgebraNodeNotSupported("cannot sample an unbounded domain")
    rng = np.random.default_rng(seed)
    budget = max_attempts if max_attempts is not None else max(10_000, 2000 * count)
    accepted, attempts = [], 0
    batch = max(256, 4 * count)
    while sum(len(a) for a in accepted) < count and attempts < budget:
        size = min(batch, budget - attempts)
        R = rng.random((size, d.dim)) * upper
        attempts += size
        accepted.append(R[contains_radial(d, R)])
    pts = np.concatenate(accepted) if accepted else np.zeros((0, d.dim))
    if len(pts) == 0:
        raise EmptyRegionSuspected(f"no point accepted in {attempts} attempts")
    if len(pts) < count:
        raise EmptyRegionSuspected(
            f"only {len(pts)} of {count} points accepted in {attempts} attempts"
        )
    total_accepted = len(pts)
    return ShadowSample(pts[:count], total_accepted / attempts, attempts)


def geometric_mean_shadow(s, t, q: float) -> np.ndarray:
    """Componentwise ``s_i^(1/q) * t_i^((q-1)/q)``."""
    if q < 1:
        raise ValidationError("q must be >= 1")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return s ** (1.0 / q) * t ** ((q - 1.0) / q)


# ---------------------------------------------------------------------------
# Union overlap certification


def _single_cell(d: Domain):
    cells = log_cells(d)
    if len(cells) == 1 and cells[0][0] == 1:
        return cells[0]
    return None


def _certify_overlap(left: Domain, right: Domain) -> str | None:
    c1, c2 = _single_cell(left), _single_cell(right)
    if c1 is not None and c2 is not None:
        from scipy.optimize import linprog

        A = np.vstack([c1[1], c2[1]])
        b = np.concatenate([c1[2], c2[2]])
        n = left.dim
        upper = np.minimum(log_upper_bounds(left), log_upper_bounds(right))
        A_ub = np.hstack([A, np.ones((len(A), 1))])
        bounds = [(-200.0, None if not np.isfinite(u) else float(u)) for u in upper]
        bounds.append((None, 1.0))
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        res = linprog(cost, A_ub=A_ub, b_ub=b, bounds=bounds, method="highs")
        return "lp" if res.status == 0 and -res.fun > 1e-9 else None
    for a, b in ((left, right), (right, left)):
        try:
            pts = sample_shadow(a, 400, seed=0).points
        except (EmptyRegionSuspected, AlgebraNodeNotSupported):
            continue
        if contains_radial(b, pts).any():
            return "sampling"
    return None


Spec = TUnion[OmegaA, Type1, Type2, Hartogs, Notch, Dilate, Product, Intersection, Union]
