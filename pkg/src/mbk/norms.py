"""Monomial L^p norms: closed forms and an independent quadrature oracle.

All closed forms return the p-th power ``||e_alpha||_p^p``.  Rational data
keeps an exact cofactor ``q`` with ``value = q * pi^k``; pi is applied once
at the end.

The oracle works in logarithmic coordinates, where

    ||e_alpha||_p^p = (2 pi)^n * integral over log|Omega| of exp(beta . x) dx,
    beta_i = p alpha_i + 2,

and the shadow is a signed sum of convex polyhedra (see
:func:`geometry.log_cells`).  Truncating to ``x_i >= log eps`` with
``eps = 2^-m`` gives a nondecreasing family ``I(m)``; the increments
``I(m) - I(m-1)`` are integrated directly over thin slabs so that their decay
rate is measured without cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import geometry as g
from ._polytope import PolytopeIntegral
from .errors import (
    AlgebraNodeNotSupported,
    DimensionMismatch,
    ToleranceNotReached,
    ValidationError,
)

LADDER_START = 4
LADDER_STOP = 40
FIT_WINDOW = 6
DECAY_MARGIN = 0.07
LN2 = math.log(2.0)


@dataclass(frozen=True)
class NormValue:
    finite: bool
    value: float | None = None
    cofactor: Fraction | None = None
    pi_power: int = 0

    @classmethod
    def infinite(cls) -> "NormValue":
        return cls(False)

    @classmethod
    def exact(cls, cofactor: Fraction, pi_power: int) -> "NormValue":
        with mpmath.workdps(30):
            val = mpmath.mpf(cofactor.numerator) / cofactor.denominator * mpmath.pi ** pi_power
        return cls(True, float(val), cofactor, pi_power)

    @property
    def exact_form(self) -> str | None:
        if self.cofactor is None:
            return None
        return f"pi^{self.pi_power} * {g.fraction_str(self.cofactor)}"

    def __mul__(self, other: "NormValue") -> "NormValue":
        if not (self.finite and other.finite):
            return NormValue.infinite()
        if self.cofactor is not None and other.cofactor is not None:
            return NormValue.exact(self.cofactor * other.cofactor, self.pi_power + other.pi_power)
        return NormValue(True, self.value * other.value)

    def to_json(self):
        if not self.finite:
            return {"finite": False}
        out = {"finite": True, "value": self.value}
        if self.exact_form:
            out["exact"] = self.exact_form
        return out


@dataclass(frozen=True)
class QuadratureReport:
    estimate: float | None
    abs_error_bound: float
    nodes_used: int
    diverged: bool
    divergence_exponent_fit: float | None
    decay_slope: float | None = None
    pole: bool = False
    ladder: tuple = field(default=(), repr=False)
    monotone: bool = True

    @property
    def in_ap(self) -> bool:
        """Integrable and holomorphic on the domain, i.e. ``e_alpha`` lies in ``A^p``."""
        return not self.diverged and not self.pole

    def to_json(self):
        return {
            "estimate": self.estimate,
            "abs_error_bound": self.abs_error_bound,
            "nodes_used": self.nodes_used,
            "diverged": self.diverged,
            "pole": self.pole,
            "divergence_exponent_fit": self.divergence_exponent_fit,
            "decay_slope": self.decay_slope,
            "monotone": self.monotone,
        }


# ---------------------------------------------------------------------------
# Closed forms


def _check(d: g.Domain, alpha, p) -> tuple[tuple[int, ...], Fraction]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d.dim:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries, domain has dimension {d.dim}")
    p = g.to_fraction(p)
    if p < 1:
        raise ValidationError(f"p = {p} must be >= 1")
    return alpha, p


def has_pole(d: g.Domain, alpha: Sequence[int]) -> bool:
    """A negative exponent on a coordinate whose axis meets the domain."""
    return any(a < 0 and g.meets_axis(d, i) for i, a in enumerate(alpha))


def _leaf_cofactor(d: g.Domain, alpha, p: Fraction):
    """Rational ``q`` with ``norm = q * (2 pi)^n``, or ``None`` if infinite.

    Irrational Hartogs exponents return an mpf instead of a Fraction.
    """
    if isinstance(d, g.OmegaA):
        a, b, c, dd = d.a, d.b, d.c, d.d
        f1 = (b * alpha[0] + a * alpha[1]) * p + 2 * (a + b)
        f2 = (dd * alpha[0] + c * alpha[1]) * p + 2 * (c + dd)
        if f1 <= 0 or f2 <= 0:
            return None
        return Fraction(d.det) / (f1 * f2)
    if isinstance(d, g.Type1):
        k = d.k
        facs = [alpha[0] * p + 2]
        for j in range(1, len(k)):
            facs.append((k[j] * alpha[0] + k[0] * alpha[j]) * p + 2 * (k[0] + k[j]))
        if min(facs) <= 0:
            return None
        return Fraction(k[0]) ** (len(k) - 1) / math.prod(facs)
    if isinstance(d, g.Type2):
        k = d.k
        facs = [sum(Fraction(k[i], k[j]) * (alpha[j] * p + 2) for j in range(i + 1)) for i in range(len(k))]
        if min(facs) <= 0:
            return None
        return 1 / math.prod(facs)
    if isinstance(d, g.Hartogs):
        u = p * alpha[d.small] + 2
        w = p * alpha[d.large] + 2
        if d.gamma.is_rational:
            gg = 1 / d.gamma.exact if d.inverse else d.gamma.exact
            second = gg * u + w
        else:
            with mpmath.workdps(g.PRECISION_DIGITS):
                gg = 1 / d.gamma.approx if d.inverse else d.gamma.approx
                second = gg * (mpmath.mpf(u.numerator) / u.denominator) + mpmath.mpf(w.numerator) / w.denominator
        if u <= 0 or second <= 0:
            return None
        return 1 / (u * second)
    raise AlgebraNodeNotSupported(f"no closed form for {type(d).__name__}")


def closed_form_norm_p(d: g.Domain, alpha, p) -> NormValue:
    """``||e_alpha||_p^p`` on a leaf family, a dilation of one, or a product."""
    alpha, p = _check(d, alpha, p)
    if isinstance(d, g.Product):
        n1 = d.left.dim
        return product_norm(d.left, d.right, alpha[:n1], alpha[n1:], p)
    if has_pole(d, alpha):
        return NormValue.infinite()
    if isinstance(d, g.Dilate):
        inner = closed_form_norm_p(d.inner, alpha, p)
        if not inner.finite:
            return inner
        expo = p * sum(alpha) + 2 * d.dim
        if inner.cofactor is not None and expo.denominator == 1:
            return NormValue.exact(inner.cofactor * d.radius ** int(expo), inner.pi_power)
        return NormValue(True, inner.value * float(d.radius) ** float(expo))
    q = _leaf_cofactor(d, alpha, p)
    if q is None:
        return NormValue.infinite()
    n = d.dim
    if isinstance(q, Fraction):
        return NormValue.exact(q * 2 ** n, n)
    with mpmath.workdps(g.PRECISION_DIGITS):
        return NormValue(True, float(q * (2 * mpmath.pi) ** n))


def product_norm(d1: g.Domain, d2: g.Domain, alpha1, alpha2, p) -> NormValue:
    """Fubini: the norm on ``d1 x d2`` is the product of factor norms."""
    return closed_form_norm_p(d1, alpha1, p) * closed_form_norm_p(d2, alpha2, p)


# ---------------------------------------------------------------------------
# Quadrature oracle


class _Region:
    """Signed cells of a log-shadow with a fixed exponent vector."""

    def __init__(self, d: g.Domain, beta: np.ndarray, order: int):
        self.cells = g.log_cells(d)
        self.upper = g.log_upper_bounds(d)
        if not np.all(np.isfinite(self.upper)):
            raise AlgebraNodeNotSupported("the oracle needs a bounded domain")
        self.beta = beta
        self.order = order
        self.nodes = 0

    def integral(self, lower, upper, order=None) -> float:
        total = 0.0
        for sign, A, b in self.cells:
            P = PolytopeIntegral(A, b, lower, upper, self.beta, order=order or self.order)
            shift, val = P.evaluate()
            self.nodes += P.nodes_used
            if val:
                if shift > 700.0:
                    return math.inf
                total += sign * val * math.exp(shift)
        return total

    def box(self, L: float) -> float:
        n = len(self.beta)
        return self.integral(np.full(n, L), self.upper)

    def slab(self, L_out: float, L_in: float) -> float:
        """Integral over ``{x >= L_out} minus {x >= L_in}`` as ``n`` disjoint pieces."""
        n = len(self.beta)
        total = 0.0
        for i in range(n):
            lower = np.full(n, L_out)
            upper = self.upper.copy()
            lower[:i] = L_in
            upper[i] = min(upper[i], L_in)
            total += self.integral(lower, upper)
        return total


def _slope(ms, values) -> float:
    return float(np.polyfit(np.asarray(ms, dtype=float), np.asarray(values, dtype=float), 1)[0])


def quadrature_norm_p(d: g.Domain, alpha, p, rel_tol: float = 1e-8, order: int = 20) -> QuadratureReport:
    """Numerical ``||e_alpha||_p^p`` with divergence detection.

    Divergence rule: with ``D_m`` the increment of rung ``m`` and ``n`` the
    dimension, fit the slope of ``log D_m - (n - 1) log m`` over the last six
    rungs.  Integrable cases decay geometrically (slope at most
    ``-kappa log 2`` for the slowest face rate ``kappa``); divergent ones do
    not decay, and the ``(n-1) log m`` term absorbs the polynomial factors
    that coincident face rates can produce.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d.dim:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries, domain has dimension {d.dim}")
    pf = float(g.to_fraction(p)) if not isinstance(p, float) else p
    if pf < 1:
        raise ValidationError(f"p = {p} must be >= 1")
    if not (1e-12 < rel_tol < 1e-2):
        raise ValidationError("rel_tol must lie in (1e-12, 1e-2)")
    n = d.dim
    pole = has_pole(d, alpha)
    beta = pf * np.asarray(alpha, dtype=float) + 2.0
    region = _Region(d, beta, order)
    angular = (2 * math.pi) ** n

    base_L = -LADDER_START * LN2
    base = region.box(base_L)
    ladder = [base]
    incs, ms = [], []
    tiny = 0
    overflow = not math.isfinite(base)
    for m in range(LADDER_START + 1, LADDER_STOP + 1 if not overflow else LADDER_START + 1):
        inc = region.slab(-m * LN2, -(m - 1) * LN2)
        if not math.isfinite(inc):
            overflow = True
            break
        incs.append(inc)
        ms.append(m)
        ladder.append(ladder[-1] + inc)
        if ladder[-1] > 0 and abs(inc) <= 1e-18 * ladder[-1]:
            tiny += 1
            if tiny >= 3:
                break
        else:
            tiny = 0
    monotone = all(i >= -1e-12 * max(abs(ladder[-1]), 1e-300) for i in incs)
    total = ladder[-1]

    w_ms, w_inc = ms[-FIT_WINDOW:], incs[-FIT_WINDOW:]
    positive = [v > 0 for v in w_inc]
    if overflow:
        decay, raw = math.inf, math.inf
    elif tiny >= 3 or not all(positive) or len(w_inc) < 2:
        decay, raw = -math.inf, -math.inf
    else:
        logs = np.log(w_inc)
        raw = _slope(w_ms, logs)
        decay = _slope(w_ms, logs - (n - 1) * np.log(w_ms))
    diverged = decay > -DECAY_MARGIN
    w_I = ladder[1:][-FIT_WINDOW:]
    fit = None
    if len(w_I) >= 2 and all(0 < v < math.inf for v in w_I):
        fit = _slope(np.asarray(ms[-len(w_I):]) * LN2, np.log(w_I))
    nodes = region.nodes
    if diverged:
        return QuadratureReport(None, math.inf, nodes, True, fit, decay, pole, tuple(ladder), monotone)

    tail_bound = 0.0
    if math.isfinite(raw):
        # Remaining mass beyond the last rung: integrate it directly far enough
        # that the geometric remainder is negligible, then bound what is left.
        rate = min(-raw, -decay) / LN2
        rate = max(rate, DECAY_MARGIN / LN2)
        L_last = -ms[-1] * LN2
        reach = min(40.0 * math.log(10.0) / rate, 400.0 if n <= 2 else 60.0)
        far = region.slab(L_last - reach, L_last)
        total += far
        rho = math.exp(-rate * LN2)
        tail_bound = incs[-1] * rho ** (reach / LN2) / (1 - rho)
    lo_base = region.integral(np.full(n, base_L), region.upper, order=max(8, order - 6))
    quad_err = abs(lo_base - base) * (abs(total) / abs(base) if base else 1.0)
    err = angular * (quad_err + tail_bound + 1e-15 * abs(total))
    est = angular * total
    if est > 0 and err > rel_tol * est:
        raise ToleranceNotReached(f"error bound {err:.3g} exceeds rel_tol * estimate ({rel_tol * est:.3g})")
    return QuadratureReport(est, err, region.nodes, False, fit, decay, pole, tuple(ladder), monotone)


def oracle_allowable(d: g.Domain, alpha, p) -> bool:
    """Oracle verdict for ``e_alpha in A^p(d)``: no pole and a finite integral."""
    if has_pole(d, alpha):
        return False
    try:
        rep = quadrature_norm_p(d, alpha, p, rel_tol=1e-3, order=12)
    except ToleranceNotReached:
        return True
    return rep.in_ap


def monte_carlo_norm_p(d: g.Domain, alpha, p, count: int = 20000, seed: int = 0) -> tuple[float, float]:
    """Plain Monte Carlo estimate and standard error over the radial box."""
    alpha = np.asarray(alpha, dtype=float)
    pf = float(g.to_fraction(p))
    upper = np.exp(g.log_upper_bounds(d))
    sample = g.sample_shadow(d, count, seed)
    f = np.prod(sample.points ** (pf * alpha + 1.0), axis=1)
    vol = float(np.prod(upper)) * (2 * math.pi) ** d.dim
    acc = sample.acceptance_rate
    mean = acc * f.mean()
    second = acc * (f ** 2).mean()
    stderr = vol * math.sqrt(max(second - mean ** 2, 0.0) / sample.attempts)
    return vol * mean, stderr
