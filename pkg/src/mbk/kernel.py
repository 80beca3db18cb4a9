"""Truncated p-monomial basis kernels and the convergence experiments.

The kernel is summed shell by shell, shell ``m`` being ``{alpha : |alpha|_1 = m}``
in lexicographic order, so truncations at different radii share their
leading partial sums bit for bit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import geometry as g
from . import indexsets as ix
from .errors import (
    EnvelopeViolated,
    NotConverged,
    SequenceNotIncreasing,
    ValidationError,
)
from .norms import closed_form_norm_p

FIT_SHELLS = 12
EARLY_STOP_SHELLS = 6
ABS_FLOOR = 1e-300
DEFAULT_DELTA = 0.2


def twist(zeta: Sequence[complex], p: float) -> np.ndarray:
    """``zeta_i |zeta_i|^(p-2)`` componentwise, with ``0 -> 0``."""
    z = np.asarray(zeta, dtype=complex)
    mod = np.abs(z)
    out = np.zeros_like(z)
    nz = mod > 0
    out[nz] = z[nz] * mod[nz] ** (float(p) - 2.0)
    return out


def _p_exact(p) -> Fraction:
    q = g.to_fraction(p)
    if q < 1:
        raise ValidationError(f"p = {q} must be >= 1")
    return q


@lru_cache(maxsize=256)
def shell_indices(n: int, m: int) -> np.ndarray:
    """All ``alpha`` in ``Z^n`` with ``|alpha|_1 = m``, lexicographic."""
    out = []

    def rec(prefix, left, slots):
        if slots == 1:
            for v in sorted({-left, left}):
                out.append(prefix + (v,))
            return
        for v in range(-left, left + 1):
            rec(prefix + (v,), left - abs(v), slots - 1)

    rec((), m, n)
    return np.array(out, dtype=np.int64).reshape(-1, n)


def _log_norm(value) -> float:
    if value.cofactor is not None:
        q = value.cofactor
        return math.log(q.numerator) - math.log(q.denominator) + value.pi_power * math.log(math.pi)
    return math.log(value.value)


@lru_cache(maxsize=4096)
def _shell_table(d: g.Domain, p: Fraction, m: int):
    """Allowable indices of shell ``m`` and their log-norms."""
    alphas = shell_indices(d.dim, m)
    conds = ix.conditions_for(d)
    mask = ix._allowable_mask(d, conds, alphas, p)
    keep = alphas[mask]
    logs = np.array([_log_norm(closed_form_norm_p(d, tuple(a), p)) for a in keep], dtype=float)
    return keep, logs


def _log_modulus(alphas: np.ndarray, z: np.ndarray):
    """``log|z^alpha|`` and ``arg z^alpha`` per row; ``-inf`` where the monomial vanishes."""
    mod = np.abs(z)
    with np.errstate(divide="ignore"):
        logz = np.log(mod)
    zero = mod == 0
    if np.any((alphas[:, zero] < 0)):
        raise ValidationError("negative exponent at a zero coordinate")
    terms = np.where(alphas == 0, 0.0, alphas * np.where(zero, 0.0, logz)[None, :])
    logs = terms.sum(axis=1)
    vanish = np.any((alphas > 0) & zero[None, :], axis=1)
    logs[vanish] = -np.inf
    phase = alphas @ np.angle(z)
    return logs, phase


def _shell_terms(d, p: Fraction, m: int, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    alphas, lnorm = _shell_table(d, p, m)
    if len(alphas) == 0:
        return np.zeros(0, dtype=complex)
    lz, az = _log_modulus(alphas, z)
    lw, aw = _log_modulus(alphas, w)
    pf = float(p)
    with np.errstate(invalid="ignore"):
        mag = lz + (pf - 1.0) * lw - lnorm
    out = np.where(np.isfinite(mag), np.exp(np.where(np.isfinite(mag), mag, 0.0)), 0.0)
    return out * np.exp(1j * (az - aw))


def summand(d: g.Domain, alpha, p, z, w) -> complex:
    """``e_alpha(z) conj(e_alpha(w)) |e_alpha(w)|^(p-2) / ||e_alpha||_p^p``, or 0 off ``S_p``."""
    p = _p_exact(p)
    alpha = tuple(int(a) for a in alpha)
    if not ix.is_allowable(d, alpha, p):
        return 0.0 + 0.0j
    lnorm = _log_norm(closed_form_norm_p(d, alpha, p))
    A = np.array([alpha], dtype=np.int64)
    lz, az = _log_modulus(A, np.asarray(z, dtype=complex))
    lw, aw = _log_modulus(A, np.asarray(w, dtype=complex))
    mag = lz[0] + (float(p) - 1.0) * lw[0] - lnorm
    if not np.isfinite(mag):
        return 0.0 + 0.0j
    return complex(math.exp(mag) * np.exp(1j * (az[0] - aw[0])))


@dataclass(frozen=True)
class KernelValue:
    value: complex
    shells: tuple
    shell_magnitudes: tuple = field(repr=False)
    theta_fit: float | None
    tail_estimate: float
    converged: bool

    def to_json(self):
        return {
            "value": [self.value.real, self.value.imag],
            "shells": [[s.real, s.imag] for s in self.shells],
            "theta": self.theta_fit,
            "tail": self.tail_estimate,
            "converged": self.converged,
        }


def _fit_theta(mags: Sequence[float]) -> tuple[float | None, int | None]:
    # shell sums can oscillate with the lattice period; fit the suffix-max envelope
    env = np.maximum.accumulate(np.asarray(mags, dtype=float)[::-1])[::-1]
    nz = [(m, v) for m, v in enumerate(env) if v > 0]
    if len(nz) < 2:
        return None, None
    last = nz[-FIT_SHELLS:]
    ms = np.array([m for m, _ in last], dtype=float)
    lv = np.log([v for _, v in last])
    slope = np.polyfit(ms, lv, 1)[0]
    return float(math.exp(slope)), last[-1][0]


def _check_inside(d: g.Domain, pt, name):
    if g.contains_point(d, pt) is not g.Membership.INSIDE:
        raise ValidationError(f"{name} = {list(pt)} is not inside the domain")


def evaluate_kernel(d: g.Domain, p, z, w, N: int, rel_tol: float = 1e-10, check: bool = True) -> KernelValue:
    """Truncated kernel ``sum over |alpha|_1 <= N`` with a geometric tail estimate."""
    if N < 0:
        raise ValidationError("N must be >= 0")
    p = _p_exact(p)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if check:
        _check_inside(d, z, "z")
        _check_inside(d, w, "w")
    shells, mags = [], []
    total = 0.0 + 0.0j
    small = 0
    for m in range(N + 1):
        terms = _shell_terms(d, p, m, z, w)
        s = complex(terms.sum()) if len(terms) else 0.0 + 0.0j
        shells.append(s)
        mags.append(float(np.abs(terms).sum()) if len(terms) else 0.0)
        total += s
        if m > 0 and mags[-1] < rel_tol * abs(total):
            small += 1
            if small >= EARLY_STOP_SHELLS:
                break
        else:
            small = 0
    theta, last_m = _fit_theta(mags)
    if theta is None:
        tail = 0.0
    elif theta >= 1:
        raise NotConverged(f"shell magnitudes do not decay (theta = {theta:.4g})", theta)
    else:
        tail = mags[last_m] * theta ** (len(mags) - last_m) / (1 - theta)
    converged = tail <= rel_tol * abs(total) or abs(total) < ABS_FLOOR
    return KernelValue(total, tuple(shells), tuple(mags), theta, tail, converged)


# ---------------------------------------------------------------------------
# Grids and experiments


def interior_grid(d: g.Domain, count: int, delta: float = DEFAULT_DELTA, seed: int = 0):
    """``count`` pairs ``(z, w)`` with log-margin at least ``delta`` and random phases."""
    rng = np.random.default_rng(seed)
    pts = []
    attempts = 0
    while len(pts) < 2 * count:
        attempts += 1
        if attempts > 50:
            raise ValidationError(f"could not find {2 * count} points with margin {delta}")
        sample = g.sample_shadow(d, 8 * count, seed=int(rng.integers(2**31)))
        R = sample.points
        margin = g.signed_margin(d, np.log(R))
        for r in R[margin >= delta]:
            pts.append(r * np.exp(1j * rng.uniform(0, 2 * math.pi, d.dim)))
    pts = pts[: 2 * count]
    return [(pts[2 * i], pts[2 * i + 1]) for i in range(count)]


def _sup_diff(d, q, grid, reference, N, rel_tol):
    diffs = []
    for (z, w), ref in zip(grid, reference):
        diffs.append(abs(evaluate_kernel(d, q, z, w, N, rel_tol).value - ref))
    return max(diffs) if diffs else 0.0


def continuity_experiment(d: g.Domain, p, grid, q_sequence, N: int = 200, rel_tol: float = 1e-12):
    """Rows ``(q_k, sup over grid |K_{q_k} - K_p|)``."""
    p = _p_exact(p)
    reference = [evaluate_kernel(d, p, z, w, N, rel_tol).value for z, w in grid]
    return [(g.to_fraction(q), _sup_diff(d, q, grid, reference, N, rel_tol)) for q in q_sequence]


@dataclass(frozen=True)
class RamadanovResult:
    rows: tuple  # (j, sup_diff)
    norms: dict  # alpha -> list of norms along j
    norm_violations: int

    def to_json(self):
        return {
            "rows": [[j, v] for j, v in self.rows],
            "norms": {",".join(map(str, a)): v for a, v in self.norms.items()},
            "norm_violations": self.norm_violations,
        }


def check_increasing(sequence: Sequence[g.Domain], limit: g.Domain, samples: int = 200, seed: int = 0):
    """Sampled inclusion check ``Omega_j within Omega_{j+1} within limit``."""
    chain = list(sequence) + [limit]
    for j, (a, b) in enumerate(zip(chain, chain[1:])):
        pts = g.sample_shadow(a, samples, seed=seed + j).points
        if not g.contains_radial(b, pts, tol=-1e-12).all():
            raise SequenceNotIncreasing(f"domain {j} is not contained in domain {j + 1}")


def ramadanov_experiment(sequence, limit, p, grid, N: int = 200, rel_tol: float = 1e-12, track=None):
    """Kernels of an increasing sequence against the kernel of the limit."""
    p = _p_exact(p)
    check_increasing(sequence, limit)
    reference = [evaluate_kernel(limit, p, z, w, N, rel_tol).value for z, w in grid]
    rows = []
    for j, dj in enumerate(sequence, start=1):
        rows.append((j, _sup_diff(dj, p, grid, reference, N, rel_tol)))
    if track is None:
        track = [tuple([k] * limit.dim) for k in range(4)]
    norms = {}
    violations = 0
    for a in track:
        vals = []
        for dj in list(sequence) + [limit]:
            nv = closed_form_norm_p(dj, a, p)
            vals.append(nv.value if nv.finite else math.inf)
        norms[tuple(a)] = vals
        violations += sum(1 for x, y in zip(vals, vals[1:]) if y < x * (1 - 1e-14))
    return RamadanovResult(tuple(rows), norms, violations)


@dataclass(frozen=True)
class DominationReport:
    C: float
    theta: float
    max_violation_ratio: float
    shell_max: tuple
    sample_violation_ratio: float

    def to_json(self):
        return {
            "C": self.C,
            "theta": self.theta,
            "max_violation_ratio": self.max_violation_ratio,
            "sample_violation_ratio": self.sample_violation_ratio,
            "shell_max": list(self.shell_max),
        }


def compact_vertices(d: g.Domain, delta: float, floor_log: float = -4.0) -> np.ndarray:
    """Vertices of ``K = {log-margin >= delta, x_i >= floor_log}`` in log coordinates."""
    cells = g.log_cells(d)
    if len(cells) != 1 or cells[0][0] != 1:
        raise ValidationError("domination check needs a single convex shadow")
    _, A, b = cells[0]
    n = d.dim
    C = np.vstack([A, -np.eye(n)])
    rhs = np.concatenate([b - delta, np.full(n, -floor_log)])
    verts = []
    for S in itertools.combinations(range(len(C)), n):
        M = C[list(S)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, rhs[list(S)])
        if np.all(C @ x <= rhs + 1e-9):
            verts.append(x)
    if not verts:
        raise ValidationError(f"compact set with margin {delta} is empty")
    return np.unique(np.round(np.array(verts), 12), axis=0)


def domination_check(
    d: g.Domain,
    p_interval: tuple,
    delta: float,
    N: int,
    q_points: int = 5,
    samples: int = 200,
    seed: int = 0,
    floor_log: float = -4.0,
) -> DominationReport:
    """Fit ``C theta^m`` to the shell maxima of ``|E_{alpha,q}|`` over ``K x K``.

    Shell maxima are exact over ``K``: ``|E_{alpha,q}(z,w)|`` is maximised at
    vertices since ``log|z^alpha|`` is linear in log coordinates.  The
    envelope is fitted on the first half of the shells and must cover all
    of them; random points of ``K`` give an independent consistency check.
    """
    lo, hi = (g.to_fraction(v) for v in p_interval)
    if lo < 1 or hi < lo:
        raise ValidationError("p_interval must satisfy 1 <= lo <= hi")
    qs = sorted({lo + (hi - lo) * Fraction(i, max(q_points - 1, 1)) for i in range(q_points)})
    V = compact_vertices(d, delta, floor_log)
    shell_max = []
    for m in range(N + 1):
        best = 0.0
        for q in qs:
            alphas, lnorm = _shell_table(d, q, m)
            if len(alphas) == 0:
                continue
            h = (alphas @ V.T).max(axis=1)
            best = max(best, float(np.exp(float(q) * h - lnorm).max()))
        shell_max.append(best)
    if N == 0:
        return DominationReport(shell_max[0], 0.0, 1.0, tuple(shell_max), 1.0)
    fit_upto = max(2, N // 2)
    nz = [(m, v) for m, v in enumerate(shell_max[: fit_upto + 1]) if v > 0]
    if len(nz) >= 2:
        slope = np.polyfit([m for m, _ in nz], np.log([v for _, v in nz]), 1)[0]
        theta = float(math.exp(slope))
    else:
        theta = 0.0
    if theta >= 1:
        raise EnvelopeViolated(f"fitted theta = {theta:.4g} is not below 1")
    if theta > 0:
        C = max(v / theta ** m for m, v in nz)
        ratio = max(v / (C * theta ** m) for m, v in enumerate(shell_max) if v > 0)
    else:
        C = shell_max[0]
        ratio = 1.0 if all(v == 0 for v in shell_max[1:]) else math.inf
    # independent check at random points of K and random q
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(len(V)), size=(samples, 2))
    X = weights @ V
    sample_ratio = 0.0
    for i in range(samples):
        q = qs[int(rng.integers(len(qs)))]
        z = np.exp(X[i, 0]) * np.exp(1j * rng.uniform(0, 2 * math.pi, d.dim))
        w = np.exp(X[i, 1]) * np.exp(1j * rng.uniform(0, 2 * math.pi, d.dim))
        for m in range(N + 1):
            terms = _shell_terms(d, q, m, z, w)
            if len(terms) == 0 or theta == 0:
                continue
            sample_ratio = max(sample_ratio, float(np.abs(terms).max()) / (C * theta ** m))
    if ratio > 1 + 1e-9:
        raise EnvelopeViolated(f"envelope exceeded by a factor {ratio:.6g}")
    return DominationReport(C, theta, ratio, tuple(shell_max), sample_ratio)
