"""Nested Gauss-Legendre integration of ``exp(beta . x)`` over a polytope.

The polytope is ``{x : C x <= d}`` intersected with a finite box.  Variables
are integrated innermost ``x_1`` to outermost ``x_n``.  Bounds for ``x_k``
given the outer variables come from Fourier-Motzkin projections; the
integrand of each level is analytic between the ``x_k``-coordinates of the
vertices of the current slice, so those coordinates are used as panel
breakpoints.  The innermost level is integrated in closed form (a single
exponential), every other level numerically.

Values are returned as ``(log_scale, value)`` with the true integral equal
to ``value * exp(log_scale)``; the scale is the maximum of ``beta . x`` over
the vertices, which keeps every evaluated exponential at most one.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

_TOL = 1e-10
_CHUNK = 4096


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _normalise(C, d):
    scale = np.abs(C).max(axis=1) if C.shape[1] else np.zeros(len(C))
    keep = scale > 0
    C = C[keep] / scale[keep, None]
    d = d[keep] / scale[keep]
    if len(C) == 0:
        return C, d
    key = np.round(np.hstack([C, d[:, None]]), 12)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx.sort()
    return C[idx], d[idx]


def _eliminate_first(C, d):
    """Fourier-Motzkin elimination of column 0.  Returns ``None`` if infeasible."""
    c0 = C[:, 0]
    pos, neg = c0 > _TOL, c0 < -_TOL
    zero = ~(pos | neg)
    rows = [C[zero, 1:]]
    rhs = [d[zero]]
    if pos.any() and neg.any():
        Cp, dp = C[pos], d[pos]
        Cn, dn = C[neg], d[neg]
        lam = -Cn[:, 0]
        mu = Cp[:, 0]
        rows.append((lam[None, :, None] * Cp[:, None, 1:] + mu[:, None, None] * Cn[None, :, 1:]).reshape(-1, C.shape[1] - 1))
        rhs.append((lam[None, :] * dp[:, None] + mu[:, None] * dn[None, :]).ravel())
    Cn_, dn_ = np.vstack(rows), np.concatenate(rhs)
    trivial = np.all(np.abs(Cn_) <= _TOL, axis=1)
    if np.any(dn_[trivial] < -1e-9):
        return None
    return _normalise(Cn_[~trivial], dn_[~trivial])


class PolytopeIntegral:
    def __init__(self, A, b, lower, upper, beta, order: int = 20, width_budget: float = 10.0):
        beta = np.asarray(beta, dtype=float)
        n = len(beta)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        eye = np.eye(n)
        A = np.asarray(A, dtype=float).reshape(-1, n)
        self.C = np.vstack([A, -eye, eye])
        self.d = np.concatenate([np.asarray(b, dtype=float), -lower, upper])
        self.n = n
        self.beta = beta
        self.order = order
        self.empty = bool(np.any(lower >= upper))
        self.nodes_used = 0
        nz = np.abs(A[np.abs(A) > 0])
        spread = max(1.0, nz.max() / nz.min()) if nz.size else 1.0
        rate = 1.0 + np.abs(beta).sum() * spread
        self.width = min(1.0, width_budget / rate)
        self.levels = []
        if self.empty:
            return
        C, d = _normalise(self.C, self.d)
        self.levels.append((C, d))
        for _ in range(n - 1):
            res = _eliminate_first(C, d)
            if res is None:
                self.empty = True
                return
            C, d = res
            self.levels.append((C, d))
        self._subsets = [self._vertex_systems(k) for k in range(1, n + 1)]

    def _vertex_systems(self, k):
        """Invertible k-row subsystems of the full constraint set, x_1..x_k free."""
        C = self.C
        rows = np.nonzero(np.any(np.abs(C[:, :k]) > 0, axis=1))[0]
        idx, inv = [], []
        for S in itertools.combinations(rows, k):
            M = C[list(S), :k]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            idx.append(S)
            inv.append(np.linalg.inv(M))
        if not idx:
            return None
        return np.array(idx), np.array(inv)

    def _vertices(self, k, outer):
        """Vertices (B, S, k) of the slice in x_1..x_k, NaN where infeasible."""
        sys_ = self._subsets[k - 1]
        B = len(outer)
        if sys_ is None:
            return np.full((B, 0, k), np.nan)
        idx, inv = sys_
        C, d = self.C, self.d
        out = np.empty((B, len(idx), k))
        for start in range(0, B, _CHUNK):
            o = outer[start:start + _CHUNK]
            rhs = d[idx][None, :, :] - np.einsum("bj,skj->bsk", o, C[idx][:, :, k:])
            y = np.einsum("sij,bsj->bsi", inv, rhs)
            lhs = np.einsum("mi,bsi->bsm", C[:, :k], y) + (o @ C[:, k:].T)[:, None, :]
            ok = np.all(lhs <= d[None, None, :] + 1e-9 * (1 + np.abs(d[None, None, :])), axis=2)
            y[~ok] = np.nan
            out[start:start + _CHUNK] = y
        return out

    def _bounds(self, k, outer):
        C, d = self.levels[k - 1]
        c0 = C[:, 0]
        rest = d[None, :] - outer @ C[:, 1:].T
        up, dn = c0 > _TOL, c0 < -_TOL
        hi = np.min(rest[:, up] / c0[up], axis=1) if up.any() else np.full(len(outer), np.inf)
        lo = np.max(rest[:, dn] / c0[dn], axis=1) if dn.any() else np.full(len(outer), -np.inf)
        return lo, hi

    def _innermost(self, outer, shift):
        lo, hi = self._bounds(1, outer)
        D = np.maximum(hi - lo, 0.0)
        base = outer @ self.beta[1:] - shift
        b1 = self.beta[0]
        with np.errstate(over="ignore", invalid="ignore"):
            if b1 > 0:
                val = np.exp(base + b1 * hi) * (-np.expm1(-b1 * D)) / b1
            elif b1 < 0:
                val = np.exp(base + b1 * lo) * np.expm1(b1 * D) / b1
            else:
                val = np.exp(base) * D
        return np.where(D > 0, val, 0.0)

    def _level(self, k, outer, shift, order):
        if k == 1:
            self.nodes_used += len(outer)
            return self._innermost(outer, shift)
        B = len(outer)
        lo, hi = self._bounds(k, outer)
        ok = hi > lo
        verts = self._vertices(k, outer)[:, :, k - 1]
        verts = np.where(np.isnan(verts), lo[:, None], verts)
        pts = np.concatenate([lo[:, None], np.clip(verts, lo[:, None], hi[:, None]), hi[:, None]], axis=1)
        pts.sort(axis=1)
        a, b = pts[:, :-1], pts[:, 1:]
        length = np.where(ok[:, None], b - a, 0.0)
        nsub = np.ceil(length / self.width - 1e-12).astype(np.int64)
        nsub[length <= 1e-14] = 0
        pa, plen, ns = a.ravel(), length.ravel(), nsub.ravel()
        powner = np.repeat(np.arange(B), a.shape[1])
        total = int(ns.sum())
        if total == 0:
            return np.zeros(B)
        pid = np.repeat(np.arange(len(pa)), ns)
        j = np.arange(total) - np.repeat(np.cumsum(ns) - ns, ns)
        h = plen[pid] / ns[pid]
        sa = pa[pid] + h * j
        t, w = _gauss_legendre(order)
        x = (sa + h / 2)[:, None] + (h / 2)[:, None] * t[None, :]
        wt = (h / 2)[:, None] * w[None, :]
        owner = np.repeat(powner[pid], order)
        self.nodes_used += total * order
        new_outer = np.column_stack([x.ravel(), outer[owner]])
        vals = self._level(k - 1, new_outer, shift, order)
        return np.bincount(owner, weights=vals * wt.ravel(), minlength=B)

    def scale(self) -> float:
        if self.empty:
            return 0.0
        V = self._vertices(self.n, np.zeros((1, 0)))[0]
        V = V[~np.isnan(V).any(axis=1)]
        if len(V) == 0:
            self.empty = True
            return 0.0
        return float(np.max(V @ self.beta))

    def evaluate(self, order: int | None = None) -> tuple[float, float]:
        shift = self.scale()
        if self.empty:
            return 0.0, 0.0
        val = self._level(self.n, np.zeros((1, 0)), shift, order or self.order)[0]
        return shift, float(val)


def integrate_exp(A, b, beta, lower, upper, order: int = 20) -> tuple[float, float]:
    """``(log_scale, value)`` of the integral of ``exp(beta . x)`` over the region."""
    return PolytopeIntegral(A, b, lower, upper, beta, order=order).evaluate()
