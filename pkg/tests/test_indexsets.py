import itertools
from fractions import Fraction as F

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mbk import geometry as g
from mbk import indexsets as ix
from mbk.errors import AlgebraNodeNotSupported, BoundaryUndecidable, DimensionMismatch, ValidationError


def brute_allowable(d, a, p):
    """Allowability written out by hand from the per-family integrability conditions."""
    if isinstance(d, g.OmegaA):
        return (d.b * a[0] + d.a * a[1]) * p + 2 * (d.a + d.b) > 0 and (d.d * a[0] + d.c * a[1]) * p + 2 * (d.c + d.d) > 0
    if isinstance(d, g.Type1):
        k = d.k
        return a[0] >= 0 and all((k[j] * a[0] + k[0] * a[j]) * p + 2 * (k[0] + k[j]) > 0 for j in range(1, len(k)))
    if isinstance(d, g.Type2):
        k = d.k
        return a[0] >= 0 and all(sum(F(k[i], k[j]) * (a[j] * p + 2) for j in range(i + 1)) > 0 for i in range(len(k)))
    if isinstance(d, g.Hartogs):
        gam = d.gamma.exact
        s, t = a[d.small], a[d.large]
        lhs = (s * p + 2) + gam * (t * p + 2) if d.inverse else gam * (s * p + 2) + (t * p + 2)
        return s >= 0 and lhs > 0
    raise TypeError(d)


LEAVES = [
    g.OmegaA(1, 1, 1, 2), g.OmegaA(3, 1, 1, 2), g.OmegaA(2, 3, 1, 4),
    g.Type1((1, 1)), g.Type1((2, 3)), g.Type1((1, 2, 3)),
    g.Type2((1, 1)), g.Type2((3, 2)), g.Type2((1, 2, 1)),
    g.Hartogs(1), g.Hartogs(F(3, 2)), g.Hartogs(F(5, 2), swap=True), g.Hartogs(2, inverse=True),
]
leaf_st = st.sampled_from(LEAVES)
p_st = st.fractions(min_value=1, max_value=8, max_denominator=30)


def box_for(d, r=3):
    return [(-r, r)] * d.dim


class TestConditions:
    def test_omega(self):
        c = ix.conditions_for(g.OmegaA(1, 1, 1, 2))
        assert [(x.v, x.c) for x in c.strict] == [((1, 1), 4), ((2, 1), 6)]

    def test_type1(self):
        c = ix.conditions_for(g.Type1((1, 1)))
        assert {(x.v, x.c) for x in c.strict} == {((1, 0), 2), ((1, 1), 4)}
        assert any(x.kind == "sign" and x.index == 0 for x in c.conditions)

    def test_type2_uses_products(self):
        c = ix.conditions_for(g.Type2((1, 2, 3)))
        assert [(x.v, x.c) for x in c.strict] == [((1, 0, 0), 2), ((2, 1, 0), 6), ((6, 3, 2), 22)]

    def test_hartogs_cleared(self):
        c = ix.conditions_for(g.Hartogs(F(3, 2)))
        assert [(x.v, x.c) for x in c.strict] == [((3, 2), 10)]
        assert any(x.kind == "sign" for x in c.conditions)

    def test_irrational_marker(self):
        c = ix.conditions_for(g.parse_domain("hartogs:sqrt(2)"))
        assert len(c.special) == 1

    def test_algebra_nodes(self):
        u = ix.conditions_for(g.Union(g.OmegaA(1, 1, 1, 2), g.Hartogs(1)))
        # Hartogs(1) repeats the (1, 1) face, which is deduplicated
        assert [(x.v, x.c) for x in u.strict] == [((1, 1), 4), ((2, 1), 6)]
        assert any(x.kind == "sign" for x in u.conditions)
        p = ix.conditions_for(g.Product(g.DISC, g.Hartogs(1)))
        assert {x.v for x in p.strict} == {(1, 0, 0), (0, 1, 1)}
        i = ix.conditions_for(g.Intersection(g.Type1((1, 1)), g.OmegaA(1, 1, 1, 2)))
        assert not i.sampling_only and i.reduced_from is not None
        n = ix.conditions_for(g.Intersection(g.Hartogs(1), g.Notch((F(1, 4), F(1, 2)), (F(1, 2), F(3, 4)))))
        assert n.sampling_only

    def test_two_hartogs_reduce(self):
        inter = g.Intersection(g.Hartogs(2, inverse=True), g.Hartogs(3, swap=True, inverse=True))
        assert ix.reduce_intersection(inter) == g.OmegaA(2, 1, 1, 3)


class TestIsAllowable:
    def test_examples(self):
        h = g.Hartogs(1)
        assert ix.is_allowable(h, (0, -1), 2)
        assert not ix.is_allowable(h, (0, -2), 2)  # (0 - 2) * 2 + 4 = 0, strict
        assert not ix.is_allowable(h, (0, -3), 2)
        assert not ix.is_allowable(h, (-1, 5), 2)

    def test_p_below_one(self):
        with pytest.raises(ValidationError):
            ix.is_allowable(g.DISC, (0,), F(1, 2))

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            ix.is_allowable(g.DISC, (0, 0), 2)

    @given(leaf_st, p_st, st.data())
    def test_matches_brute_force(self, d, p, data):
        a = tuple(data.draw(st.integers(-6, 6)) for _ in range(d.dim))
        assert ix.is_allowable(d, a, p) == brute_allowable(d, a, p)

    def test_irrational_undecidable(self):
        # gamma barely above 2: the index sits within representation error of the face
        gam = g.PositiveReal.irrational("2.000000000000000000000000000000000000000000000000001")
        h = g.Hartogs(gam)
        with pytest.raises(BoundaryUndecidable) as info:
            ix.is_allowable(h, (0, -6), 1)
        assert info.value.alphas == [(0, -6)]

    def test_irrational_decidable(self):
        h = g.parse_domain("hartogs:sqrt(2)")
        # sqrt(2) * 4 - 6 < 0 < sqrt(2) * 4 - 4
        assert not ix.is_allowable(h, (1, -4), 2)
        assert ix.is_allowable(h, (1, -3), 2)


class TestEnumerate:
    def test_hartogs_box(self):
        assert ix.enumerate_sp(g.Hartogs(1), 2, [(-3, 0), (-3, 0)]) == [(0, -1), (0, 0)]

    def test_empty_box(self):
        assert ix.enumerate_sp(g.Hartogs(1), 2, [(1, 0), (0, 3)]) == []

    def test_polydisc(self):
        got = ix.enumerate_sp(g.Product(g.DISC, g.DISC), 2, [(-1, 1), (-1, 1)])
        assert got == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_lexicographic(self):
        got = ix.enumerate_sp(g.OmegaA(1, 1, 1, 2), F(3, 2), [(-3, 3), (-3, 3)])
        assert got == sorted(got)

    def test_parse_box(self):
        assert ix.parse_box("-4:4,-2:0") == [(-4, 4), (-2, 0)]
        with pytest.raises(ValidationError):
            ix.parse_box("4")

    def test_undecidable_lists_indices(self):
        gam = g.PositiveReal.irrational("2.000000000000000000000000000000000000000000000000001")
        with pytest.raises(BoundaryUndecidable) as info:
            ix.enumerate_sp(g.Hartogs(gam), 1, [(0, 2), (-9, 0)])
        assert info.value.alphas == [(0, -6), (1, -8)]

    @given(leaf_st, p_st)
    def test_exactly_the_brute_force_set(self, d, p):
        box = box_for(d, 3 if d.dim == 2 else 2)
        want = [a for a in itertools.product(*(range(lo, hi + 1) for lo, hi in box)) if brute_allowable(d, a, p)]
        assert ix.enumerate_sp(d, p, box) == want


class TestLaws:
    @given(leaf_st, p_st, p_st, p_st)
    def test_monotone_chain(self, d, p1, p2, p3):
        p1, p2, p3 = sorted((p1, p2, p3))
        box = box_for(d)
        s1, s2, s3 = (set(ix.enumerate_sp(d, q, box)) for q in (p1, p2, p3))
        assert s1 & s3 <= s2

    @given(st.sampled_from([l for l in LEAVES if l.dim == 2]), st.sampled_from([l for l in LEAVES if l.dim == 2]), p_st)
    def test_union_law(self, d1, d2, p):
        try:
            u = g.Union(d1, d2)
        except ValidationError:
            assume(False)
        box = box_for(d1)
        assert set(ix.enumerate_sp(u, p, box)) == set(ix.enumerate_sp(d1, p, box)) & set(ix.enumerate_sp(d2, p, box))

    @given(leaf_st, leaf_st, p_st)
    def test_product_law(self, d1, d2, p):
        b1, b2 = box_for(d1, 2), box_for(d2, 2)
        got = ix.enumerate_sp(g.Product(d1, d2), p, b1 + b2)
        want = sorted(a + b for a in ix.enumerate_sp(d1, p, b1) for b in ix.enumerate_sp(d2, p, b2))
        assert got == want

    @pytest.mark.parametrize("gammas", [(2, 2), (2, 3), (F(3, 2), 2)])
    @pytest.mark.parametrize("p", [F(1), F(11, 10), F(3, 2), F(2), F(3)])
    def test_intersection_inclusion(self, gammas, p):
        d1 = g.Hartogs(gammas[0], inverse=True)
        d2 = g.Hartogs(gammas[1], swap=True, inverse=True)
        box = [(-4, 4), (-4, 4)]
        inter = set(ix.enumerate_sp(g.Intersection(d1, d2), p, box))
        assert set(ix.enumerate_sp(d1, p, box)) | set(ix.enumerate_sp(d2, p, box)) <= inter


class TestThresholds:
    def test_omega(self):
        ts = ix.thresholds(g.OmegaA(1, 1, 1, 2))
        assert ts.kind == "finite"
        assert list(ts.values) == [F(6), F(4), F(3), F(2), F(3, 2), F(4, 3), F(6, 5)]
        assert ts.to_json()["values"][0] == "6/1"

    def test_type1(self):
        assert list(ix.thresholds(g.Type1((1, 1))).values) == [F(4), F(2), F(4, 3)]

    def test_hartogs_matches_type1(self):
        assert ix.thresholds(g.Hartogs(1)).values == ix.thresholds(g.Type1((1, 1))).values

    def test_hartogs_rational(self):
        # gamma = 3/2: (3 a1 + 2 a2) p = -10 over a1 >= 0
        assert set(ix.thresholds(g.Hartogs(F(3, 2))).values) == {F(10, t) for t in range(1, 10)}

    def test_disc_has_none(self):
        assert ix.thresholds(g.DISC).values == ()

    def test_irrational_dense(self):
        assert ix.thresholds(g.parse_domain("hartogs:sqrt(2)")).to_json() == {"kind": "dense"}

    def test_algebra_node_rejected(self):
        with pytest.raises(AlgebraNodeNotSupported):
            ix.thresholds(g.Union(g.OmegaA(1, 1, 1, 2), g.Hartogs(1)))

    @pytest.mark.parametrize("d", [l for l in LEAVES if l.dim == 2])
    def test_equals_change_points(self, d):
        """Thresholds are exactly the p where the box enumeration changes."""
        box = ix.default_box(d)
        alphas = [tuple(a) for a in ix.box_points(box).tolist()]
        crit = set()
        conds = ix.conditions_for(d).strict
        for c in conds:
            for a in alphas:
                s = sum(x * y for x, y in zip(c.v, a))
                if s < 0 and F(c.c, -s) >= 1:
                    crit.add(F(c.c, -s))
        changes = set()
        for q in sorted(crit):
            at = set(ix.enumerate_sp(d, q, box))
            left = set(ix.enumerate_sp(d, q - F(1, 10**6), box)) if q > 1 else at
            right = set(ix.enumerate_sp(d, q + F(1, 10**6), box))
            if at != left or at != right:
                changes.add(q)
        assert changes == set(ix.thresholds(d).values)

    @pytest.mark.parametrize("d", [g.OmegaA(1, 1, 1, 2), g.Type1((1, 1)), g.Type2((3, 2))])
    def test_piecewise_constant(self, d):
        vals = sorted(ix.thresholds(d).values)
        edges = [F(1)] + vals + [vals[-1] + 3]
        box = box_for(d, 5)
        for lo, hi in zip(edges, edges[1:]):
            sets = {tuple(ix.enumerate_sp(d, lo + (hi - lo) * F(k, 4), box)) for k in (1, 2, 3)}
            assert len(sets) == 1


class TestScan:
    def test_omega_witness(self):
        [res] = ix.threshold_scan(g.OmegaA(1, 1, 1, 2), [F(2)], [(-6, 6), (-6, 6)])
        assert res.witness == (-1, -1)
        assert res.to_json() == {"p": "2/1", "alpha": [-1, -1], "side": "left"}

    def test_type1_witness(self):
        [res] = ix.threshold_scan(g.Type1((1, 1)), [F(4)], [(-8, 8), (-8, 8)])
        assert res.witness == (0, -1)

    def test_empty(self):
        assert ix.threshold_scan(g.Type1((1, 1)), []) == []

    def test_non_threshold(self):
        [res] = ix.threshold_scan(g.Type1((1, 1)), [F(5, 2)])
        assert not res.confirmed and res.to_json()["status"] == "NoWitnessInBox"

    def test_p_equal_one_right_side_only(self):
        [res] = ix.threshold_scan(g.OmegaA(1, 1, 1, 2), [F(1)])
        assert not res.confirmed or res.side == "right"

    @given(st.sampled_from([g.OmegaA(1, 1, 1, 2), g.Type1((1, 1)), g.Hartogs(F(3, 2))]), st.data())
    def test_witness_really_flips(self, d, data):
        vals = ix.thresholds(d).values
        p = data.draw(st.sampled_from(vals))
        [res] = ix.threshold_scan(d, [p])
        eps = F(1, 10**9)
        at = ix.is_allowable(d, res.witness, p)
        flips = [ix.is_allowable(d, res.witness, p + eps) != at]
        if p > 1:
            flips.append(ix.is_allowable(d, res.witness, p - eps) != at)
        assert any(flips)


class TestExcess:
    d1, d2 = g.Hartogs(2, inverse=True), g.Hartogs(2, swap=True, inverse=True)
    box = [(-4, 4), (-4, 4)]

    @pytest.mark.parametrize("p,want", [
        (F(2), []),
        (F(3), []),
        (F(7, 5), [(-1, -1)]),
        (F(3, 2), [(-1, -1)]),
        (F(11, 10), [(-2, -1), (-1, -2), (-1, -1)]),
    ])
    def test_two_hartogs(self, p, want):
        assert ix.intersection_excess(self.d1, self.d2, p, self.box) == want


class TestDenseProbe:
    @given(st.fractions(min_value=1, max_value=6, max_denominator=50))
    def test_finds_flip_near_p(self, p):
        h = g.parse_domain("hartogs:sqrt(2)")
        alpha, lo, hi = ix.dense_probe(h, p)
        # the flip lies strictly inside (lo, hi) and within the window of p
        assert lo < hi and hi - lo < 0.05
        assert float(lo) < float(p) + 0.05 and float(hi) > float(p) - 0.05
        assert ix.is_allowable(h, alpha, lo) and not ix.is_allowable(h, alpha, hi)

    def test_rejects_rational(self):
        with pytest.raises(ValidationError):
            ix.dense_probe(g.Hartogs(2), 2)
