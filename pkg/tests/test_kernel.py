import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbk import geometry as g
from mbk import kernel as k
from mbk.errors import NotConverged, SequenceNotIncreasing, ValidationError


def disc_kernel(z, w, p):
    """sum_k (p k + 2)/(2 pi) x^k with x = z conj(w) |w|^(p-2), summed in closed form."""
    x = z * np.conj(w) * abs(w) ** (p - 2) if w != 0 else 0
    return (p * x / (1 - x) ** 2 + 2 / (1 - x)) / (2 * math.pi)


def hartogs_bergman(z, w):
    s = z[0] * np.conj(w[0])
    t = z[1] * np.conj(w[1])
    return t / (math.pi ** 2 * (1 - t) ** 2 * (t - s) ** 2)


polar = st.tuples(st.floats(0.0, 0.8), st.floats(0, 2 * math.pi)).map(lambda rt: cmath.rect(*rt))
p_st = st.sampled_from([F(1), F(5, 4), F(3, 2), F(2), F(5, 2), F(3), F(4)])


class TestTwist:
    def test_examples(self):
        assert np.allclose(k.twist([2 + 0j, 0j], 3), [4, 0])
        assert np.allclose(k.twist([1j * 0.5], 2), [0.5j])
        assert k.twist([0j], 1)[0] == 0

    @given(st.lists(polar, min_size=1, max_size=4), st.floats(1.0, 6.0))
    def test_inverse(self, zeta, p):
        # |t| = |z|^(p-1), so applying the twist with exponent p' = p/(p-1) undoes it
        zeta = np.array(zeta)
        t = k.twist(zeta, p)
        nz = zeta != 0
        assert np.allclose(np.abs(t[nz]), np.abs(zeta[nz]) ** (p - 1))
        assert (t[~nz] == 0).all()
        if p > 1.05:
            back = k.twist(t, p / (p - 1))
            assert np.allclose(back, zeta, atol=1e-9)


class TestSummand:
    def test_constant_term(self):
        # e_0 = 1 and ||1||^2 on the disc is pi
        assert k.summand(g.DISC, (0,), 2, [0.3], [0.5j]) == pytest.approx(1 / math.pi)

    def test_off_index_set(self):
        assert k.summand(g.Hartogs(1), (0, -2), 2, [0.1, 0.5], [0.1, 0.5]) == 0

    def test_disc_first(self):
        # ||z||_2^2 = pi/2 on the disc: z conj(w) * 2/pi
        z, w = 0.3 + 0.1j, 0.2 - 0.4j
        assert k.summand(g.DISC, (1,), 2, [z], [w]) == pytest.approx(z * np.conj(w) * 2 / math.pi)

    def test_general_p(self):
        # ||1||_p^p on the disc is pi for every p, and |1|^(p-2) = 1
        assert k.summand(g.DISC, (0,), 3, [0.2], [0.7]) == pytest.approx(1 / math.pi)
        # alpha = 1, p = 4: 6/(2 pi) z conj(w) |w|^2
        z, w = 0.3j, 0.5
        assert k.summand(g.DISC, (1,), 4, [z], [w]) == pytest.approx(z * w * 0.25 * 6 / (2 * math.pi))

    def test_negative_exponent_at_zero(self):
        with pytest.raises(ValidationError):
            k.summand(g.Hartogs(1), (0, -1), 2, [0.1, 0.0], [0.1, 0.5])


class TestEvaluate:
    @given(polar, polar, p_st)
    def test_disc_closed_form(self, z, w, p):
        val = k.evaluate_kernel(g.DISC, p, [z], [w], 400).value
        assert val == pytest.approx(disc_kernel(z, w, float(p)), rel=1e-9, abs=1e-12)

    def test_disc_bergman(self):
        z, w = 0.5, 0.5
        val = k.evaluate_kernel(g.DISC, 2, [z], [w], 200).value
        assert val == pytest.approx(1 / (math.pi * (1 - 0.25) ** 2), rel=1e-12)

    def test_polydisc_factorises(self):
        d = g.Product(g.DISC, g.DISC)
        z, w = [0.3 + 0.2j, -0.4j], [0.1, 0.5 + 0.1j]
        got = k.evaluate_kernel(d, 3, z, w, 200).value
        want = disc_kernel(z[0], w[0], 3) * disc_kernel(z[1], w[1], 3)
        assert got == pytest.approx(want, rel=1e-9)

    def test_hartogs_bergman(self):
        z = np.array([0.3 + 0.1j, 0.5 - 0.2j])
        w = np.array([-0.1 + 0.2j, 0.6 + 0.1j])
        kv = k.evaluate_kernel(g.Hartogs(1), 2, z, w, 200)
        assert kv.converged
        assert kv.value == pytest.approx(hartogs_bergman(z, w), rel=1e-9)

    @settings(max_examples=20)
    @given(st.integers(0, 10**6))
    def test_hermitian_at_two(self, seed):
        d = g.OmegaA(1, 1, 1, 2)
        [(z, w)] = k.interior_grid(d, 1, seed=seed)
        a = k.evaluate_kernel(d, 2, z, w, 200).value
        b = k.evaluate_kernel(d, 2, w, z, 200).value
        assert a == pytest.approx(np.conj(b), rel=1e-9)

    @settings(max_examples=20)
    @given(st.integers(0, 10**6), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), p_st)
    def test_rotation_invariant(self, seed, t1, t2, p):
        d = g.Hartogs(1)
        [(z, w)] = k.interior_grid(d, 1, seed=seed)
        rot = np.exp(1j * np.array([t1, t2]))
        a = k.evaluate_kernel(d, p, z, w, 200).value
        b = k.evaluate_kernel(d, p, rot * z, rot * w, 200).value
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)

    @given(polar, polar, polar, polar)
    def test_product_factorises(self, z1, z2, w1, w2):
        d = g.Product(g.DISC, g.DISC)
        got = k.evaluate_kernel(d, 2, [z1, z2], [w1, w2], 400).value
        assert got == pytest.approx(disc_kernel(z1, w1, 2) * disc_kernel(z2, w2, 2), rel=1e-9, abs=1e-12)

    def test_truncation_consistent(self):
        d, z, w = g.Type1((1, 2)), [0.1, 0.4j], [0.05j, -0.3]
        a = k.evaluate_kernel(d, F(3, 2), z, w, 120, rel_tol=1e-14)
        b = k.evaluate_kernel(d, F(3, 2), z, w, 240, rel_tol=1e-14)
        assert a.value == pytest.approx(b.value, rel=1e-11)
        assert sum(a.shells) == pytest.approx(a.value)

    def test_n_zero(self):
        kv = k.evaluate_kernel(g.DISC, 2, [0.3], [0.2], 0)
        assert kv.value == pytest.approx(1 / math.pi) and len(kv.shells) == 1

    def test_near_boundary(self):
        with pytest.raises(NotConverged) as info:
            k.evaluate_kernel(g.DISC, 2, [0.999], [0.999], 50)
        assert info.value.theta >= 1

    def test_outside(self):
        with pytest.raises(ValidationError):
            k.evaluate_kernel(g.DISC, 2, [1.2], [0.1], 10)
        with pytest.raises(ValidationError):
            k.evaluate_kernel(g.DISC, 2, [0.2], [0.1], -1)

    def test_json(self):
        out = k.evaluate_kernel(g.DISC, 2, [0.3], [0.2], 30).to_json()
        assert {"value", "theta", "converged"} <= set(out)


class TestExperiments:
    def test_grid_margin(self):
        d = g.Hartogs(1)
        grid = k.interior_grid(d, 10, delta=0.2, seed=1)
        assert len(grid) == 10
        for z, w in grid:
            for pt in (z, w):
                assert g.signed_margin(d, np.log(np.abs(pt))[None, :])[0] >= 0.2

    def test_continuity_constant_q(self):
        d = g.DISC
        grid = k.interior_grid(d, 5, seed=0)
        rows = k.continuity_experiment(d, 2, grid, [2, 2, 2], N=100)
        assert [r[1] for r in rows] == [0.0, 0.0, 0.0]

    def test_continuity_decreases(self):
        d = g.DISC
        grid = k.interior_grid(d, 5, seed=0)
        rows = k.continuity_experiment(d, 2, grid, [F(2) + F(1, 2 ** j) for j in range(1, 6)], N=150)
        vals = [r[1] for r in rows]
        assert vals == sorted(vals, reverse=True)

    def test_ramadanov_constant_sequence(self):
        grid = k.interior_grid(g.DISC, 4, seed=0)
        res = k.ramadanov_experiment([g.DISC] * 3, g.DISC, 2, grid, N=100)
        assert [r[1] for r in res.rows] == [0.0, 0.0, 0.0]
        assert res.norm_violations == 0

    def test_ramadanov_decreasing_sequence_rejected(self):
        seq = [g.Dilate(g.DISC, F(1)), g.Dilate(g.DISC, F(1, 2))]
        with pytest.raises(SequenceNotIncreasing):
            k.ramadanov_experiment(seq, g.DISC, 2, [([0.1], [0.1])], N=10)

    def test_ramadanov_norms_monotone(self):
        seq = [g.Dilate(g.DISC, F(j, j + 1)) for j in range(1, 5)]
        res = k.ramadanov_experiment(seq, g.DISC, 2, k.interior_grid(g.Dilate(g.DISC, F(1, 2)), 3, seed=0), N=120)
        vals = [r[1] for r in res.rows]
        assert vals == sorted(vals, reverse=True)
        assert res.norm_violations == 0

    def test_domination_disc(self):
        rep = k.domination_check(g.DISC, (F(3, 2), F(3)), 0.2, 60)
        assert 0 < rep.theta < 1
        assert rep.max_violation_ratio <= 1.0
        assert rep.sample_violation_ratio <= 1.0

    def test_domination_n_zero(self):
        rep = k.domination_check(g.DISC, (F(3, 2), F(3)), 0.2, 0)
        assert rep.max_violation_ratio <= 1.0
