import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lvfrnn.checks import (FIXTURE_COMMUTATOR, FIXTURE_DU, FIXTURE_DV, dimension_rank,
                           field_with_operator, integer_divfree_field, integer_field)
from lvfrnn.errors import ShapeError
from lvfrnn.geometry import (VectorField, apply_dv, build_dv, commutator, div, grad, is_in_vf,
                             is_skew, linear_combination, project_divergence_free)
from lvfrnn.sampler import make_rng

V2 = np.array([[0.0, 1.0], [2.0, 0.0]])


def zero_diag_matrices(max_kappa=8):
    return st.integers(1, max_kappa).flatmap(
        lambda k: arrays(np.float64, (k, k), elements=st.floats(-10, 10, width=64))
    ).map(lambda a: VectorField.from_matrix(a, zero_diagonal=True))


class TestGrad:
    def test_constant_is_zero(self):
        np.testing.assert_array_equal(grad(np.full(5, 3.7)), np.zeros((5, 5)))

    def test_two_nodes(self):
        np.testing.assert_array_equal(grad([1.0, 0.0]), [[0, 1], [-1, 0]])

    def test_three_nodes(self):
        np.testing.assert_array_equal(grad([3.0, 1.0, 2.0]),
                                      [[0, 2, 1], [-2, 0, -1], [-1, 1, 0]])

    @given(arrays(np.float64, st.integers(1, 10), elements=st.floats(-1e3, 1e3)))
    def test_skew_zero_diagonal(self, h):
        g = grad(h)
        np.testing.assert_array_equal(g, -g.T)
        assert np.all(np.diag(g) == 0)


class TestDiv:
    def test_symmetric_field_is_divergence_free(self):
        rng = make_rng(1)
        s = np.triu(rng.normal(size=(6, 6)), 1)
        np.testing.assert_array_equal(div(s + s.T), np.zeros(6))

    def test_two_nodes(self):
        np.testing.assert_array_equal(div(V2), [1.0, -1.0])

    @given(zero_diag_matrices())
    def test_total_divergence_vanishes(self, v):
        assert abs(div(v).sum()) <= 1e-12 * max(1.0, np.abs(v.entries).sum())


class TestVectorField:
    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError, match="zero diagonal"):
            VectorField(np.eye(3))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            VectorField(np.zeros((2, 3)))

    def test_entries_are_read_only(self):
        v = VectorField(V2)
        with pytest.raises(ValueError):
            v.entries[0, 1] = 5.0

    def test_from_matrix_can_drop_diagonal(self):
        v = VectorField.from_matrix(np.ones((3, 3)), zero_diagonal=True)
        np.testing.assert_array_equal(np.diag(v.entries), 0)


class TestBuildDv:
    def test_zero_field(self):
        d = build_dv(VectorField.zeros(4))
        np.testing.assert_array_equal(d.matrix, np.zeros((4, 4)))

    def test_two_nodes(self):
        d = build_dv(V2)
        np.testing.assert_array_equal(d.matrix, [[-1, 1], [-1, 1]])
        np.testing.assert_array_equal(d.rotation, [[0, 1], [-1, 0]])
        np.testing.assert_array_equal(d.flux, [1, -1])

    def test_counterexample_operator(self):
        d = build_dv(field_with_operator(FIXTURE_DV))
        np.testing.assert_array_equal(d.matrix, FIXTURE_DV)
        np.testing.assert_array_equal(d.rotation, FIXTURE_DV)
        np.testing.assert_array_equal(d.flux, [0, 0, 0])

    @given(zero_diag_matrices())
    def test_decomposition_invariants(self, v):
        d = build_dv(v)
        np.testing.assert_array_equal(d.rotation + d.rotation.T, 0)
        np.testing.assert_array_equal(d.matrix, d.rotation - np.diag(d.flux))
        np.testing.assert_allclose(d.flux, div(v), atol=1e-12 * max(1, np.abs(v.entries).sum()))
        scale = max(1.0, np.abs(v.entries).sum())
        assert np.max(np.abs(d.matrix.sum(axis=1))) <= 1e-12 * scale

    @settings(max_examples=50)
    @given(st.integers(1, 10), st.integers(0, 2**32))
    def test_skew_iff_divergence_free(self, kappa, seed):
        rng = make_rng(seed)
        for v in (integer_divfree_field(rng, kappa), integer_field(rng, kappa)):
            assert is_skew(build_dv(v).matrix) == bool(np.all(div(v) == 0))

    @given(st.integers(2, 10), st.integers(0, 2**32))
    def test_gauge_invariance(self, kappa, seed):
        rng = make_rng(seed)
        v = integer_field(rng, kappa)
        s = np.triu(rng.integers(-9, 10, size=(kappa, kappa)).astype(float), 1)
        np.testing.assert_array_equal(build_dv(v.entries + s + s.T).matrix, build_dv(v).matrix)

    @pytest.mark.parametrize("kappa", range(2, 9))
    def test_dimension(self, kappa):
        assert dimension_rank(kappa) == kappa * (kappa - 1) // 2


class TestApplyDv:
    def test_constant_annihilated(self):
        d = build_dv(make_rng(3).normal(size=(5, 5)) * (1 - np.eye(5)))
        np.testing.assert_allclose(apply_dv(d, np.full(5, 2.5)), 0, atol=1e-12)

    def test_leibniz_failure(self):
        d = build_dv(V2)
        f, g = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        np.testing.assert_array_equal(apply_dv(d, f * g), [0, 0])
        np.testing.assert_array_equal(apply_dv(d, f) * g + f * apply_dv(d, g), [1, -1])

    def test_matrix_product(self):
        np.testing.assert_array_equal(apply_dv(build_dv(V2), [1.0, 0.0]), [-1, -1])

    @given(zero_diag_matrices(), st.integers(0, 2**32))
    def test_edge_sum_form(self, v, seed):
        h = make_rng(seed).uniform(-1, 1, v.kappa)
        a = v.entries
        expected = ((a - a.T) * grad(h)).sum(axis=1)
        np.testing.assert_allclose(apply_dv(build_dv(v), h), expected,
                                   atol=1e-12 * max(1, np.abs(a).sum()))

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            apply_dv(build_dv(V2), np.zeros(3))


@given(zero_diag_matrices(), st.integers(0, 2**32))
def test_integration_by_parts(v, seed):
    h = make_rng(seed).uniform(-1, 1, v.kappa)
    r = v.entries.ravel() @ grad(h).ravel() + div(v) @ h
    assert abs(r) <= 1e-12 * max(1.0, np.abs(v.entries).sum())


class TestCommutator:
    def test_self_commutator(self):
        d = build_dv(V2)
        np.testing.assert_array_equal(commutator(d, d), 0)

    def test_counterexample(self):
        dv = build_dv(field_with_operator(FIXTURE_DV))
        c = commutator(FIXTURE_DU, dv)
        np.testing.assert_array_equal(c, FIXTURE_COMMUTATOR)
        assert not is_in_vf(c)
        assert is_in_vf(FIXTURE_DU, 0.0)

    def test_divergence_free_pairs_stay_skew(self):
        rng = make_rng(11)
        for _ in range(200):
            k = int(rng.integers(2, 12))
            a = build_dv(integer_divfree_field(rng, k))
            b = build_dv(integer_divfree_field(rng, k))
            c = commutator(a, b)
            np.testing.assert_array_equal(c, -c.T)
            assert is_in_vf(c, 0.0)

    def test_commutator_has_zero_diagonal(self):
        rng = make_rng(12)
        a, b = build_dv(integer_field(rng, 6)), build_dv(integer_field(rng, 6))
        np.testing.assert_array_equal(np.diag(commutator(a, b)), 0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            commutator(build_dv(V2), build_dv(np.zeros((3, 3))))


class TestIsInVf:
    def test_zero(self):
        assert is_in_vf(np.zeros((4, 4)))

    def test_two_node_operator(self):
        assert is_in_vf(np.array([[-1.0, 1.0], [-1.0, 1.0]]))

    def test_wrong_diagonal(self):
        assert not is_in_vf(np.array([[0.0, 1.0], [-1.0, 1.0]]))

    @given(zero_diag_matrices())
    def test_every_dv_is_member(self, v):
        assert is_in_vf(build_dv(v).matrix, 1e-12 * max(1, np.abs(v.entries).sum()))


class TestLinearCombination:
    def test_inverse_element(self):
        a = VectorField(V2)
        np.testing.assert_array_equal(linear_combination(1, a, -1, a).entries, 0)

    def test_identity_element(self):
        a = VectorField(V2)
        np.testing.assert_array_equal(linear_combination(0, a, 0, a).entries, 0)

    def test_scaling(self):
        r = linear_combination(2.0, VectorField(V2), 0.0, VectorField(V2))
        np.testing.assert_array_equal(r.entries, [[0, 2], [4, 0]])
        np.testing.assert_array_equal(div(r), [2, -2])

    @given(st.integers(1, 8), st.integers(0, 2**32))
    def test_linearity_exact(self, kappa, seed):
        rng = make_rng(seed)
        a, b = integer_field(rng, kappa), integer_field(rng, kappa)
        al, be = (float(x) for x in rng.integers(-5, 6, size=2))
        np.testing.assert_array_equal(
            build_dv(linear_combination(al, a, be, b)).matrix,
            al * build_dv(a).matrix + be * build_dv(b).matrix)

    def test_operators(self):
        a = VectorField(V2)
        np.testing.assert_array_equal((a + a).entries, 2 * V2)
        np.testing.assert_array_equal((a - a).entries, 0)
        np.testing.assert_array_equal((-a).entries, -V2)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            linear_combination(1, VectorField(V2), 1, VectorField.zeros(3))


@given(zero_diag_matrices())
def test_projection_removes_divergence_keeps_symmetric_part(v):
    p = project_divergence_free(v)
    scale = max(1.0, np.abs(v.entries).sum())
    assert np.max(np.abs(div(p))) <= 1e-12 * scale
    sym = lambda a: a + a.T  # noqa: E731
    np.testing.assert_allclose(sym(p.entries), sym(v.entries), atol=1e-12 * scale)
