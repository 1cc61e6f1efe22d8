import numpy as np
import pytest

from lvfrnn.cell import (LvfCellParams, backward, divergence_penalty, forward, init_lvf_params,
                         init_vanilla_params, modrelu, vanilla_backward, vanilla_forward)
from lvfrnn.checks import random_divfree_field
from lvfrnn.errors import NonFiniteError, ShapeError
from lvfrnn.gradcheck import cell_gradient_error, finite_difference_oracle, relative_error
from lvfrnn.sampler import make_rng

V2 = np.array([[0.0, 1.0], [2.0, 0.0]])


def two_node_cell(nonlinearity="identity"):
    # Euler with tau = 1 gives C = [[2, -1], [1, 0]]
    return LvfCellParams(V=V2.copy(), U=np.eye(2), W_out=np.eye(2), bias_out=np.zeros(2),
                         b=np.zeros(2), tau=1.0, integrator="euler", nonlinearity=nonlinearity)


class TestModrelu:
    def test_zero_bias_is_identity(self):
        z = np.array([-3.0, 0.0, 2.5])
        np.testing.assert_array_equal(modrelu(z, 0.0), z)

    def test_shrinks(self):
        np.testing.assert_array_equal(modrelu([2.0, -2.0], [-1.0, -1.0]), [1, -1])

    def test_clipped(self):
        np.testing.assert_array_equal(modrelu([0.5], [-1.0]), [0])


class TestForward:
    def test_transition_matrix(self):
        np.testing.assert_array_equal(two_node_cell().transition().matrix, [[2, -1], [1, 0]])

    def test_one_step_identity(self):
        trace, y = forward(two_node_cell(), np.array([[1.0, 1.0]]))
        np.testing.assert_array_equal(trace.hidden_states[1], [1, 1])
        np.testing.assert_array_equal(y, [[1, 1]])

    def test_tanh_zero_input_stays_zero(self):
        p = init_lvf_params(6, 3, 2, make_rng(0), V=random_divfree_field(make_rng(1), 6).entries)
        trace, y = forward(p, np.zeros((4, 9, 3)))
        np.testing.assert_array_equal(trace.hidden_states, 0)
        np.testing.assert_array_equal(y, 0)

    def test_modrelu_large_threshold_kills_state(self):
        rng = make_rng(2)
        p = init_lvf_params(5, 3, 2, rng, nonlinearity="modrelu", tau=0.5)
        p.b[:] = -5.0
        p.U[:] = np.clip(p.U, -1, 1)
        trace, _ = forward(p, rng.uniform(-1, 1, size=(3, 7, 3)))
        np.testing.assert_array_equal(trace.hidden_states, 0)

    def test_isometry_midpoint_divergence_free(self):
        rng = make_rng(3)
        p = init_lvf_params(10, 2, 2, rng, V=random_divfree_field(rng, 10).entries, tau=15.0,
                            integrator="midpoint", nonlinearity="identity")
        h0 = rng.normal(size=10)
        trace, _ = forward(p, np.zeros((50, 2)), h0=h0)
        norms = np.linalg.norm(trace.hidden_states, axis=1)
        np.testing.assert_allclose(norms, np.linalg.norm(h0), rtol=1e-10)

    def test_unbatched_matches_batched(self):
        rng = make_rng(4)
        p = init_lvf_params(6, 3, 4, rng, V=rng.uniform(0, 0.2, (6, 6)), tau=0.7)
        x = rng.normal(size=(2, 5, 3))
        _, yb = forward(p, x)
        _, y0 = forward(p, x[0])
        np.testing.assert_allclose(y0, yb[0], rtol=0, atol=1e-15)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            forward(two_node_cell(), np.zeros((3, 5)))

    @pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
    def test_non_finite_names_timestep(self):
        p = two_node_cell()
        x = np.ones((4, 2))
        x[2, 0] = np.inf
        with pytest.raises(NonFiniteError, match="timestep 3") as err:
            forward(p, x)
        assert err.value.step == 3

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError):
            LvfCellParams(V=np.eye(2), U=np.eye(2), W_out=np.eye(2), bias_out=np.zeros(2),
                          b=np.zeros(2))


class TestVanilla:
    def test_zero_input_zero_state(self):
        p = init_vanilla_params(5, 3, 2, make_rng(0))
        trace, y = vanilla_forward(p, np.zeros((2, 6, 3)))
        np.testing.assert_array_equal(trace.hidden_states, 0)

    def test_matches_lvf_when_w_is_transition(self):
        rng = make_rng(5)
        p = init_lvf_params(7, 3, 4, rng, V=rng.uniform(0, 0.3, (7, 7)), tau=2.0,
                            integrator="midpoint", nonlinearity="modrelu")
        p.b[:] = -0.05
        q = init_vanilla_params(7, 3, 4, rng, W=p.transition().matrix, nonlinearity="modrelu")
        q.U[:], q.W_out[:], q.bias_out[:], q.b[:] = p.U, p.W_out, p.bias_out, p.b
        x = rng.normal(size=(3, 8, 3))
        _, y1 = forward(p, x)
        _, y2 = vanilla_forward(q, x)
        assert y1.tobytes() == y2.tobytes()

    @pytest.mark.parametrize("nonlinearity", ["tanh", "identity", "modrelu"])
    def test_gradient_check(self, nonlinearity):
        rng = make_rng(6)
        p = init_vanilla_params(6, 3, 2, rng, nonlinearity=nonlinearity)
        p.W *= 0.5
        p.b[:] = -0.05 if nonlinearity == "modrelu" else 0.0
        x, w = rng.normal(size=(2, 10, 3)), rng.normal(size=(2, 10, 2))

        def loss():
            return float(np.sum(w * vanilla_forward(p, x)[1]))

        g, _ = vanilla_backward(p, vanilla_forward(p, x)[0], w)
        num = finite_difference_oracle(loss, p.arrays())
        for k, a in g.as_dict().items():
            assert relative_error(a, num[k]) < 1e-6, k


class TestBackward:
    def test_zero_output_grads(self):
        rng = make_rng(7)
        p = init_lvf_params(5, 2, 3, rng, V=rng.uniform(0, 1, (5, 5)), tau=0.3)
        trace, y = forward(p, rng.normal(size=(2, 4, 2)))
        g, pen = backward(p, trace, np.zeros_like(y), 0.0)
        for a in g.as_dict().values():
            np.testing.assert_array_equal(a, 0)
        assert pen == 0.0

    def test_penalty_two_nodes(self):
        value, dV = divergence_penalty(V2, 1.0)
        assert value == 2.0
        np.testing.assert_array_equal(dV, [[0, -4], [4, 0]])
        v = V2.copy()
        num = finite_difference_oracle(lambda: divergence_penalty(v, 1.0)[0], {"V": v},
                                       skip_diagonal=("V",))
        assert relative_error(dV, num["V"]) < 1e-6

    def test_gradient_diagonal_is_zero(self):
        rng = make_rng(8)
        p = init_lvf_params(5, 2, 3, rng, V=rng.uniform(0, 1, (5, 5)), tau=0.3,
                            integrator="midpoint")
        trace, y = forward(p, rng.normal(size=(2, 4, 2)))
        g, _ = backward(p, trace, rng.normal(size=y.shape), 0.5)
        np.testing.assert_array_equal(np.diag(g.dV), 0)

    def test_trace_mismatch(self):
        rng = make_rng(9)
        p = init_lvf_params(5, 2, 3, rng)
        q = init_lvf_params(4, 2, 3, rng)
        trace, y = forward(p, np.zeros((3, 2)))
        with pytest.raises(ShapeError):
            backward(q, trace, np.zeros((3, 3)))

    @pytest.mark.parametrize("lam", [0.0, 0.1])
    @pytest.mark.parametrize("nonlinearity", ["tanh", "identity", "modrelu"])
    @pytest.mark.parametrize("integrator", ["euler", "midpoint"])
    def test_against_finite_differences(self, integrator, nonlinearity, lam):
        errs = cell_gradient_error(integrator=integrator, nonlinearity=nonlinearity, lam=lam)
        assert max(errs.values()) < 1e-6, errs
