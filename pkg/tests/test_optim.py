import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lvfrnn.errors import NonFiniteError
from lvfrnn.optim import OptimState, adam_step, clip_by_global_norm, global_norm, observe_eval


def test_first_step_moves_by_lr():
    p = {"x": np.array([0.0])}
    st_ = OptimState(lr=0.1)
    adam_step(st_, p, {"x": np.array([1.0])})
    assert p["x"][0] == pytest.approx(-0.1, rel=1e-6)
    for _ in range(4):
        adam_step(st_, p, {"x": np.array([1.0])})
    assert p["x"][0] == pytest.approx(-0.5, rel=1e-6)


def test_zero_grads_fixed_point():
    p = {"a": np.arange(4.0), "b": np.ones((2, 2))}
    before = {k: v.copy() for k, v in p.items()}
    s = OptimState(lr=0.01)
    for _ in range(3):
        adam_step(s, p, {k: np.zeros_like(v) for k, v in p.items()})
    assert s.step == 3
    for k in p:
        np.testing.assert_array_equal(p[k], before[k])


def test_clip_halves_norm_30():
    g = {"a": np.array([18.0, 0.0]), "b": np.array([[24.0]])}
    assert global_norm(g) == 30.0
    clipped, scale = clip_by_global_norm(g, 15.0)
    assert scale == 0.5
    np.testing.assert_array_equal(clipped["a"], [9, 0])
    assert global_norm(clipped) == 15.0


def test_clip_disabled():
    g = {"a": np.array([1e6])}
    clipped, scale = clip_by_global_norm(g, -1.0)
    assert scale == 1.0 and clipped["a"][0] == 1e6


def test_reported_scale():
    s = OptimState(lr=0.1, clip=15.0)
    assert adam_step(s, {"a": np.zeros(2)}, {"a": np.array([18.0, 24.0])}) == 0.5


def test_non_finite_gradient():
    with pytest.raises(NonFiniteError):
        adam_step(OptimState(lr=0.1), {"a": np.zeros(2)}, {"a": np.array([np.nan, 0.0])})


@given(st.lists(st.floats(0, 10), min_size=1, max_size=60),
       st.floats(0.1, 1.0), st.integers(1, 6))
def test_lr_never_increases(evals, decay, patience):
    s = OptimState(lr=1.0, decay=decay, patience=patience)
    last = s.lr
    for e in evals:
        observe_eval(s, e)
        assert s.lr <= last
        last = s.lr


def test_plateau_halves_lr():
    s = OptimState(lr=1.0, decay=0.5, patience=5)
    observe_eval(s, 1.0)
    changed = [observe_eval(s, 2.0) for _ in range(5)]
    assert changed == [False] * 4 + [True]
    assert s.lr == 0.5


def test_state_round_trip():
    s = OptimState(lr=0.1)
    adam_step(s, {"a": np.zeros(3)}, {"a": np.array([1.0, 2.0, 3.0])})
    back = OptimState.from_dict(s.to_dict())
    assert back.step == 1
    np.testing.assert_array_equal(back.m["a"], s.m["a"])
    np.testing.assert_array_equal(back.v["a"], s.v["a"])
