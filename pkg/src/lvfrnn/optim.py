"""Adam with global-norm clipping and plateau learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError


@dataclass
class OptimState:
    lr: float
    decay: float = 1.0
    clip: float = -1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 5
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    best_eval: float = float("inf")
    stale_evals: int = 0

    def to_dict(self) -> dict:
        return {
            "lr": self.lr, "decay": self.decay, "clip": self.clip, "beta1": self.beta1,
            "beta2": self.beta2, "eps": self.eps, "patience": self.patience,
            "step": self.step, "best_eval": self.best_eval, "stale_evals": self.stale_evals,
            "m": {k: a.tolist() for k, a in self.m.items()},
            "v": {k: a.tolist() for k, a in self.v.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OptimState":
        d = dict(d)
        m = {k: np.array(a, dtype=np.float64) for k, a in d.pop("m").items()}
        v = {k: np.array(a, dtype=np.float64) for k, a in d.pop("v").items()}
        return cls(m=m, v=v, **d)


def global_norm(grads: dict) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: dict, clip: float) -> tuple:
    """Rescale so the global l2 norm is at most ``clip``; ``clip < 0`` disables."""
    norm = global_norm(grads)
    if clip < 0 or norm <= clip:
        return grads, 1.0
    scale = clip / norm
    return {k: g * scale for k, g in grads.items()}, scale


def adam_step(state: OptimState, params: dict, grads: dict) -> float:
    """One in-place Adam update of ``params``. Returns the clipping scale applied."""
    for k, g in grads.items():
        if not np.isfinite(g).all():
            raise NonFiniteError(f"non-finite gradient for {k!r}", step=state.step)
    grads, scale = clip_by_global_norm(grads, state.clip)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for k, g in grads.items():
        if k not in state.m:
            state.m[k] = np.zeros_like(g)
            state.v[k] = np.zeros_like(g)
        m, v = state.m[k], state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[k] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return scale


def observe_eval(state: OptimState, value: float) -> bool:
    """Track validation loss; multiply the LR by ``decay`` after ``patience`` stale evals.

    Returns True when the learning rate was changed.
    """
    if value < state.best_eval:
        state.best_eval = value
        state.stale_evals = 0
        return False
    state.stale_evals += 1
    if state.stale_evals >= state.patience and state.decay < 1.0:
        state.lr *= state.decay
        state.stale_evals = 0
        return True
    return False
