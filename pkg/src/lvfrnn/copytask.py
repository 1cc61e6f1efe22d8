"""Copy-task data, losses and metrics.

Token layout for a sequence of length ``T + 2K`` over an alphabet of ``L`` symbols:
payload symbols are ``0 .. L-1``, the blank is ``L`` and the marker is ``L + 1``. The
input carries the payload in its first ``K`` positions and the marker at position
``T + K``; the target is blank except for the last ``K`` positions, which repeat the
payload.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .sampler import make_rng

BLANK_GLYPH = "-"
MARKER_GLYPH = ":"


@dataclass(frozen=True)
class CopyTaskSpec:
    T: int
    K: int
    L: int
    batch: int = 128
    seed: int = 0

    def __post_init__(self):
        # T = 0 is allowed so the minimal layout can be exercised
        if self.T < 0 or self.K < 1 or self.L < 2 or self.batch < 1:
            raise ValueError(f"invalid copy task sizes: {self}")

    @property
    def length(self) -> int:
        return self.T + 2 * self.K

    @property
    def blank(self) -> int:
        return self.L

    @property
    def marker(self) -> int:
        return self.L + 1

    @property
    def vocab(self) -> int:
        return self.L + 2


@dataclass(frozen=True)
class CopyTaskBatch:
    inputs: np.ndarray
    targets: np.ndarray
    spec: CopyTaskSpec

    def one_hot_inputs(self) -> np.ndarray:
        return one_hot(self.inputs, self.spec.vocab)


def copy_sequences(payload, T: int, L: int):
    """Input and target token arrays for given payloads of shape ``(B, K)``."""
    payload = np.atleast_2d(np.asarray(payload, dtype=np.int64))
    B, K = payload.shape
    S = T + 2 * K
    inputs = np.full((B, S), L, dtype=np.int64)
    targets = np.full((B, S), L, dtype=np.int64)
    inputs[:, :K] = payload
    inputs[:, T + K] = L + 1
    targets[:, T + K:] = payload
    return inputs, targets


def generate_copy_batch(spec: CopyTaskSpec, *stream: int) -> CopyTaskBatch:
    """Random batch; deterministic in ``spec.seed`` and the optional ``stream`` ids."""
    rng = make_rng(spec.seed, *stream)
    payload = rng.integers(0, spec.L, size=(spec.batch, spec.K))
    inputs, targets = copy_sequences(payload, spec.T, spec.L)
    return CopyTaskBatch(inputs, targets, spec)


def one_hot(tokens, vocab: int) -> np.ndarray:
    tokens = np.asarray(tokens)
    out = np.zeros(tokens.shape + (vocab,))
    np.put_along_axis(out, tokens[..., None], 1.0, axis=-1)
    return out


def render(tokens, L: int) -> str:
    """Glyph string for a token row: payload ``i`` prints as ``i + 1``."""
    if L > 9:
        raise ValueError("rendering supports alphabets of at most 9 symbols")
    glyphs = [str(i + 1) for i in range(L)] + [BLANK_GLYPH, MARKER_GLYPH]
    return "".join(glyphs[int(t)] for t in tokens)


def parse(text: str, L: int) -> np.ndarray:
    lookup = {str(i + 1): i for i in range(L)}
    lookup[BLANK_GLYPH] = L
    lookup[MARKER_GLYPH] = L + 1
    return np.array([lookup[c] for c in text], dtype=np.int64)


def baseline_loss(spec: CopyTaskSpec) -> float:
    """Cross entropy of the memoryless strategy, ``K ln L / (T + 2K)``."""
    return spec.K * math.log(spec.L) / (spec.T + 2 * spec.K)


def _check(logits, targets):
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    if logits.ndim != targets.ndim + 1 or logits.shape[:-1] != targets.shape:
        raise ShapeError(f"logits {logits.shape} do not match targets {targets.shape}")
    return logits, targets


def cross_entropy(logits, targets, with_grad: bool = False):
    """Mean token cross entropy over every position of every sequence.

    With ``with_grad`` also returns the gradient with respect to ``logits``.
    """
    logits, targets = _check(logits, targets)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - logz
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = float(-picked.mean())
    if not with_grad:
        return loss
    g = np.exp(logp)
    np.put_along_axis(g, targets[..., None], np.take_along_axis(g, targets[..., None], -1) - 1.0,
                      axis=-1)
    g /= targets.size
    return loss, g


def recall_accuracy(logits, targets, K: int) -> float:
    """Fraction of correct argmax tokens over the last ``K`` positions."""
    logits, targets = _check(logits, targets)
    pred = logits[..., -K:, :].argmax(axis=-1)
    return float(np.mean(pred == targets[..., -K:]))
