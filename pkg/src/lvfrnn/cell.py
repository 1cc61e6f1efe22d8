"""The latent vector field recurrent cell and a vanilla RNN baseline.

Both cells run ``h_t = sigma(C h_{t-1} + U x_t)`` over batched sequences and read out
``y_t = W_out h_t + bias_out``. The lvfRNN builds ``C`` from a latent vector field V
once per forward pass; the vanilla cell learns ``C`` directly. Arrays are batch
major: inputs ``(B, T, m)``, hidden states ``(B, T + 1, kappa)``, outputs
``(B, T, o)``. Unbatched ``(T, m)`` inputs are accepted and give unbatched results.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonFiniteError, ShapeError
from .geometry import div, dv_matrix
from .transition import Integrator, TransitionMatrix, build_transition


class Nonlinearity(str, enum.Enum):
    TANH = "tanh"
    MODRELU = "modrelu"
    IDENTITY = "identity"


def modrelu(z, b):
    """Real modReLU: ``sign(z) * max(|z| + b, 0)``."""
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) + b, 0.0)


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_out, fan_in))


@dataclass
class LvfCellParams:
    V: np.ndarray
    U: np.ndarray
    W_out: np.ndarray
    bias_out: np.ndarray
    b: np.ndarray
    tau: float = 1.0
    integrator: Integrator = Integrator.EULER
    nonlinearity: Nonlinearity = Nonlinearity.TANH

    def __post_init__(self):
        self.integrator = Integrator(self.integrator)
        self.nonlinearity = Nonlinearity(self.nonlinearity)
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        _check_shapes(self.V, self.U, self.W_out, self.bias_out, self.b)
        if np.any(np.diag(self.V) != 0):
            raise ValueError("V must have a zero diagonal")

    @property
    def kappa(self) -> int:
        return self.V.shape[0]

    def arrays(self) -> dict:
        return {"V": self.V, "U": self.U, "W_out": self.W_out,
                "bias_out": self.bias_out, "b": self.b}

    def transition(self) -> TransitionMatrix:
        return build_transition(dv_matrix(self.V), self.tau, self.integrator)


@dataclass
class VanillaCellParams:
    W: np.ndarray
    U: np.ndarray
    W_out: np.ndarray
    bias_out: np.ndarray
    b: np.ndarray
    nonlinearity: Nonlinearity = Nonlinearity.TANH

    def __post_init__(self):
        self.nonlinearity = Nonlinearity(self.nonlinearity)
        _check_shapes(self.W, self.U, self.W_out, self.bias_out, self.b)

    @property
    def kappa(self) -> int:
        return self.W.shape[0]

    def arrays(self) -> dict:
        return {"W": self.W, "U": self.U, "W_out": self.W_out,
                "bias_out": self.bias_out, "b": self.b}


def _check_shapes(rec, U, W_out, bias_out, b):
    k = rec.shape[0]
    if rec.shape != (k, k):
        raise ShapeError(f"recurrent matrix must be square, got {rec.shape}")
    if U.ndim != 2 or U.shape[0] != k:
        raise ShapeError(f"U must be kappa x m, got {U.shape}")
    if W_out.ndim != 2 or W_out.shape[1] != k:
        raise ShapeError(f"W_out must be o x kappa, got {W_out.shape}")
    if bias_out.shape != (W_out.shape[0],):
        raise ShapeError(f"bias_out must have length {W_out.shape[0]}, got {bias_out.shape}")
    if b.shape != (k,):
        raise ShapeError(f"b must have length {k}, got {b.shape}")


@dataclass
class ForwardTrace:
    pre_activations: np.ndarray
    hidden_states: np.ndarray
    transition: TransitionMatrix
    inputs: np.ndarray
    batched: bool = True


@dataclass
class Gradients:
    dV: np.ndarray
    dU: np.ndarray
    dW_out: np.ndarray
    dbias_out: np.ndarray
    db: np.ndarray

    def as_dict(self) -> dict:
        return {"V": self.dV, "U": self.dU, "W_out": self.dW_out,
                "bias_out": self.dbias_out, "b": self.db}


@dataclass
class VanillaGradients:
    dW: np.ndarray
    dU: np.ndarray
    dW_out: np.ndarray
    dbias_out: np.ndarray
    db: np.ndarray

    def as_dict(self) -> dict:
        return {"W": self.dW, "U": self.dU, "W_out": self.dW_out,
                "bias_out": self.dbias_out, "b": self.db}


def init_lvf_params(kappa, m, o, rng, *, V=None, tau=1.0, integrator="euler",
                    nonlinearity="tanh") -> LvfCellParams:
    """Fresh parameters; V defaults to zero and would normally come from the sampler."""
    if V is None:
        V = np.zeros((kappa, kappa))
    V = np.array(V, dtype=np.float64, copy=True)
    np.fill_diagonal(V, 0.0)
    return LvfCellParams(
        V=V,
        U=glorot_uniform(rng, kappa, m),
        W_out=glorot_uniform(rng, o, kappa),
        bias_out=np.zeros(o),
        b=np.zeros(kappa),
        tau=tau,
        integrator=integrator,
        nonlinearity=nonlinearity,
    )


def init_vanilla_params(kappa, m, o, rng, *, W=None, nonlinearity="tanh") -> VanillaCellParams:
    if W is None:
        W = glorot_uniform(rng, kappa, kappa)
    return VanillaCellParams(
        W=np.array(W, dtype=np.float64, copy=True),
        U=glorot_uniform(rng, kappa, m),
        W_out=glorot_uniform(rng, o, kappa),
        bias_out=np.zeros(o),
        b=np.zeros(kappa),
        nonlinearity=nonlinearity,
    )


def _activate(z, b, kind):
    if kind is Nonlinearity.TANH:
        return np.tanh(z)
    if kind is Nonlinearity.MODRELU:
        return np.sign(z) * np.maximum(np.abs(z) + b, 0.0)
    return z


def _as_batch(inputs, m):
    x = np.asarray(inputs, dtype=np.float64)
    batched = x.ndim == 3
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != m:
        raise ShapeError(f"inputs must be (B, T, {m}) or (T, {m}), got {np.shape(inputs)}")
    return x, batched


def _run(C, U, b, W_out, bias_out, kind, inputs, h0):
    kappa = C.shape[0]
    x, batched = _as_batch(inputs, U.shape[1])
    B, T, _ = x.shape
    drive = x @ U.T
    Z = np.empty((B, T, kappa))
    H = np.empty((B, T + 1, kappa))
    H[:, 0] = 0.0 if h0 is None else h0
    Ct = C.T
    for t in range(T):
        z = H[:, t] @ Ct
        z += drive[:, t]
        Z[:, t] = z
        H[:, t + 1] = _activate(z, b, kind)
    if not np.isfinite(H).all():
        bad = np.where(~np.isfinite(H).all(axis=(0, 2)))[0]
        raise NonFiniteError(f"non-finite hidden state at timestep {int(bad[0])}",
                             step=int(bad[0]))
    Y = H[:, 1:] @ W_out.T + bias_out
    return Z, H, x, Y, batched


def _bptt(C, W_out, b, kind, trace: ForwardTrace, output_grads):
    Z, H, x = trace.pre_activations, trace.hidden_states, trace.inputs
    if not trace.batched:
        Z, H = Z[None], H[None]
    dY = np.asarray(output_grads, dtype=np.float64)
    if dY.ndim == 2:
        dY = dY[None]
    B, T, kappa = Z.shape
    if dY.shape != (B, T, W_out.shape[0]):
        raise ShapeError(f"output gradients of shape {np.shape(output_grads)} do not match "
                         f"the trace ({B}, {T}, {W_out.shape[0]})")
    H1 = H[:, 1:].reshape(-1, kappa)
    dW_out = dY.reshape(-1, dY.shape[2]).T @ H1
    dbias_out = dY.sum(axis=(0, 1))
    dH = dY @ W_out
    dZ = np.empty_like(Z)
    db = np.zeros(kappa)
    carry = np.zeros((B, kappa))
    for t in range(T - 1, -1, -1):
        dh = dH[:, t] + carry
        z = Z[:, t]
        if kind is Nonlinearity.TANH:
            dz = dh * (1.0 - H[:, t + 1] ** 2)
        elif kind is Nonlinearity.MODRELU:
            active = (np.abs(z) + b) > 0
            dz = dh * active
            db += np.sum(dz * np.sign(z), axis=0)
        else:
            dz = dh
        dZ[:, t] = dz
        carry = dz @ C
    dZf = dZ.reshape(-1, kappa)
    dC = dZf.T @ H[:, :-1].reshape(-1, kappa)
    dU = dZf.T @ x.reshape(-1, x.shape[2])
    return dC, dU, dW_out, dbias_out, db


def forward(params: LvfCellParams, inputs, h0=None):
    """Run the lvfRNN over ``inputs``; returns ``(trace, outputs)``."""
    transition = params.transition()
    Z, H, x, Y, batched = _run(transition.matrix, params.U, params.b, params.W_out,
                               params.bias_out, params.nonlinearity, inputs, h0)
    trace = ForwardTrace(Z if batched else Z[0], H if batched else H[0], transition, x,
                         batched)
    return trace, (Y if batched else Y[0])


def transition_vjp(transition: TransitionMatrix, dC: np.ndarray) -> np.ndarray:
    """Pull a gradient on C back to a gradient on D."""
    tau = transition.tau
    if transition.integrator is Integrator.EULER:
        return -tau * dC
    # A C = B with A = I + tau/2 D, B = I - tau/2 D; S solves A^T S = dC
    S = scipy.linalg.lu_solve(transition.lu, dC, trans=1)
    return -0.5 * tau * (S @ transition.matrix.T + S)


def dv_vjp(dD: np.ndarray) -> np.ndarray:
    """Pull a gradient on D_V back to a gradient on V (diagonal is zero)."""
    g = np.diag(dD)
    dV = dD.T - dD + g[:, None] - g[None, :]
    np.fill_diagonal(dV, 0.0)
    return dV


def divergence_penalty(V, lam: float):
    """``lam * ||div V||^2`` and its gradient with respect to V."""
    d = div(V)
    value = lam * float(d @ d)
    dV = 2.0 * lam * (d[None, :] - d[:, None])
    np.fill_diagonal(dV, 0.0)
    return value, dV


def backward(params: LvfCellParams, trace: ForwardTrace, output_grads, lam: float = 0.0):
    """Exact gradients of ``task loss + lam * ||div V||^2``.

    ``output_grads`` is the gradient of the task loss with respect to the outputs.
    Returns ``(gradients, penalty_value)``.
    """
    if trace.transition.kappa != params.kappa or trace.inputs.shape[2] != params.U.shape[1]:
        raise ShapeError("trace does not belong to these parameters")
    C = trace.transition.matrix
    dC, dU, dW_out, dbias_out, db = _bptt(C, params.W_out, params.b, params.nonlinearity,
                                          trace, output_grads)
    dV = dv_vjp(transition_vjp(trace.transition, dC))
    penalty = 0.0
    if lam:
        penalty, dpen = divergence_penalty(params.V, lam)
        dV += dpen
    return Gradients(dV, dU, dW_out, dbias_out, db), penalty


def vanilla_forward(params: VanillaCellParams, inputs, h0=None):
    Z, H, x, Y, batched = _run(params.W, params.U, params.b, params.W_out, params.bias_out,
                               params.nonlinearity, inputs, h0)
    # identity transition wrapper keeps the trace type shared with the lvfRNN
    transition = TransitionMatrix(params.W, Integrator.EULER, 1.0)
    trace = ForwardTrace(Z if batched else Z[0], H if batched else H[0], transition, x,
                         batched)
    return trace, (Y if batched else Y[0])


def vanilla_backward(params: VanillaCellParams, trace: ForwardTrace, output_grads,
                     lam: float = 0.0):
    """Gradients for the vanilla cell; ``lam`` is accepted for symmetry and ignored."""
    if trace.transition.kappa != params.kappa or trace.inputs.shape[2] != params.U.shape[1]:
        raise ShapeError("trace does not belong to these parameters")
    dW, dU, dW_out, dbias_out, db = _bptt(params.W, params.W_out, params.b,
                                          params.nonlinearity, trace, output_grads)
    return VanillaGradients(dW, dU, dW_out, dbias_out, db), 0.0

