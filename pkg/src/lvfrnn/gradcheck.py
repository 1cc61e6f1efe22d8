"""Central finite differences, used as an independent check on backpropagation."""

from __future__ import annotations

import numpy as np


def finite_difference_oracle(loss_fn, params: dict, step_size: float = 1e-6,
                             skip_diagonal=()) -> dict:
    """Numerical gradient of ``loss_fn()`` with respect to every entry of ``params``.

    ``params`` maps names to arrays that ``loss_fn`` reads; entries are perturbed in
    place and restored. The step for entry ``x`` is ``step_size * max(1, |x|)``.
    Names in ``skip_diagonal`` get a zero gradient on their diagonal, which is not a
    free parameter.
    """
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            if name in skip_diagonal and arr.ndim == 2 and i % (arr.shape[1] + 1) == 0:
                continue
            x = flat[i]
            h = step_size * max(1.0, abs(x))
            flat[i] = x + h
            up = loss_fn()
            flat[i] = x - h
            down = loss_fn()
            flat[i] = x
            gflat[i] = (up - down) / (2.0 * h)
        grads[name] = g
    return grads


def relative_error(a, n, floor: float = 1e-12) -> float:
    """``||a - n|| / max(||a||, ||n||)`` in the Frobenius norm."""
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(n))
    if denom < floor:
        return 0.0
    return float(np.linalg.norm(a - n) / denom)


def max_relative_error(analytic: dict, numeric: dict) -> float:
    """Worst per-tensor relative error across all parameter tensors."""
    return max(relative_error(analytic[k], numeric[k]) for k in analytic)


def cell_gradient_error(kappa=8, m=4, o=4, T=12, *, integrator="midpoint",
                        nonlinearity="tanh", lam=0.0, tau=0.5, batch=2, seed=0) -> dict:
    """Per-tensor relative error of BPTT against central differences on a random cell.

    The loss is a fixed random linear functional of the outputs plus the divergence
    penalty, so every parameter tensor receives a nonzero gradient.
    """
    from . import cell
    from .sampler import make_rng

    rng = make_rng(seed, kappa, T)
    V = rng.uniform(-0.3, 0.3, (kappa, kappa))
    np.fill_diagonal(V, 0.0)
    p = cell.init_lvf_params(kappa, m, o, rng, V=V, tau=tau, integrator=integrator,
                             nonlinearity=nonlinearity)
    if p.nonlinearity is cell.Nonlinearity.MODRELU:
        p.b[:] = rng.uniform(-0.1, 0.0, kappa)
    x = rng.normal(size=(batch, T, m))
    w = rng.normal(size=(batch, T, o))

    def loss():
        _, y = cell.forward(p, x)
        return float(np.sum(w * y)) + cell.divergence_penalty(p.V, lam)[0]

    trace, _ = cell.forward(p, x)
    grads, _ = cell.backward(p, trace, w, lam)
    numeric = finite_difference_oracle(loss, p.arrays(), skip_diagonal=("V",))
    analytic = grads.as_dict()
    return {k: relative_error(analytic[k], numeric[k]) for k in numeric}
