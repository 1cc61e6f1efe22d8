"""Discrete differential geometry on the complete latent graph.

A latent vector field on ``kappa`` nodes is a ``kappa x kappa`` real matrix with
zero diagonal; entry ``V[i, j]`` is the weight of the directed edge ``i -> j``.
Hidden states play the role of scalar functions on the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

DEFAULT_ATOL = 1e-12


def scaled_tol(kappa: int, scale: float, atol: float = DEFAULT_ATOL) -> float:
    """Absolute tolerance for identity checks, grown with size above ``kappa = 64``."""
    if kappa > 64:
        return atol * kappa * max(float(scale), 1.0)
    return atol


def _as_square(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class VectorField:
    """Edge weights of a latent vector field (an element of vf_kappa)."""

    entries: np.ndarray

    def __post_init__(self):
        a = _as_square(self.entries, "vector field")
        if a.shape[0] < 1:
            raise ShapeError("vector field needs at least one node")
        if np.any(np.diag(a) != 0):
            raise ValueError("vector field must have a zero diagonal (no self-loops)")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def kappa(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, kappa: int) -> "VectorField":
        return cls(np.zeros((kappa, kappa)))

    @classmethod
    def from_matrix(cls, m, zero_diagonal: bool = False) -> "VectorField":
        """Wrap ``m``; with ``zero_diagonal`` the diagonal is dropped instead of rejected."""
        a = np.array(_as_square(m), copy=True)
        if zero_diagonal:
            np.fill_diagonal(a, 0.0)
        return cls(a)

    def __add__(self, other: "VectorField") -> "VectorField":
        return linear_combination(1.0, self, 1.0, other)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return linear_combination(1.0, self, -1.0, other)

    def __neg__(self) -> "VectorField":
        return VectorField(-self.entries)


@dataclass(frozen=True, eq=False)
class DirectionalDerivative:
    """The operator D_V = rotation - diag(flux).

    ``rotation`` is the skew-symmetric part ``V.T - V`` and ``flux`` is the divergence of
    V, which equals the row sums of ``rotation``.
    """

    matrix: np.ndarray
    rotation: np.ndarray
    flux: np.ndarray

    def __post_init__(self):
        for name in ("matrix", "rotation", "flux"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def kappa(self) -> int:
        return self.matrix.shape[0]


def _field_entries(V) -> np.ndarray:
    if isinstance(V, VectorField):
        return V.entries
    return VectorField(V).entries


def grad(h) -> np.ndarray:
    """Forward differences between every pair of nodes: ``G[i, j] = h[i] - h[j]``."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise ShapeError(f"hidden state must be a vector, got shape {h.shape}")
    return h[:, None] - h[None, :]


def div(V) -> np.ndarray:
    """Net flux per node, ``sum_j V[j, i] - V[i, j]``."""
    a = _field_entries(V)
    return a.sum(axis=0) - a.sum(axis=1)


def build_dv(V) -> DirectionalDerivative:
    a = _field_entries(V)
    rotation = a.T - a
    flux = rotation.sum(axis=1)
    matrix = rotation.copy()
    matrix[np.diag_indices_from(matrix)] = -flux
    return DirectionalDerivative(matrix=matrix, rotation=rotation, flux=flux)


def dv_matrix(v: np.ndarray) -> np.ndarray:
    """D_V as a plain array, skipping validation (training hot path)."""
    m = v.T - v
    m[np.diag_indices_from(m)] = -m.sum(axis=1)
    return m


def apply_dv(D: DirectionalDerivative, h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (D.kappa,):
        raise ShapeError(f"hidden state of shape {h.shape} does not match kappa={D.kappa}")
    return D.matrix @ h


def commutator(A: DirectionalDerivative, B: DirectionalDerivative) -> np.ndarray:
    a = A.matrix if isinstance(A, DirectionalDerivative) else _as_square(A)
    b = B.matrix if isinstance(B, DirectionalDerivative) else _as_square(B)
    if a.shape != b.shape:
        raise ShapeError(f"operator shapes differ: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def is_in_vf(M, tol: float = DEFAULT_ATOL) -> bool:
    """Whether ``M`` is D_W for some latent field W.

    The off-diagonal part must be skew-symmetric and each diagonal entry must equal
    the negated row sum of that off-diagonal part.
    """
    m = _as_square(M)
    off = m.copy()
    np.fill_diagonal(off, 0.0)
    if np.max(np.abs(off + off.T), initial=0.0) > tol:
        return False
    return bool(np.max(np.abs(np.diag(m) + off.sum(axis=1)), initial=0.0) <= tol)


def linear_combination(alpha: float, A, beta: float, B) -> VectorField:
    a, b = _field_entries(A), _field_entries(B)
    if a.shape != b.shape:
        raise ShapeError(f"field shapes differ: {a.shape} vs {b.shape}")
    return VectorField(alpha * a + beta * b)


def project_divergence_free(V) -> VectorField:
    """Remove the divergence of V by adjusting its skew part.

    Returns a field whose rotation is the closest zero-row-sum skew matrix to the
    rotation of V. The symmetric part of V (a gauge freedom) is left alone.
    """
    a = _field_entries(V)
    kappa = a.shape[0]
    r = div(a)
    correction = (r[:, None] - r[None, :]) / (2.0 * kappa)
    return VectorField(a + correction)


def is_skew(M) -> bool:
    m = np.asarray(M)
    return bool(np.array_equal(m, -m.T))
