"""Hidden-to-hidden transition matrices and their spectral diagnostics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ShapeError, SingularSystemError, SpectrumError
from .geometry import DirectionalDerivative

MAX_CONDITION = 1e12
STABILITY_TOL = 1e-9


class Integrator(str, enum.Enum):
    EULER = "euler"
    MIDPOINT = "midpoint"


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    matrix: np.ndarray
    integrator: Integrator
    tau: float
    # LU factors of I + (tau/2) D, kept for the backward solve
    lu: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    @property
    def kappa(self) -> int:
        return self.matrix.shape[0]


def _operator(D) -> np.ndarray:
    if isinstance(D, DirectionalDerivative):
        return D.matrix
    d = np.asarray(D, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ShapeError(f"operator must be square, got shape {d.shape}")
    return d


def _check_tau(tau):
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")


def euler_transition(D, tau: float) -> TransitionMatrix:
    _check_tau(tau)
    d = _operator(D)
    return TransitionMatrix(np.eye(d.shape[0]) - tau * d, Integrator.EULER, float(tau))


def midpoint_transition(D, tau: float) -> TransitionMatrix:
    """Solve ``(I + tau/2 D) C = I - tau/2 D`` by LU with partial pivoting."""
    _check_tau(tau)
    d = _operator(D)
    eye = np.eye(d.shape[0])
    half = 0.5 * tau * d
    a = eye + half
    lu = scipy.linalg.lu_factor(a, check_finite=True)
    anorm = np.linalg.norm(a, 1)
    rcond, info = lapack.dgecon(lu[0], anorm, norm="1")
    if info != 0 or rcond == 0 or 1.0 / rcond > MAX_CONDITION:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise SingularSystemError(
            f"I + (tau/2) D is near-singular (condition estimate {cond:.3g})", condition=cond
        )
    c = scipy.linalg.lu_solve(lu, eye - half)
    return TransitionMatrix(c, Integrator.MIDPOINT, float(tau), lu=lu)


def build_transition(D, tau: float, integrator="euler") -> TransitionMatrix:
    if Integrator(integrator) is Integrator.MIDPOINT:
        return midpoint_transition(D, tau)
    return euler_transition(D, tau)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    max_real_part: float
    normality_defect: float
    orthogonality_defect: float

    @property
    def max_abs_real_part(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.real)))

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "normality_defect": self.normality_defect,
            "orthogonality_defect": self.orthogonality_defect,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumReport":
        ev = np.array([complex(re, im) for re, im in d["eigenvalues"]])
        return cls(ev, float(d["max_real_part"]), float(d["normality_defect"]),
                   float(d["orthogonality_defect"]))

    def to_csv(self) -> str:
        lines = ["index,re,im"]
        for i, z in enumerate(self.eigenvalues):
            lines.append(f"{i},{z.real:.17g},{z.imag:.17g}")
        return "\n".join(lines) + "\n"


def normality_defect(M) -> float:
    m = np.asarray(M, dtype=np.float64)
    return float(np.linalg.norm(m.T @ m - m @ m.T, "fro"))


def orthogonality_defect(M) -> float:
    m = np.asarray(M, dtype=np.float64)
    return float(np.linalg.norm(m.T @ m - np.eye(m.shape[0]), "fro"))


def spectrum(M) -> SpectrumReport:
    if isinstance(M, (TransitionMatrix, DirectionalDerivative)):
        M = M.matrix
    m = _operator(M)
    try:
        ev = scipy.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed: {exc}") from exc
    ev = np.asarray(ev, dtype=np.complex128)
    return SpectrumReport(
        eigenvalues=ev,
        max_real_part=float(np.max(ev.real)),
        normality_defect=normality_defect(m),
        orthogonality_defect=orthogonality_defect(m),
    )


def check_stability(D, tau: float, tol: float = STABILITY_TOL):
    """Euler stability: every eigenvalue of ``I - tau D`` has real part at most 1."""
    report = spectrum(euler_transition(D, tau).matrix)
    return report.max_real_part <= 1.0 + tol, report


def check_normality(D, tol: float = 1e-10) -> bool:
    d = _operator(D)
    return normality_defect(d) < tol * d.shape[0]


def numerical_range_bounds(D: DirectionalDerivative) -> tuple:
    """Interval containing the real part of every eigenvalue of D_V."""
    return float(-np.max(D.flux)), float(-np.min(D.flux))
