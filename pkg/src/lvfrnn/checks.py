"""Registered invariant checks for the toolbox, the transition matrices and the sampler.

Each check takes ``(kappa, trials, rng)`` and returns ``(passed, residual)`` where the
residual is the worst measured deviation. Fixture checks ignore ``kappa`` and
``trials`` and run once.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import (VectorField, apply_dv, build_dv, commutator, div,
                       grad, is_in_vf, is_skew, linear_combination, project_divergence_free,
                       scaled_tol)
from .sampler import SamplerConfig, make_rng, max_marginal_error, sample_doubly_stochastic_info
from .transition import (check_stability, euler_transition, midpoint_transition,
                         numerical_range_bounds, spectrum)

# Operators displayed in the non-closure counterexample
FIXTURE_DV = np.array([[0.0, 1, -1], [-1, 0, 1], [1, -1, 0]])
FIXTURE_DU = np.array([[1.0, 1, -2], [-1, 0, 1], [2, -1, -1]])
FIXTURE_COMMUTATOR = np.array([[0.0, 2, -2], [0, 0, 0], [-2, 2, 0]])
# Leibniz counterexample
LEIBNIZ_V = np.array([[0.0, 1.0], [2.0, 0.0]])
LEIBNIZ_F = np.array([1.0, 0.0])
LEIBNIZ_G = np.array([0.0, 1.0])


@dataclass
class CheckResult:
    name: str
    kappa: int
    trials: int
    passed: bool
    residual: float
    seconds: float

    def to_dict(self):
        return asdict(self)


def random_field(rng, kappa, scale=1.0) -> VectorField:
    v = rng.uniform(-scale, scale, size=(kappa, kappa))
    np.fill_diagonal(v, 0.0)
    return VectorField(v)


def integer_field(rng, kappa, high=5) -> VectorField:
    v = rng.integers(-high, high + 1, size=(kappa, kappa)).astype(np.float64)
    np.fill_diagonal(v, 0.0)
    return VectorField(v)


def integer_divfree_field(rng, kappa, cycles=None, high=5) -> VectorField:
    """Integer-valued divergence-free field: a symmetric part plus random circulations."""
    s = rng.integers(-high, high + 1, size=(kappa, kappa)).astype(np.float64)
    v = np.triu(s, 1)
    v = v + v.T
    if kappa >= 3:
        for _ in range(cycles or kappa):
            i, j, k = rng.choice(kappa, size=3, replace=False)
            w = float(rng.integers(-high, high + 1))
            v[i, j] += w
            v[j, k] += w
            v[k, i] += w
    return VectorField(v)


def random_divfree_field(rng, kappa, scale=1.0) -> VectorField:
    return project_divergence_free(random_field(rng, kappa, scale))


# --- fixtures ---------------------------------------------------------------


def field_with_operator(d: np.ndarray) -> VectorField:
    """A field whose D_V equals the divergence-free operator ``d`` (upper-triangle gauge)."""
    return VectorField(np.triu(-d, 1))


def fixture_commutator(kappa=None, trials=None, rng=None):
    dv = build_dv(field_with_operator(FIXTURE_DV))
    if not np.array_equal(dv.matrix, FIXTURE_DV):
        return False, float(np.max(np.abs(dv.matrix - FIXTURE_DV)))
    c = commutator(FIXTURE_DU, dv.matrix)
    exact = np.array_equal(c, FIXTURE_COMMUTATOR)
    members = is_in_vf(FIXTURE_DU, 0.0) and is_in_vf(FIXTURE_DV, 0.0)
    ok = exact and members and not is_in_vf(c)
    return ok, float(np.max(np.abs(c - FIXTURE_COMMUTATOR)))


def fixture_leibniz(kappa=None, trials=None, rng=None):
    d = build_dv(LEIBNIZ_V)
    product = apply_dv(d, LEIBNIZ_F * LEIBNIZ_G)
    leibniz = apply_dv(d, LEIBNIZ_F) * LEIBNIZ_G + LEIBNIZ_F * apply_dv(d, LEIBNIZ_G)
    ok = np.array_equal(product, [0.0, 0.0]) and np.array_equal(leibniz, [1.0, -1.0])
    return ok, float(np.max(np.abs(product)) + np.max(np.abs(leibniz - [1.0, -1.0])))


def dimension_rank(kappa: int) -> int:
    """Rank of vectorized D_V over the single-edge basis of vf_kappa."""
    rows = []
    for i in range(kappa):
        for j in range(kappa):
            if i != j:
                e = np.zeros((kappa, kappa))
                e[i, j] = 1.0
                rows.append(build_dv(e).matrix.ravel())
    if not rows:
        return 0
    return int(np.linalg.matrix_rank(np.array(rows)))


def fixture_dimension(kappa=None, trials=None, rng=None):
    worst = 0
    for k in range(2, 9):
        worst = max(worst, abs(dimension_rank(k) - k * (k - 1) // 2))
    return worst == 0, float(worst)


# --- toolbox identities -----------------------------------------------------


def check_integration_by_parts(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        v = random_field(rng, kappa)
        h = rng.uniform(-1, 1, size=kappa)
        r = abs(float(v.entries.ravel() @ grad(h).ravel() + div(v) @ h))
        worst = max(worst, r)
    return worst < scaled_tol(kappa, 1.0), worst


def check_constant_annihilation(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        d = build_dv(random_field(rng, kappa))
        c = rng.uniform(-1, 1)
        worst = max(worst, float(np.max(np.abs(apply_dv(d, np.full(kappa, c))))))
    return worst < scaled_tol(kappa, 1.0), worst


def check_total_divergence(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, abs(float(np.sum(div(random_field(rng, kappa))))))
    return worst < scaled_tol(kappa, 1.0), worst


def check_skew_iff_divfree(kappa, trials, rng):
    """Exact in integer-valued arithmetic, over divergence-free and generic fields."""
    mismatches = 0
    for _ in range(trials):
        for v in (integer_divfree_field(rng, kappa), integer_field(rng, kappa)):
            d = build_dv(v)
            if is_skew(d.matrix) != bool(np.all(div(v) == 0)):
                mismatches += 1
        if not np.all(div(integer_divfree_field(rng, kappa)) == 0):
            mismatches += 1
    return mismatches == 0, float(mismatches)


def check_gauge_invariance(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        v = integer_field(rng, kappa)
        s = np.triu(rng.integers(-5, 6, size=(kappa, kappa)).astype(np.float64), 1)
        gauged = VectorField(v.entries + s + s.T)
        worst = max(worst, float(np.max(np.abs(build_dv(gauged).matrix - build_dv(v).matrix))))
    return worst == 0.0, worst


def check_linearity(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        a, b = integer_field(rng, kappa), integer_field(rng, kappa)
        alpha, beta = (float(x) for x in rng.integers(-4, 5, size=2))
        lhs = build_dv(linear_combination(alpha, a, beta, b)).matrix
        rhs = alpha * build_dv(a).matrix + beta * build_dv(b).matrix
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst == 0.0, worst


def check_decomposition(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        d = build_dv(random_field(rng, kappa))
        worst = max(worst, float(np.max(np.abs(d.rotation + d.rotation.T))),
                    float(np.max(np.abs(d.matrix - (d.rotation - np.diag(d.flux))))),
                    float(np.max(np.abs(d.matrix.sum(axis=1)))))
    return worst < scaled_tol(kappa, 1.0), worst


def check_divfree_commutator_skew(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        a = build_dv(random_divfree_field(rng, kappa))
        b = build_dv(random_divfree_field(rng, kappa))
        c = commutator(a, b)
        worst = max(worst, float(np.max(np.abs(c + c.T))))
    return worst < scaled_tol(kappa, 1.0, 1e-10), worst


# --- spectral ---------------------------------------------------------------


def check_divfree_spectrum(kappa, trials, rng):
    """Divergence-free operators are normal with imaginary spectrum."""
    worst = 0.0
    for _ in range(trials):
        rep = spectrum(build_dv(random_divfree_field(rng, kappa)))
        worst = max(worst, rep.normality_defect, rep.max_abs_real_part)
    return worst < 1e-10, worst


def check_numerical_range(kappa, trials, rng, eps=1e-9):
    """Real parts of eigenvalues stay within [-max div, -min div]."""
    worst = -np.inf
    for _ in range(trials):
        d = build_dv(random_field(rng, kappa))
        lo, hi = numerical_range_bounds(d)
        re = spectrum(d).eigenvalues.real
        worst = max(worst, float(np.max(lo - re)), float(np.max(re - hi)))
    return worst <= eps, max(worst, 0.0)


def check_midpoint_orthogonality(kappa, trials, rng, taus=(0.1, 1.0, 2.0, 15.0)):
    worst = 0.0
    for _ in range(trials):
        d = build_dv(random_divfree_field(rng, kappa))
        for tau in taus:
            c = midpoint_transition(d, tau).matrix
            worst = max(worst, float(np.linalg.norm(c.T @ c - np.eye(kappa))),
                        abs(float(np.linalg.det(c)) - 1.0))
    return worst < 1e-10, worst


def check_euler_consistency(kappa, trials, rng):
    """``(I - C) / tau`` recovers D to 1e-14 relative to the operator scale."""
    worst = 0.0
    for _ in range(trials):
        d = build_dv(random_field(rng, kappa))
        tau = float(rng.uniform(0.5, 2.0))
        c = euler_transition(d, tau).matrix
        err = float(np.max(np.abs((np.eye(kappa) - c) / tau - d.matrix)))
        worst = max(worst, err / max(1.0, float(np.max(np.abs(d.matrix)))))
    return worst < 1e-14, worst


def check_divfree_stability(kappa, trials, rng):
    worst = 0.0
    for _ in range(trials):
        d = build_dv(random_divfree_field(rng, kappa))
        ok, rep = check_stability(d, float(rng.uniform(0.1, 15.0)))
        if not ok:
            return False, rep.max_real_part - 1.0
        worst = max(worst, abs(rep.max_real_part - 1.0))
    return True, worst


# --- sampler ----------------------------------------------------------------


def check_sinkhorn(kappa, trials, rng):
    worst = 0.0
    fast = 0
    for _ in range(trials):
        res = sample_doubly_stochastic_info(SamplerConfig(kappa, seed=int(rng.integers(2**63))))
        if res.iterations <= 100:
            fast += 1
        worst = max(worst, max_marginal_error(res.matrix))
        if np.any(res.matrix < 0):
            return False, np.inf
    return worst < 1e-8 and fast >= 0.99 * trials, worst


FIXTURES = {
    "commutator_counterexample": fixture_commutator,
    "leibniz_counterexample": fixture_leibniz,
    "dimension_rank": fixture_dimension,
}

RANDOMIZED = {
    "integration_by_parts": check_integration_by_parts,
    "constant_annihilation": check_constant_annihilation,
    "total_divergence": check_total_divergence,
    "skew_iff_divfree": check_skew_iff_divfree,
    "gauge_invariance": check_gauge_invariance,
    "linearity": check_linearity,
    "decomposition": check_decomposition,
    "divfree_commutator_skew": check_divfree_commutator_skew,
    "divfree_spectrum": check_divfree_spectrum,
    "numerical_range": check_numerical_range,
    "midpoint_orthogonality": check_midpoint_orthogonality,
    "euler_consistency": check_euler_consistency,
    "divfree_stability": check_divfree_stability,
    "sinkhorn": check_sinkhorn,
}


def run_checks(kappas=(2, 3, 8, 64), trials=100, seed=0, names=None) -> list:
    results = []
    for name, fn in FIXTURES.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        ok, res = fn()
        results.append(CheckResult(name, 0, 1, bool(ok), float(res), time.perf_counter() - t0))
    if trials <= 0:
        return results
    for idx, (name, fn) in enumerate(RANDOMIZED.items()):
        if names and name not in names:
            continue
        for kappa in kappas:
            rng = make_rng(seed, idx, kappa)
            t0 = time.perf_counter()
            ok, res = fn(kappa, trials, rng)
            results.append(CheckResult(name, kappa, trials, bool(ok), float(res),
                                       time.perf_counter() - t0))
    return results
