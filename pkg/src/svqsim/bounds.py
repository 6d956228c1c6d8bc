"""Certified fidelity lower bounds for trained subspace evolution.

Two certificates are provided. The angle-accumulation bound turns the
per-step training fidelities of one state into a bound on its fidelity
against the m-fold Trotter target: overlap angles obey the triangle
inequality, so the angles arccos(sqrt f_j) add up and the bound is
cos^2 of the (clamped) sum.

The worst-case bound over a whole subspace is a quadratically constrained
program over the overlap matrix f_ij between exact and circuit-evolved
basis states: minimize |sum_ij c_i* c_j f_ij|^2 subject to the measured
training fidelities. Lifting F = f f^dagger and dropping the rank
constraint gives a semidefinite relaxation whose optimum never exceeds the
true worst case. Constraint matrices index the d^2 entries of f by the
pair (i, j) flattened as i*d + j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .sdp import SdpInstance, SdpSolution, solve_sdp


class StrictFeasibilityError(ValueError):
    """No strictly feasible point exists (some fidelity pinned at 1)."""


def prop1_lower_bound(f_history: Sequence[float]) -> float:
    """Accumulated-angle lower bound from per-step training fidelities.

    cos^2(min(sum_j arccos(sqrt f_j), pi/2)). Tiny negative or above-one
    excursions from roundoff are clamped; anything farther out raises.
    """
    f = np.atleast_1d(np.asarray(f_history, dtype=np.float64))
    if f.size and (np.min(f) < -1e-12 or np.max(f) > 1.0 + 1e-12):
        raise ValueError("fidelities must lie in [0, 1]")
    f = np.clip(f, 0.0, 1.0)
    total = float(np.sum(np.arccos(np.sqrt(f))))
    return math.cos(min(total, math.pi / 2.0)) ** 2


def _unit(c, what: str = "coefficients") -> np.ndarray:
    c = np.asarray(c, dtype=np.complex128).ravel()
    if abs(np.linalg.norm(c) - 1.0) > 1e-10:
        raise ValueError(f"{what} must be normalized within 1e-10")
    return c


@dataclass(frozen=True)
class FidelityConstraints:
    """Measured fidelity floors feeding the worst-case program.

    F_basis[alpha] floors |f_aa|^2, F_plus[beta - 1] floors the plus-state
    overlap on the {0, beta} block, and each extra ((a0, a1), alpha, F)
    floors the overlap of the superposition a0|0> + a1|alpha> the same way.
    """

    d: int
    F_basis: tuple
    F_plus: tuple = ()
    extras: tuple = ()

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        basis = tuple(float(v) for v in self.F_basis)
        plus = tuple(float(v) for v in self.F_plus)
        if len(basis) != self.d:
            raise ValueError(f"expected {self.d} basis fidelities")
        if len(plus) != self.d - 1:
            raise ValueError(f"expected {self.d - 1} plus-state fidelities")
        extras = []
        for a, alpha, value in self.extras:
            a0, a1 = complex(a[0]), complex(a[1])
            if abs(abs(a0) ** 2 + abs(a1) ** 2 - 1.0) > 1e-10:
                raise ValueError("extra coefficients must be normalized")
            alpha = int(alpha)
            if not 1 <= alpha <= self.d - 1:
                raise ValueError(f"extra constraint index {alpha} out of range")
            extras.append(((a0, a1), alpha, float(value)))
        values = basis + plus + tuple(v for _, _, v in extras)
        if min(values) < 0.0 or max(values) > 1.0:
            raise ValueError("fidelity values must lie in [0, 1]")
        object.__setattr__(self, "F_basis", basis)
        object.__setattr__(self, "F_plus", plus)
        object.__setattr__(self, "extras", tuple(extras))

    def all_values(self) -> tuple:
        return (self.F_basis + self.F_plus
                + tuple(v for _, _, v in self.extras))


def objective_matrix(c) -> np.ndarray:
    """Rank-1 PSD matrix with f^dagger C f = |sum_ij c_i* c_j f_ij|^2."""
    c = _unit(c)
    v = np.outer(c, c.conj()).ravel()
    return np.outer(v, v.conj())


def extra_constraint_matrix(a, alpha: int, d: int) -> np.ndarray:
    """Constraint matrix for the superposition a0|0> + a1|alpha>.

    Rank-1 on the 4-index block {00, 0a, a0, aa}; a = (1/sqrt2, 1/sqrt2)
    reproduces the plus-state matrix and a = (1, 0) the basis matrix C_0.
    """
    a0, a1 = complex(a[0]), complex(a[1])
    if abs(abs(a0) ** 2 + abs(a1) ** 2 - 1.0) > 1e-10:
        raise ValueError("coefficients must be normalized within 1e-10")
    if not 1 <= alpha <= d - 1:
        raise ValueError(f"alpha must be in 1..{d - 1}")
    ext = np.zeros(d, dtype=np.complex128)
    ext[0], ext[alpha] = a0, a1
    v = np.outer(ext, ext.conj()).ravel()
    return np.outer(v, v.conj())


def constraint_matrices(d: int):
    """Basis, plus-state, and column-norm constraint matrices for size d.

    C_alpha has a single 1 at the (aa, aa) diagonal entry; C_beta^+ is 1/4
    over the 4x4 block pairing {00, 0b, b0, bb}; C_gamma^Nor is diagonal
    over column gamma, so Tr[f f^dagger C_gamma^Nor] is that column's
    squared norm.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    dim = d * d
    basis = []
    for alpha in range(d):
        M = np.zeros((dim, dim), dtype=np.complex128)
        k = alpha * d + alpha
        M[k, k] = 1.0
        basis.append(M)
    inv = 1.0 / math.sqrt(2.0)
    plus = [extra_constraint_matrix((inv, inv), beta, d) for beta in range(1, d)]
    norm = []
    for gamma in range(d):
        M = np.zeros((dim, dim), dtype=np.complex128)
        for i in range(d):
            k = i * d + gamma
            M[k, k] = 1.0
        norm.append(M)
    return basis, plus, norm


def strictly_feasible_point(constraints: FidelityConstraints) -> np.ndarray:
    """Positive definite matrix strictly inside every interval constraint.

    The diagonal-pair block gets anchor A = (1 + F_max)/2 on (ii, ii)
    entries and A - eps between distinct pairs; the off-diagonal singles
    (ij, ij) get eps, with eps the midpoint of the window keeping the
    column norms strictly below one. Every basis, plus, and extra
    constraint then evaluates to exactly A, strictly between F_max and 1.
    The anchor sits halfway into the open interval rather than at F_max
    itself, which would saturate the largest floor instead of clearing it.
    """
    values = constraints.all_values()
    if max(values) >= 1.0:
        raise StrictFeasibilityError(
            "a fidelity constraint is pinned at 1; the feasible set has "
            "no interior")
    d = constraints.d
    f_max = max(values)
    anchor = (1.0 + f_max) / 2.0
    dim = d * d
    F = np.zeros((dim, dim), dtype=np.complex128)
    if d == 1:
        F[0, 0] = anchor
        return F
    eps = (1.0 - anchor) / (2.0 * (d - 1))
    for i in range(d):
        for k in range(d):
            F[i * d + i, k * d + k] = anchor if i == k else anchor - eps
    for i in range(d):
        for j in range(d):
            if i != j:
                F[i * d + j, i * d + j] = eps
    return F


def _assemble(c, constraints: FidelityConstraints) -> SdpInstance:
    basis, plus, norm = constraint_matrices(constraints.d)
    rows = [(M, fv, 1.0) for M, fv in zip(basis, constraints.F_basis)]
    rows += [(M, fv, 1.0) for M, fv in zip(plus, constraints.F_plus)]
    rows += [(extra_constraint_matrix(a, alpha, constraints.d), fv, 1.0)
             for a, alpha, fv in constraints.extras]
    rows += [(M, None, 1.0) for M in norm]
    return SdpInstance(constraints.d ** 2, objective_matrix(c), tuple(rows))


@dataclass(frozen=True)
class BoundResult:
    """Worst-case subspace fidelity certificate from one relaxation solve."""

    bound: float
    rank_estimate: int
    duality_gap: float
    iterations: int
    converged: bool
    solution: Optional[SdpSolution] = field(default=None, repr=False)


def fidelity_lower_bound(c, constraints: FidelityConstraints,
                         tol: float = 1e-8) -> BoundResult:
    """Relaxation optimum for the state sum_i c_i |Psi_i>, clamped to [0,1].

    All fidelities equal to 1 pin the overlap matrix completely and the
    bound is 1 without a solve. A constraint set with only some values at
    1 has no strict interior; the solve then falls back to the generic
    start and proceeds without the strong-duality guarantee.
    """
    c = _unit(c)
    values = constraints.all_values()
    if all(v == 1.0 for v in values):
        f = np.eye(constraints.d, dtype=np.complex128).ravel()
        return BoundResult(1.0, 1, 0.0, 0, True,
                           SdpSolution(np.outer(f, f.conj()), 1.0, 0.0, 1, 0, True))
    instance = _assemble(c, constraints)
    try:
        start = strictly_feasible_point(constraints)
    except StrictFeasibilityError:
        start = None
    sol = solve_sdp(instance, tol=tol, start=start)
    bound = float(np.clip(sol.optimum, 0.0, 1.0))
    return BoundResult(bound, sol.rank_estimate, sol.duality_gap,
                       sol.iterations, sol.converged, sol)


def _oracle_overlaps(c, constraints: FidelityConstraints):
    """Objective and constraint callables over the top d x d block of an
    isometry V = expm(iH)[:, :d], with H parameterized by real x."""
    from scipy.linalg import expm

    d = constraints.d
    n2 = 2 * d

    def hermitian(x):
        H = np.zeros((n2, n2), dtype=np.complex128)
        H[np.diag_indices(n2)] = x[:n2]
        k = n2
        for i in range(n2):
            for j in range(i + 1, n2):
                H[i, j] = x[k] + 1j * x[k + 1]
                H[j, i] = x[k] - 1j * x[k + 1]
                k += 2
        return H

    def overlaps(x):
        V = expm(1j * hermitian(x))[:, :d]
        return V[:d, :]

    def objective(x):
        f = overlaps(x)
        return abs(np.conj(c) @ f @ c) ** 2

    cons = []
    for alpha, fv in enumerate(constraints.F_basis):
        cons.append((lambda x, a=alpha: abs(overlaps(x)[a, a]) ** 2, fv))
    inv = 1.0 / math.sqrt(2.0)
    for beta, fv in enumerate(constraints.F_plus, start=1):
        coeff = (inv, inv)
        cons.append((_block_overlap(overlaps, coeff, beta), fv))
    for a, alpha, fv in constraints.extras:
        cons.append((_block_overlap(overlaps, a, alpha), fv))
    n_params = n2 + n2 * (n2 - 1)
    return objective, cons, n_params


def _block_overlap(overlaps, a, alpha: int):
    a0, a1 = complex(a[0]), complex(a[1])

    def value(x):
        f = overlaps(x)
        z = (abs(a0) ** 2 * f[0, 0] + np.conj(a0) * a1 * f[0, alpha]
             + np.conj(a1) * a0 * f[alpha, 0] + abs(a1) ** 2 * f[alpha, alpha])
        return abs(z) ** 2
    return value


def qcqp_oracle(c, constraints: FidelityConstraints, trials: int = 6,
                seed: int = 0) -> float:
    """Best feasible objective from explicit-state local search.

    Builds the two orthonormal state sets inside a 2d-dimensional space and
    minimizes the target overlap subject to every fidelity floor. Any
    feasible construction upper-bounds the true worst case, so this value
    can never fall below the relaxation optimum. The identity arrangement
    (all overlaps perfect) is always feasible and seeds the first trial.
    """
    from scipy.optimize import minimize

    if constraints.d > 3:
        raise ValueError("oracle search is limited to d <= 3")
    c = _unit(c)
    objective, cons, n_params = _oracle_overlaps(c, constraints)
    slsqp_cons = [{"type": "ineq", "fun": (lambda x, g=g, fv=fv: g(x) - fv)}
                  for g, fv in cons]
    rng = np.random.default_rng(seed)
    best = None
    for trial in range(max(1, trials)):
        x0 = np.zeros(n_params) if trial == 0 else 0.7 * rng.standard_normal(n_params)
        res = minimize(objective, x0, method="SLSQP", constraints=slsqp_cons,
                       options={"maxiter": 250, "ftol": 1e-12})
        worst = max((fv - g(res.x) for g, fv in cons), default=0.0)
        if worst <= 1e-8:
            val = float(objective(res.x))
            if best is None or val < best:
                best = val
    if best is None:
        raise RuntimeError(f"no feasible construction found in {trials} trials")
    return best
