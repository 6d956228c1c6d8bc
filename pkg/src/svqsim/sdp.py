"""Dense primal-dual interior-point solver for small Hermitian SDPs.

Solves min Tr[C F] over Hermitian F >= 0 subject to interval constraints
lower <= Tr[A F] <= upper. The complex program is embedded into a real
symmetric one of twice the dimension, each interval is split into one-sided
rows with nonnegative slacks, and a Nesterov-Todd scaled path-following
iteration with adaptive centering drives the complementarity products to
zero. Problem sizes here are tiny (dimension d^2 <= 16, so 32 embedded),
so every factorization is dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class SdpInfeasibleError(RuntimeError):
    """Raised when the iteration certifies the constraints as unsatisfiable."""


def _check_hermitian(M: np.ndarray, dim: int, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (dim, dim):
        raise ValueError(f"{what} must be {dim}x{dim}, got {M.shape}")
    if np.max(np.abs(M - M.conj().T)) > 1e-12:
        raise ValueError(f"{what} is not Hermitian within 1e-12")
    return M


@dataclass(frozen=True)
class SdpInstance:
    """min Tr[objective F] s.t. F >= 0 and lower <= Tr[A F] <= upper per row.

    A bound of None leaves that side unconstrained. dim is the complex
    matrix dimension (d^2 for the fidelity programs).
    """

    dim: int
    objective: np.ndarray
    constraints: tuple

    def __post_init__(self):
        obj = _check_hermitian(self.objective, self.dim, "objective")
        rows = []
        for k, (A, lo, hi) in enumerate(self.constraints):
            A = _check_hermitian(A, self.dim, f"constraint {k}")
            lo = None if lo is None else float(lo)
            hi = None if hi is None else float(hi)
            if lo is None and hi is None:
                raise ValueError(f"constraint {k} has no bounds")
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"constraint {k} has lower > upper")
            rows.append((A, lo, hi))
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraints", tuple(rows))


@dataclass
class SdpSolution:
    F_matrix: np.ndarray
    optimum: float
    duality_gap: float
    rank_estimate: int
    iterations: int
    converged: bool

    def constraint_violation(self, instance: SdpInstance) -> float:
        """Largest amount by which any interval or the PSD cone is missed."""
        worst = max(0.0, -float(np.linalg.eigvalsh(self.F_matrix)[0]))
        for A, lo, hi in instance.constraints:
            val = float(np.real(np.trace(A @ self.F_matrix)))
            if lo is not None:
                worst = max(worst, lo - val)
            if hi is not None:
                worst = max(worst, val - hi)
        return worst


def _embed(M: np.ndarray) -> np.ndarray:
    """Real symmetric image of a Hermitian M, scaled so traces agree.

    <embed(A), embed_var(X)> = Tr[A X] when X is embedded the same way
    without the 1/2.
    """
    re, im = M.real, M.imag
    return 0.5 * np.block([[re, -im], [im, re]])


def _restrict(Xr: np.ndarray) -> np.ndarray:
    """Project a real symmetric iterate back to the Hermitian form."""
    n = Xr.shape[0] // 2
    re = (Xr[:n, :n] + Xr[n:, n:]) / 2.0
    im = (Xr[n:, :n] - Xr[:n, n:]) / 2.0
    return re + 1j * im


def _nt_scaling(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """W with W Z W = X, the geometric mean scaling point."""
    lz, qz = np.linalg.eigh(Z)
    lz = np.clip(lz, 1e-300, None)
    z_half = (qz * np.sqrt(lz)) @ qz.T
    z_ihalf = (qz * (1.0 / np.sqrt(lz))) @ qz.T
    inner = z_half @ X @ z_half
    inner = (inner + inner.T) / 2.0
    li, qi = np.linalg.eigh(inner)
    li = np.clip(li, 1e-300, None)
    inner_half = (qi * np.sqrt(li)) @ qi.T
    W = z_ihalf @ inner_half @ z_ihalf
    return (W + W.T) / 2.0


def _max_step_psd(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX still PSD (X assumed PD)."""
    L = np.linalg.cholesky(X)
    Linv = np.linalg.inv(L)
    S = Linv @ dX @ Linv.T
    lam = float(np.linalg.eigvalsh((S + S.T) / 2.0)[0])
    return np.inf if lam >= -1e-300 else -1.0 / lam


def _max_step_pos(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def solve_sdp(instance: SdpInstance, tol: float = 1e-8,
              start: Optional[np.ndarray] = None,
              max_iterations: int = 100) -> SdpSolution:
    """Path-following solve; deterministic for fixed inputs.

    start, when given, is a Hermitian matrix strictly inside the cone and
    every interval (a Slater point); otherwise a multiple of the identity
    seeds an infeasible start whose residuals the iteration removes. The
    returned solution is flagged non-converged if the iteration cap is hit
    before the duality gap and residuals fall below tol.
    """
    nc = instance.dim
    n = 2 * nc
    C = _embed(instance.objective)

    # one-sided rows <G_j, X> + s_j = h_j, s_j >= 0
    G, h = [], []
    for A, lo, hi in instance.constraints:
        Ar = _embed(A)
        if hi is not None:
            G.append(Ar)
            h.append(hi)
        if lo is not None:
            G.append(-Ar)
            h.append(-lo)
    m = len(G)
    if m == 0:
        raise ValueError("at least one interval constraint is required")
    Gs = np.stack(G)
    h = np.array(h)

    if start is not None:
        X = 2.0 * _embed(_check_hermitian(start, nc, "start"))
        if np.linalg.eigvalsh(X)[0] <= 0:
            raise ValueError("start is not positive definite")
        s = h - np.einsum("kij,ij->k", Gs, X)
        if np.min(s) <= 0:
            raise ValueError("start violates an interval constraint")
    else:
        X = np.eye(n)
        s = np.maximum(h - np.einsum("kij,ij->k", Gs, X), 1.0)
    Z = np.eye(n) * max(1.0, float(np.linalg.norm(C)))
    y = np.ones(m)

    best = None
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        mu = (float(np.tensordot(X, Z)) + float(s @ y)) / (n + m)
        p_res = h - np.einsum("kij,ij->k", Gs, X) - s
        R_d = C + np.tensordot(y, Gs, axes=1) - Z
        gap = float(np.tensordot(C, X)) + float(h @ y)
        err = max(abs(gap), float(np.max(np.abs(p_res))),
                  float(np.linalg.norm(R_d)))
        if best is None or err < best[0]:
            best = (err, X.copy(), gap)
        if mu * (n + m) < tol and err < tol:
            converged = True
            break

        W = _nt_scaling(X, Z)
        lz, qz = np.linalg.eigh(Z)
        Zinv = (qz * (1.0 / np.clip(lz, 1e-300, None))) @ qz.T
        WGW = np.array([W @ Gk @ W for Gk in Gs])
        M = np.einsum("kij,lij->kl", Gs, WGW)
        M[np.diag_indices(m)] += s / y
        # roundoff can push the Schur complement indefinite near the
        # solution; escalate a diagonal ridge until it factors
        scale = float(np.mean(np.diag(M)))
        ridge = 1e-14
        while True:
            try:
                L = np.linalg.cholesky(M + ridge * scale * np.eye(m))
                break
            except np.linalg.LinAlgError:
                ridge *= 1e4
                if ridge > 1.0:
                    raise
        WRdW = W @ R_d @ W

        def direction(sigma_mu):
            # R_c = sigma mu Z^{-1} - X, r_c = sigma mu / y - s
            R_c = sigma_mu * Zinv - X
            r_c = sigma_mu / y - s
            rhs = (np.einsum("kij,ij->k", Gs, R_c - WRdW) + r_c - p_res)
            dy = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            dZ = np.tensordot(dy, Gs, axes=1) + R_d
            dX = R_c - W @ dZ @ W
            dX = (dX + dX.T) / 2.0
            ds = p_res - np.einsum("kij,ij->k", Gs, dX)
            return dX, ds, dy, dZ

        dXa, dsa, dya, dZa = direction(0.0)
        ap = min(1.0, 0.98 * min(_max_step_psd(X, dXa), _max_step_pos(s, dsa)))
        ad = min(1.0, 0.98 * min(_max_step_psd(Z, dZa), _max_step_pos(y, dya)))
        mu_aff = (float(np.tensordot(X + ap * dXa, Z + ad * dZa))
                  + float((s + ap * dsa) @ (y + ad * dya))) / (n + m)
        sigma = min(1.0, max((mu_aff / mu), 0.0) ** 3)

        dX, ds, dy, dZ = direction(sigma * mu)
        ap = min(1.0, 0.98 * min(_max_step_psd(X, dX), _max_step_pos(s, ds)))
        ad = min(1.0, 0.98 * min(_max_step_psd(Z, dZ), _max_step_pos(y, dy)))
        X = X + ap * dX
        s = s + ap * ds
        Z = Z + ad * dZ
        y = y + ad * dy

        # a diverging dual certificate with vanished complementarity means
        # no primal point can satisfy the intervals
        if float(h @ y) < -1.0 / max(tol, 1e-12) and mu < tol:
            raise SdpInfeasibleError("dual objective diverged; constraints "
                                     "appear unsatisfiable")

    err, Xb, gap = best
    if converged:
        Xb, gap = X, float(np.tensordot(C, X)) + float(h @ y)
    F = _restrict(Xb)
    F = (F + F.conj().T) / 2.0
    optimum = float(np.real(np.trace(instance.objective @ F)))
    tr = float(np.real(np.trace(F)))
    if tr > 0:
        ranks = int(np.sum(np.linalg.eigvalsh(F / tr) > 1e-7))
    else:
        ranks = 0
    return SdpSolution(F, optimum, abs(gap), ranks, iterations, converged)
