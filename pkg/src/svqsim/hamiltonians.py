"""Transverse- plus longitudinal-field Ising chain and its Trotterization.

The Hamiltonian on an open chain of N qubits is

    H = -J sum_{j=0}^{N-2} X_j X_{j+1} - g sum_j Z_j - h sum_j X_j.

Every local term is a single Pauli string, so each Trotter factor
exp(-i dt H_l) is one rotation gate under the exp(-i angle sigma)
convention used by the gate layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Circuit, PauliRotation, PauliString, MAX_QUBITS


@dataclass(frozen=True)
class IsingParams:
    n_qubits: int
    J: float = 1.0
    g: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        for name in ("J", "g", "h"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class PauliSum:
    """Hamiltonian as a list of Pauli strings with real coefficients."""

    n_qubits: int
    terms: tuple[PauliString, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.n_qubits != self.n_qubits:
                raise ValueError("term register size does not match PauliSum")


@dataclass(frozen=True)
class TrotterSpec:
    """One product-formula step of duration dt."""

    dt: float
    order: int
    circuit: Circuit


def build_ising(params: IsingParams) -> PauliSum:
    """Terms in a fixed order: XX couplings, then Z fields, then X fields."""
    n = params.n_qubits
    terms = []
    for j in range(n - 1):
        letters = "".join("X" if q in (j, j + 1) else "I" for q in range(n))
        terms.append(PauliString(n, letters, -params.J))
    for j in range(n):
        terms.append(PauliString.single(n, j, "Z", -params.g))
    for j in range(n):
        terms.append(PauliString.single(n, j, "X", -params.h))
    return PauliSum(n, tuple(terms))


def pauli_sum_matrix(psum: PauliSum) -> np.ndarray:
    dim = 2 ** psum.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for term in psum.terms:
        out += term.matrix()
    return out


def _field_rotations(params: IsingParams, dt: float) -> list[PauliRotation]:
    n = params.n_qubits
    gates = [PauliRotation(PauliString.single(n, j, "Z"), -params.g * dt)
             for j in range(n)]
    gates += [PauliRotation(PauliString.single(n, j, "X"), -params.h * dt)
              for j in range(n)]
    return gates


def _coupling_rotations(params: IsingParams, dt: float) -> list[PauliRotation]:
    n = params.n_qubits
    gates = []
    for j in range(n - 1):
        letters = "".join("X" if q in (j, j + 1) else "I" for q in range(n))
        gates.append(PauliRotation(PauliString(n, letters), -params.J * dt))
    return gates


def trotter_step(params: IsingParams, dt: float, order: int) -> TrotterSpec:
    """Product-formula step for exp(-i dt H).

    Order 1 applies every term once at dt: Z fields, X fields, couplings,
    each in ascending site order. Order 2 is the symmetric split: the field
    rotations at dt/2, the coupling rotations at dt, then the field
    rotations again at dt/2 in exactly reversed order, so the circuit is a
    palindrome and the local error is O(dt^3).
    """
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    if order == 1:
        gates = _field_rotations(params, dt) + _coupling_rotations(params, dt)
    elif order == 2:
        half = _field_rotations(params, dt / 2.0)
        gates = half + _coupling_rotations(params, dt) + half[::-1]
    else:
        raise ValueError(f"unsupported Trotter order {order}")
    return TrotterSpec(dt, order, Circuit(params.n_qubits, tuple(gates)))


def exact_propagator(params: IsingParams, t: float) -> np.ndarray:
    """Dense exp(-i t H) from the eigendecomposition of H."""
    ham = pauli_sum_matrix(build_ising(params))
    evals, evecs = np.linalg.eigh(ham)
    return (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T


def max_abs_energy(params: IsingParams) -> float:
    """Largest |eigenvalue| of H; enters the warm-start admissibility window."""
    ham = pauli_sum_matrix(build_ising(params))
    return float(np.max(np.abs(np.linalg.eigvalsh(ham))))
