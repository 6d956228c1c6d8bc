"""Dense statevector simulation primitives.

Conventions used throughout the toolkit:

* Qubit 0 is the most significant bit of the amplitude index, so the basis
  state |b_0 b_1 ... b_{n-1}> sits at index sum_q b_q * 2**(n-1-q).
* Rotation gates are exp(-i * angle * sigma) for a Pauli string sigma.
  There is no half-angle: the period of any single angle is pi.
* Arrays handed to or returned from these types are treated as immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

MAX_QUBITS = 12

_PAULI_1Q = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)

# control = first target qubit, target = second; MSB-first matrix indexing
CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]], dtype=np.complex128)


def _check_n_qubits(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on `n_qubits` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape != (2 ** self.n_qubits,):
            raise ValueError(
                f"expected {2 ** self.n_qubits} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        if not bits or any(b not in "01" for b in bits):
            raise ValueError(f"bitstring must be nonempty over {{0,1}}, got {bits!r}")
        n = len(bits)
        amps = np.zeros(2 ** n, dtype=np.complex128)
        amps[int(bits, 2)] = 1.0
        return cls(n, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        n = amps.shape[0].bit_length() - 1
        if 2 ** n != amps.shape[0]:
            raise ValueError(f"amplitude count {amps.shape[0]} is not a power of two")
        nrm = np.linalg.norm(amps)
        if nrm < 1e-12:
            raise ValueError("cannot normalize the zero vector")
        return cls(n, amps / nrm)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis with a real coefficient.

    `letters` has one character in {I, X, Y, Z} per qubit, qubit 0 first.
    """

    n_qubits: int
    letters: str
    coefficient: float = 1.0

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        if len(self.letters) != self.n_qubits:
            raise ValueError(
                f"letters length {len(self.letters)} != n_qubits {self.n_qubits}")
        bad = set(self.letters) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)}")
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str,
               coefficient: float = 1.0) -> "PauliString":
        letters = "".join(letter if q == qubit else "I" for q in range(n_qubits))
        return cls(n_qubits, letters, coefficient)

    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.letters) if c != "I")

    def matrix(self) -> np.ndarray:
        out = np.array([[self.coefficient]], dtype=np.complex128)
        for c in self.letters:
            out = np.kron(out, _PAULI_1Q[c])
        return out


@dataclass(frozen=True)
class PauliRotation:
    """Gate exp(-i * angle * axis), axis a coefficient-1 Pauli string."""

    axis: PauliString
    angle: float

    def __post_init__(self):
        if self.axis.coefficient != 1.0:
            raise ValueError("rotation axis must carry coefficient 1")
        if not np.isfinite(self.angle):
            raise ValueError("angle must be finite")

    def adjoint(self) -> "PauliRotation":
        return PauliRotation(self.axis, -self.angle)


@dataclass(frozen=True)
class FixedGate:
    """Unitary `matrix` acting on `qubits`; qubits[0] is the matrix MSB."""

    matrix: np.ndarray
    qubits: tuple[int, ...]

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated target qubits {qubits}")
        mat = np.asarray(self.matrix, dtype=np.complex128)
        dim = 2 ** len(qubits)
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match {len(qubits)} qubits")
        if not np.allclose(mat @ mat.conj().T, np.eye(dim), atol=1e-12):
            raise ValueError("matrix is not unitary within 1e-12")
        object.__setattr__(self, "matrix", mat)

    def adjoint(self) -> "FixedGate":
        return FixedGate(self.matrix.conj().T, self.qubits)


Gate = Union[PauliRotation, FixedGate]


def hadamard(qubit: int) -> FixedGate:
    return FixedGate(HADAMARD, (qubit,))


def cnot(control: int, target: int) -> FixedGate:
    return FixedGate(CNOT, (control, target))


def _apply_matrix(amps: np.ndarray, n_qubits: int, matrix: np.ndarray,
                  qubits: tuple[int, ...]) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the given qubits of an amplitude array."""
    k = len(qubits)
    psi = amps.reshape([2] * n_qubits)
    psi = np.moveaxis(psi, qubits, range(k))
    shape = psi.shape
    psi = matrix @ psi.reshape(2 ** k, -1)
    psi = np.moveaxis(psi.reshape(shape), range(k), qubits)
    return psi.reshape(-1)


def _apply_pauli(amps: np.ndarray, pauli: PauliString) -> np.ndarray:
    out = amps
    for q in pauli.support():
        out = _apply_matrix(out, pauli.n_qubits, _PAULI_1Q[pauli.letters[q]], (q,))
    if pauli.coefficient != 1.0:
        out = pauli.coefficient * out
    return out


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one gate; norm is preserved to machine precision."""
    if isinstance(gate, PauliRotation):
        if gate.axis.n_qubits != state.n_qubits:
            raise ValueError("rotation axis register size does not match state")
        # exp(-i a P) = cos(a) I - i sin(a) P since P^2 = I
        sigma_psi = _apply_pauli(state.amplitudes, gate.axis)
        amps = math.cos(gate.angle) * state.amplitudes \
            - 1j * math.sin(gate.angle) * sigma_psi
        return StateVector(state.n_qubits, amps)
    if isinstance(gate, FixedGate):
        if any(not 0 <= q < state.n_qubits for q in gate.qubits):
            raise ValueError(f"gate qubits {gate.qubits} outside register")
        amps = _apply_matrix(state.amplitudes, state.n_qubits, gate.matrix, gate.qubits)
        return StateVector(state.n_qubits, amps)
    raise TypeError(f"unknown gate type {type(gate).__name__}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate sequence on a fixed-size register."""

    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        object.__setattr__(self, "gates", tuple(self.gates))

    def apply(self, state: StateVector) -> StateVector:
        if state.n_qubits != self.n_qubits:
            raise ValueError("state register size does not match circuit")
        for gate in self.gates:
            state = apply_gate(state, gate)
        return state

    def adjoint(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(g.adjoint() for g in reversed(self.gates)))

    def compose(self, later: "Circuit") -> "Circuit":
        """Return the circuit running `self` first, then `later`."""
        if later.n_qubits != self.n_qubits:
            raise ValueError("register size mismatch in compose")
        return Circuit(self.n_qubits, self.gates + later.gates)

    def matrix(self) -> np.ndarray:
        dim = 2 ** self.n_qubits
        cols = np.empty((dim, dim), dtype=np.complex128)
        for j in range(dim):
            amps = np.zeros(dim, dtype=np.complex128)
            amps[j] = 1.0
            cols[:, j] = self.apply(StateVector(self.n_qubits, amps)).amplitudes
        return cols


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        mat = np.asarray(self.matrix, dtype=np.complex128)
        dim = 2 ** self.n_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"expected shape {(dim, dim)}, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(mat).real - 1.0) > 1e-10:
            raise ValueError("density matrix trace deviates from 1 by more than 1e-10")
        if np.linalg.eigvalsh(mat).min() < -1e-10:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", mat)


def fidelity_pure(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for normalized pure states, clamped to [0, 1].

    Roundoff excursions up to 1e-12 above 1 are clamped; anything larger
    indicates unnormalized input and raises.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("states act on different register sizes")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    if f > 1.0 + 1e-12:
        raise ValueError(f"fidelity {f} exceeds 1 beyond roundoff; inputs unnormalized?")
    return float(min(f, 1.0))


def fidelity_shot_estimate(a_prep: Circuit, b_prep: Circuit, shots: int,
                           rng_seed: int) -> float:
    """Compute-uncompute fidelity estimate between two prepared states.

    Runs b_prep^dagger after a_prep on |0...0> and measures the probability
    of the all-zeros outcome. shots = 0 returns the exact probability;
    shots > 0 draws a binomial sample with the given seed.
    """
    if shots < 0:
        raise ValueError(f"shots must be >= 0, got {shots}")
    if a_prep.n_qubits != b_prep.n_qubits:
        raise ValueError("preparation circuits act on different register sizes")
    state = b_prep.adjoint().apply(a_prep.apply(StateVector.zero(a_prep.n_qubits)))
    p = min(abs(state.amplitudes[0]) ** 2, 1.0)
    if shots == 0:
        return float(p)
    rng = np.random.default_rng(rng_seed)
    return float(rng.binomial(shots, p) / shots)


def partial_trace(state: Union[StateVector, DensityMatrix],
                  keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on `keep` (ascending qubit order)."""
    keep = sorted(set(int(q) for q in keep))
    n = state.n_qubits
    if not keep:
        raise ValueError("keep must be nonempty")
    if any(not 0 <= q < n for q in keep):
        raise ValueError(f"keep {keep} outside register of {n} qubits")
    k = len(keep)
    if isinstance(state, StateVector):
        psi = state.amplitudes.reshape([2] * n)
        psi = np.moveaxis(psi, keep, range(k)).reshape(2 ** k, -1)
        rho = psi @ psi.conj().T
    else:
        traced = [q for q in range(n) if q not in keep]
        rho = state.matrix.reshape([2] * (2 * n))
        for q in sorted(traced, reverse=True):
            rho = np.trace(rho, axis1=q, axis2=q + rho.ndim // 2)
        rho = rho.reshape(2 ** k, 2 ** k)
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(k, rho)


def purity(rho: DensityMatrix) -> float:
    """Tr[rho^2], in (0, 1] for a valid density matrix."""
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))
