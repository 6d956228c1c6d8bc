"""Parameterized circuit families and their exact gradients.

Three families are provided:

* ``su4-block``: a 15-parameter two-qubit block (Euler triple on each
  qubit, a three-CNOT entangling core with interleaved rotations, Euler
  triples again) that can represent any SU(4) element up to global phase.
* ``zxz-cnot``: two rounds of per-qubit Rz Rx Rz followed by a CNOT,
  12 parameters; the all-zeros point is the identity.
* ``su4-chain``: per layer, a staircase of su4-block units on qubit pairs
  (0,1), (1,2), ..., (n-2, n-1); 15 (n-1) parameters per layer.

Parameter indices follow the template's gate order (left to right in the
usual circuit drawing; top to bottom inside a column; Rz, Rx, Rz inside an
Euler triple). Every rotation is exp(-i * angle * sigma), so each parameter
is pi-periodic in any fidelity-type cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.optimize import least_squares

from .core import (
    Circuit,
    FixedGate,
    PauliRotation,
    PauliString,
    StateVector,
    _apply_matrix,
    _apply_pauli,
    cnot,
    hadamard,
)

FAMILIES = ("su4-block", "zxz-cnot", "su4-chain")


@dataclass(frozen=True)
class RotationSlot:
    """One parameterized rotation: exp(-i * params[index] * axis)."""

    axis: PauliString
    index: int


TemplateEntry = Union[RotationSlot, FixedGate]


@dataclass(frozen=True)
class AnsatzSpec:
    family: str
    n_qubits: int
    layers: int
    template: tuple[TemplateEntry, ...]
    n_params: int

    def first_generator(self) -> PauliString:
        """Pauli string of the first parameterized gate in template order."""
        for entry in self.template:
            if isinstance(entry, RotationSlot):
                return entry.axis
        raise ValueError("ansatz has no parameterized gate")


def _slot(n: int, qubit: int, letter: str, index: int) -> RotationSlot:
    return RotationSlot(PauliString.single(n, qubit, letter), index)


def _euler_triple(n: int, qubit: int, base: int) -> list[RotationSlot]:
    # R = Rz(a) Rx(b) Rz(c) in circuit order
    return [_slot(n, qubit, "Z", base),
            _slot(n, qubit, "X", base + 1),
            _slot(n, qubit, "Z", base + 2)]


def _su4_block_template(n: int, q0: int, q1: int, base: int) -> list[TemplateEntry]:
    entries: list[TemplateEntry] = []
    entries += _euler_triple(n, q0, base)
    entries += _euler_triple(n, q1, base + 3)
    entries.append(cnot(q0, q1))
    entries.append(_slot(n, q0, "X", base + 6))
    entries.append(_slot(n, q1, "Z", base + 7))
    entries.append(hadamard(q0))
    entries.append(cnot(q0, q1))
    entries.append(hadamard(q0))
    entries.append(_slot(n, q1, "Z", base + 8))
    entries.append(cnot(q0, q1))
    entries += _euler_triple(n, q0, base + 9)
    entries += _euler_triple(n, q1, base + 12)
    return entries


def _zxz_cnot_template(n: int) -> list[TemplateEntry]:
    entries: list[TemplateEntry] = []
    base = 0
    for _ in range(2):
        for letter in ("Z", "X", "Z"):
            entries.append(_slot(n, 0, letter, base))
            entries.append(_slot(n, 1, letter, base + 1))
            base += 2
        entries.append(cnot(0, 1))
    return entries


def build_ansatz(family: str, n_qubits: int, layers: int = 1) -> AnsatzSpec:
    if family not in FAMILIES:
        raise ValueError(f"unknown ansatz family {family!r}; choose from {FAMILIES}")
    if layers < 1:
        raise ValueError("layers must be >= 1")
    if family in ("su4-block", "zxz-cnot"):
        if n_qubits != 2:
            raise ValueError(f"{family} is defined on exactly 2 qubits")
        if layers != 1:
            raise ValueError(f"{family} has a fixed single-layer template; "
                             "use su4-chain for layered two-qubit circuits")
        if family == "su4-block":
            template = _su4_block_template(2, 0, 1, 0)
            return AnsatzSpec(family, 2, 1, tuple(template), 15)
        template = _zxz_cnot_template(2)
        return AnsatzSpec(family, 2, 1, tuple(template), 12)
    if n_qubits < 2:
        raise ValueError("su4-chain needs at least 2 qubits")
    per_layer = 15 * (n_qubits - 1)
    template = []
    for layer in range(layers):
        for b in range(n_qubits - 1):
            base = layer * per_layer + 15 * b
            template += _su4_block_template(n_qubits, b, b + 1, base)
    return AnsatzSpec(family, n_qubits, layers, tuple(template), per_layer * layers)


def bind_ansatz(ansatz: AnsatzSpec, params: np.ndarray) -> Circuit:
    params = _check_params(ansatz, params)
    gates = []
    for entry in ansatz.template:
        if isinstance(entry, RotationSlot):
            gates.append(PauliRotation(entry.axis, float(params[entry.index])))
        else:
            gates.append(entry)
    return Circuit(ansatz.n_qubits, tuple(gates))


def _check_params(ansatz: AnsatzSpec, params) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if params.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got {params.shape[0]}")
    if not np.all(np.isfinite(params)):
        raise ValueError("parameters must be finite")
    return params


def _apply_entry(amps: np.ndarray, n: int, entry: TemplateEntry,
                 params: np.ndarray) -> np.ndarray:
    if isinstance(entry, RotationSlot):
        angle = params[entry.index]
        sigma_psi = _apply_pauli(amps, entry.axis)
        return math.cos(angle) * amps - 1j * math.sin(angle) * sigma_psi
    return _apply_matrix(amps, n, entry.matrix, entry.qubits)


def apply_ansatz(state: StateVector, ansatz: AnsatzSpec, params) -> StateVector:
    params = _check_params(ansatz, params)
    if state.n_qubits != ansatz.n_qubits:
        raise ValueError("state register size does not match ansatz")
    amps = state.amplitudes
    for entry in ansatz.template:
        amps = _apply_entry(amps, ansatz.n_qubits, entry, params)
    return StateVector(ansatz.n_qubits, amps)


def ansatz_matrix(ansatz: AnsatzSpec, params) -> np.ndarray:
    """Dense unitary of the bound circuit (small registers only)."""
    params = _check_params(ansatz, params)
    dim = 2 ** ansatz.n_qubits
    cols = np.empty((dim, dim), dtype=np.complex128)
    basis = np.eye(dim, dtype=np.complex128)
    for j in range(dim):
        amps = basis[:, j]
        for entry in ansatz.template:
            amps = _apply_entry(amps, ansatz.n_qubits, entry, params)
        cols[:, j] = amps
    return cols


def ansatz_gradient(state_pair: tuple[StateVector, StateVector],
                    ansatz: AnsatzSpec, params, cost_kind: str = "infidelity",
                    ) -> np.ndarray:
    """Exact gradient of |<target|U(params)|input>|^2 (or 1 minus it).

    Reverse-mode sweep: one forward pass stores the state after every gate,
    one backward pass pulls the target through adjoint gates, and each
    parameterized slot contributes <b|(-i sigma)|s> to the overlap
    derivative. Cost is O(gates) state applications total.
    """
    if cost_kind not in ("infidelity", "fidelity"):
        raise ValueError(f"unknown cost_kind {cost_kind!r}")
    params = _check_params(ansatz, params)
    src, target = state_pair
    n = ansatz.n_qubits
    if src.n_qubits != n or target.n_qubits != n:
        raise ValueError("state register size does not match ansatz")

    forward = [src.amplitudes]
    for entry in ansatz.template:
        forward.append(_apply_entry(forward[-1], n, entry, params))
    z = np.vdot(target.amplitudes, forward[-1])

    grad = np.zeros(ansatz.n_params)
    b = target.amplitudes
    for j in range(len(ansatz.template) - 1, -1, -1):
        entry = ansatz.template[j]
        if isinstance(entry, RotationSlot):
            dz = np.vdot(b, -1j * _apply_pauli(forward[j + 1], entry.axis))
            grad[entry.index] += 2.0 * (np.conj(z) * dz).real
            # adjoint of exp(-i a sigma) is the rotation at -a
            angle = params[entry.index]
            sigma_b = _apply_pauli(b, entry.axis)
            b = math.cos(angle) * b + 1j * math.sin(angle) * sigma_b
        else:
            b = _apply_matrix(b, n, entry.matrix.conj().T, entry.qubits)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite entries in ansatz gradient")
    return -grad if cost_kind == "infidelity" else grad


def phase_residual(unitary: np.ndarray, target: np.ndarray | None = None) -> float:
    """min over alpha of ||U - e^{i alpha} T||_F, T defaulting to identity."""
    if target is None:
        target = np.eye(unitary.shape[0], dtype=np.complex128)
    overlap = np.trace(target.conj().T @ unitary)
    alpha = np.angle(overlap) if abs(overlap) > 0 else 0.0
    return float(np.linalg.norm(unitary - np.exp(1j * alpha) * target))


# Seed for the su4-block identity point. The three rotations inside the
# entangling core at (-pi/4, 0, -pi/2) collapse the three CNOTs to a local
# unitary e^{-i pi/4} [(Y-Z)/sqrt(2)] x [(Y+Z)/sqrt(2)], and the trailing
# Euler triples cancel the two reflections.
_SU4_IDENTITY_SEED = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    -math.pi / 4, 0.0, -math.pi / 2,
    math.pi / 2, math.pi / 4, 0.0,
    0.0, math.pi / 4, -math.pi / 2,
)


@lru_cache(maxsize=1)
def _su4_block_identity() -> np.ndarray:
    """Numerically polished identity parameters for the su4-block."""
    block = build_ansatz("su4-block", 2)

    def resid(x):
        diff = ansatz_matrix(block, x[:15]) - np.exp(1j * x[15]) * np.eye(4)
        return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

    x0 = np.concatenate([_SU4_IDENTITY_SEED, [0.75 * math.pi]])
    sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=200)
    residual = float(np.linalg.norm(sol.fun))
    if residual > 1e-12:
        raise RuntimeError(f"su4-block identity solve residual {residual:.3e} > 1e-12")
    return sol.x[:15].copy()


def identity_params(ansatz: AnsatzSpec) -> np.ndarray:
    """Parameter vector at which the circuit is the identity up to phase.

    The returned point is verified: the residual min_alpha
    ||U(params) - e^{i alpha} I||_F (bounded block-by-block for chains)
    must come out below 1e-8.
    """
    if ansatz.family == "zxz-cnot":
        params = np.zeros(ansatz.n_params)
    elif ansatz.family == "su4-block":
        params = _su4_block_identity().copy()
    else:
        params = np.tile(_su4_block_identity(),
                         ansatz.layers * (ansatz.n_qubits - 1))

    if ansatz.family in ("su4-block", "zxz-cnot"):
        residual = phase_residual(ansatz_matrix(ansatz, params))
    else:
        # unitary composition: residuals of the blocks add at worst
        block = build_ansatz("su4-block", 2)
        per_block = phase_residual(ansatz_matrix(block, _su4_block_identity()))
        residual = per_block * ansatz.layers * (ansatz.n_qubits - 1)
    if residual > 1e-8:
        raise RuntimeError(f"identity parameter residual {residual:.3e} > 1e-8")
    return params
