"""Step-by-step training of an ansatz against one Trotter step.

At step m the circuit U(phi) is trained so that, for every training state
|s> drawn from a d-dimensional subspace, U(phi)|s> matches
T(dt) U(phi_{m-1}) |s>. The training set contains the d basis states and
the d-1 superpositions (|psi_0> + |psi_i>)/sqrt(2); the latter pin the
relative phases between basis states, which the basis states alone cannot
see. The cost is one minus the mean fidelity over the training set.

Each parameter enters the exact cost as A + B cos(2 phi + C), so the
sequential-minimal optimizer can jump every parameter to its conditional
minimum from three evaluations at phi and phi +- pi/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ansatz import AnsatzSpec, RotationSlot, apply_ansatz, _check_params
from .core import StateVector, _PAULI_1Q
from .hamiltonians import TrotterSpec


class TrainingDivergence(RuntimeError):
    """Raised when an optimizer hits non-finite numbers."""


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis states spanning the trained subspace."""

    states: tuple[StateVector, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("subspace needs at least one basis state")
        n = states[0].n_qubits
        if any(s.n_qubits != n for s in states):
            raise ValueError("basis states act on different register sizes")
        gram = np.array([[np.vdot(a.amplitudes, b.amplitudes) for b in states]
                         for a in states])
        if np.max(np.abs(gram - np.eye(len(states)))) > 1e-10:
            raise ValueError("basis states are not orthonormal within 1e-10")
        labels = tuple(self.labels) or tuple(f"state{i}" for i in range(len(states)))
        if len(labels) != len(states):
            raise ValueError("one label per basis state required")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_bitstrings(cls, bits: list[str]) -> "SubspaceBasis":
        return cls(tuple(StateVector.from_bitstring(b) for b in bits), tuple(bits))

    @property
    def d(self) -> int:
        return len(self.states)

    @property
    def n_qubits(self) -> int:
        return self.states[0].n_qubits

    def plus_states(self) -> tuple[StateVector, ...]:
        """(|psi_0> + |psi_i>)/sqrt(2) for i = 1..d-1."""
        base = self.states[0].amplitudes
        return tuple(
            StateVector(self.n_qubits, (base + s.amplitudes) / math.sqrt(2.0))
            for s in self.states[1:])

    def training_states(self, training_set: str = "full",
                        ) -> tuple[tuple[StateVector, ...], tuple[str, ...]]:
        if training_set == "full":
            states = self.states + self.plus_states()
            labels = self.labels + tuple(f"plus{i}" for i in range(1, self.d))
        elif training_set == "basis-only":
            states, labels = self.states, self.labels
        elif training_set == "single-state":
            states, labels = self.states[:1], self.labels[:1]
        else:
            raise ValueError(f"unknown training_set {training_set!r}")
        return states, labels


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sequential-minimal"
    halting_threshold: float = 1e-4
    max_iterations: Optional[int] = None  # None: 200 sweeps (smo) / 2000 steps (sgd)
    learning_rate: float = 0.1
    rng_seed: int = 0  # shot-noise stream; unused for exact (shots=0) costs

    def __post_init__(self):
        if self.kind not in ("sequential-minimal", "sgd"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.halting_threshold <= 0:
            raise ValueError("halting_threshold must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def resolved_max_iterations(self) -> int:
        if self.max_iterations is not None:
            if self.max_iterations < 1:
                raise ValueError("max_iterations must be >= 1")
            return self.max_iterations
        return 200 if self.kind == "sequential-minimal" else 2000


@dataclass
class OptimizeTrace:
    cost_history: list[float]
    iterations: int
    converged: bool
    stalled: bool
    final_cost: float


@dataclass(frozen=True)
class StepRecord:
    step: int
    fidelities: dict[str, float]
    cost: float
    iterations: int
    converged: bool
    stalled: bool


@dataclass(frozen=True)
class TrainingRecord:
    labels: tuple[str, ...]
    steps: tuple[StepRecord, ...]
    training_set: str
    shots: int
    seed: int

    def fidelity_history(self, label: str) -> np.ndarray:
        """Per-step converged fidelities f_{label, 1..m} for one state."""
        if label not in self.labels:
            raise KeyError(f"unknown training state label {label!r}")
        return np.array([rec.fidelities[label] for rec in self.steps])

    @property
    def any_stalled(self) -> bool:
        return any(rec.stalled for rec in self.steps)

    @property
    def all_converged(self) -> bool:
        return all(rec.converged for rec in self.steps)


def _apply_matrix_cols(cols: np.ndarray, n: int, matrix: np.ndarray,
                       qubits: tuple[int, ...]) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to given qubits of a (2^n, K) column stack."""
    k = len(qubits)
    width = cols.shape[1]
    psi = cols.reshape([2] * n + [width])
    psi = np.moveaxis(psi, qubits, range(k))
    shape = psi.shape
    psi = matrix @ psi.reshape(2 ** k, -1)
    psi = np.moveaxis(psi.reshape(shape), range(k), qubits)
    return psi.reshape(-1, width)


def _apply_pauli_cols(cols: np.ndarray, pauli) -> np.ndarray:
    out = cols
    for q in pauli.support():
        out = _apply_matrix_cols(out, pauli.n_qubits,
                                 _PAULI_1Q[pauli.letters[q]], (q,))
    if pauli.coefficient != 1.0:
        out = pauli.coefficient * out
    return out


def _apply_entry_cols(cols: np.ndarray, n: int, entry,
                      params: np.ndarray) -> np.ndarray:
    if isinstance(entry, RotationSlot):
        angle = params[entry.index]
        return (math.cos(angle) * cols
                - 1j * math.sin(angle) * _apply_pauli_cols(cols, entry.axis))
    return _apply_matrix_cols(cols, n, entry.matrix, entry.qubits)


def make_step_cost(states: tuple[StateVector, ...], ansatz: AnsatzSpec,
                   trotter: TrotterSpec, prev_params: np.ndarray,
                   shots: int = 0, rng: Optional[np.random.Generator] = None,
                   ) -> tuple[Callable, Callable]:
    """Cost and gradient closures for one training step.

    Targets T(dt) U(prev) |s> are fixed once; the training states ride one
    (2^n, K) column stack so each evaluation walks the template once, not
    once per state. The gradient closure is exact (adjoint sweep) and
    caches the cost value it computes as a byproduct, so an SGD iteration
    needs a single fused pass. With shots > 0 the cost is a binomial
    estimate per term and the gradient closure falls back to the
    parameter-shift rule on the pi-periodic sinusoid (shifts of pi/4).
    """
    if shots > 0 and rng is None:
        raise ValueError("shot-based cost needs an RNG")
    targets = [trotter.circuit.apply(apply_ansatz(s, ansatz, prev_params)).amplitudes
               for s in states]
    K = len(states)
    n = ansatz.n_qubits
    src_cols = np.stack([s.amplitudes for s in states], axis=1)
    tgt_cols = np.stack(targets, axis=1)
    cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def _forward_stack(params) -> list[np.ndarray]:
        stack = [src_cols]
        for entry in ansatz.template:
            stack.append(_apply_entry_cols(stack[-1], n, entry, params))
        return stack

    def exact_fidelities(params) -> np.ndarray:
        params = _check_params(ansatz, params)
        z = np.sum(tgt_cols.conj() * _forward_stack(params)[-1], axis=0)
        return np.abs(z) ** 2

    def cost(params) -> float:
        params = _check_params(ansatz, params)
        hit = cache.get(params.tobytes())
        if hit is not None:
            return hit[0]
        f = exact_fidelities(params)
        if shots > 0:
            f = rng.binomial(shots, np.clip(f, 0.0, 1.0)) / shots
        return float(1.0 - f.mean())

    def gradient(params) -> np.ndarray:
        params = _check_params(ansatz, params)
        if shots > 0:
            # parameter-shift on the 2 phi sinusoid: dC/dphi_k = C(+pi/4) - C(-pi/4)
            grad = np.empty(ansatz.n_params)
            for k in range(ansatz.n_params):
                shifted = params.copy()
                shifted[k] = params[k] + math.pi / 4
                up = cost(shifted)
                shifted[k] = params[k] - math.pi / 4
                down = cost(shifted)
                grad[k] = up - down
            return grad
        forward = _forward_stack(params)
        z = np.sum(tgt_cols.conj() * forward[-1], axis=0)
        grad = np.zeros(ansatz.n_params)
        b = tgt_cols
        for j in range(len(ansatz.template) - 1, -1, -1):
            entry = ansatz.template[j]
            if isinstance(entry, RotationSlot):
                dz = np.sum(b.conj() * (-1j * _apply_pauli_cols(
                    forward[j + 1], entry.axis)), axis=0)
                grad[entry.index] += 2.0 * float(np.sum((np.conj(z) * dz).real))
                angle = params[entry.index]
                b = (math.cos(angle) * b
                     + 1j * math.sin(angle) * _apply_pauli_cols(b, entry.axis))
            else:
                b = _apply_matrix_cols(b, n, entry.matrix.conj().T, entry.qubits)
        value = float(np.sum(np.abs(z) ** 2))
        if len(cache) > 8:
            cache.clear()
        cache[params.tobytes()] = (float(1.0 - value / K), params.copy())
        return -grad / K

    cost.exact_fidelities = exact_fidelities
    return cost, gradient


def cost_m(params, prev_params, basis: SubspaceBasis, trotter: TrotterSpec,
           ansatz: AnsatzSpec, shots: int = 0, seed: int = 0) -> float:
    """Training cost of step m against the previous step's parameters.

    1 - (1/(2d-1)) [sum_i |<Psi_i(phi)|T|Psi_i(prev)>|^2
                    + sum_{i>0} |<Psi_i^+(phi)|T|Psi_i^+(prev)>|^2].
    """
    states, _ = basis.training_states("full")
    rng = np.random.default_rng([seed, 0x5157]) if shots > 0 else None
    cost, _ = make_step_cost(states, ansatz, trotter, np.asarray(prev_params, float),
                             shots=shots, rng=rng)
    return cost(params)


def sequential_minimal_minimize(cost: Callable, params0, config: OptimizerConfig,
                                check_sinusoid: bool = True,
                                ) -> tuple[np.ndarray, OptimizeTrace]:
    """Coordinate-wise exact minimization on the pi-periodic cost.

    Per parameter, the restriction is A + B cos(2 phi + C); evaluations at
    phi and phi +- pi/4 identify (A, B, C) and the parameter jumps to the
    conditional minimum (wrapped to the representative nearest the old
    value). A full sweep that fails to decrease the cost ends the run with
    the stalled flag set. `check_sinusoid` re-evaluates after every jump and
    asserts agreement with the model prediction; disable it for shot-noisy
    costs.
    """
    params = np.array(params0, dtype=np.float64)
    c_now = float(cost(params))
    history = [c_now]
    threshold = config.halting_threshold
    max_sweeps = config.resolved_max_iterations()
    converged = c_now < threshold
    stalled = False
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        c_before = c_now
        for k in range(params.shape[0]):
            phi0 = params[k]
            f0 = c_now
            params[k] = phi0 + math.pi / 4
            f_up = float(cost(params))
            params[k] = phi0 - math.pi / 4
            f_down = float(cost(params))
            mean = (f_up + f_down) / 2.0
            u = f0 - mean
            v = (f_down - f_up) / 2.0
            amp = math.hypot(u, v)
            if amp < 1e-16:
                params[k] = phi0
                continue
            # minimum of mean + amp*cos(2 phi + C) at 2 phi + C = pi
            phi_star = phi0 + (math.pi - math.atan2(v, u)) / 2.0
            phi_star = phi0 + (phi_star - phi0 + math.pi / 2) % math.pi - math.pi / 2
            params[k] = phi_star
            predicted = mean - amp
            if check_sinusoid:
                measured = float(cost(params))
                if measured > c_now + 1e-9:
                    raise TrainingDivergence(
                        f"coordinate update increased the cost: {c_now} -> {measured}")
                if abs(measured - predicted) > 1e-7:
                    raise TrainingDivergence(
                        "cost is not the expected sinusoid in parameter "
                        f"{k}: predicted {predicted}, measured {measured}")
                c_now = measured
            else:
                c_now = predicted
        history.append(c_now)
        if c_now < threshold:
            converged = True
        elif c_now >= c_before - 1e-15:
            stalled = True
            break
    if not np.all(np.isfinite(params)):
        raise TrainingDivergence("non-finite parameters after sweep")
    return params, OptimizeTrace(history, sweeps, converged, stalled, c_now)


def sgd_minimize(cost: Callable, gradient: Callable, params0,
                 config: OptimizerConfig) -> tuple[np.ndarray, OptimizeTrace]:
    """Plain gradient descent phi <- phi - lr * grad."""
    params = np.array(params0, dtype=np.float64)
    max_steps = config.resolved_max_iterations()
    threshold = config.halting_threshold
    history = []
    converged = False
    steps = 0
    for _ in range(max_steps):
        grad = np.asarray(gradient(params))
        if not np.all(np.isfinite(grad)):
            raise TrainingDivergence(
                f"non-finite gradient at step {steps}; last cost "
                f"{history[-1] if history else 'n/a'}")
        c_now = float(cost(params))  # cache hit when gradient was fused
        history.append(c_now)
        if c_now < threshold:
            converged = True
            break
        params = params - config.learning_rate * grad
        steps += 1
    final_cost = float(cost(params))
    if not history or final_cost != history[-1]:
        history.append(final_cost)
    return params, OptimizeTrace(history, steps, converged or final_cost < threshold,
                                 False, final_cost)


def train_subspace(basis: SubspaceBasis, ansatz: AnsatzSpec, trotter: TrotterSpec,
                   n_steps: int, config: OptimizerConfig, shots: int = 0,
                   seed: Optional[int] = None, training_set: str = "full",
                   ) -> tuple[np.ndarray, TrainingRecord]:
    """Train all steps, warm-starting each at the previous step's optimum.

    Returns the parameter trajectory, shape (n_steps + 1, n_params) with
    row 0 the identity parameters, and the per-step record of converged
    training-state fidelities (exact values when shots = 0). n_steps = 0
    yields the identity row and an empty record. The run is deterministic
    given (seed, config, shots); seed defaults to config.rng_seed.
    """
    from .ansatz import identity_params

    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if basis.n_qubits != ansatz.n_qubits:
        raise ValueError("basis register size does not match ansatz")
    if seed is None:
        seed = config.rng_seed
    states, labels = basis.training_states(training_set)
    trajectory = np.empty((n_steps + 1, ansatz.n_params))
    trajectory[0] = identity_params(ansatz)
    records = []
    for m in range(1, n_steps + 1):
        rng = np.random.default_rng([seed, m]) if shots > 0 else None
        cost, gradient = make_step_cost(states, ansatz, trotter, trajectory[m - 1],
                                        shots=shots, rng=rng)
        if config.kind == "sequential-minimal":
            params, trace = sequential_minimal_minimize(
                cost, trajectory[m - 1], config, check_sinusoid=(shots == 0))
        else:
            params, trace = sgd_minimize(cost, gradient, trajectory[m - 1], config)
        trajectory[m] = params
        fids = cost.exact_fidelities(params)
        if shots > 0:
            fid_rng = np.random.default_rng([seed, m, 0xF1D])
            fids = fid_rng.binomial(shots, np.clip(fids, 0.0, 1.0)) / shots
        records.append(StepRecord(m, dict(zip(labels, fids.tolist())),
                                  trace.final_cost, trace.iterations,
                                  trace.converged, trace.stalled))
    return trajectory, TrainingRecord(labels, tuple(records), training_set, shots, seed)
