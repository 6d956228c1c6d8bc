"""Experiment harness: training runs, bound surfaces, entanglement tracks.

Each run function returns plain rows; `write_csv` and `write_manifest`
serialize them. Output is deliberately boring: 17-significant-digit
floats, LF line endings, a `# schema:` line first, and a manifest of the
fully resolved configuration next to every file, so identical configs
reproduce byte-identical artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .ansatz import AnsatzSpec, apply_ansatz, build_ansatz, identity_params
from .bounds import BoundResult, FidelityConstraints, fidelity_lower_bound, prop1_lower_bound
from .config import ExperimentConfig, override
from .core import StateVector, fidelity_pure, partial_trace, purity
from .hamiltonians import TrotterSpec, exact_propagator, max_abs_energy, trotter_step
from .training import SubspaceBasis, TrainingRecord, train_subspace
from .warmstart import (WarmStartReport, evaluate_warmstart, sigma1_overlap,
                        thm2_conditions)

SCHEMA_VERSION = "v1"

_MINUS = (1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class ResultRow:
    """One fidelity observation at one trained step."""

    step: int
    state_label: str
    fidelity_vs_trotter: float
    prop1_bound: float  # nan on sampled states: no certificate is claimed
    source: str

    def __post_init__(self):
        if self.source not in ("training-state", "random-state"):
            raise ValueError(f"unknown row source {self.source!r}")


@dataclass(frozen=True)
class ParameterTrajectory:
    """Per-step optima with the circuit context needed to replay them."""

    ansatz: AnsatzSpec
    trotter: TrotterSpec
    params: np.ndarray  # (n_steps + 1, n_params); row 0 is the warm-start origin

    @property
    def n_steps(self) -> int:
        return self.params.shape[0] - 1


@dataclass(frozen=True)
class TrainExperimentResult:
    trajectory: ParameterTrajectory
    record: TrainingRecord
    rows: tuple[ResultRow, ...]


def _clip01(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


def run_train_experiment(config: ExperimentConfig) -> TrainExperimentResult:
    """Train the schedule, then score every step against re-simulated Trotter.

    The per-step fidelity compares U(params_m)|psi> with the m-fold
    Trotter state built fresh from the raw initial state, not with the
    iterative target the optimizer saw; the accumulated-angle bound from
    the training record rides along on every training-state row.
    """
    basis = config.basis
    ansatz = build_ansatz(config.ansatz_family, basis.n_qubits, config.ansatz_layers)
    trotter = trotter_step(config.model, config.dt, config.trotter_order)
    params, record = train_subspace(
        basis, ansatz, trotter, config.n_steps, config.optimizer,
        shots=config.shots, seed=config.seed, training_set=config.training_set)
    trajectory = ParameterTrajectory(ansatz, trotter, params)

    states, labels = basis.training_states(config.training_set)
    histories = {label: record.fidelity_history(label) for label in labels}
    rows = []
    evolved = list(states)
    for m in range(1, config.n_steps + 1):
        evolved = [trotter.circuit.apply(s) for s in evolved]
        for initial, label, target in zip(states, labels, evolved):
            fid = fidelity_pure(target, apply_ansatz(initial, ansatz, params[m]))
            bound = prop1_lower_bound(histories[label][:m])
            if config.shots == 0 and bound > fid + 1e-9:
                raise RuntimeError(
                    f"certificate above measured fidelity at step {m} for "
                    f"{label}: {bound} > {fid}")
            rows.append(ResultRow(m, label, _clip01(fid), bound, "training-state"))
    rows.extend(random_state_sweep(trajectory, basis,
                                   config.random_sweep_count, config.seed))
    return TrainExperimentResult(trajectory, record, tuple(rows))


def random_state_sweep(trajectory: ParameterTrajectory, basis: SubspaceBasis,
                       count: int, seed: int) -> list[ResultRow]:
    """Fidelity of Haar-random subspace states at every trained step.

    Coefficients are complex-normal draws normalized to the unit sphere
    in C^d; each sampled state is followed through all steps. The d x d
    reduced overlap matrix G_ij = <T^m psi_i|U(params_m)|psi_j> turns
    each fidelity into |c^dag G c|^2, so the sweep costs 2d simulations
    per step regardless of count.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    rows: list[ResultRow] = []
    if count == 0 or trajectory.n_steps == 0:
        return rows
    if trajectory.ansatz.n_qubits != basis.n_qubits:
        raise ValueError("trajectory and basis act on different register sizes")
    d = basis.d
    rng = np.random.default_rng([seed, 0xC0EF])
    coeffs = rng.normal(size=(count, d)) + 1j * rng.normal(size=(count, d))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    evolved = list(basis.states)
    for m in range(1, trajectory.n_steps + 1):
        evolved = [trajectory.trotter.circuit.apply(s) for s in evolved]
        circuit_states = [apply_ansatz(s, trajectory.ansatz, trajectory.params[m])
                          for s in basis.states]
        gram = np.array([[np.vdot(t.amplitudes, u.amplitudes)
                          for u in circuit_states] for t in evolved])
        for k in range(count):
            fid = abs(np.vdot(coeffs[k], gram @ coeffs[k])) ** 2
            rows.append(ResultRow(m, f"rand{k:03d}", _clip01(fid),
                                  float("nan"), "random-state"))
    return rows


def concentratable_entanglement(state: StateVector, subset: Iterable[int]) -> float:
    """1 - 2^{-|s|} sum over subsets of s of the reduced purities.

    The empty subset contributes purity 1. Zero exactly on product
    states across every cut inside s; strictly below 1 always.
    """
    qubits = sorted(set(int(q) for q in subset))
    if not qubits:
        raise ValueError("subset must be nonempty")
    total = 1.0
    for size in range(1, len(qubits) + 1):
        for combo in combinations(qubits, size):
            total += purity(partial_trace(state, combo))
    return 1.0 - total / 2 ** len(qubits)


def _theta_state(basis: SubspaceBasis, theta: float) -> StateVector:
    amps = (math.cos(theta / 2.0) * basis.states[0].amplitudes
            + math.sin(theta / 2.0) * basis.states[1].amplitudes)
    return StateVector(basis.n_qubits, amps)


def run_entanglement_experiment(config: ExperimentConfig,
                                theta_grid: Optional[Sequence[float]] = None,
                                trajectory: Optional[ParameterTrajectory] = None,
                                ) -> list[tuple]:
    """Concentratable entanglement along the trained, Trotter, exact tracks.

    Rows are (theta, step, ce_pqc, ce_trotter, ce_exact) including the
    step-0 baseline where all three coincide with the initial state.
    """
    basis = config.basis
    if basis.d != 2:
        raise ValueError("entanglement track needs a d = 2 subspace")
    if trajectory is None:
        ansatz = build_ansatz(config.ansatz_family, basis.n_qubits,
                              config.ansatz_layers)
        trotter = trotter_step(config.model, config.dt, config.trotter_order)
        params, _ = train_subspace(basis, ansatz, trotter, config.n_steps,
                                   config.optimizer, shots=config.shots,
                                   seed=config.seed,
                                   training_set=config.training_set)
        trajectory = ParameterTrajectory(ansatz, trotter, params)
    if trajectory.ansatz.n_qubits != basis.n_qubits:
        raise ValueError("trajectory and subspace act on different register sizes")
    if theta_grid is None:
        theta_grid = np.linspace(0.0, math.pi, config.entanglement_theta_points)
    subset = config.entanglement_subset or tuple(range(basis.n_qubits))
    exact_step = exact_propagator(config.model, config.dt)

    rows = []
    for theta in theta_grid:
        initial = _theta_state(basis, float(theta))
        ce0 = concentratable_entanglement(initial, subset)
        rows.append((float(theta), 0, ce0, ce0, ce0))
        trotter_state = initial
        exact_amps = initial.amplitudes
        for m in range(1, trajectory.n_steps + 1):
            trotter_state = trajectory.trotter.circuit.apply(trotter_state)
            exact_amps = exact_step @ exact_amps
            pqc_state = apply_ansatz(initial, trajectory.ansatz,
                                     trajectory.params[m])
            rows.append((float(theta), m,
                         concentratable_entanglement(pqc_state, subset),
                         concentratable_entanglement(trotter_state, subset),
                         concentratable_entanglement(
                             StateVector(basis.n_qubits, exact_amps), subset)))
    return rows


def compare_fewer_states(config: ExperimentConfig) -> list[tuple]:
    """Rerun the training experiment once per training-set choice.

    Shares seed and schedule across the three runs; rows gain a leading
    training_set column. The sampled-state band is what exposes the
    degradation when the superposition state is dropped.
    """
    rows = []
    for training_set in ("full", "basis-only", "single-state"):
        result = run_train_experiment(override(config, training_set=training_set))
        rows.extend((training_set, row.step, row.state_label,
                     row.fidelity_vs_trotter, row.prop1_bound, row.source)
                    for row in result.rows)
    return rows


def _surface_coefficients(theta: float, phi: float) -> np.ndarray:
    return np.array([math.cos(theta / 2.0),
                     np.exp(1j * phi) * math.sin(theta / 2.0)])


def surface_constraints(config: ExperimentConfig) -> FidelityConstraints:
    extras = ()
    if config.f_minus is not None:
        extras = ((_MINUS, 1, config.f_minus),)
    return FidelityConstraints(len(config.f_basis), config.f_basis,
                               config.f_plus, extras)


def bound_surface(constraints: FidelityConstraints,
                  theta_grid: Sequence[float], phi_grid: Sequence[float],
                  tol: float = 1e-8) -> tuple[list[tuple], bool]:
    """Certified fidelity floor for cos(t/2)|0> + e^{i p} sin(t/2)|1>.

    Returns (rows, all_converged); rows are (theta, phi, bound, rank, gap)
    in grid order.
    """
    if constraints.d != 2:
        raise ValueError("surface parameterization covers d = 2 only")
    rows = []
    all_converged = True
    for theta in theta_grid:
        for phi in phi_grid:
            res = fidelity_lower_bound(
                _surface_coefficients(float(theta), float(phi)), constraints,
                tol=tol)
            rows.append((float(theta), float(phi), res.bound,
                         res.rank_estimate, res.duality_gap))
            all_converged = all_converged and res.converged
    return rows, all_converged


def perturbation_sweep(config: ExperimentConfig) -> tuple[list[tuple], bool]:
    """Bound-vs-phi curves as every fidelity floor drops to 1 - epsilon.

    Each epsilon is solved twice, with the three base floors and with
    the minus-state floor added, so the tightening from the fourth
    constraint is visible in one file. Rows are
    (epsilon, theta, phi, n_floors, bound, rank, gap).
    """
    theta = config.sweep_theta
    phi_grid = np.linspace(0.0, 2.0 * math.pi, config.phi_points)
    rows = []
    all_converged = True
    for eps in config.sweep_epsilons:
        if not 0.0 < eps <= 1.0:
            raise ValueError("sweep epsilons must lie in (0, 1]")
        value = 1.0 - eps
        variants = (
            (3, FidelityConstraints(2, (value, value), (value,))),
            (4, FidelityConstraints(2, (value, value), (value,),
                                    ((_MINUS, 1, value),))),
        )
        for n_floors, constraints in variants:
            for phi in phi_grid:
                res = fidelity_lower_bound(
                    _surface_coefficients(theta, float(phi)), constraints,
                    tol=config.bound_tol)
                rows.append((float(eps), theta, float(phi), n_floors,
                             res.bound, res.rank_estimate, res.duality_gap))
                all_converged = all_converged and res.converged
    return rows, all_converged


def run_warmstart_experiment(config: ExperimentConfig) -> WarmStartReport:
    """Evaluate the variance floors at the identity-seeded warm start.

    With `warmstart.r = auto` the radius is r_fraction times the largest
    admissible one at the configured time step.
    """
    basis = config.basis
    ansatz = build_ansatz(config.ansatz_family, basis.n_qubits,
                          config.ansatz_layers)
    if config.warmstart_r is None:
        overlap = sigma1_overlap(basis, ansatz.first_generator())
        _, r2_max_fn = thm2_conditions(overlap, max_abs_energy(config.model),
                                       ansatz.n_params, config.warmstart_r0)
        r2_max = r2_max_fn(config.warmstart_dt)
        if r2_max <= 0.0:
            raise ValueError("no admissible hypercube radius at this time step")
        r = config.warmstart_r_fraction * math.sqrt(r2_max)
    else:
        r = config.warmstart_r
    return evaluate_warmstart(basis, ansatz, identity_params(ansatz),
                              config.model, config.warmstart_dt, r,
                              config.warmstart_r0, config.warmstart_samples,
                              config.seed)


# ---------------------------------------------------------------------------
# serialization

_SCHEMAS = {
    "train": ("step", "state_label", "fidelity_vs_trotter", "prop1_bound",
              "source"),
    "compare-fewer": ("training_set", "step", "state_label",
                      "fidelity_vs_trotter", "prop1_bound", "source"),
    "bound-surface": ("theta", "phi", "bound", "rank", "gap"),
    "sweep": ("epsilon", "theta", "phi", "n_floors", "bound", "rank", "gap"),
    "entanglement": ("theta", "step", "ce_pqc", "ce_trotter", "ce_exact"),
    "warmstart": ("M", "r", "r0", "dt", "E_m", "sigma1", "overlap_term",
                  "delta", "dt_max", "r2_max", "prop2_bound", "thm2_bound",
                  "empirical_variance", "empirical_ci", "sample_count"),
}


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def schema_header(schema: str) -> tuple[str, ...]:
    if schema not in _SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    return _SCHEMAS[schema]


def write_csv(path, schema: str, rows: Iterable[Sequence]) -> None:
    header = schema_header(schema)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: svqsim/{schema} {SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row width {len(row)} != schema width "
                                 f"{len(header)} for {schema!r}")
            fh.write(",".join(_format_cell(v) for v in row) + "\n")


def write_manifest(out_path, config: ExperimentConfig, schema: str) -> str:
    """Resolved config + toolkit version next to the output; returns path."""
    path = f"{out_path}.manifest.txt"
    lines = [f"schema = svqsim/{schema} {SCHEMA_VERSION}",
             f"toolkit.version = {__version__}"]
    lines += [f"{k} = {v}" for k, v in sorted(config.to_mapping().items())]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def result_rows_to_cells(rows: Iterable[ResultRow]) -> list[tuple]:
    return [(r.step, r.state_label, r.fidelity_vs_trotter, r.prop1_bound,
             r.source) for r in rows]


def warmstart_report_to_cells(report: WarmStartReport) -> list[tuple]:
    return [(report.M, report.r, report.r0, report.dt, report.E_m,
             report.sigma1.letters, report.overlap_term, report.delta,
             report.dt_max, report.r2_max, report.prop2_bound,
             report.thm2_bound, report.empirical_variance,
             report.empirical_ci, report.sample_count)]
