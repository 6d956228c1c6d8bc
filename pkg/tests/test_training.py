"""Optimizers, step costs, and the per-step training loop."""

import math

import numpy as np
import pytest

from svqsim import (
    IsingParams,
    OptimizerConfig,
    StateVector,
    SubspaceBasis,
    TrainingDivergence,
    ansatz_matrix,
    build_ansatz,
    cost_m,
    identity_params,
    train_subspace,
    trotter_step,
)
from svqsim.training import (
    make_step_cost,
    sequential_minimal_minimize,
    sgd_minimize,
)


def test_coordinate_jump_lands_on_sinusoid_minimum():
    def cost(p):
        return 0.5 + 0.3 * math.cos(2 * p[0] + 0.7)

    cfg = OptimizerConfig(halting_threshold=1e-6, max_iterations=5)
    params, trace = sequential_minimal_minimize(cost, np.zeros(1), cfg)
    assert math.isclose(trace.final_cost, 0.2, abs_tol=1e-12)
    # jump stays within pi/2 of the previous value
    assert abs(params[0]) <= math.pi / 2 + 1e-12
    assert math.isclose(math.cos(2 * params[0] + 0.7), -1.0, abs_tol=1e-12)
    assert trace.stalled  # floor is above the threshold, second sweep cannot improve


def test_separable_two_parameter_cost():
    def cost(p):
        return 0.6 + 0.2 * math.cos(2 * p[0] + 0.3) * math.cos(2 * p[1] - 1.1)

    cfg = OptimizerConfig(halting_threshold=1e-6, max_iterations=50)
    params, trace = sequential_minimal_minimize(cost, np.array([0.2, -0.4]), cfg)
    assert trace.final_cost < 0.4 + 1e-9


def test_constant_cost_stalls_immediately():
    cfg = OptimizerConfig(halting_threshold=1e-6, max_iterations=10)
    params, trace = sequential_minimal_minimize(lambda p: 0.5, np.zeros(3), cfg)
    assert trace.stalled and not trace.converged
    assert trace.iterations == 1
    assert np.allclose(params, 0.0)


def test_non_sinusoidal_cost_is_rejected():
    def cost(p):
        return 1.0 + math.cos(4 * p[0])  # period pi/2, violates the model

    cfg = OptimizerConfig(halting_threshold=1e-8, max_iterations=5)
    with pytest.raises(TrainingDivergence):
        sequential_minimal_minimize(cost, np.zeros(1), cfg)


def test_nan_cost_raises():
    cfg = OptimizerConfig(halting_threshold=1e-8, max_iterations=2)
    with pytest.raises(TrainingDivergence):
        sequential_minimal_minimize(lambda p: float("nan"), np.zeros(2), cfg)


def test_sgd_follows_exact_gradient():
    def cost(p):
        return 0.5 + 0.3 * math.cos(2 * p[0] + 0.7)

    def gradient(p):
        return np.array([-0.6 * math.sin(2 * p[0] + 0.7)])

    cfg = OptimizerConfig(kind="sgd", halting_threshold=0.2001,
                          max_iterations=500, learning_rate=0.1)
    params, trace = sgd_minimize(cost, gradient, np.array([0.3]), cfg)
    assert trace.converged
    assert trace.final_cost < 0.2001
    assert all(b <= a + 1e-12 for a, b in zip(trace.cost_history,
                                              trace.cost_history[1:]))


def test_sgd_nan_gradient_raises():
    cfg = OptimizerConfig(kind="sgd", max_iterations=10)
    with pytest.raises(TrainingDivergence):
        sgd_minimize(lambda p: 0.5, lambda p: np.array([float("nan")]),
                     np.zeros(1), cfg)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(kind="adam")
    with pytest.raises(ValueError):
        OptimizerConfig(halting_threshold=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(learning_rate=-0.1)
    with pytest.raises(ValueError):
        OptimizerConfig(max_iterations=0).resolved_max_iterations()
    assert OptimizerConfig().resolved_max_iterations() == 200
    assert OptimizerConfig(kind="sgd").resolved_max_iterations() == 2000


def test_subspace_basis_properties():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    assert basis.d == 2 and basis.n_qubits == 2
    assert basis.labels == ("00", "11")
    (plus,) = basis.plus_states()
    assert np.allclose(plus.amplitudes,
                       [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])
    full, labels = basis.training_states("full")
    assert len(full) == 3 and labels == ("00", "11", "plus1")
    states, labels = basis.training_states("basis-only")
    assert len(states) == 2
    states, labels = basis.training_states("single-state")
    assert len(states) == 1 and labels == ("00",)
    with pytest.raises(ValueError):
        basis.training_states("pairs")


def test_subspace_basis_validation():
    with pytest.raises(ValueError):
        SubspaceBasis(())
    with pytest.raises(ValueError):
        SubspaceBasis((StateVector.zero(2), StateVector.zero(2)))  # not orthogonal
    with pytest.raises(ValueError):
        SubspaceBasis((StateVector.zero(2),), labels=("a", "b"))
    with pytest.raises(ValueError):
        SubspaceBasis((StateVector.zero(2), StateVector.zero(1)))


def test_step_cost_matches_dense_matrix_arithmetic():
    rng = np.random.default_rng(21)
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    prev = rng.uniform(-1, 1, 12)
    params = rng.uniform(-1, 1, 12)

    t_mat = trotter.circuit.matrix()
    u_prev = ansatz_matrix(ansatz, prev)
    u_now = ansatz_matrix(ansatz, params)
    states, _ = basis.training_states("full")
    total = sum(abs(np.vdot(u_now @ s.amplitudes, t_mat @ u_prev @ s.amplitudes)) ** 2
                for s in states)
    expected = 1.0 - total / 3.0

    assert math.isclose(cost_m(params, prev, basis, trotter, ansatz),
                        expected, abs_tol=1e-12)


def test_fused_gradient_matches_finite_differences():
    rng = np.random.default_rng(22)
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    states, _ = basis.training_states("full")
    cost, gradient = make_step_cost(states, ansatz, trotter,
                                    rng.uniform(-1, 1, 12))
    params = rng.uniform(-1, 1, 12)
    grad = gradient(params)
    eps = 1e-6
    for k in range(12):
        shift = np.zeros(12)
        shift[k] = eps
        fd = (cost(params + shift) - cost(params - shift)) / (2 * eps)
        assert abs(grad[k] - fd) < 5e-8


def test_gradient_equals_quarter_period_difference():
    # pi-periodic sinusoid: dC/dphi_k = C(phi + pi/4 e_k) - C(phi - pi/4 e_k)
    rng = np.random.default_rng(23)
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    states, _ = basis.training_states("full")
    cost, gradient = make_step_cost(states, ansatz, trotter,
                                    rng.uniform(-1, 1, 12))
    params = rng.uniform(-1, 1, 12)
    grad = gradient(params)
    for k in (0, 5, 11):
        up, down = params.copy(), params.copy()
        up[k] += math.pi / 4
        down[k] -= math.pi / 4
        assert abs(grad[k] - (cost(up) - cost(down))) < 1e-10


def test_identity_start_is_near_optimal_for_tiny_dt():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("su4-block", 2)
    trotter = trotter_step(IsingParams(2), 1e-6, 2)
    states, _ = basis.training_states("full")
    ident = identity_params(ansatz)
    cost, _ = make_step_cost(states, ansatz, trotter, ident)
    assert cost(ident) < 1e-9


def test_shot_cost_is_seeded_and_gradient_runs():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    states, _ = basis.training_states("full")
    prev = identity_params(ansatz)
    params = np.full(12, 0.05)
    vals = []
    for _ in range(2):
        cost, gradient = make_step_cost(states, ansatz, trotter, prev, shots=200,
                                        rng=np.random.default_rng(7))
        vals.append((cost(params), tuple(gradient(params))))
    assert vals[0] == vals[1]
    with pytest.raises(ValueError):
        make_step_cost(states, ansatz, trotter, prev, shots=100, rng=None)


def test_single_state_subspace_trains_to_threshold():
    basis = SubspaceBasis.from_bitstrings(["00"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.05, 2)
    cfg = OptimizerConfig(halting_threshold=1e-8, max_iterations=100)
    trajectory, record = train_subspace(basis, ansatz, trotter, 2, cfg)
    assert trajectory.shape == (3, 12)
    assert np.allclose(trajectory[0], 0.0)
    assert record.all_converged and not record.any_stalled
    assert record.labels == ("00",)
    for rec in record.steps:
        assert rec.fidelities["00"] > 1 - 1e-7


def test_two_qubit_step_converges_with_rotosolve():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("su4-block", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    cfg = OptimizerConfig(halting_threshold=1e-6, max_iterations=60)
    trajectory, record = train_subspace(basis, ansatz, trotter, 1, cfg)
    assert record.all_converged
    rec = record.steps[0]
    assert rec.cost < 1e-6
    for label in ("00", "11", "plus1"):
        assert rec.fidelities[label] > 0.999


def test_zero_steps_returns_identity_row_only():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    trajectory, record = train_subspace(basis, ansatz, trotter, 0,
                                        OptimizerConfig())
    assert trajectory.shape == (1, 12)
    assert record.steps == ()
    assert record.all_converged  # vacuously
    with pytest.raises(ValueError):
        train_subspace(basis, ansatz, trotter, -1, OptimizerConfig())


def test_training_is_deterministic():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.1, 2)
    cfg = OptimizerConfig(halting_threshold=1e-5, max_iterations=40)
    t1, r1 = train_subspace(basis, ansatz, trotter, 3, cfg, shots=50, seed=5)
    t2, r2 = train_subspace(basis, ansatz, trotter, 3, cfg, shots=50, seed=5)
    assert t1.tobytes() == t2.tobytes()
    assert [s.fidelities for s in r1.steps] == [s.fidelities for s in r2.steps]


def test_fidelity_history_lookup():
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.05, 2)
    cfg = OptimizerConfig(halting_threshold=1e-5, max_iterations=40)
    _, record = train_subspace(basis, ansatz, trotter, 2, cfg)
    hist = record.fidelity_history("plus1")
    assert hist.shape == (2,)
    assert np.all(hist > 0.99)
    with pytest.raises(KeyError):
        record.fidelity_history("state9")


def test_register_mismatch_rejected():
    basis = SubspaceBasis.from_bitstrings(["000", "111"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(3), 0.1, 2)
    with pytest.raises(ValueError):
        train_subspace(basis, ansatz, trotter, 1, OptimizerConfig())
