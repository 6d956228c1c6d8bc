"""High-level experiment drivers and CSV serialization."""

import math

import numpy as np
import pytest

from svqsim import (
    ExperimentConfig,
    FidelityConstraints,
    IsingParams,
    OptimizerConfig,
    ParameterTrajectory,
    ResultRow,
    StateVector,
    SubspaceBasis,
    bound_surface,
    build_ansatz,
    compare_fewer_states,
    concentratable_entanglement,
    identity_params,
    partial_trace,
    perturbation_sweep,
    purity,
    random_state_sweep,
    run_entanglement_experiment,
    run_train_experiment,
    run_warmstart_experiment,
    surface_constraints,
    trotter_step,
    write_csv,
    write_manifest,
)
from svqsim.config import override
from svqsim.experiments import result_rows_to_cells, schema_header

FAST_OPT = OptimizerConfig(halting_threshold=1e-5, max_iterations=60)


def small_config(**changes):
    base = ExperimentConfig(n_steps=2, ansatz_family="zxz-cnot",
                            optimizer=FAST_OPT, random_sweep_count=5)
    return override(base, **changes) if changes else base


def test_result_row_validation():
    with pytest.raises(ValueError):
        ResultRow(1, "00", 0.9, 0.8, "measured")
    row = ResultRow(1, "00", 0.9, float("nan"), "random-state")
    assert math.isnan(row.prop1_bound)


def test_train_experiment_row_inventory():
    result = run_train_experiment(small_config())
    # 2 steps x (3 training states + 5 sampled states)
    train_rows = [r for r in result.rows if r.source == "training-state"]
    rand_rows = [r for r in result.rows if r.source == "random-state"]
    assert len(train_rows) == 6 and len(rand_rows) == 10
    assert result.trajectory.params.shape == (3, 12)
    assert result.trajectory.n_steps == 2
    for row in train_rows:
        assert row.prop1_bound <= row.fidelity_vs_trotter + 1e-9
        assert 0.9 <= row.fidelity_vs_trotter <= 1.0
    labels = {r.state_label for r in rand_rows}
    assert labels == {f"rand{k:03d}" for k in range(5)}


def test_random_sweep_matches_full_statevector():
    from svqsim.ansatz import apply_ansatz

    config = small_config(random_sweep_count=3)
    result = run_train_experiment(config)
    basis = config.basis
    traj = result.trajectory

    # re-derive the generator's draws to replay sampled state 1 explicitly
    rng = np.random.default_rng([config.seed, 0xC0EF])
    coeffs = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    c = coeffs[1]
    initial = StateVector(2, c[0] * basis.states[0].amplitudes
                          + c[1] * basis.states[1].amplitudes)

    target = initial
    for m in range(1, 3):
        target = traj.trotter.circuit.apply(target)
        via_circuit = apply_ansatz(initial, traj.ansatz, traj.params[m])
        expected = abs(np.vdot(target.amplitudes, via_circuit.amplitudes)) ** 2
        row = next(r for r in result.rows
                   if r.source == "random-state" and r.step == m
                   and r.state_label == "rand001")
        assert abs(row.fidelity_vs_trotter - expected) < 1e-12


def test_random_sweep_perfect_when_circuit_is_exact():
    # dt = 0 makes the identity trajectory exactly right for every state
    basis = SubspaceBasis.from_bitstrings(["00", "11"])
    ansatz = build_ansatz("zxz-cnot", 2)
    trotter = trotter_step(IsingParams(2), 0.0, 2)
    params = np.tile(identity_params(ansatz), (4, 1))
    traj = ParameterTrajectory(ansatz, trotter, params)
    rows = random_state_sweep(traj, basis, 20, seed=3)
    assert len(rows) == 60
    for row in rows:
        assert row.fidelity_vs_trotter > 1 - 1e-10
        assert math.isnan(row.prop1_bound)
    assert random_state_sweep(traj, basis, 0, seed=3) == []
    with pytest.raises(ValueError):
        random_state_sweep(traj, basis, -1, seed=3)


def test_concentratable_entanglement_values():
    bell = StateVector(2, np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert abs(concentratable_entanglement(bell, (0, 1)) - 0.25) < 1e-10
    product = StateVector.from_bitstring("01")
    assert abs(concentratable_entanglement(product, (0, 1))) < 1e-12

    # single-qubit subset reduces to (1 - purity)/2
    theta = math.pi / 4
    state = StateVector(2, np.array([math.cos(theta / 2), 0, 0,
                                     math.sin(theta / 2)]))
    ce = concentratable_entanglement(state, (0,))
    p = purity(partial_trace(state, [0]))
    assert abs(ce - (1 - p) / 2) < 1e-12
    with pytest.raises(ValueError):
        concentratable_entanglement(bell, ())


def test_entanglement_rows_and_baseline():
    config = small_config(entanglement_theta_points=3)
    rows = run_entanglement_experiment(config)
    assert len(rows) == 3 * (config.n_steps + 1)
    by_theta = {}
    for theta, step, ce_pqc, ce_trotter, ce_exact in rows:
        by_theta.setdefault(round(theta, 6), []).append(
            (step, ce_pqc, ce_trotter, ce_exact))
    # theta = 0 starts in a product state, theta = pi/2 in the Bell pair
    assert abs(by_theta[0.0][0][1]) < 1e-12
    mid = by_theta[round(math.pi / 2, 6)]
    assert abs(mid[0][1] - 0.25) < 1e-10
    for step, ce_pqc, ce_trotter, ce_exact in by_theta[0.0]:
        if step == 0:
            assert ce_pqc == ce_trotter == ce_exact
        assert abs(ce_pqc - ce_exact) < 0.02


def test_entanglement_accepts_existing_trajectory():
    config = small_config()
    result = run_train_experiment(config)
    rows = run_entanglement_experiment(config, theta_grid=[0.3],
                                       trajectory=result.trajectory)
    assert len(rows) == config.n_steps + 1


def test_compare_training_sets_shares_schedule():
    rows = compare_fewer_states(small_config(random_sweep_count=4))
    sets = {row[0] for row in rows}
    assert sets == {"full", "basis-only", "single-state"}
    full = [r for r in rows if r[0] == "full" and r[5] == "training-state"]
    single = [r for r in rows if r[0] == "single-state" and r[5] == "training-state"]
    assert len(full) == 6    # 3 states x 2 steps
    assert len(single) == 2  # 1 state  x 2 steps
    assert all(len(r) == 6 for r in rows)


def test_surface_constraints_from_config():
    config = ExperimentConfig(f_basis=(0.98, 0.97), f_plus=(0.96,),
                              f_minus=0.95)
    cons = surface_constraints(config)
    assert cons.F_basis == (0.98, 0.97)
    assert cons.F_plus == (0.96,)
    assert len(cons.extras) == 1
    assert cons.extras[0][2] == 0.95
    assert surface_constraints(ExperimentConfig()).extras == ()


def test_bound_surface_small_grid():
    cons = FidelityConstraints(2, (0.99, 0.99), (0.99,))
    rows, converged = bound_surface(cons, np.linspace(0, math.pi, 3),
                                    np.linspace(0, 2 * math.pi, 3))
    assert converged and len(rows) == 9
    for theta, phi, bound, rank, gap in rows:
        assert 0.0 <= bound <= 1.0
        assert abs(gap) < 1e-7
    # theta = 0 is the basis state; its floor is recovered
    assert abs(rows[0][2] - 0.99) < 1e-4

    ones = FidelityConstraints(2, (1.0, 1.0), (1.0,))
    rows, converged = bound_surface(ones, [0.3], [0.4])
    assert converged and rows[0][2] == 1.0
    with pytest.raises(ValueError):
        bound_surface(FidelityConstraints(1, (0.9,)), [0.1], [0.1])


def test_perturbation_rows_structure():
    config = ExperimentConfig(sweep_epsilons=(0.01, 0.05), phi_points=5)
    rows, converged = perturbation_sweep(config)
    assert converged
    assert len(rows) == 2 * 2 * 5  # epsilons x variants x phi grid
    for eps, theta, phi, n_floors, bound, rank, gap in rows:
        assert n_floors in (3, 4)
        assert theta == config.sweep_theta
        assert 0.0 <= bound <= 1.0
    with pytest.raises(ValueError):
        perturbation_sweep(override(config, sweep_epsilons=(0.0,)))


def test_warmstart_experiment_auto_radius():
    config = ExperimentConfig(ansatz_family="zxz-cnot", warmstart_dt=0.02,
                              warmstart_samples=100)
    report = run_warmstart_experiment(config)
    assert abs(report.r - 0.99 * math.sqrt(report.r2_max)) < 1e-12
    assert report.thm2_bound > 0.0
    with pytest.raises(ValueError):
        run_warmstart_experiment(override(config, warmstart_dt=0.2))


def test_csv_format(tmp_path):
    path = tmp_path / "out.csv"
    rows = [(1, "00", 0.25, float("nan"), "training-state")]
    write_csv(path, "train", rows)
    text = path.read_text().splitlines()
    assert text[0] == "# schema: svqsim/train v1"
    assert text[1] == "step,state_label,fidelity_vs_trotter,prop1_bound,source"
    assert text[2] == "1,00,0.25,nan,training-state"

    write_csv(path, "train", [])
    assert len(path.read_text().splitlines()) == 2

    # full precision survives the round trip
    write_csv(path, "train", [(1, "x", 0.9603999999999999, 1e-300, "random-state")])
    cells = path.read_text().splitlines()[2].split(",")
    assert float(cells[2]) == 0.9603999999999999
    assert float(cells[3]) == 1e-300

    with pytest.raises(ValueError):
        write_csv(path, "train", [(1, 2)])
    with pytest.raises(ValueError):
        write_csv(path, "unknown-schema", [])
    with pytest.raises(ValueError):
        schema_header("nope")


def test_manifest_contents(tmp_path):
    out = tmp_path / "run.csv"
    config = small_config()
    path = write_manifest(out, config, "train")
    assert path == str(out) + ".manifest.txt"
    lines = open(path).read().splitlines()
    assert lines[0] == "schema = svqsim/train v1"
    assert lines[1].startswith("toolkit.version = ")
    mapping = dict(line.split(" = ", 1) for line in lines[2:])
    assert mapping["schedule.n_steps"] == "2"
    assert mapping["ansatz.family"] == "zxz-cnot"
    assert mapping["subspace.states"] == "00 11"
    # keys are emitted sorted
    assert lines[2:] == sorted(lines[2:])


def test_rows_to_cells_round_trip():
    rows = (ResultRow(1, "00", 0.5, 0.4, "training-state"),)
    assert result_rows_to_cells(rows) == [(1, "00", 0.5, 0.4, "training-state")]


def test_zero_step_experiment_writes_header_only(tmp_path):
    config = small_config(n_steps=0)
    result = run_train_experiment(config)
    assert result.rows == ()
    path = tmp_path / "empty.csv"
    write_csv(path, "train", result_rows_to_cells(result.rows))
    assert len(path.read_text().splitlines()) == 2
