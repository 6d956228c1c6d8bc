"""Interior-point SDP solver on small dense instances."""

import numpy as np
import pytest

from svqsim.sdp import SdpInfeasibleError, SdpInstance, SdpSolution, solve_sdp


def random_hermitian(dim, rng):
    M = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (M + M.conj().T) / 2


def test_scalar_interval_program():
    # min x s.t. 0.7 <= x <= 1, x >= 0
    inst = SdpInstance(1, np.eye(1), ((np.eye(1), 0.7, 1.0),))
    sol = solve_sdp(inst)
    assert sol.converged
    assert abs(sol.optimum - 0.7) < 1e-7
    assert sol.constraint_violation(inst) < 1e-7
    assert sol.rank_estimate == 1


def test_trace_one_minimum_is_smallest_eigenvalue():
    rng = np.random.default_rng(31)
    for dim in (2, 3, 4):
        for _ in range(5):
            C = random_hermitian(dim, rng)
            inst = SdpInstance(dim, C, ((np.eye(dim), 1.0, 1.0),))
            sol = solve_sdp(inst)
            lam_min = float(np.linalg.eigvalsh(C)[0])
            assert sol.converged
            assert abs(sol.optimum - lam_min) < 1e-6
            assert sol.constraint_violation(inst) < 1e-7
            assert abs(sol.duality_gap) < 1e-7


def test_maximization_via_negated_objective():
    # max Tr[diag(1, 2) X] s.t. Tr X = 1 -> 2
    C = -np.diag([1.0, 2.0])
    inst = SdpInstance(2, C, ((np.eye(2), 1.0, 1.0),))
    sol = solve_sdp(inst)
    assert abs(sol.optimum + 2.0) < 1e-6


def test_one_sided_rows():
    # min Tr X with Tr X >= 0.3 only, then Tr X <= 0.4 only (min is 0)
    inst = SdpInstance(2, np.eye(2), ((np.eye(2), 0.3, None),))
    sol = solve_sdp(inst)
    assert abs(sol.optimum - 0.3) < 1e-6
    inst = SdpInstance(2, np.eye(2), ((np.eye(2), None, 0.4),))
    sol = solve_sdp(inst)
    assert abs(sol.optimum) < 1e-6


def test_slater_start_reaches_same_optimum():
    # strict-interval rows leave room for an interior start
    rng = np.random.default_rng(32)
    C = random_hermitian(3, rng)
    inst = SdpInstance(3, C, ((np.eye(3), 0.5, 1.0),))
    cold = solve_sdp(inst)
    warm = solve_sdp(inst, start=np.eye(3) / 4)
    assert warm.converged
    assert abs(warm.optimum - cold.optimum) < 1e-6
    with pytest.raises(ValueError):
        solve_sdp(inst, start=np.eye(3))  # trace 3 sits outside the interval
    with pytest.raises(ValueError):
        solve_sdp(inst, start=-np.eye(3))


def test_iteration_cap_flags_nonconvergence():
    rng = np.random.default_rng(33)
    C = random_hermitian(3, rng)
    inst = SdpInstance(3, C, ((np.eye(3), 1.0, 1.0),))
    sol = solve_sdp(inst, max_iterations=1)
    assert not sol.converged
    assert sol.iterations == 1
    assert np.all(np.isfinite(sol.F_matrix))


def test_contradictory_rows_do_not_converge():
    # Tr X >= 0.8 and Tr X <= 0.5 cannot both hold
    inst = SdpInstance(2, np.eye(2),
                       ((np.eye(2), 0.8, None), (np.eye(2), None, 0.5)))
    try:
        sol = solve_sdp(inst, max_iterations=60)
    except SdpInfeasibleError:
        return
    assert not sol.converged or sol.constraint_violation(inst) > 1e-6


def test_complex_constraint_row():
    # fix the off-diagonal real part; optimum pushed below zero
    rng = np.random.default_rng(34)
    A = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    C = np.diag([1.0, 1.0]).astype(complex)
    inst = SdpInstance(2, C, ((np.eye(2), 1.0, 1.0), (A, 0.4, 0.4)))
    sol = solve_sdp(inst)
    assert sol.converged
    X = sol.F_matrix
    assert abs(np.real(X[0, 1]) - 0.4) < 1e-7
    assert float(np.linalg.eigvalsh(X)[0]) > -1e-9


def test_input_validation():
    with pytest.raises(ValueError):
        SdpInstance(2, np.array([[0, 1], [0, 0]], dtype=complex),
                    ((np.eye(2), 1.0, 1.0),))  # not Hermitian
    with pytest.raises(ValueError):
        SdpInstance(2, np.eye(2), ((np.eye(2), None, None),))
    with pytest.raises(ValueError):
        SdpInstance(2, np.eye(2), ((np.eye(2), 0.9, 0.1),))
    with pytest.raises(ValueError):
        SdpInstance(2, np.eye(3), ((np.eye(3), 1.0, 1.0),))


def test_solution_reports_rank():
    # rank-1 optimum: minimize against a projector objective
    C = np.diag([0.0, 1.0, 1.0]).astype(complex)
    inst = SdpInstance(3, C, ((np.eye(3), 1.0, 1.0),))
    sol = solve_sdp(inst)
    assert sol.rank_estimate == 1
    assert abs(sol.optimum) < 1e-7
