"""Subspace variational quantum simulation toolkit.

Trains short parameterized circuits to reproduce Trotterized time evolution
on a subspace of initial states, certifies the training with fidelity lower
bounds (per-step angle accumulation and a semidefinite relaxation), and
evaluates warm-start variance bounds for the step-to-step optimization.
"""

__version__ = "0.1.0"

from .core import (
    StateVector,
    PauliString,
    PauliRotation,
    FixedGate,
    Circuit,
    DensityMatrix,
    apply_gate,
    fidelity_pure,
    fidelity_shot_estimate,
    partial_trace,
    purity,
)
from .hamiltonians import (
    IsingParams,
    PauliSum,
    TrotterSpec,
    build_ising,
    pauli_sum_matrix,
    trotter_step,
    exact_propagator,
    max_abs_energy,
)
from .ansatz import (
    AnsatzSpec,
    RotationSlot,
    build_ansatz,
    identity_params,
    apply_ansatz,
    bind_ansatz,
    ansatz_matrix,
    ansatz_gradient,
)
from .training import (
    SubspaceBasis,
    OptimizerConfig,
    OptimizeTrace,
    StepRecord,
    TrainingRecord,
    TrainingDivergence,
    cost_m,
    sequential_minimal_minimize,
    sgd_minimize,
    train_subspace,
)
from .bounds import (
    FidelityConstraints,
    BoundResult,
    prop1_lower_bound,
    objective_matrix,
    constraint_matrices,
    extra_constraint_matrix,
    strictly_feasible_point,
    fidelity_lower_bound,
    qcqp_oracle,
)
from .sdp import SdpInstance, SdpSolution, solve_sdp
from .warmstart import (
    TrigMoments,
    WarmStartReport,
    trig_moments,
    sigma1_overlap,
    delta_phibar,
    prop2_bound,
    thm2_conditions,
    thm2_bound,
    empirical_variance,
    evaluate_warmstart,
)
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    ResultRow,
    ParameterTrajectory,
    TrainExperimentResult,
    run_train_experiment,
    random_state_sweep,
    concentratable_entanglement,
    run_entanglement_experiment,
    compare_fewer_states,
    bound_surface,
    perturbation_sweep,
    run_warmstart_experiment,
    surface_constraints,
    write_csv,
    write_manifest,
)
