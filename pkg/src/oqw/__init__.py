"""Open quantum walks: exact evolution, trajectories, dilations and dissipative circuits."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConvergenceError,
    InvariantViolation,
    KrausCompletenessError,
    NotSimultaneouslyDiagonalizableError,
    OQWError,
    WalkStructureError,
)
from .core import (
    BlockDiagonalState,
    FullState,
    OpenQuantumWalk,
    ValidationReport,
    apply_full_map,
    evolve,
    full_map,
    node_distribution,
    random_state,
    random_walk,
    require_valid,
    step,
    validate_walk,
)
from .lattice import (
    ComponentAnalysis,
    HomogeneousWalkZ,
    LatticeState,
    analyze_components,
    distribution_after,
    evolve_z,
    moments,
    step_z,
    truncate,
)
from .trajectories import (
    EnsembleEstimate,
    PureWalkerState,
    exact_distribution,
    measurement_chain_step,
    run_ensemble,
    simulate_trajectory,
    total_variation,
    trajectory_step,
)
from .dilation import (
    GlobalUnitary,
    check_uqw_condition,
    complete_isometry,
    global_unitary,
    hadamard_pair,
    run_coherent,
    run_realisation,
)
from .classical import ClassicalTransitionMatrix, classical_marginal, embed_classical
from .dqc import (
    DQCChain,
    GateCircuit,
    PhaseEstimationSpec,
    birth_death_stationary,
    build_phase_estimation,
    dqc_step,
    run_to_steady,
    success_probability,
    sweep_omega,
)
