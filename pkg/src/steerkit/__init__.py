"""steerkit: certification toolkit for multipartite steering and nonlocality exposure."""

from .config import DEFAULT_TOL, Tolerances
from .correlations import (
    Assemblage,
    Behavior,
    Scenario,
    Wiring,
    apply_wiring,
    apply_wiring_behavior,
    assemblage_fidelity,
    behavior_from_assemblage,
    uniform_assemblage,
    validate,
)
from .conic import ConicProgram, ConicSolution, ProgramBuilder, add_norm_bound_block, dump_program, solve, verify_certificate
from .hermitian import HermitianOperator, jacobi_eigh, min_eigenvalue, pauli_compose, pauli_decompose, state_fidelity
from .membership import (
    Decomposition,
    ModelClass,
    ModelReport,
    Strategy,
    WitnessCertificate,
    behavior_membership,
    enumerate_strategies,
    evaluate_witness,
    gms_membership,
    membership,
    optimal_witness,
    robustness,
    robustness_report,
)
from .protocols import (
    canonical_witnesses,
    chsh_correlators,
    chsh_max,
    ghz_assemblage,
    ghz_assemblage_from_state,
    ghz_wired_assemblage,
    noisy_w_assemblage,
    noisy_w_assemblage_from_state,
    nslhs_witness,
    universal_initial_assemblage,
    universal_initial_behavior,
    verify_tabulated_to_model,
    wired_steering_witness,
)
from .experiment import (
    CountRecord,
    lhs_fit_error,
    ns_fit_error,
    pauli_projectors,
    pipeline_histograms,
    reconstruct_ns,
    sample_counts,
)

__version__ = "0.1.0"
