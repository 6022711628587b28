"""Martingale-based finite-horizon safety probability bounds for
discrete-time stochastic systems, with a simulation harness that verifies the
underlying martingale constructions on sampled trajectories."""

from .bounds import (
    CMart,
    DTCBF,
    General,
    BoundResult,
    SafetySpec,
    PHI,
    comparison_conditions,
    constructive_delta_sigma,
    dominance_gap,
    dominance_gap_dsigma2,
    freedman_bound,
    freedman_kernel,
    hlip_delta_sigma,
    issf_safe_level,
    issf_worst_case,
    lambda_threshold,
    lambert_w_minus1,
    log_freedman_kernel,
    psi,
    psi_threshold,
    santoyo_bound,
    stochastic_issf_bound,
    tightened_pqv,
    ville_bound,
)
from .disturbances import (
    Categorical,
    ProductOfDisks,
    TruncatedGaussian,
    UniformBall,
    UniformDisk2,
    UniformInterval,
)
from .martingale import (
    DoobParts,
    PqvTrace,
    ProcessTrace,
    build_candidate,
    check_difference_bound,
    check_supermartingale,
    containment_witness,
    doob_decompose,
    pqv,
)
from .montecarlo import (
    ExitEstimate,
    HlipController,
    TrialOutcome,
    estimate_exit_probability,
    mc_cond_moments,
    run_trial,
    simulate_scalar_batch,
    sweep,
    wilson_interval,
)
from .systems import (
    GaitParams,
    HlipSystem,
    InfeasibleFilterError,
    Obstacle,
    ScalarLinearSystem,
    hlip_matrices,
)

__version__ = "0.1.0"
