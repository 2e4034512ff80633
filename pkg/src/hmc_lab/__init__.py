"""Hamiltonian Monte Carlo with stability and ergodicity diagnostics.

The package has three layers: potential models with exact derivative
actions (``potentials``, ``assumptions``), the leapfrog integrator and
Metropolis-adjusted kernel (``integrator``, ``kernel``), and Monte Carlo
diagnostics that measure energy-error structure, tail acceptance, drift,
minorization and TV decay (``diagnostics``).  The ``hmc-lab`` command
drives file-configured experiments on top of all three.
"""

from .assumptions import AssumptionReport, ConditionResult, check_a1, check_a2
from .errors import (
    CapabilityError,
    ConfigurationError,
    ConfigValidationError,
    ExperimentCheckError,
    HmcLabError,
    InsufficientDataError,
    NumericError,
    OracleError,
)
from .integrator import (
    LeapfrogConfig,
    PhaseState,
    Trajectory,
    closed_form_momentum,
    closed_form_position,
    hamiltonian,
    leapfrog_map,
    leapfrog_run,
    leapfrog_step,
    reference_flow,
    reversibility_residual,
    volume_symplectic_residual,
    write_trajectory_csv,
)
from .kernel import (
    ChainRun,
    HmcParams,
    RandomizedSchedule,
    ScheduleEntry,
    accept_prob,
    chain_summary,
    hmc_step,
    proposal_sample,
    randomized_step,
    run_chain,
    write_chain_csv,
)
from .potentials import (
    FamilyConfig,
    PotentialModel,
    build_family,
    finite_diff_grad,
    finite_diff_hess_dir,
    free_particle,
    with_fd_derivatives,
)
from .rng import make_rng

__version__ = "0.1.0"
