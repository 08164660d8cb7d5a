"""Parametrized derivative-free nonlinear model predictive control."""

from .engine import EngineParam, MpcResult, create_engine, evaluate_candidate, mpc_step
from .integrator import NonFiniteStateError, one_step, rollout
from .parametrization import compute_R, profile_from_R, treatment_rest_profile
from .problem import (
    DimensionChangeError,
    OcpParams,
    OdeParams,
    ProblemDefinition,
    ProblemValidationError,
    Trajectory,
    UParamParams,
    aggregate_max,
    aggregate_penalty,
    soften,
    validate_problem,
)
from .simulation import ClosedLoopLog, SimulationDiverged, initialize, run_closed_loop, simulate_ol
from .solver import (
    Evaluation,
    SolverState,
    TrustRegionConfig,
    estimate_teval,
    merit_better,
    solve,
    update_trust_region_parameters,
)

__version__ = "0.1.0"
