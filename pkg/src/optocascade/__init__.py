"""Single-photon driven opto-mechanical cavity: exact second-moment dynamics and a Fock-space oracle."""
from .model import (
    HBAR,
    InvalidParameterError,
    NormalModes,
    PhysicalParams,
    SimParams,
    bare_coupling,
    build_drift_matrix,
    derived_rates,
    effective_coupling,
    is_oscillatory,
    normal_mode_frequencies,
)
from .moments import (
    AffineSystem,
    MomentState,
    MomentTrajectory,
    NoSteadyStateError,
    SourceSpec,
    assemble_affine_system,
    initial_state,
    integrate,
    noise_drift,
    observables,
    source_moments,
    steady_state,
)
from .integrator import StiffnessError
from .oracle import TruncationError, TruncationSpec, build_liouvillian, evolve_rho, expectation, leakage, run_oracle
from .scenarios import FIGURE_PARAMS, Scenario, TimeSeries, peak_census, preset, run_scenario

__version__ = "0.1.0"
