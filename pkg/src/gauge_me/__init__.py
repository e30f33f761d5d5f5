"""Gauge-dependent photon emission rates and master equations for a two-level atom."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    GaugeMEError,
    LindbladViolationError,
    NoSteadyStateError,
    NumericalError,
    QuadratureError,
    ScenarioError,
    SingularPointError,
    UnsupportedGaugeError,
)
from .gauge import (
    MINIMAL_COUPLING,
    MULTIPOLAR,
    NAMED_GAUGES,
    ROTATING_WAVE,
    Gauge,
    GaugeKind,
    alpha_of,
    coupling_coefficients,
    custom_gauge,
    parse_gauge,
    spectral_weight,
)
from .rates import (
    PerturbativeValidityWarning,
    PhysicalParams,
    RateSet,
    a_plus_closed_form,
    cross_coefficient_B,
    cross_coefficient_B_approx,
    cross_coefficient_B_bound,
    rate_set,
    transition_rate,
)
from .dynamics import (
    DensityMatrix,
    evolve,
    me_rhs,
    simulate_trajectories,
    steady_emission_rate,
    steady_state,
)
from .lindblad import (
    DissipatorMatrix,
    build_dissipator,
    diagonalize,
    positivity_bound_scan,
    positivity_check,
)
from .scenarios import PRESET_NAMES, Scenario, load_scenario, parse_scenario, preset

__all__ = [name for name in dir() if not name.startswith("_")]
