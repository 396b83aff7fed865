"""Steady-state thermal occupancies and non-reciprocal noise routing in cascaded bosonic networks."""

from .analysis import (
    RoutingReport,
    SweepGrid,
    closed_form_dn2,
    decoupled_limit,
    routing_report,
    sweep_grid,
)
from .dynamics import (
    DriftModel,
    OccupancyMatrix,
    build_cascaded_drift,
    lyapunov_steady_state,
    spectral_steady_state,
    stability_check,
    time_evolve_moments,
)
from .model import (
    BathThermo,
    CascadedParams,
    DriveCoupling,
    LinearCoupling,
    OptomechParams,
    bose_einstein,
    occupancy_ratio_from_thermo,
    validate_cascaded,
)
from .optomech import (
    adiabatic_eliminate,
    build_three_mode_rwa_drift,
    classical_steady_state,
    gauge_fix,
    linearize,
    map_to_cascaded,
    mechanical_susceptibility,
)

__version__ = "0.1.0"
