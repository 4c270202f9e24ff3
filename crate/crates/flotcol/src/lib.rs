//! One-dimensional froth-flotation column with simultaneous sedimentation
//! and froth drainage.
//!
//! The crate evaluates the drift-flux, capillary-diffusion and
//! hindered-settling closures, constructs desired steady states and their
//! feasibility (operating charts), and simulates the coupled dynamics with
//! an explicit monotone finite-volume scheme.

pub mod chart;
pub mod column;
pub mod constitutive;
pub mod contour;
pub mod error;
pub mod export;
mod numeric;
pub mod quadrature;
pub mod scenario;
pub mod scheme;
pub mod steady_state;

pub use chart::{evaluate_chart, ChartResult, ChartSpec};
pub use column::{bulk_velocity, ColumnGeometry, OperatingPoint, Zone};
pub use constitutive::{
    critical_points, ConstitutiveParams, CriticalPoints, DerivationInputs, FluxKind,
    PhysicalParams,
};
pub use error::{Error, Result};
pub use scenario::{run, InitialState, Scenario, ScheduleEntry, TimeSeries};
pub use scheme::{build_grid, cfl_dt, eo_flux, outlets, step_phi, step_psi, Grid, State};
pub use steady_state::{
    check_conditions, desired_steady_state, effluent_fraction, froth_interface, froth_profile,
    solve_feed_jump, solve_solids_jump, FeasibilityReport, SteadyProfile,
};
