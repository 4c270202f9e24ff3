use thiserror::Error;

/// Errors produced by the column model, steady-state construction and scheme.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("bubble hindrance exponent too small: n_b = {n_b} < 1 + 2 n_S = {min}")]
    HindranceExponentTooSmall { n_b: f64, min: f64 },

    #[error("`{name}` = {value} lies outside [{lo}, {hi}]")]
    Domain {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("effluent flow Q_E = Q_W + Q_F - Q_U must be positive, got {q_e}")]
    NonPositiveEffluentFlow { q_e: f64 },

    #[error("feed jump condition has no root: s_F = {s_f} exceeds the zone-2 flux maximum {j_max}")]
    NoRoot { s_f: f64, j_max: f64 },

    #[error("zone-2 flux drops to the feed flux level at phi = {phi}; no increasing froth branch")]
    FrothConditionViolated { phi: f64 },

    #[error("effluent fraction phi_E = {phi_e} outside (phi_c, 1]")]
    PhiEOutOfRange { phi_e: f64 },

    #[error("solids feed {load} m3/s exceeds the zone-1 carrying capacity {limit} m3/s")]
    SolidsOverload { load: f64, limit: f64 },

    #[error("underflow is closed (Q_U = 0) but solids are fed (psi_F = {psi_f})")]
    ZeroUnderflow { psi_f: f64 },

    #[error("operating point is infeasible: {failed}")]
    Infeasible { failed: String },

    #[error("grid needs at least 4 cells, got {n}")]
    GridTooCoarse { n: usize },

    #[error("time step {dt} s exceeds the CFL bound {dt_max} s")]
    CflViolation { dt: f64, dt_max: f64 },

    #[error("boundary index {i} out of range 0..={n}")]
    IndexOutOfRange { i: usize, n: usize },

    #[error("invalid schedule: {reason}")]
    InvalidSchedule { reason: String },

    #[error("invalid scenario: {reason}")]
    InvalidScenario { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, stable across message rewording.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveParameter { .. } => "NonPositiveParameter",
            Error::HindranceExponentTooSmall { .. } => "HindranceExponentTooSmall",
            Error::Domain { .. } => "DomainError",
            Error::NonPositiveEffluentFlow { .. } => "NonPositiveEffluentFlow",
            Error::NoRoot { .. } => "NoRoot",
            Error::FrothConditionViolated { .. } => "FrothConditionViolated",
            Error::PhiEOutOfRange { .. } => "PhiEOutOfRange",
            Error::SolidsOverload { .. } => "SolidsOverload",
            Error::ZeroUnderflow { .. } => "ZeroUnderflow",
            Error::Infeasible { .. } => "Infeasible",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::CflViolation { .. } => "CflViolation",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InvalidSchedule { .. } => "InvalidSchedule",
            Error::InvalidScenario { .. } => "InvalidScenario",
            Error::Io(_) => "Io",
        }
    }

    /// True for errors raised by numerics (root finds, CFL, feasibility),
    /// false for input validation failures.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoRoot { .. }
                | Error::FrothConditionViolated { .. }
                | Error::PhiEOutOfRange { .. }
                | Error::SolidsOverload { .. }
                | Error::ZeroUnderflow { .. }
                | Error::Infeasible { .. }
                | Error::CflViolation { .. }
                | Error::NonPositiveEffluentFlow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
