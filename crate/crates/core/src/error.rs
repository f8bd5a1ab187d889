use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Construction(String),

    #[error("point is not on the boundary of scatterer {scatterer} (gap {gap:e})")]
    BoundaryMismatch { scatterer: usize, gap: f64 },

    #[error("grazing singularity at t = {t} (|cos phi| = {cos_phi:e})")]
    Grazing { t: f64, cos_phi: f64 },

    #[error("simultaneous collisions with scatterers {first} and {second} at t = {t}")]
    MultipleCollision { t: f64, first: usize, second: usize },

    #[error("invalid phase point: {0}")]
    InvalidState(String),

    #[error("particle leaves the box at t = {t}")]
    Escape { t: f64 },

    #[error("time {t} outside series range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
