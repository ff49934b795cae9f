use thiserror::Error;

/// Errors raised by the simulation engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength} µm outside valid range [{min}, {max}] µm of material '{material}'")]
    WavelengthOutOfRange {
        material: String,
        wavelength: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid material data: {0}")]
    Material(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("energy conservation violated: signal wavelength {signal} µm must exceed pump wavelength {pump} µm")]
    EnergyConservation { pump: f64, signal: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no guided {pol} mode at {wavelength} µm")]
    NoGuidedMode { pol: String, wavelength: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("root finder did not converge after {iterations} iterations (residuals {residuals:?})")]
    Convergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("spectrum shape error: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
