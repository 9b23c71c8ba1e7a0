//! Desk-scale simulator of layered random binning with one-time-pad key
//! mixing and successive bin decoding.

pub mod bits;
pub mod code;
pub mod experiment;
pub mod hash;

pub use bits::Bits;
pub use code::{
    design_code, design_code_with_rates, design_from_scheme, BinRates, BinningCode, Decoded, Encoded, Layer,
    LayerTargets, Message, PadRegime,
};
pub use experiment::{
    exact_leakage, padded_index_check, run_experiment, Leakage, LeakageMethod, PadCheck, SimulationReport,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] secreg_core::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration too costly: {0}")]
    TooCostly(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
