//! Rate regions of keyed secure and private lossy source coding with a
//! remote source, noisy encoder measurement, decoder side information and an
//! eavesdropper.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases fix double precision.

pub mod channel;
pub mod error;
pub mod gaussian;
pub mod joint;
pub mod pmf;
pub mod region;
pub mod scalar;
pub mod source;

pub use error::{Error, Result};
pub use joint::{vars, Axis, InfoExpr, JointPmf};
pub use pmf::{Pmf, StochasticMatrix};
pub use scalar::Real;
pub use source::{build_joint, Alphabets, SourceModel};

pub type Pmf64 = Pmf<f64>;
pub type StochasticMatrix64 = StochasticMatrix<f64>;
pub type JointPmf64 = JointPmf<f64>;
pub type SourceModel64 = SourceModel<f64>;
pub type AuxScheme64 = region::AuxScheme<f64>;
pub type RateTuple64 = region::RateTuple<f64>;
pub type RegimeReport64 = region::RegimeReport<f64>;
pub type DistortionMetric64 = region::DistortionMetric<f64>;
pub type SearchConfig64 = region::SearchConfig<f64>;
pub type GaussianModel64 = gaussian::GaussianModel<f64>;
pub type DegradednessCertificate64 = channel::DegradednessCertificate<f64>;

pub type Pmf32 = Pmf<f32>;
pub type StochasticMatrix32 = StochasticMatrix<f32>;
pub type JointPmf32 = JointPmf<f32>;
pub type SourceModel32 = SourceModel<f32>;
pub type AuxScheme32 = region::AuxScheme<f32>;
pub type RateTuple32 = region::RateTuple<f32>;
