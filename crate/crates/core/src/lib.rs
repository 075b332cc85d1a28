pub mod analytic;
pub mod error;
pub mod experiments;
pub mod harmonic;
pub mod loewner;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Result, SleError};
pub use params::SleParams;
