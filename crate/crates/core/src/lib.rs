//! Wavelet-based scalar-on-function finite mixture regression.
//!
//! Sampled functional predictors are mapped into an orthonormal periodic
//! wavelet basis, after which a `C`-component Gaussian mixture of linear
//! regressions is fitted by an ℓ1-penalized EM algorithm with coordinate
//! descent. Tuning parameters (number of components, coarsest level, penalty)
//! are chosen by cross-validated predictive loss or a modified BIC.
//!
//! The numerical core (`wavelet`, `model`, `fit`, `tune`) is generic over the
//! floating-point type through [`Scalar`]; the `f64` aliases below cover the
//! common case. Simulation and file IO work in `f64`.

pub mod error;
pub mod fit;
pub mod io;
pub mod model;
pub mod scalar;
pub mod simulate;
pub mod tune;
pub mod wavelet;

pub use error::{Error, Result};
pub use fit::{adaptive_fit, em_fit, FitConfig, FitResult, PiExponent};
pub use model::{MixtureParams, NaturalParams, PenaltyWeights, Responsibilities};
pub use scalar::Scalar;
pub use wavelet::{
    build_design, dwt, idwt, reconstruct_omegas, CoeffVector, DesignMatrix, WaveletFamily,
    WaveletSpec,
};

/// Double-precision design matrix.
pub type DesignMatrix64 = DesignMatrix<f64>;
/// Double-precision mixture parameters.
pub type MixtureParams64 = MixtureParams<f64>;
/// Double-precision responsibilities.
pub type Responsibilities64 = Responsibilities<f64>;
/// Double-precision fit configuration.
pub type FitConfig64 = FitConfig<f64>;
/// Double-precision fit result.
pub type FitResult64 = FitResult<f64>;
/// Double-precision wavelet coefficients.
pub type CoeffVector64 = CoeffVector<f64>;

/// Single-precision design matrix.
pub type DesignMatrix32 = DesignMatrix<f32>;
/// Single-precision mixture parameters.
pub type MixtureParams32 = MixtureParams<f32>;
/// Single-precision fit configuration.
pub type FitConfig32 = FitConfig<f32>;
/// Single-precision fit result.
pub type FitResult32 = FitResult<f32>;
