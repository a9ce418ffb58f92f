//! Constant-modulus beamforming codebooks built from Reed-Solomon style
//! evaluation codes over prime fields, with fading channel models, gain
//! evaluation, an equal-gain baseline and analytic distortion bounds.

pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod egt;
pub mod error;
pub mod experiment;
pub mod export;
pub mod field;
pub mod gains;
pub mod linalg;

pub use codebook::{CpCodebook, MessageSpace, PskCodebook, QuantizeMode, Quantized};
pub use error::{Error, Result};
pub use experiment::{reproduce, run_experiment, ExperimentConfig, Preset, ResultRow, RunOptions};
pub use field::{FieldElement, MessagePolynomial, PrimeModulus};
pub use linalg::{CMatrix, LineVector, C64};
