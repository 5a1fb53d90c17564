//! Unsupervised dynamic MRI reconstruction with deformation-aware implicit
//! neural representations.
//!
//! The crate models a dynamic image sequence as a pair of coordinate
//! networks — a deformation field that warps each time point into a shared
//! canonical frame, and a canonical network that renders complex image
//! intensities — optimized directly against retrospectively undersampled
//! radial k-space. No fully sampled training data is involved anywhere;
//! the measurements themselves are the only supervision.
//!
//! Modules follow the pipeline order: [`autodiff`] supplies the tape and
//! optimizer, [`encoding`] the frequency and hash-grid input features,
//! [`model`] the networks, [`mri`] the radial sampling and non-uniform
//! Fourier operators, [`phantom`] synthetic dynamic data, [`baselines`]
//! classical and single-network reference reconstructions, [`train`] the
//! optimization loops, and [`eval`] image-quality metrics.

pub mod autodiff;
pub mod baselines;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod image;
pub mod model;
pub mod mri;
pub mod phantom;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::{real, Real};
