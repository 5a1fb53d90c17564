//! The dynamic-aware implicit model and its pieces.
//!
//! [`DaInrModel`] owns everything that renders a frame: a deformation MLP
//! that warps coordinates toward the canonical frame, a canonical MLP that
//! reads multiresolution hash features, and optionally a frozen
//! convolutional [`FeatureExtractor`] that conditions the deformation on a
//! cheap reference reconstruction. [`checkpoint`] serializes the lot.

pub mod checkpoint;
pub mod dainr;
pub mod features;
pub mod mlp;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use dainr::{
    frame_time_with_canonical, lattice_coords, BoundDaInr, DaInrConfig, DaInrModel,
    FeatureSettings, RenderLattice,
};
pub use features::FeatureExtractor;
pub use mlp::{BoundMlp, Linear, Mlp};
