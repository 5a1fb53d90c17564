//! Synthetic dynamic data and the dataset interchange format.
//!
//! [`generate`] builds analytic moving phantoms, coil maps, and
//! retrospectively undersampled acquisitions; [`dataset`] persists them as
//! a manifest-plus-raw-arrays directory that external tools (or externally
//! acquired data) can share.

pub mod dataset;
pub mod generate;

pub use dataset::{
    read_raw, read_sequence, write_raw, write_sequence, DatasetBundle, DatasetManifest,
};
pub use generate::{
    add_acquisition_noise, generate_coil_maps, generate_phantom, retrospective_undersample,
    DynamicPhantomSpec, Dynamics, Ellipse,
};
