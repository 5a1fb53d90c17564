//! Radial MRI acquisition model.
//!
//! [`trajectory`] lays out where k-space is sampled, [`ndft`] evaluates the
//! exact non-uniform transform, [`nufft`] approximates it fast enough for
//! training, [`coils`] provides synthetic receive sensitivities, and
//! [`forward`] composes them into the multi-coil acquisition operator.
//! [`acquisition`] bundles the resulting per-frame measurements.

pub mod acquisition;
pub mod coils;
pub mod forward;
pub mod ndft;
pub mod nufft;
pub mod ops;
pub mod trajectory;

pub use acquisition::{FrameAcquisition, KSpaceAcquisition, SamplingScheme};
pub use coils::{birdcage_coil_maps, combine_coil_images};
pub use forward::{simulate_multicoil, KspaceOperator};
pub use ndft::{ndft_adjoint, ndft_forward};
pub use nufft::{nufft_op, GriddingPlan};
pub use ops::{channels_to_complex, complex_mul_const, complex_to_channels};
pub use trajectory::{
    acceleration_factor, cartesian_trajectory, golden_angle_frame, spoke_angle_deg, Trajectory,
    GOLDEN_ANGLE_DEG,
};
