//! Reference reconstructions the dynamic-aware model is judged against.
//!
//! [`zero_filled`] is the classical density-compensated adjoint,
//! [`hashinr`] the single-network implicit baseline that maps `(x, y, t)`
//! straight to intensity, and [`regularizers`] the temporal-TV and low-rank
//! penalties the single-network objective can optionally carry.

pub mod hashinr;
pub mod regularizers;
pub mod zero_filled;

pub use hashinr::{hashinr_optimize, BoundHashInr, HashInrConfig, HashInrModel};
pub use regularizers::{
    nuclear_norm, nuclear_norm_op, temporal_tv, temporal_tv_op, RegularizerWeights,
};
pub use zero_filled::{zero_filled_frame, zero_filled_recon};
