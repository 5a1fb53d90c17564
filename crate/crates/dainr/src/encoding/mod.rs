//! Input encodings for coordinate networks.
//!
//! Raw `(x, y, t)` coordinates are too smooth for a small MLP to resolve
//! fine structure; both encodings lift them into a higher-dimensional space.
//! [`frequency`] is fixed and analytic, [`hash`] is trainable and
//! multiresolution.

pub mod frequency;
pub mod hash;

pub use frequency::{frequency_encode, frequency_features};
pub use hash::{hash_encode, hash_index, Growth, HashGrid, HashGridConfig};
