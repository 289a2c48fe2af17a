//! Shared numerical kernels.

pub mod linalg;
pub mod optimize;
pub mod rng;
pub mod special;

pub use linalg::{max_singular_value, top_singular_pair, CMatrix, LinearOperator, SingularPair};
pub use optimize::{golden_section_max, nelder_mead_min, Interval, NelderMead, OptimizerReport};
pub use rng::{derive_seed, seeded_normal_stream, NormalStream};
pub use special::{erf, erfc};
