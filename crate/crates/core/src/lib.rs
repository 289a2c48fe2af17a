#![no_std]
// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dlc;
pub mod error;
pub mod insurance;
pub mod numerics;
pub mod privacy;
pub mod screening;

pub use error::{Error, Result};
