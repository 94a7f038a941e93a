#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coeffs;
pub mod error;
pub mod exact_pressureless;
pub mod exact_zeldovich;
pub mod pde_verifier;
pub mod quad;
pub mod special;
pub mod viscous_pressureless_profile;
pub mod viscous_zeldovich;
pub mod waves;
pub mod weak_residual;

pub use error::{Error, Result};
