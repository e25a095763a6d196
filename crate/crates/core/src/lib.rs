#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod berezin;
pub mod expr;
pub mod gns;
pub mod linalg;
pub mod mkdist;
pub mod qhopf;
pub mod random;
pub mod scalar;
pub mod specnorm;
pub mod uq_actions;

pub use qhopf::{Element, Monomial, SuQ2, Tensor};
pub use scalar::{Exact, Field, Float};
