//! Compact symmetric high-order finite difference schemes for the
//! variable-coefficient elliptic problem `-div(a grad u) = f` on a box with
//! Dirichlet data.
//!
//! The crate is `no_std` (it needs `alloc`). Wall-clock timing, file formats,
//! threading and the command line live in the `symfd` companion crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod assembly;
pub mod error;
pub mod expr;
pub mod fields;
pub mod harness;
pub mod jets;
pub mod kdim;
pub mod scheme;
pub mod solver;
pub mod stencil1d;
pub mod stencil_nd;

pub use error::{Error, Result};
