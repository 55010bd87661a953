//! Clinical named-entity recognition with a from-scratch transformer token
//! classifier.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO: corpora, models,
//! checkpoints and reports go in and out as strings, byte buffers and plain
//! values. The `medner` crate wires it to files and a command line.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod eval;
pub mod fmt;
pub mod model;
pub mod scalar;
pub mod training;

pub use scalar::{Precision, Scalar};
