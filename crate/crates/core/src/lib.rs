//! Decomposition of single-qubit channels into two quasiextreme branches,
//! compilation of each branch to a spin-orbit optical circuit, and exact
//! simulation of that circuit including tomography of the output.

#![allow(clippy::needless_range_loop)]

pub mod channels;
pub mod circuit;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod mat;
pub mod optics;
pub mod serial;
pub mod tomo;

pub use error::{Error, Result};
