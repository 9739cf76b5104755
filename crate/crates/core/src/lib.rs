#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod krylov;
pub mod linalg;
pub mod majorant;
pub mod problem;
pub mod roots;
pub mod solver;
pub mod trace;
pub mod verifier;

pub use error::{Error, Result};
