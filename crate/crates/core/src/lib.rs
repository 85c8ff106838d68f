#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod affine;
pub mod checks;
pub mod closed_forms;
pub mod curvature;
pub mod duality;
pub mod error;
pub mod exprkit;
pub mod fixtures;
pub mod geodesics;
pub mod report;
pub mod scenario;
pub mod selftest;
pub mod soliton;
pub mod walker;

pub use error::{Error, Result};
