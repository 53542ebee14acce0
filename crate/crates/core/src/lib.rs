#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod detection;
pub mod dynamics;
pub mod epsilon;
pub mod error;
pub mod expansion;
pub mod filtration;
pub mod io;
pub mod goal;
pub mod quantum;
pub mod scenarios;
pub mod sdpair;
pub mod verbalization;
mod linalg;
mod regression;

pub use error::{Error, Result};
