#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coding;
pub mod corrective;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluate;
mod oracle;
pub mod rng;
pub mod stagewise;
pub mod trace;
pub mod weak;

pub use error::{Error, Result};
