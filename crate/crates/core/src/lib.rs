#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod kernel;
pub mod neighborhood;
pub mod output;
pub mod plasticity;
pub mod porous;
pub mod run;
pub mod scenarios;
pub mod solid;
pub mod stepping;
pub mod tensor;

pub use error::{Error, Result};
