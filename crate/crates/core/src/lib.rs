#![allow(clippy::neg_cmp_op_on_partial_ord)] // validation uses `!(x > 0.0)` so NaN fails

pub mod cli;
pub mod config;
pub mod domain;
pub mod environment;
pub mod inference;
pub mod orchestrator;
