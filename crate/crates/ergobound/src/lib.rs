//! Configuration, file formats and command implementations for the
//! `ergobound` command-line tool. The mathematics lives in
//! [`ergobound_core`]; this crate adds IO, parallel grid evaluation and
//! orchestration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use ergobound_core as core;

pub mod commands;
pub mod config;
pub mod expr;
pub mod formats;
pub mod parallel;
