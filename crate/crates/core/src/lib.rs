// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// reference values in tests keep every digit of their source
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod cli;
pub mod config;
pub mod delayed;
pub mod error;
pub mod functions;
pub mod matrix;
pub mod oracle;
pub mod qtable;
pub mod solver;
pub mod special;
pub mod verify;
