//! Long-term energy management of an islanded microgrid with hybrid
//! hydrogen-battery storage.
//!
//! The crate covers the whole chain: semi-empirical electrolyzer and fuel
//! cell models with piecewise-linear fits ([`electrochem`]), the microgrid
//! model and program builder ([`grid`]), a built-in LP/QP/MILP solver
//! ([`milp`]), offline SoC references with kernel tracking ([`reference`]),
//! the virtual-queue online convex optimization ensemble ([`oco`]), rollouts
//! of the dispatch methods with physical reconciliation ([`sim`]) and the
//! file formats and command line ([`io`], [`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod electrochem;
pub mod error;
pub mod grid;
pub mod io;
pub mod milp;
pub mod oco;
pub mod reference;
pub mod sim;

pub use error::{Error, Result};
