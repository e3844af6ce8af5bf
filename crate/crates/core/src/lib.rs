//! Statistical arbitrage on the foreign-exchange rate graph.

// `!(x > 0.0)` is how NaN is rejected; index loops walk parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod backtest;
pub mod error;
pub mod fx_graph;
pub mod fxrp;
pub mod linalg;
pub mod lp_bench;
pub mod market_data;
pub mod neural;
pub mod par;
pub mod statarb;
pub mod verify;

pub use error::{Error, Result};
