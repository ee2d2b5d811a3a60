//! Order-flow surveillance engine: multi-scale Hawkes-style flow features,
//! a probabilistic network for short-horizon mid-price moves, and an
//! expected-gain test that flags likely spoofing orders.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod analytics;
pub mod dist;
pub mod econ;
pub mod engine;
pub mod error;
pub mod flow;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod sim;
pub mod stream;

pub use error::{Error, Result};
