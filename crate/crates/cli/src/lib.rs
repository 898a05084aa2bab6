//! Library side of the `mcgpmp` command-line tool: scenario files, the
//! built-in benchmark maps, the benchmark runner and plotting.

// `!(x > 0.0)` rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod generate;
pub mod mission;
pub mod plot;
pub mod scenario;

pub use error::{CliError, CliResult};
