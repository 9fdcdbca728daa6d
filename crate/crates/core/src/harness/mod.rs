//! Shared Monte Carlo plumbing: random streams, replicate execution,
//! bias/variance/RMSE summaries, rate fitting, experiment grids and CSV output.

mod csv;
mod exec;
mod grid;
mod rng;
mod summary;

pub use csv::{format_real, write_summary_csv, write_table_csv, SUMMARY_HEADER};
pub use exec::{fold_chunks, map_reps, with_execution, Execution};
pub use grid::{run_grid, Estimate, ExperimentSpec, GridRow, Model, ModelBuilder, ParamMap, Registry, SETUP_STREAM};
pub use rng::{derive_stream, RngStream};
pub use summary::{rate_slope, summarize, summarize_paired, McSummary};
