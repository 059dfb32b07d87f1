//! Command line, file formats and what-if service around [`er_core`].
//!
//! A run loads an `er-mcda/1` model document and two CSV files, cleans
//! the rows, derives one belief distribution per bottom attribute and
//! alternative, weights the tree from the data, evaluates and ranks.

pub mod api;
pub mod ingest;
pub mod model_file;
pub mod pipeline;

pub use model_file::{LoadedModel, ModelFile, SCHEMA};
pub use pipeline::{evaluate_scenario, Inputs, Outcome, PipelineError, Scenario};
