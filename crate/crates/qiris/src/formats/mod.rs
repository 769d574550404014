//! File formats: graph JSON, decomposition JSON and the text outputs of the
//! command line tool.

mod decomposition;
mod graph;
mod output;

use thiserror::Error;

pub use decomposition::{decomposition_to_json, parse_decomposition};
pub use graph::{parse_graph, register_builtin_kernels, GraphConfig, BUILTIN_KERNELS};
pub use output::{format_probability, format_std, payload_summary, probability_lines, validation_csv};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate task name `{0}`")]
    DuplicateTask(String),
    #[error("task `{task}` depends on unknown task `{dep}`")]
    UnknownDependency { task: String, dep: String },
    #[error("task `{task}`: {message}")]
    Task { task: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Decomposition(#[from] qiris_core::QpdError),
}
