//! File formats, configuration and pipeline orchestration for the
//! graph-refined embedding topic model in [`ghtm_core`].

pub mod config;
pub mod corpus_io;
pub mod embeddings_io;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use crate::config::PipelineConfig;
pub use crate::error::{GhtmError, Result};
pub use crate::pipeline::{cmd_baseline, cmd_evaluate, cmd_run, RunReport};
