use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GhtmError> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum GhtmError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: invalid UTF-8 at byte offset {offset}", path.display())]
    Decode { path: PathBuf, offset: usize },
    #[error("{}:{line}: {message}", path.display())]
    Record { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Format { path: PathBuf, line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<GhtmError>,
    },
    #[error(transparent)]
    Core(#[from] ghtm_core::Error),
}

impl GhtmError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GhtmError::Io { path: path.into(), source }
    }

    /// Process exit code: 1 for usage and configuration problems, 2 for a
    /// failing pipeline stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            GhtmError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<GhtmError>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| GhtmError::Stage { stage, source: Box::new(e.into()) })
    }
}
