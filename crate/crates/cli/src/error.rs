use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate statistics: {0}")]
    Degenerate(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Figure(String),
}

impl CliError {
    /// Process exit status: 2 config, 3 data format, 4 degenerate statistics,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::Io { .. } | CliError::Figure(_) => 1,
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }

    /// Maps a library error for a computation whose parameters all come from
    /// the configuration.
    pub fn from_core(err: gradnoise::Error) -> Self {
        use gradnoise::Error as E;
        match err {
            E::Parameter(_) | E::SampleSize { .. } | E::Shape(_) => CliError::Config(err.to_string()),
            E::Format(_) | E::Json(_) => CliError::Data(err.to_string()),
            E::Degenerate(_) | E::EmptyBattery(_) => CliError::Degenerate(err.to_string()),
            E::Io(source) => CliError::Io { path: PathBuf::new(), source },
        }
    }

    /// Maps a library error for a computation on user-supplied input data,
    /// where size and value problems belong to the data rather than the config.
    pub fn from_core_data(err: gradnoise::Error) -> Self {
        use gradnoise::Error as E;
        match err {
            E::SampleSize { .. } | E::Shape(_) => CliError::Data(err.to_string()),
            other => CliError::from_core(other),
        }
    }
}

impl From<gradnoise::Error> for CliError {
    fn from(err: gradnoise::Error) -> Self {
        CliError::from_core(err)
    }
}
