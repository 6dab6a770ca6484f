use std::io;
use std::path::{Path, PathBuf};

use corner_pencil_core::orbit::ConfigError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] corner_pencil_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn json(path: &Path, source: serde_json::Error) -> Self {
        CliError::Json {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        CliError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        use corner_pencil_core::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Json { .. } | CliError::Csv { .. } | CliError::Format(_) => "format",
            CliError::Usage(_) => "usage",
            CliError::Core(E::Config(_)) => "config",
            CliError::Core(E::Pencil(_)) => "pencil",
            CliError::Core(E::Spectrum(_)) => "spectrum",
            CliError::Core(E::Tangential(_)) => "tangential",
            CliError::Core(E::Verify(_)) => "verify",
            CliError::Core(E::Verdict(_)) => "verdict",
        }
    }

    /// The object printed on standard error.
    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Core(corner_pencil_core::Error::Config(ConfigError::ImageOutsideTargetAngle {
            side,
            target,
            term,
            image,
            limit,
        })) = self
        {
            obj["name"] = json!("ImageOutsideTargetAngle");
            obj["j"] = json!(side.angle + 1);
            obj["sigma"] = json!(side.sigma.number());
            obj["k"] = json!(target + 1);
            obj["s"] = json!(term);
            obj["image"] = json!(image);
            obj["limit"] = json!(limit);
        }
        json!({ "error": obj })
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

core_from!(
    corner_pencil_core::orbit::ConfigError,
    corner_pencil_core::pencil::PencilError,
    corner_pencil_core::spectrum::SpectrumError,
    corner_pencil_core::tangential::TangentialError,
    corner_pencil_core::verify::VerifyError,
    corner_pencil_core::verdict::VerdictError
);
