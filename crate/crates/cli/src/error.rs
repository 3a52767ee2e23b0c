use std::path::PathBuf;

use thiserror::Error;

use thememap::corpus::CorpusError;
use thememap::primary::PrimaryError;
use thememap::provider::ProviderError;
use thememap::secondary::SecondaryError;
use thememap::synthesis::SynthesisError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("provider failure: {0}")]
    Provider(String),
    #[error("missing prerequisite {}: run `{stage}` first", path.display())]
    MissingPrerequisite { path: PathBuf, stage: &'static str },
    #[error("no convergence after {iterations} iterations; partial outputs written")]
    NonConvergence { iterations: usize },
    #[error("{0}")]
    Stage(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Provider(_) => 2,
            CliError::NonConvergence { .. } => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Config(m) => CliError::Config(m),
            other => CliError::Provider(other.to_string()),
        }
    }
}

impl From<PrimaryError> for CliError {
    fn from(e: PrimaryError) -> Self {
        match e {
            PrimaryError::Provider(p) | PrimaryError::Synthesis(SynthesisError::Provider(p)) => p.into(),
            PrimaryError::MissingIds(_) | PrimaryError::Synthesis(SynthesisError::ClusterCountMismatch { .. }) => {
                CliError::Provider(e.to_string())
            }
            PrimaryError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Stage(other.to_string()),
        }
    }
}

impl From<SecondaryError> for CliError {
    fn from(e: SecondaryError) -> Self {
        match e {
            SecondaryError::Classification(p) => p.into(),
            other => CliError::Stage(other.to_string()),
        }
    }
}
