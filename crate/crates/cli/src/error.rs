//! Error wrapper that carries the process exit code: 1 for usage/config
//! problems, 2 for data problems, 3 for numerical failures.

use authormap::bow::BowError;
use authormap::corpus::CorpusError;
use authormap::embedding::EmbedError;
use authormap::kernels::KernelError;
use authormap::render::RenderError;
use authormap::topics::TopicError;

#[derive(Debug)]
pub enum ExitClass {
    Usage,
    Data,
    Numerical,
}

impl ExitClass {
    pub fn code(&self) -> i32 {
        match self {
            ExitClass::Usage => 1,
            ExitClass::Data => 2,
            ExitClass::Numerical => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub class: ExitClass,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            class: ExitClass::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            class: ExitClass::Data,
            message: message.into(),
        }
    }

    /// Prefix the failing pipeline stage onto the cause.
    pub fn in_stage(mut self, stage: &str) -> Self {
        self.message = format!("stage {stage}: {}", self.message);
        self
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<BowError> for CliError {
    fn from(e: BowError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<TopicError> for CliError {
    fn from(e: TopicError) -> Self {
        let class = match &e {
            TopicError::InvalidConfig(_) | TopicError::LayerOutOfRange { .. } => ExitClass::Usage,
            _ => ExitClass::Data,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        let class = match &e {
            KernelError::NotPsd { .. } => ExitClass::Numerical,
            KernelError::BadWeights(_) => ExitClass::Usage,
            _ => ExitClass::Data,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        let class = match &e {
            EmbedError::NotPsd { .. }
            | EmbedError::ZeroSpectrum
            | EmbedError::Diverged { .. } => ExitClass::Numerical,
            EmbedError::InvalidNeighborCount { .. } | EmbedError::InvalidDim { .. } => {
                ExitClass::Usage
            }
            _ => ExitClass::Data,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        CliError::data(e.to_string())
    }
}
