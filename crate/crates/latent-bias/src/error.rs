use std::path::Path;

use latent_bias_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Unreadable or malformed input.
    #[error("{0}")]
    Input(String),

    /// Invalid flags, config or mapping.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        AppError::Input(format!("{}: {e}", path.display()))
    }

    /// 2 for input and configuration problems, 3 for numerical divergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Core(e) if e.is_divergence() => 3,
            _ => 2,
        }
    }
}
