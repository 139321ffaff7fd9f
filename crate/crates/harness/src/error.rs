use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("scene error: {0}")]
    SceneLoad(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("incomplete bundle: {0}")]
    IncompleteBundle(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::SceneLoad(_) => 3,
            HarnessError::Divergence(_) => 4,
            _ => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<arstage_agents::AgentError> for HarnessError {
    fn from(e: arstage_agents::AgentError) -> Self {
        use arstage_agents::AgentError as A;
        match e {
            A::DivergenceDetected { .. } => HarnessError::Divergence(e.to_string()),
            A::InvalidScene(_) => HarnessError::SceneLoad(e.to_string()),
            A::InvalidConfig(_) | A::InvalidCheckpoint(_) | A::EmptyDemos | A::EmptyCandidates => {
                HarnessError::Config(e.to_string())
            }
            A::StepBeforeReset | A::Io(_) => HarnessError::Simulation(e.to_string()),
        }
    }
}
