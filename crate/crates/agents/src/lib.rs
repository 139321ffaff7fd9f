//! Virtual-audience agents: a corridor environment over a venue twin, the
//! zone reward schedule and its closed-form oracle, a 3×128 MLP policy,
//! behavior cloning, PPO across parallel environments, top-fraction model
//! selection and rollouts.

pub mod bc;
pub mod checkpoint;
pub mod demos;
pub mod env;
pub mod net;
pub mod optim;
pub mod ppo;
pub mod reward;
pub mod rollout;
pub mod select;

pub use env::{AgentAction, CorridorEnv, CorridorLayout, EnvConfig, StepResult, OBS_DIM};
pub use net::PolicyNetwork;
pub use reward::{episode_reward_oracle, RewardBreakdown, RewardConfig};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("env_step called before env_reset")]
    StepBeforeReset,
    #[error("no demonstrations")]
    EmptyDemos,
    #[error("no candidates")]
    EmptyCandidates,
    #[error("training diverged at iteration {iteration}: non-finite loss")]
    DivergenceDetected { iteration: usize },
    #[error("invalid checkpoint: {0}")]
    InvalidCheckpoint(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
