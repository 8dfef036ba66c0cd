//! Everything that makes the engine a usable system: the seeded synthetic
//! fixture corpus, scripted reference agents, end-to-end evaluation
//! orchestration, and the episode wire-protocol service with its HTTP
//! facade.

mod agents;
mod eval;
mod fixtures;
mod server;
mod wire;

pub use agents::{
    run_episode, Agent, AgentAction, AgentPolicy, GreedyHeuristicAgent, OptimalAgent,
    RandomLegalAgent, ScriptedCall, StepFeedback, TaskScript, ZeroCallAgent,
};
pub use eval::{
    load_fixture_env, rename_audit, run_eval, EvalOutputs, FixturePaths, RenameAuditReport,
    RunConfig, VerdictRecord,
};
pub use fixtures::{gen_fixtures, FixtureSpec, FixtureSummary};
pub use server::{serve, ServeConfig, Server};
pub use wire::{
    read_frame, run_episode_over_wire, write_frame, ClientMessage, ServerMessage, MAX_FRAME_BYTES,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Episode(#[from] crate::episode::EpisodeError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Judge(#[from] crate::judge::JudgeError),
    #[error(transparent)]
    Raster(#[from] crate::raster::RasterError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    DataLake(#[from] crate::datalake::DataLakeError),
    #[error("fixture generation failed: {0}")]
    Fixture(String),
    #[error("no script for task {0}")]
    MissingScript(String),
    #[error("wire protocol violation: {0}")]
    Protocol(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}
