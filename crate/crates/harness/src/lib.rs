//! Headless sessions for the holdfeel game: config loading, scripted bots,
//! the shared tick engine, JSON-lines session logs, replay and metrics.

pub mod bots;
pub mod config;
pub mod engine;
pub mod log;
pub mod metrics;
pub mod replay;

use std::ops::Range;
use std::path::{Path, PathBuf};

use holdfeel_core::rng;
use rayon::prelude::*;

pub use bots::{Bot, BotPolicy, Observation, PlayerAction};
pub use config::{ConfigErrors, ConfigLoadError, SessionConfig};
pub use engine::{SessionEngine, TickReport};
pub use log::{LogError, SessionLog};
pub use metrics::{check_invariants, metrics, Metrics};
pub use replay::{replay, ReplayError, ReplayOutcome};

/// Run one full session with the configured bots, as fast as possible.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionLog, ConfigErrors> {
    let mut engine = SessionEngine::new(cfg)?;
    let policies = [cfg.bots.player1.clone(), cfg.bots.player2.clone()];
    let mut bots = [0, 1].map(|i| {
        let stream = rng::stream(cfg.seed, &format!("bot.{}", i + 1));
        Bot::new(policies[i].clone(), stream, &cfg.game, cfg.haptics.law)
    });
    let mut pulse = None;
    while !engine.is_finished() {
        let actions = [0, 1].map(|i| {
            let obs = engine.observation(policies[i].sees_fox(), pulse);
            bots[i].act(&obs)
        });
        pulse = engine.step(actions).pulse;
    }
    Ok(engine.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub seed: u64,
    pub log_path: PathBuf,
    pub metrics: Metrics,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Run `cfg` once per seed in parallel and write `session-<seed>.jsonl`
/// into `out_dir`. Results come back in seed order.
pub fn sweep(cfg: &SessionConfig, seeds: Range<u64>, out_dir: &Path) -> Result<Vec<SweepResult>, SweepError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| SweepError::Io { path: out_dir.to_path_buf(), source })?;
    seeds
        .into_par_iter()
        .map(|seed| {
            let log = run_session(&SessionConfig { seed, ..cfg.clone() })?;
            let log_path = out_dir.join(format!("session-{seed}.jsonl"));
            log.write_to(&log_path).map_err(|source| SweepError::Io { path: log_path.clone(), source })?;
            Ok(SweepResult { seed, log_path, metrics: metrics(&log) })
        })
        .collect()
}
