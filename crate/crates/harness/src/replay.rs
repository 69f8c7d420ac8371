//! Re-run a log's recorded game inputs and check they reproduce its events.

use std::collections::BTreeMap;

use holdfeel_core::game::{EventKind, GameEvent, GameState, PairInput};
use holdfeel_core::ActuatorPair;
use thiserror::Error;

use crate::log::{Record, SessionLog};

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("log config cannot start a game: {0}")]
    Config(String),
    #[error("tick {tick}: more than one input record")]
    DuplicateInput { tick: u64 },
    #[error("divergence at tick {tick}: log has {logged:?}, replay produced {replayed:?}")]
    Divergence { tick: u64, logged: Vec<GameEvent>, replayed: Vec<GameEvent> },
    #[error("haptic mismatch at tick {tick}: log has {logged:?}, expected {expected:?}")]
    PulseMismatch { tick: u64, logged: Vec<(usize, ActuatorPair)>, expected: Vec<(usize, ActuatorPair)> },
}

impl ReplayError {
    /// Engine tick of the first mismatch, for divergence-type errors.
    pub fn tick(&self) -> Option<u64> {
        match self {
            ReplayError::Config(_) => None,
            ReplayError::DuplicateInput { tick }
            | ReplayError::Divergence { tick, .. }
            | ReplayError::PulseMismatch { tick, .. } => Some(*tick),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub final_state: GameState,
    pub game_steps: u64,
    pub events: usize,
}

#[derive(Default)]
struct TickGroup<'a> {
    input: Option<&'a PairInput>,
    events: Vec<GameEvent>,
    haptics: Vec<(usize, ActuatorPair)>,
}

pub fn replay(log: &SessionLog) -> Result<ReplayOutcome, ReplayError> {
    let cfg = log.config();
    let mut state = GameState::new_session(&cfg.game, cfg.seed).map_err(|e| ReplayError::Config(e.to_string()))?;

    let mut ticks: BTreeMap<u64, TickGroup> = BTreeMap::new();
    for r in &log.records {
        match r {
            Record::Input { tick, input } => {
                let g = ticks.entry(*tick).or_default();
                if g.input.replace(input).is_some() {
                    return Err(ReplayError::DuplicateInput { tick: *tick });
                }
            }
            Record::Event { tick, event } => ticks.entry(*tick).or_default().events.push(event.clone()),
            Record::Haptic { tick, column, pair } => ticks.entry(*tick).or_default().haptics.push((*column, *pair)),
            _ => {}
        }
    }

    let mut game_steps = 0;
    let mut events = 0;
    for (tick, group) in ticks {
        let replayed = match group.input {
            Some(input) => {
                game_steps += 1;
                state.step(input, &cfg.game).into_events()
            }
            None => Vec::new(),
        };
        if replayed != group.events {
            return Err(ReplayError::Divergence { tick, logged: group.events, replayed });
        }
        events += replayed.len();

        let expected: Vec<(usize, ActuatorPair)> = replayed
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::FoxMoved { column, .. } => {
                    Some((column, cfg.haptics.pulse_for(column, cfg.game.stage_width).ok()?))
                }
                _ => None,
            })
            .collect();
        if expected != group.haptics {
            return Err(ReplayError::PulseMismatch { tick, logged: group.haptics, expected });
        }
    }
    Ok(ReplayOutcome { final_state: state, game_steps, events })
}
