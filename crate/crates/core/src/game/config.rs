use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scene {
    Day,
    Night,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSlot {
    pub start_ms: u64,
    pub scene: Scene,
}

/// What a bomb hit does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BombMode {
    /// Subtract `bomb_penalty`, flooring the score at zero.
    #[default]
    Penalty,
    /// Apply the penalty and end the session on the spot.
    EndSession,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid game config: {field} {reason}")]
pub struct GameConfigError {
    pub field: &'static str,
    pub reason: String,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> GameConfigError {
    GameConfigError { field, reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub stage_width: usize,
    pub stage_height: u32,
    pub session_length_ms: u64,
    /// Ticks per second. The clock is kept as an integer tick count so
    /// that 60 Hz lands exactly on whole-second boundaries.
    pub tick_hz: u32,
    /// Items per second.
    pub cherry_spawn_rate: f64,
    pub bomb_spawn_rate: f64,
    /// Rows per second.
    pub fall_speed: f64,
    pub tilt_threshold_deg: f64,
    pub move_repeat_ms: u64,
    pub cherry_points: i64,
    pub bomb_penalty: i64,
    pub bomb_mode: BombMode,
    pub scene_schedule: Vec<SceneSlot>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            stage_width: 9,
            stage_height: 12,
            session_length_ms: 120_000,
            tick_hz: 60,
            cherry_spawn_rate: 0.8,
            bomb_spawn_rate: 0.25,
            fall_speed: 2.0,
            tilt_threshold_deg: 20.0,
            move_repeat_ms: 250,
            cherry_points: 10,
            bomb_penalty: 30,
            bomb_mode: BombMode::Penalty,
            scene_schedule: vec![
                SceneSlot { start_ms: 0, scene: Scene::Day },
                SceneSlot { start_ms: 60_000, scene: Scene::Night },
                SceneSlot { start_ms: 90_000, scene: Scene::Day },
            ],
        }
    }
}

impl GameConfig {
    pub fn night_only() -> Self {
        Self { scene_schedule: vec![SceneSlot { start_ms: 0, scene: Scene::Night }], ..Self::default() }
    }

    pub fn day_only() -> Self {
        Self { scene_schedule: vec![SceneSlot { start_ms: 0, scene: Scene::Day }], ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GameConfigError> {
        if self.stage_width < 2 {
            return Err(invalid("stage_width", format!("must be at least 2, got {}", self.stage_width)));
        }
        if self.stage_width > u16::MAX as usize {
            return Err(invalid("stage_width", "is unreasonably large"));
        }
        if self.stage_height < 1 {
            return Err(invalid("stage_height", "must be at least 1"));
        }
        if self.session_length_ms == 0 {
            return Err(invalid("session_length_ms", "must be positive"));
        }
        if self.tick_hz == 0 || self.tick_hz > 10_000 {
            return Err(invalid("tick_hz", format!("must be in 1..=10000, got {}", self.tick_hz)));
        }
        for (field, rate) in [("cherry_spawn_rate", self.cherry_spawn_rate), ("bomb_spawn_rate", self.bomb_spawn_rate)] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(invalid(field, format!("must be a non-negative rate, got {rate}")));
            }
        }
        if !(self.fall_speed > 0.0 && self.fall_speed.is_finite()) {
            return Err(invalid("fall_speed", format!("must be positive, got {}", self.fall_speed)));
        }
        if !(self.tilt_threshold_deg > 0.0 && self.tilt_threshold_deg <= 180.0) {
            return Err(invalid("tilt_threshold_deg", format!("must be in (0, 180], got {}", self.tilt_threshold_deg)));
        }
        if self.cherry_points < 0 {
            return Err(invalid("cherry_points", "must be non-negative"));
        }
        if self.bomb_penalty < 0 {
            return Err(invalid("bomb_penalty", "must be non-negative"));
        }
        match self.scene_schedule.first() {
            None => return Err(invalid("scene_schedule", "must not be empty")),
            Some(first) if first.start_ms != 0 => return Err(invalid("scene_schedule", "must start at 0 ms")),
            _ => {}
        }
        if self.scene_schedule.windows(2).any(|w| w[0].start_ms >= w[1].start_ms) {
            return Err(invalid("scene_schedule", "start times must strictly increase"));
        }
        if self.scene_schedule.iter().any(|s| s.start_ms >= self.session_length_ms) {
            return Err(invalid("scene_schedule", "every slot must start before the session ends"));
        }
        Ok(())
    }

    pub fn tick_ms(&self) -> f64 {
        1000.0 / self.tick_hz as f64
    }

    /// Simulated time after `tick` ticks, capped at the session length.
    pub fn clock_ms(&self, tick: u64) -> f64 {
        let exact = (tick as u128 * 1000) as f64 / self.tick_hz as f64;
        exact.min(self.session_length_ms as f64)
    }

    /// Ticks needed to cover the whole session.
    pub fn session_ticks(&self) -> u64 {
        (self.session_length_ms * self.tick_hz as u64).div_ceil(1000)
    }

    pub fn move_repeat_ticks(&self) -> u64 {
        (self.move_repeat_ms * self.tick_hz as u64).div_ceil(1000)
    }

    pub fn scene_at(&self, clock_ms: f64) -> Scene {
        self.scene_schedule
            .iter()
            .take_while(|s| s.start_ms as f64 <= clock_ms)
            .last()
            .map_or(Scene::Day, |s| s.scene)
    }

    /// Row the fox stands on (the bottom row).
    pub fn fox_row(&self) -> f64 {
        (self.stage_height - 1) as f64
    }

    pub fn center_column(&self) -> usize {
        (self.stage_width - 1) / 2
    }
}
