//! Scripted players.
//!
//! A bot sees an [`Observation`] each tick and answers with a
//! [`PlayerAction`]. Only [`BotPolicy::HoldAndChase`] is handed the fox's
//! column; the other policies get an observation with it redacted, so a
//! haptic player can only know where the fox is from the pulses it feels.

use holdfeel_core::game::{EntityView, GameConfig, ItemKind, Scene};
use holdfeel_core::haptics::{perceived_position, PanLaw};
use holdfeel_core::rng::StreamRng;
use holdfeel_core::{ActuatorPair, TouchState};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// What one player does with their hand this tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerAction {
    /// How firmly this player offers contact. Actual contact is the weaker
    /// of the two players' grips.
    pub grip: TouchState,
    pub roll_deg: f64,
}

impl PlayerAction {
    pub const RELEASED: PlayerAction = PlayerAction { grip: TouchState::NoTouch, roll_deg: 0.0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub clock_ms: f64,
    pub scene: Scene,
    pub controllable: bool,
    pub entities: Vec<EntityView>,
    /// `None` unless the policy is allowed to look at the fox.
    pub fox_column: Option<usize>,
    /// Pulse felt since the previous observation, if any.
    pub pulse: Option<ActuatorPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum BotPolicy {
    /// Watches the fox directly, holds hands and steers under the next cherry.
    HoldAndChase {
        #[serde(default)]
        firm: bool,
        #[serde(default = "yes")]
        avoid_bombs: bool,
    },
    /// Same strategy, but tracks the fox only through step pulses.
    HapticChaser {
        #[serde(default)]
        firm: bool,
        #[serde(default = "yes")]
        avoid_bombs: bool,
    },
    /// Holds or releases and tilts at random.
    RandomReleaser {
        #[serde(default = "default_change_ms")]
        change_every_ms: f64,
        #[serde(default = "half")]
        hold_probability: f64,
        #[serde(default = "default_max_roll")]
        max_roll_deg: f64,
    },
}

fn yes() -> bool {
    true
}

fn default_change_ms() -> f64 {
    500.0
}

fn half() -> f64 {
    0.5
}

fn default_max_roll() -> f64 {
    60.0
}

impl Default for BotPolicy {
    fn default() -> Self {
        Self::hold_and_chase()
    }
}

impl BotPolicy {
    pub fn hold_and_chase() -> Self {
        BotPolicy::HoldAndChase { firm: false, avoid_bombs: true }
    }

    pub fn haptic_chaser() -> Self {
        BotPolicy::HapticChaser { firm: false, avoid_bombs: true }
    }

    pub fn random_releaser() -> Self {
        BotPolicy::RandomReleaser {
            change_every_ms: default_change_ms(),
            hold_probability: half(),
            max_roll_deg: default_max_roll(),
        }
    }

    /// A random tilter that never offers contact.
    pub fn never_touch() -> Self {
        BotPolicy::RandomReleaser { change_every_ms: default_change_ms(), hold_probability: 0.0, max_roll_deg: 90.0 }
    }

    /// Parse a CLI policy name (`hold_and_chase`, `haptic-chaser`, ...).
    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "hold_and_chase" | "holdandchase" => Some(Self::hold_and_chase()),
            "haptic_chaser" | "hapticchaser" => Some(Self::haptic_chaser()),
            "random_releaser" | "randomreleaser" => Some(Self::random_releaser()),
            "never_touch" => Some(Self::never_touch()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BotPolicy::HoldAndChase { .. } => "hold_and_chase",
            BotPolicy::HapticChaser { .. } => "haptic_chaser",
            BotPolicy::RandomReleaser { .. } => "random_releaser",
        }
    }

    /// Whether the engine may show this policy the fox's column.
    pub fn sees_fox(&self) -> bool {
        matches!(self, BotPolicy::HoldAndChase { .. })
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            BotPolicy::RandomReleaser { change_every_ms, hold_probability, max_roll_deg } => {
                if !(change_every_ms > 0.0) {
                    return Err(format!("change_every_ms must be positive, got {change_every_ms}"));
                }
                if !(0.0..=1.0).contains(&hold_probability) {
                    return Err(format!("hold_probability must lie in [0, 1], got {hold_probability}"));
                }
                if !(0.0..=180.0).contains(&max_roll_deg) {
                    return Err(format!("max_roll_deg must lie in [0, 180], got {max_roll_deg}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Phantom position felt from `pair`, snapped to the nearest stage column.
/// A player who knows the stage has `stage_width` columns reads a pulse as
/// one of those columns, so this is exact whenever the pulse was rendered
/// for a column under `law`.
pub fn estimate_position(pair: &ActuatorPair, law: PanLaw<f64>, stage_width: usize) -> Option<f64> {
    let raw = perceived_position(pair, law).ok()?;
    let column = raw.nearest_column(stage_width);
    Some(column as f64 / (stage_width - 1) as f64)
}

const STEER_ROLL_DEG: f64 = 45.0;

/// Shared chase strategy: given where the fox is (or is believed to be),
/// pick a grip and a tilt.
fn chase(fox: usize, obs: &Observation, game: &GameConfig, firm: bool, avoid_bombs: bool) -> PlayerAction {
    let fox_row = game.fox_row();
    let ms_per_row = 1000.0 / game.fall_speed;
    let arrival_ms = |e: &EntityView| (fox_row - e.row) * ms_per_row;
    let falling = || obs.entities.iter().filter(|e| e.row < fox_row);

    let grip = if firm { TouchState::Strong } else { TouchState::Gentle };

    // let go just before a bomb lands on the fox, and stay released until it passes
    let danger_ms = 4.0 * game.tick_ms() + 50.0;
    if avoid_bombs && falling().any(|e| e.kind == ItemKind::Bomb && e.column == fox && arrival_ms(e) <= danger_ms) {
        return PlayerAction::RELEASED;
    }

    let step_ms = game.move_repeat_ms as f64 + 2.0 * game.tick_ms();
    let reachable = |e: &&EntityView| (e.column.abs_diff(fox) as f64) * step_ms <= arrival_ms(e);
    let target = falling()
        .filter(|e| e.kind == ItemKind::Cherry)
        .filter(reachable)
        .min_by(|a, b| arrival_ms(a).total_cmp(&arrival_ms(b)).then(a.id.cmp(&b.id)));

    let roll_deg = match target.map(|e| e.column) {
        Some(c) if c > fox => STEER_ROLL_DEG,
        Some(c) if c < fox => -STEER_ROLL_DEG,
        _ => 0.0,
    };
    PlayerAction { grip, roll_deg }
}

/// A running bot: policy plus whatever it remembers between ticks.
#[derive(Debug, Clone)]
pub struct Bot {
    policy: BotPolicy,
    rng: StreamRng,
    /// HapticChaser's belief about the fox column.
    belief: usize,
    next_change_ms: f64,
    current: PlayerAction,
    game: GameConfig,
    law: PanLaw<f64>,
}

impl Bot {
    pub fn new(policy: BotPolicy, rng: StreamRng, game: &GameConfig, law: PanLaw<f64>) -> Self {
        Self {
            policy,
            rng,
            belief: game.center_column(),
            next_change_ms: 0.0,
            current: PlayerAction::RELEASED,
            game: game.clone(),
            law,
        }
    }

    pub fn policy(&self) -> &BotPolicy {
        &self.policy
    }

    /// Where a haptic player currently believes the fox is.
    pub fn belief(&self) -> usize {
        self.belief
    }

    pub fn act(&mut self, obs: &Observation) -> PlayerAction {
        match self.policy {
            BotPolicy::HoldAndChase { firm, avoid_bombs } => {
                let fox = obs.fox_column.expect("hold_and_chase is always shown the fox");
                chase(fox, obs, &self.game, firm, avoid_bombs)
            }
            BotPolicy::HapticChaser { firm, avoid_bombs } => {
                if let Some(p) = obs.pulse.as_ref().and_then(|pair| estimate_position(pair, self.law, self.game.stage_width)) {
                    self.belief = (p * (self.game.stage_width - 1) as f64).round() as usize;
                }
                chase(self.belief, obs, &self.game, firm, avoid_bombs)
            }
            BotPolicy::RandomReleaser { change_every_ms, hold_probability, max_roll_deg } => {
                if obs.clock_ms >= self.next_change_ms {
                    self.next_change_ms = obs.clock_ms + change_every_ms;
                    let hold = self.rng.random::<f64>() < hold_probability;
                    let firm: bool = self.rng.random();
                    let roll = self.rng.random_range(-1.0..=1.0) * max_roll_deg;
                    let grip = match (hold, firm) {
                        (false, _) => TouchState::NoTouch,
                        (true, false) => TouchState::Gentle,
                        (true, true) => TouchState::Strong,
                    };
                    self.current = PlayerAction { grip, roll_deg: roll };
                }
                self.current
            }
        }
    }
}
