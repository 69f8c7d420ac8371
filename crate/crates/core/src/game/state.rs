use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{BombMode, GameConfig, GameConfigError, Scene};
use super::input::PairInput;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Cherry,
    Bomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: u64,
    pub kind: ItemKind,
    pub column: usize,
    /// Rows from the top; spawns at 0.
    pub row: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    FoxMoved { direction: Direction, column: usize },
    CherryCaught { id: u64 },
    BombHit { id: u64 },
    ItemExited { id: u64 },
    ItemSpawned { id: u64, item: ItemKind, column: usize },
    SceneChanged { to: Scene },
    SessionEnded { final_score: i64 },
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::FoxMoved { .. } => 0,
            EventKind::CherryCaught { .. } => 1,
            EventKind::BombHit { .. } => 2,
            EventKind::ItemExited { .. } => 3,
            EventKind::ItemSpawned { .. } => 4,
            EventKind::SceneChanged { .. } => 5,
            EventKind::SessionEnded { .. } => 6,
        }
    }

    fn id(&self) -> u64 {
        match *self {
            EventKind::CherryCaught { id }
            | EventKind::BombHit { id }
            | EventKind::ItemExited { id }
            | EventKind::ItemSpawned { id, .. } => id,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub tick: u64,
    pub clock_ms: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl GameEvent {
    /// Total order within a session: clock, then kind, then item id.
    pub fn order_key(&self) -> (u64, u8, u64) {
        (self.tick, self.kind.rank(), self.kind.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Advanced(Vec<GameEvent>),
    /// The session had already ended; nothing changed.
    AtEnd,
}

impl StepOutcome {
    pub fn events(&self) -> &[GameEvent] {
        match self {
            StepOutcome::Advanced(e) => e,
            StepOutcome::AtEnd => &[],
        }
    }

    pub fn into_events(self) -> Vec<GameEvent> {
        match self {
            StepOutcome::Advanced(e) => e,
            StepOutcome::AtEnd => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub fox_column: usize,
    pub controllable: bool,
    pub entities: Vec<Entity>,
    pub score: i64,
    pub scene: Scene,
    pub tick: u64,
    pub clock_ms: f64,
    move_cooldown_ticks: u64,
    next_id: u64,
    terminal: bool,
    rng: StreamRng,
}

impl GameState {
    /// Fresh session: fox centred, empty stage, score zero.
    pub fn new_session(cfg: &GameConfig, seed: u64) -> Result<Self, GameConfigError> {
        cfg.validate()?;
        Ok(Self {
            fox_column: cfg.center_column(),
            controllable: false,
            entities: Vec::new(),
            score: 0,
            scene: cfg.scene_at(0.0),
            tick: 0,
            clock_ms: 0.0,
            move_cooldown_ticks: 0,
            next_id: 1,
            terminal: false,
            rng: rng::stream(seed, "game.spawn"),
        })
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn move_cooldown_ms(&self, cfg: &GameConfig) -> f64 {
        self.move_cooldown_ticks as f64 * cfg.tick_ms()
    }

    /// Advance one tick. `cfg` must be the config the session was created with.
    pub fn step(&mut self, input: &PairInput, cfg: &GameConfig) -> StepOutcome {
        if self.terminal {
            return StepOutcome::AtEnd;
        }
        let next_tick = self.tick + 1;
        let ending_on_clock = next_tick >= cfg.session_ticks();
        let mut kinds = Vec::new();

        self.controllable = input.touch.is_touching();

        self.move_cooldown_ticks = self.move_cooldown_ticks.saturating_sub(1);
        if self.controllable && input.combined_roll.abs() >= cfg.tilt_threshold_deg && self.move_cooldown_ticks == 0 {
            let (direction, target) = if input.combined_roll > 0.0 {
                (Direction::Right, (self.fox_column + 1).min(cfg.stage_width - 1))
            } else {
                (Direction::Left, self.fox_column.saturating_sub(1))
            };
            if target != self.fox_column {
                self.fox_column = target;
                self.move_cooldown_ticks = cfg.move_repeat_ticks();
                kinds.push(EventKind::FoxMoved { direction, column: target });
            }
        }

        let fall = cfg.fall_speed / cfg.tick_hz as f64;
        let fox_row = cfg.fox_row();
        let bottom = cfg.stage_height as f64;
        let mut collisions = Vec::new();
        let (fox_column, controllable) = (self.fox_column, self.controllable);
        self.entities.retain_mut(|e| {
            let before = e.row;
            e.row += fall;
            let crosses = before < fox_row && e.row >= fox_row;
            if crosses && controllable && e.column == fox_column {
                collisions.push(*e);
                return false;
            }
            if e.row >= bottom {
                kinds.push(EventKind::ItemExited { id: e.id });
                return false;
            }
            true
        });

        // cherries are credited before bombs so the zero floor is applied in event order
        collisions.sort_by_key(|e| (e.kind, e.id));
        let mut bomb_ended = false;
        for e in collisions {
            match e.kind {
                ItemKind::Cherry => {
                    self.score += cfg.cherry_points;
                    kinds.push(EventKind::CherryCaught { id: e.id });
                }
                ItemKind::Bomb => {
                    self.score = (self.score - cfg.bomb_penalty).max(0);
                    kinds.push(EventKind::BombHit { id: e.id });
                    bomb_ended |= cfg.bomb_mode == BombMode::EndSession;
                }
            }
        }

        let ending = ending_on_clock || bomb_ended;
        // draws are taken every tick so the item stream never depends on play
        let dt_s = 1.0 / cfg.tick_hz as f64;
        for (kind, rate) in [(ItemKind::Cherry, cfg.cherry_spawn_rate), (ItemKind::Bomb, cfg.bomb_spawn_rate)] {
            let u: f64 = self.rng.random();
            let column = self.rng.random_range(0..cfg.stage_width);
            if !ending && u < -(-rate * dt_s).exp_m1() {
                let id = self.next_id;
                self.next_id += 1;
                self.entities.push(Entity { id, kind, column, row: 0.0 });
                kinds.push(EventKind::ItemSpawned { id, item: kind, column });
            }
        }

        self.tick = next_tick;
        self.clock_ms = cfg.clock_ms(next_tick);
        let scene = cfg.scene_at(self.clock_ms);
        if scene != self.scene {
            self.scene = scene;
            kinds.push(EventKind::SceneChanged { to: scene });
        }

        if ending {
            // whatever is still falling leaves the stage with the session
            kinds.extend(self.entities.drain(..).map(|e| EventKind::ItemExited { id: e.id }));
            kinds.push(EventKind::SessionEnded { final_score: self.score });
            self.terminal = true;
        }

        let mut events: Vec<GameEvent> =
            kinds.into_iter().map(|kind| GameEvent { tick: self.tick, clock_ms: self.clock_ms, kind }).collect();
        events.sort_by_key(GameEvent::order_key);
        StepOutcome::Advanced(events)
    }
}
