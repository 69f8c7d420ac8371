//! The fox-catching game: touch-gated control, roll steering, falling
//! cherries and bombs, scene schedule, scoring and the session clock.

mod config;
mod input;
mod state;
mod view;

pub use config::{BombMode, GameConfig, GameConfigError, Scene, SceneSlot};
pub use input::{combine_inputs, PairInput};
pub use state::{Direction, Entity, EventKind, GameEvent, GameState, ItemKind, StepOutcome};
pub use view::{render_model, EntityView, ViewModel};
