use serde::{Deserialize, Serialize};

use super::config::{GameConfig, Scene};
use super::state::{GameState, ItemKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub id: u64,
    pub kind: ItemKind,
    pub column: usize,
    pub row: f64,
}

/// What the monitor shows. In the night scene the fox's column is withheld;
/// everything else is unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewModel {
    pub fox_column: Option<usize>,
    /// `true` while the pair is holding hands (fox opaque).
    pub opaque: bool,
    pub entities: Vec<EntityView>,
    pub score: i64,
    pub scene: Scene,
    pub time_remaining_ms: f64,
}

pub fn render_model(state: &GameState, cfg: &GameConfig) -> ViewModel {
    ViewModel {
        fox_column: (state.scene == Scene::Day).then_some(state.fox_column),
        opaque: state.controllable,
        entities: state
            .entities
            .iter()
            .map(|e| EntityView { id: e.id, kind: e.kind, column: e.column, row: e.row })
            .collect(),
        score: state.score,
        scene: state.scene,
        time_remaining_ms: (cfg.session_length_ms as f64 - state.clock_ms).max(0.0),
    }
}
