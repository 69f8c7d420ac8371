//! Summary numbers and invariant checks computed from a session log alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use holdfeel_core::game::{BombMode, EventKind, ItemKind, Scene};
use holdfeel_core::haptics::perceived_position;
use serde::{Deserialize, Serialize};

use crate::bots::estimate_position;
use crate::log::SessionLog;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub final_score: i64,
    /// Score re-derived from catches and hits with the zero floor.
    pub recomputed_score: i64,
    pub session_ended_ms: Option<f64>,
    pub cherries_spawned: u64,
    pub cherries_caught: u64,
    pub bombs_spawned: u64,
    pub bombs_hit: u64,
    pub items_exited: u64,
    pub fox_moves: u64,
    pub pulses: u64,
    /// Cherries whose fate was decided during a night scene.
    pub night_cherries_resolved: u64,
    pub night_cherries_caught: u64,
    pub night_catch_rate: Option<f64>,
    /// |p̂ − p| per pulse, with p̂ read off the pulse and snapped to the stage grid.
    pub localization_errors: Vec<f64>,
    pub mean_localization_error: Option<f64>,
    /// Largest |p̂ − p| before snapping.
    pub max_raw_localization_error: Option<f64>,
}

impl Metrics {
    pub fn score_consistent(&self) -> bool {
        self.final_score == self.recomputed_score
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        writeln!(f, "final score        {}", self.final_score)?;
        writeln!(f, "recomputed score   {}", self.recomputed_score)?;
        writeln!(f, "session ended at   {}", self.session_ended_ms.map_or_else(|| "n/a".into(), |v| format!("{v} ms")))?;
        writeln!(f, "cherries           {} caught / {} spawned", self.cherries_caught, self.cherries_spawned)?;
        writeln!(f, "bombs              {} hit / {} spawned", self.bombs_hit, self.bombs_spawned)?;
        writeln!(f, "items exited       {}", self.items_exited)?;
        writeln!(f, "fox moves          {}", self.fox_moves)?;
        writeln!(f, "pulses             {}", self.pulses)?;
        writeln!(
            f,
            "night catch rate   {} ({} of {})",
            opt(self.night_catch_rate),
            self.night_cherries_caught,
            self.night_cherries_resolved
        )?;
        writeln!(f, "mean loc. error    {}", opt(self.mean_localization_error))?;
        write!(f, "max raw loc. error {}", opt(self.max_raw_localization_error))
    }
}

pub fn metrics(log: &SessionLog) -> Metrics {
    let cfg = log.config();
    let width = cfg.game.stage_width;
    let mut m = Metrics::default();
    let mut scene = cfg.game.scene_at(0.0);
    let mut kinds: BTreeMap<u64, ItemKind> = BTreeMap::new();
    let mut ended_score = None;
    let mut moves: BTreeMap<u64, Vec<usize>> = BTreeMap::new();

    for (tick, e) in log.events() {
        match e.kind {
            EventKind::ItemSpawned { id, item, .. } => {
                kinds.insert(id, item);
                match item {
                    ItemKind::Cherry => m.cherries_spawned += 1,
                    ItemKind::Bomb => m.bombs_spawned += 1,
                }
            }
            EventKind::CherryCaught { .. } => {
                m.cherries_caught += 1;
                m.recomputed_score += cfg.game.cherry_points;
                if scene == Scene::Night {
                    m.night_cherries_resolved += 1;
                    m.night_cherries_caught += 1;
                }
            }
            EventKind::BombHit { .. } => {
                m.bombs_hit += 1;
                m.recomputed_score = (m.recomputed_score - cfg.game.bomb_penalty).max(0);
            }
            EventKind::ItemExited { id } => {
                m.items_exited += 1;
                if scene == Scene::Night && kinds.get(&id) == Some(&ItemKind::Cherry) {
                    m.night_cherries_resolved += 1;
                }
            }
            EventKind::FoxMoved { column, .. } => {
                m.fox_moves += 1;
                moves.entry(tick).or_default().push(column);
            }
            EventKind::SceneChanged { to } => scene = to,
            EventKind::SessionEnded { final_score } => {
                ended_score = Some(final_score);
                m.session_ended_ms = Some(e.clock_ms);
            }
        }
    }
    m.final_score = ended_score.unwrap_or(m.recomputed_score);
    m.night_catch_rate =
        (m.night_cherries_resolved > 0).then(|| m.night_cherries_caught as f64 / m.night_cherries_resolved as f64);

    let law = cfg.haptics.law;
    let mut max_raw: Option<f64> = None;
    let mut pending = moves;
    for (tick, _column, pair) in log.haptics() {
        m.pulses += 1;
        // truth is the column the fox actually moved to, not the one the record claims
        let Some(truth) = pending.get_mut(&tick).and_then(|cols| (!cols.is_empty()).then(|| cols.remove(0))) else {
            continue;
        };
        let p = truth as f64 / (width - 1) as f64;
        if let Some(est) = estimate_position(pair, law, width) {
            m.localization_errors.push((est - p).abs());
        }
        if let Ok(raw) = perceived_position(pair, law) {
            let err = (raw.value() - p).abs();
            max_raw = Some(max_raw.map_or(err, |m: f64| m.max(err)));
        }
    }
    m.max_raw_localization_error = max_raw;
    if !m.localization_errors.is_empty() {
        m.mean_localization_error =
            Some(m.localization_errors.iter().sum::<f64>() / m.localization_errors.len() as f64);
    }
    m
}

/// Every cross-cutting invariant a finished log must satisfy. Returns all
/// violations found.
pub fn check_invariants(log: &SessionLog) -> Result<(), Vec<String>> {
    let cfg = log.config();
    let game = &cfg.game;
    let mut errs = Vec::new();

    // entity conservation: one spawn, then exactly one fate
    let mut spawned: BTreeMap<u64, ItemKind> = BTreeMap::new();
    let mut resolved: BTreeSet<u64> = BTreeSet::new();
    let mut resolve = |id: u64, want: Option<ItemKind>, errs: &mut Vec<String>, spawned: &BTreeMap<u64, ItemKind>| {
        match spawned.get(&id) {
            None => errs.push(format!("item {id} resolved without being spawned")),
            Some(k) if want.is_some_and(|w| w != *k) => errs.push(format!("item {id} resolved as the wrong kind")),
            _ => {}
        }
        if !resolved.insert(id) {
            errs.push(format!("item {id} resolved twice"));
        }
    };
    let mut score = 0i64;
    let mut ended = Vec::new();
    let mut last_key = None;
    let touching: BTreeMap<u64, bool> = log.inputs().map(|(t, i)| (t, i.touch.is_touching())).collect();
    let mut fox_events: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let event_count = log.events().count();

    for (n, (tick, e)) in log.events().enumerate() {
        let key = (tick, e.order_key());
        if last_key.is_some_and(|k| key < k) {
            errs.push(format!("event {n} out of order"));
        }
        last_key = Some(key);
        let gated = matches!(e.kind, EventKind::FoxMoved { .. } | EventKind::CherryCaught { .. } | EventKind::BombHit { .. });
        if gated && touching.get(&tick) != Some(&true) {
            errs.push(format!("tick {tick}: {:?} without touch", e.kind));
        }
        match e.kind {
            EventKind::ItemSpawned { id, item, column } => {
                if spawned.insert(id, item).is_some() {
                    errs.push(format!("item {id} spawned twice"));
                }
                if column >= game.stage_width {
                    errs.push(format!("item {id} spawned off stage at column {column}"));
                }
            }
            EventKind::CherryCaught { id } => {
                resolve(id, Some(ItemKind::Cherry), &mut errs, &spawned);
                score += game.cherry_points;
            }
            EventKind::BombHit { id } => {
                resolve(id, Some(ItemKind::Bomb), &mut errs, &spawned);
                score = (score - game.bomb_penalty).max(0);
            }
            EventKind::ItemExited { id } => resolve(id, None, &mut errs, &spawned),
            EventKind::FoxMoved { column, .. } => {
                if column >= game.stage_width {
                    errs.push(format!("fox moved off stage to column {column}"));
                }
                fox_events.entry(tick).or_default().push(column);
            }
            EventKind::SceneChanged { .. } => {}
            EventKind::SessionEnded { final_score } => {
                ended.push((n, e.clock_ms));
                if final_score != score {
                    errs.push(format!("session ended with score {final_score}, events account for {score}"));
                }
            }
        }
    }

    match ended.as_slice() {
        [] => errs.push("no session_ended event".into()),
        [(n, clock)] => {
            if *n + 1 != event_count {
                errs.push("session_ended is not the last event".into());
            }
            if game.bomb_mode == BombMode::Penalty && *clock != game.session_length_ms as f64 {
                errs.push(format!("session ended at {clock} ms, expected {} ms", game.session_length_ms));
            }
            let open: Vec<_> = spawned.keys().filter(|id| !resolved.contains(id)).collect();
            if !open.is_empty() {
                errs.push(format!("{} items never resolved, first {}", open.len(), open[0]));
            }
        }
        _ => errs.push(format!("{} session_ended events", ended.len())),
    }

    // closed loop: one pulse per fox step, rendering that fox column exactly
    let mut pulses: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let width = game.stage_width;
    for (tick, column, pair) in log.haptics() {
        pulses.entry(tick).or_default().push(column);
        match cfg.haptics.pulse_for(column, width) {
            Ok(expected) if expected == *pair => {}
            _ => errs.push(format!("tick {tick}: pulse {pair:?} is not the rendering of column {column}")),
        }
        let p = column as f64 / (width - 1) as f64;
        if estimate_position(pair, cfg.haptics.law, width) != Some(p) {
            errs.push(format!("tick {tick}: pulse does not localize to column {column}"));
        }
    }
    if pulses != fox_events {
        let n_pulses: usize = pulses.values().map(Vec::len).sum();
        let n_moves: usize = fox_events.values().map(Vec::len).sum();
        errs.push(format!("pulses ({n_pulses}) do not match fox steps ({n_moves}) one to one"));
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}
