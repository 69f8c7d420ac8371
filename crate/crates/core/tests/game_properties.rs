use std::collections::HashMap;

use holdfeel_core::game::*;
use holdfeel_core::TouchState;
use proptest::prelude::*;

fn touch_strategy() -> impl Strategy<Value = TouchState> {
    prop_oneof![Just(TouchState::NoTouch), Just(TouchState::Gentle), Just(TouchState::Strong)]
}

/// Short, busy sessions so a proptest case stays cheap.
fn fast_cfg(schedule: Vec<SceneSlot>) -> GameConfig {
    GameConfig {
        session_length_ms: 10_000,
        cherry_spawn_rate: 3.0,
        bomb_spawn_rate: 2.0,
        fall_speed: 6.0,
        scene_schedule: schedule,
        ..GameConfig::default()
    }
}

fn run(cfg: &GameConfig, seed: u64, script: &[(TouchState, f64)]) -> (Vec<GameEvent>, Vec<usize>) {
    let mut s = GameState::new_session(cfg, seed).unwrap();
    let mut events = Vec::new();
    let mut columns = Vec::new();
    let mut i = 0;
    while !s.is_terminal() {
        let (touch, roll) = script[i % script.len()];
        events.extend(s.step(&PairInput::new(touch, roll), cfg).into_events());
        columns.push(s.fox_column);
        i += 1;
    }
    (events, columns)
}

/// Score re-derived from the log alone, applying the floor event by event.
fn replayed_score(cfg: &GameConfig, events: &[GameEvent]) -> i64 {
    events.iter().fold(0, |score, e| match e.kind {
        EventKind::CherryCaught { .. } => score + cfg.cherry_points,
        EventKind::BombHit { .. } => (score - cfg.bomb_penalty).max(0),
        _ => score,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariants_under_input_fuzz(
        seed in any::<u64>(),
        script in prop::collection::vec((touch_strategy(), -180.0f64..=180.0), 1..64),
    ) {
        let cfg = fast_cfg(GameConfig::default().scene_schedule.into_iter().take(1).collect());
        let (events, columns) = run(&cfg, seed, &script);
        prop_assert!(columns.iter().all(|&c| c < cfg.stage_width));

        let mut seen: HashMap<u64, u32> = HashMap::new();
        let mut spawned = Vec::new();
        for e in &events {
            match e.kind {
                EventKind::ItemSpawned { id, .. } => spawned.push(id),
                EventKind::CherryCaught { id } | EventKind::BombHit { id } | EventKind::ItemExited { id } => {
                    *seen.entry(id).or_default() += 1;
                }
                _ => {}
            }
        }
        for id in &spawned {
            prop_assert_eq!(seen.get(id).copied(), Some(1), "item {} resolved wrongly", id);
        }
        prop_assert_eq!(seen.len(), spawned.len());

        let last = events.last().unwrap();
        let EventKind::SessionEnded { final_score } = last.kind else { panic!("no terminator") };
        prop_assert_eq!(final_score, replayed_score(&cfg, &events));
        prop_assert_eq!(last.clock_ms, 10_000.0);
        prop_assert!(events.windows(2).all(|w| w[0].order_key() <= w[1].order_key()));
    }

    #[test]
    fn never_touching_never_scores(seed in any::<u64>(), rolls in prop::collection::vec(-180.0f64..=180.0, 1..32)) {
        let cfg = fast_cfg(vec![SceneSlot { start_ms: 0, scene: Scene::Day }]);
        let script: Vec<_> = rolls.into_iter().map(|r| (TouchState::NoTouch, r)).collect();
        let (events, _) = run(&cfg, seed, &script);
        for e in &events {
            let forbidden = matches!(
                e.kind,
                EventKind::FoxMoved { .. } | EventKind::CherryCaught { .. } | EventKind::BombHit { .. }
            );
            prop_assert!(!forbidden);
        }
        let ended_at_zero = matches!(events.last().unwrap().kind, EventKind::SessionEnded { final_score: 0 });
        prop_assert!(ended_at_zero);
    }

    #[test]
    fn night_changes_nothing_but_the_scene(
        seed in any::<u64>(),
        script in prop::collection::vec((touch_strategy(), -90.0f64..=90.0), 1..32),
    ) {
        let day = fast_cfg(vec![SceneSlot { start_ms: 0, scene: Scene::Day }]);
        let mixed = fast_cfg(vec![
            SceneSlot { start_ms: 0, scene: Scene::Day },
            SceneSlot { start_ms: 3_000, scene: Scene::Night },
            SceneSlot { start_ms: 7_000, scene: Scene::Day },
        ]);
        let strip = |events: Vec<GameEvent>| -> Vec<GameEvent> {
            events.into_iter().filter(|e| !matches!(e.kind, EventKind::SceneChanged { .. })).collect()
        };
        let (a, _) = run(&day, seed, &script);
        let (b, _) = run(&mixed, seed, &script);
        prop_assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn same_inputs_same_log(seed in any::<u64>(), script in prop::collection::vec((touch_strategy(), -90.0f64..=90.0), 1..16)) {
        let cfg = fast_cfg(GameConfig::default().scene_schedule.into_iter().take(1).collect());
        prop_assert_eq!(run(&cfg, seed, &script), run(&cfg, seed, &script));
    }
}

#[test]
fn tick_count_matches_clock_for_other_rates() {
    for hz in [30u32, 50, 60, 120, 144] {
        let cfg = GameConfig { tick_hz: hz, ..GameConfig::default() };
        let (events, _) = run(&cfg, 1, &[(TouchState::NoTouch, 0.0)]);
        let end = events.last().unwrap();
        assert!(matches!(end.kind, EventKind::SessionEnded { .. }));
        assert_eq!(end.clock_ms, 120_000.0, "{hz} Hz");
    }
}
