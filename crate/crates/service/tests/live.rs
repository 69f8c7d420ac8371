//! Scripted clients against a real server on a loopback port. Sessions are
//! short but run in real time.

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use holdfeel_core::game::{EventKind, GameConfig, Scene, SceneSlot};
use holdfeel_harness::{check_invariants, replay, SessionConfig};
use holdfeel_service::*;
use tokio::net::TcpStream;
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl Client {
    async fn connect(addr: &str) -> Client {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();
        Client { ws }
    }

    async fn send(&mut self, message: ClientMessage) {
        let text = serde_json::to_string(&ClientEnvelope::new(message, 0.0)).unwrap();
        self.ws.send(Message::text(text)).await.unwrap();
    }

    async fn hold(&mut self, held: bool, roll: f64) {
        self.send(ClientMessage::InputUpdate { touch_held: held, touch_firm: false, roll }).await;
    }

    /// Reply to an update; the server may already have closed after its last one.
    async fn try_hold(&mut self, held: bool, roll: f64) {
        let msg = ClientMessage::InputUpdate { touch_held: held, touch_firm: false, roll };
        let text = serde_json::to_string(&ClientEnvelope::new(msg, 0.0)).unwrap();
        let _ = self.ws.send(Message::text(text)).await;
    }

    /// Next server message as (raw text, parsed); `None` once the server closes.
    async fn recv(&mut self) -> Option<(String, ServerMessage)> {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(10), self.ws.next()).await.expect("server went quiet")?;
            match msg {
                Ok(Message::Text(t)) => {
                    let env: ServerEnvelope = serde_json::from_str(&t).unwrap();
                    assert_eq!(env.version, 1);
                    return Some((t.to_string(), env.message));
                }
                Ok(Message::Close(_)) | Err(_) => return None,
                Ok(_) => continue,
            }
        }
    }

    async fn expect_rejected(&mut self) -> String {
        loop {
            match self.recv().await.expect("connection closed") {
                (_, ServerMessage::Rejected { reason }) => return reason,
                _ => continue,
            }
        }
    }
}

fn config(session_ms: u64, night_from_ms: Option<u64>) -> SessionConfig {
    let mut schedule = vec![SceneSlot { start_ms: 0, scene: Scene::Day }];
    if let Some(t) = night_from_ms {
        schedule.push(SceneSlot { start_ms: t, scene: Scene::Night });
    }
    let mut cfg = SessionConfig { seed: 5, ..SessionConfig::default() };
    cfg.game = GameConfig { session_length_ms: session_ms, scene_schedule: schedule, ..GameConfig::default() };
    cfg
}

async fn start(cfg: SessionConfig, opts: ServiceOptions) -> (String, JoinHandle<ServiceOutcome>) {
    let server = Server::bind(cfg, "127.0.0.1:0", opts).await.unwrap();
    let addr = server.local_addr().unwrap().to_string();
    (addr, tokio::spawn(async move { server.run().await.unwrap() }))
}

async fn join(addr: &str, slot: u8) -> Client {
    let mut c = Client::connect(addr).await;
    c.send(ClientMessage::Join { slot, name: format!("p{slot}") }).await;
    c
}

#[derive(Default)]
struct Transcript {
    updates: Vec<String>,
    parsed: Vec<(u64, holdfeel_core::game::ViewModel, [f64; 2])>,
    events: Vec<holdfeel_core::game::GameEvent>,
    end: Option<(i64, EndReason)>,
}

/// Play until the session ends. `script` maps the tick of each update to an
/// optional (held, roll) input to send back.
async fn play(mut c: Client, script: impl Fn(u64) -> Option<(bool, f64)>) -> Transcript {
    let mut t = Transcript::default();
    while let Some((raw, msg)) = c.recv().await {
        match msg {
            ServerMessage::StateUpdate { tick, view, amplitudes, .. } => {
                t.updates.push(raw);
                t.parsed.push((tick, view, amplitudes));
                if let Some((held, roll)) = script(tick) {
                    c.try_hold(held, roll).await;
                }
            }
            ServerMessage::Event { event } => t.events.push(event),
            ServerMessage::SessionEnd { final_score, reason } => t.end = Some((final_score, reason)),
            _ => {}
        }
    }
    t
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn two_players_steer_and_feel_the_fox_at_night() {
    let (addr, server) = start(config(3_000, Some(1_500)), ServiceOptions::default()).await;
    let a = join(&addr, 1).await;
    let b = join(&addr, 2).await;
    // both hold and sweep right then left, half a second each way
    let sweep = |tick: u64| Some((true, if (tick / 30) % 2 == 0 { 45.0 } else { -45.0 }));
    let (ta, tb) = tokio::join!(play(a, sweep), play(b, sweep));
    let outcome = server.await.unwrap();

    // fan-out equality, strictly increasing ticks
    assert!(!ta.updates.is_empty());
    assert_eq!(ta.updates, tb.updates);
    assert!(ta.parsed.windows(2).all(|w| w[0].0 < w[1].0));
    assert_eq!(ta.events, tb.events);

    // first step goes right from the centre
    let first = ta.events.iter().find(|e| matches!(e.kind, EventKind::FoxMoved { .. })).expect("fox moved");
    assert!(matches!(first.kind, EventKind::FoxMoved { column: 5, .. }));

    // night hides the fox but the wrists still buzz after each step
    let night: Vec<_> = ta.parsed.iter().filter(|(_, v, _)| v.scene == Scene::Night).collect();
    assert!(!night.is_empty());
    assert!(night.iter().all(|(_, v, _)| v.fox_column.is_none()));
    assert!(ta.parsed.iter().filter(|(_, v, _)| v.scene == Scene::Day).all(|(_, v, _)| v.fox_column.is_some()));
    let night_moves: Vec<u64> = ta
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::FoxMoved { .. }) && e.clock_ms > 1_500.0)
        .map(|e| e.tick)
        .collect();
    assert!(!night_moves.is_empty());
    for game_tick in night_moves {
        // engine tick of that step is game tick − 1 (no warm-up)
        let felt = ta
            .parsed
            .iter()
            .filter(|(t, _, _)| *t + 1 >= game_tick && *t < game_tick + 10)
            .any(|(_, _, amps)| amps[0] > 0.0 && amps[1] > 0.0);
        assert!(felt, "no amplitude after the step at game tick {game_tick}");
    }

    // the live log is a normal session log
    assert_eq!(ta.end, Some((outcome.final_score, EndReason::Completed)));
    assert_eq!(outcome.reason, EndReason::Completed);
    replay(&outcome.log).unwrap();
    check_invariants(&outcome.log).unwrap();
    let logged: Vec<_> = outcome.log.events().map(|(_, e)| e.clone()).collect();
    assert_eq!(logged, ta.events);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn lobby_rules_and_no_input_means_no_motion() {
    let (addr, server) = start(config(1_000, None), ServiceOptions::default()).await;

    // wrong endpoint
    assert!(tokio_tungstenite::connect_async(format!("ws://{addr}/nope")).await.is_err());

    let mut early = Client::connect(&addr).await;
    early.hold(true, 45.0).await;
    assert!(early.expect_rejected().await.contains("join"));
    early.send(ClientMessage::Join { slot: 3, name: "x".into() }).await;
    assert!(early.expect_rejected().await.contains("slot"));
    early.ws.send(Message::text("{\"type\":\"dance\"}")).await.unwrap();
    assert!(early.expect_rejected().await.contains("malformed"));
    drop(early);

    let mut a = join(&addr, 1).await;
    a.send(ClientMessage::InputUpdate { touch_held: false, touch_firm: true, roll: 0.0 }).await;
    assert!(a.expect_rejected().await.contains("touch_firm"));
    a.send(ClientMessage::Join { slot: 2, name: "again".into() }).await;
    assert!(a.expect_rejected().await.contains("already"));

    let b = join(&addr, 2).await;
    let mut third = Client::connect(&addr).await;
    third.send(ClientMessage::Join { slot: 1, name: "late".into() }).await;
    assert!(third.expect_rejected().await.contains("taken"));

    let (ta, _) = tokio::join!(play(a, |_| None), play(b, |_| None));
    drop(third);
    let outcome = server.await.unwrap();
    assert!(!ta.parsed.is_empty());
    assert!(ta.parsed.iter().all(|(_, v, _)| v.fox_column == Some(4) && !v.opaque));
    assert!(!ta.events.iter().any(|e| matches!(e.kind, EventKind::FoxMoved { .. })));
    check_invariants(&outcome.log).unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn releasing_hands_clears_the_opaque_flag() {
    let (addr, server) = start(config(1_500, None), ServiceOptions::default()).await;
    let a = join(&addr, 1).await;
    let b = join(&addr, 2).await;
    // player 1 lets go after a third of a second
    let (ta, _) = tokio::join!(play(a, |t| Some((t < 20, 0.0))), play(b, |_| Some((true, 0.0))));
    server.await.unwrap();
    let first_opaque = ta.parsed.iter().position(|(_, v, _)| v.opaque).expect("pair held hands");
    let released = ta.parsed[first_opaque..].iter().position(|(_, v, _)| !v.opaque).expect("pair let go");
    assert!(ta.parsed[first_opaque + released..].iter().all(|(_, v, _)| !v.opaque));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn dropped_player_ends_the_session_after_grace() {
    let opts = ServiceOptions { grace_ms: 200, ..ServiceOptions::default() };
    let (addr, server) = start(config(60_000, None), opts).await;
    let mut a = join(&addr, 1).await;
    let mut b = join(&addr, 2).await;
    let mut updates = 0;
    while updates < 10 {
        if let Some((_, ServerMessage::StateUpdate { .. })) = b.recv().await {
            updates += 1;
        }
    }
    b.ws.close(None).await.unwrap();

    let mut paused = false;
    let mut end = None;
    while let Some((_, msg)) = a.recv().await {
        match msg {
            ServerMessage::Paused { slot: 2, grace_ms: 200 } => paused = true,
            ServerMessage::SessionEnd { reason, .. } => end = Some(reason),
            _ => {}
        }
    }
    assert!(paused);
    assert_eq!(end, Some(EndReason::PlayerLeft));
    let outcome = server.await.unwrap();
    assert_eq!(outcome.reason, EndReason::PlayerLeft);
    assert!(!outcome.log.events().any(|(_, e)| matches!(e.kind, EventKind::SessionEnded { .. })));
    replay(&outcome.log).unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn rejoining_within_grace_resumes() {
    let opts = ServiceOptions { grace_ms: 5_000, ..ServiceOptions::default() };
    let (addr, server) = start(config(1_000, None), opts).await;
    let mut a = join(&addr, 1).await;
    let mut b = join(&addr, 2).await;
    while !matches!(b.recv().await, Some((_, ServerMessage::StateUpdate { .. }))) {}
    b.send(ClientMessage::Leave).await;

    let mut saw_pause = false;
    loop {
        match a.recv().await.unwrap().1 {
            ServerMessage::Paused { .. } => saw_pause = true,
            ServerMessage::Lobby { slots: [Some(_), None], .. } if saw_pause => break,
            _ => {}
        }
    }
    b.send(ClientMessage::Join { slot: 2, name: "back".into() }).await;
    let mut resumed = false;
    let mut end = None;
    while let Some((_, msg)) = a.recv().await {
        match msg {
            ServerMessage::Resumed => resumed = true,
            ServerMessage::SessionEnd { reason, .. } => end = Some(reason),
            _ => {}
        }
    }
    assert!(resumed);
    assert_eq!(end, Some(EndReason::Completed));
    let outcome = server.await.unwrap();
    check_invariants(&outcome.log).unwrap();
}

#[tokio::test]
async fn invalid_config_is_refused_before_binding() {
    let mut cfg = SessionConfig::default();
    cfg.game.stage_width = 1;
    let err = Server::bind(cfg, "127.0.0.1:0", ServiceOptions::default()).await.err().unwrap();
    assert!(err.to_string().contains("game.stage_width"));
}
