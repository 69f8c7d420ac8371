//! Live session server.
//!
//! Connection tasks only parse and forward; every state change happens in
//! [`Server::run`], which owns the [`SessionEngine`] and ticks it at the
//! configured rate.

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use holdfeel_harness::{ConfigErrors, PlayerAction, SessionConfig, SessionEngine, SessionLog};
use thiserror::Error;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc::{self, UnboundedReceiver, UnboundedSender};
use tokio::time::{sleep_until, Instant};
use tokio_tungstenite::tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tokio_tungstenite::tungstenite::http::StatusCode;
use tokio_tungstenite::tungstenite::Message;

use crate::messages::{input_to_grip, ClientEnvelope, ClientMessage, EndReason, ServerEnvelope, ServerMessage};

pub const SESSION_PATH: &str = "/session";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceOptions {
    /// How long a session waits for a dropped player before ending.
    pub grace_ms: u64,
    /// Ticks run back to back when the loop falls behind; beyond this the
    /// session slows down instead.
    pub max_catch_up_ticks: u32,
    /// Where to write the session log when the session ends.
    pub log_path: Option<PathBuf>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self { grace_ms: 10_000, max_catch_up_ticks: 5, log_path: None }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error("writing session log: {0}")]
    LogWrite(io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceOutcome {
    pub log: SessionLog,
    pub reason: EndReason,
    pub final_score: i64,
}

type ConnId = u64;

#[derive(Debug)]
enum Inbound {
    Connected(UnboundedSender<String>),
    Message(ClientEnvelope),
    Malformed(String),
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Lobby,
    Running,
    Paused { until: Instant },
    Ended(EndReason),
}

#[derive(Debug, Clone, Copy)]
struct LatestInput {
    held: bool,
    firm: bool,
    roll: f64,
}

pub struct Server {
    listener: TcpListener,
    cfg: SessionConfig,
    opts: ServiceOptions,
}

impl Server {
    pub async fn bind(cfg: SessionConfig, addr: &str, opts: ServiceOptions) -> Result<Self, ServiceError> {
        cfg.validate()?;
        let listener =
            TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr: addr.to_string(), source })?;
        Ok(Self { listener, cfg, opts })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serve one session to completion (or until a player fails to return).
    pub async fn run(self) -> Result<ServiceOutcome, ServiceError> {
        let (tx, rx) = mpsc::unbounded_channel();
        let listener = self.listener;
        let acceptor = tokio::spawn(async move {
            let mut next_id: ConnId = 0;
            while let Ok((stream, _)) = listener.accept().await {
                next_id += 1;
                tokio::spawn(connection(stream, next_id, tx.clone()));
            }
        });
        let mut game = Session::new(&self.cfg, &self.opts)?;
        let reason = game.run(rx).await;
        acceptor.abort();

        let final_score = game.engine.game().score;
        let log = game.engine.finish();
        if let Some(path) = &self.opts.log_path {
            log.write_to(path).map_err(ServiceError::LogWrite)?;
        }
        Ok(ServiceOutcome { log, reason, final_score })
    }
}

fn check_path(req: &Request, resp: Response) -> Result<Response, ErrorResponse> {
    if req.uri().path() == SESSION_PATH {
        Ok(resp)
    } else {
        let mut err = ErrorResponse::new(Some(format!("websocket endpoint is {SESSION_PATH}")));
        *err.status_mut() = StatusCode::NOT_FOUND;
        Err(err)
    }
}

async fn connection(stream: TcpStream, id: ConnId, inbound: UnboundedSender<(ConnId, Inbound)>) {
    let Ok(ws) = tokio_tungstenite::accept_hdr_async(stream, check_path).await else { return };
    let (mut sink, mut source) = ws.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    if inbound.send((id, Inbound::Connected(out_tx))).is_err() {
        return;
    }
    loop {
        tokio::select! {
            out = out_rx.recv() => match out {
                Some(text) => {
                    if sink.send(Message::text(text)).await.is_err() {
                        break;
                    }
                }
                None => {
                    let _ = sink.close().await;
                    // wait for the client's close reply; dropping the socket with
                    // unread input would reset it and lose our last messages
                    let drain = async { while let Some(Ok(_)) = source.next().await {} };
                    let _ = tokio::time::timeout(Duration::from_secs(1), drain).await;
                    break;
                }
            },
            msg = source.next() => {
                let forward = match msg {
                    Some(Ok(Message::Text(text))) => match serde_json::from_str::<ClientEnvelope>(&text) {
                        Ok(env) => Inbound::Message(env),
                        Err(e) => Inbound::Malformed(e.to_string()),
                    },
                    Some(Ok(Message::Binary(_))) => Inbound::Malformed("binary messages are not part of the protocol".into()),
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                    Some(Ok(_)) => continue,
                };
                if inbound.send((id, forward)).is_err() {
                    break;
                }
            }
        }
    }
    let _ = inbound.send((id, Inbound::Disconnected));
}

struct Session {
    engine: SessionEngine,
    grace: Duration,
    period: Duration,
    max_catch_up: u64,
    phase: Phase,
    conns: HashMap<ConnId, UnboundedSender<String>>,
    slots: [Option<(ConnId, String)>; 2],
    inputs: [Option<LatestInput>; 2],
    /// Pacing reference: tick `paced` is due at `epoch + paced * period`.
    epoch: Instant,
    paced: u64,
}

impl Session {
    fn new(cfg: &SessionConfig, opts: &ServiceOptions) -> Result<Self, ConfigErrors> {
        Ok(Self {
            engine: SessionEngine::new(cfg)?,
            grace: Duration::from_millis(opts.grace_ms),
            period: Duration::from_secs_f64(1.0 / cfg.game.tick_hz as f64),
            max_catch_up: opts.max_catch_up_ticks.max(1) as u64,
            phase: Phase::Lobby,
            conns: HashMap::new(),
            slots: [None, None],
            inputs: [None, None],
            epoch: Instant::now(),
            paced: 0,
        })
    }

    async fn run(&mut self, mut inbound: UnboundedReceiver<(ConnId, Inbound)>) -> EndReason {
        loop {
            if let Phase::Ended(reason) = self.phase {
                self.shut_down(&mut inbound).await;
                return reason;
            }
            let deadline = match self.phase {
                Phase::Running => Some(self.epoch + self.period * (self.paced + 1) as u32),
                Phase::Paused { until } => Some(until),
                _ => None,
            };
            tokio::select! {
                msg = inbound.recv() => match msg {
                    Some((id, m)) => self.handle(id, m),
                    // the acceptor is gone; nobody can ever join again
                    None => self.phase = Phase::Ended(EndReason::PlayerLeft),
                },
                _ = sleep_until(deadline.unwrap_or_else(Instant::now)), if deadline.is_some() => self.on_deadline(),
            }
        }
    }

    fn on_deadline(&mut self) {
        match self.phase {
            Phase::Running => {
                let elapsed = Instant::now().saturating_duration_since(self.epoch);
                let due = (elapsed.as_secs_f64() / self.period.as_secs_f64()).floor() as u64;
                let behind = due.saturating_sub(self.paced);
                let n = behind.clamp(1, self.max_catch_up);
                for _ in 0..n {
                    self.tick();
                    if !matches!(self.phase, Phase::Running) {
                        return;
                    }
                }
                self.paced += n;
                if behind > n {
                    // too far behind: give up the backlog and run slow
                    self.epoch += self.period * (behind - n) as u32;
                }
            }
            Phase::Paused { .. } => self.end(EndReason::PlayerLeft),
            _ => {}
        }
    }

    fn tick(&mut self) {
        let actions = self.inputs.map(|input| match input {
            Some(i) => PlayerAction { grip: input_to_grip(i.held, i.firm), roll_deg: i.roll },
            None => PlayerAction::RELEASED,
        });
        let report = self.engine.step(actions);
        self.broadcast(ServerMessage::StateUpdate {
            tick: report.tick,
            view: report.view,
            amplitudes: report.wrist_amplitudes,
            pulse: report.pulse,
        });
        for event in report.events {
            self.broadcast(ServerMessage::Event { event });
        }
        if self.engine.is_finished() {
            self.end(EndReason::Completed);
        }
    }

    fn end(&mut self, reason: EndReason) {
        self.broadcast(ServerMessage::SessionEnd { final_score: self.engine.game().score, reason });
        self.phase = Phase::Ended(reason);
    }

    /// Close every connection and give them a moment to flush.
    async fn shut_down(&mut self, inbound: &mut UnboundedReceiver<(ConnId, Inbound)>) {
        let mut open = self.conns.len();
        self.conns.clear();
        let deadline = Instant::now() + Duration::from_secs(2);
        while open > 0 {
            match tokio::time::timeout_at(deadline, inbound.recv()).await {
                Ok(Some((_, Inbound::Disconnected))) => open -= 1,
                Ok(Some((_, Inbound::Connected(_)))) => open += 1,
                Ok(Some(_)) => {}
                Ok(None) | Err(_) => break,
            }
        }
    }

    fn send(&self, id: ConnId, msg: ServerMessage) {
        if let Some(tx) = self.conns.get(&id) {
            let _ = tx.send(ServerEnvelope::new(msg).to_json());
        }
    }

    /// Serialized once so every client receives the same bytes.
    fn broadcast(&self, msg: ServerMessage) {
        let text = ServerEnvelope::new(msg).to_json();
        for tx in self.conns.values() {
            let _ = tx.send(text.clone());
        }
    }

    fn lobby(&self) -> ServerMessage {
        ServerMessage::Lobby {
            slots: self.slots.clone().map(|s| s.map(|(_, name)| name)),
            started: !matches!(self.phase, Phase::Lobby),
        }
    }

    fn slot_of(&self, id: ConnId) -> Option<usize> {
        self.slots.iter().position(|s| s.as_ref().is_some_and(|(c, _)| *c == id))
    }

    fn reject(&self, id: ConnId, reason: impl Into<String>) {
        self.send(id, ServerMessage::Rejected { reason: reason.into() });
    }

    fn handle(&mut self, id: ConnId, msg: Inbound) {
        match msg {
            Inbound::Connected(tx) => {
                self.conns.insert(id, tx);
                self.send(id, self.lobby());
            }
            Inbound::Malformed(why) => self.reject(id, format!("malformed message: {why}")),
            Inbound::Disconnected => {
                self.conns.remove(&id);
                self.release(id);
            }
            Inbound::Message(env) => {
                if let Err(why) = env.validate() {
                    return self.reject(id, why);
                }
                match env.message {
                    ClientMessage::Join { slot, name } => self.join(id, slot as usize - 1, name),
                    ClientMessage::InputUpdate { touch_held, touch_firm, roll } => match self.slot_of(id) {
                        Some(s) => self.inputs[s] = Some(LatestInput { held: touch_held, firm: touch_firm, roll }),
                        None => self.reject(id, "join a slot before sending input"),
                    },
                    ClientMessage::Leave => self.release(id),
                }
            }
        }
    }

    fn join(&mut self, id: ConnId, slot: usize, name: String) {
        if self.slot_of(id).is_some() {
            return self.reject(id, "already joined");
        }
        if self.slots[slot].is_some() {
            return self.reject(id, format!("slot {} is taken", slot + 1));
        }
        self.slots[slot] = Some((id, name));
        self.inputs[slot] = None;
        let full = self.slots.iter().all(Option::is_some);
        match self.phase {
            Phase::Lobby if full => self.start_clock(),
            Phase::Paused { .. } if full => {
                self.start_clock();
                self.broadcast(ServerMessage::Resumed);
            }
            _ => {}
        }
        self.broadcast(self.lobby());
    }

    fn release(&mut self, id: ConnId) {
        let Some(slot) = self.slot_of(id) else { return };
        self.slots[slot] = None;
        self.inputs[slot] = None;
        if self.phase == Phase::Running {
            self.phase = Phase::Paused { until: Instant::now() + self.grace };
            self.broadcast(ServerMessage::Paused { slot: slot as u8 + 1, grace_ms: self.grace.as_millis() as u64 });
        }
        self.broadcast(self.lobby());
    }

    fn start_clock(&mut self) {
        self.phase = Phase::Running;
        self.epoch = Instant::now();
        self.paced = 0;
    }
}
