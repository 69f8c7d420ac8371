//! One session's tick loop: players → channel → devices → radio → host →
//! game → haptics → radio → devices.
//!
//! The engine knows nothing about where player actions come from; the
//! headless runner feeds it bot actions and the live server feeds it client
//! input. Both get the same log.

use holdfeel_core::channel::{classify, contact_area_for, signal_strength, ContactInput, SignalStrength};
use holdfeel_core::device::{roll_from_accel, DeviceRole, DeviceState, WristPose};
use holdfeel_core::game::{combine_inputs, render_model, EventKind, GameEvent, GameState, ViewModel};
use holdfeel_core::protocol::{
    accel_from_wire, amplitude_to_wire, decode_command, decode_telemetry, encode_command, encode_telemetry,
    gyro_from_wire, strength_from_wire, CommandFrame, TelemetryFrame, Transport, TransportStats, PROTOCOL_VERSION,
};
use holdfeel_core::rng::{self, StreamRng};
use holdfeel_core::{ActuatorPair, TouchState};
use serde::{Deserialize, Serialize};

use crate::bots::{Observation, PlayerAction};
use crate::config::{ConfigErrors, SessionConfig};
use crate::log::{Link, LogHeader, Record, SessionLog};

/// Device ids on the wire. The left wrist carries the transmitter.
pub const DEVICE_IDS: [u8; 2] = [1, 2];
const ROLES: [DeviceRole; 2] = [DeviceRole::Transmitter, DeviceRole::Receiver];

const LED_HOLDING: [u8; 3] = [0, 255, 0];
const LED_RELEASED: [u8; 3] = [255, 0, 0];

/// What happened in one engine tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickReport {
    pub tick: u64,
    /// `false` during warm-up ticks and after the session has ended.
    pub game_stepped: bool,
    pub events: Vec<GameEvent>,
    /// Pulse rendered this tick, if the fox moved.
    pub pulse: Option<ActuatorPair>,
    pub view: ViewModel,
    /// LRA amplitude each wrist is currently playing (left, right).
    pub wrist_amplitudes: [f64; 2],
    /// Touch state as classified by the host.
    pub host_touch: TouchState,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub uplink: [TransportStats; 2],
    pub downlink: [TransportStats; 2],
    pub decode_errors: u64,
}

#[derive(Debug, Clone)]
struct Host {
    latest: [Option<TelemetryFrame>; 2],
    touch: TouchState,
    decode_errors: u64,
    command_seq: [u16; 2],
}

#[derive(Debug, Clone)]
pub struct SessionEngine {
    cfg: SessionConfig,
    game: GameState,
    devices: [DeviceState; 2],
    uplink: [Transport; 2],
    downlink: [Transport; 2],
    channel_rng: StreamRng,
    imu_rng: [StreamRng; 2],
    host: Host,
    tick: u64,
    records: Vec<Record>,
}

impl SessionEngine {
    pub fn new(cfg: &SessionConfig) -> Result<Self, ConfigErrors> {
        cfg.validate()?;
        let seed = cfg.seed;
        let link = |label: &str| {
            Transport::new(cfg.transport, rng::stream(seed, label)).expect("transport config validated above")
        };
        Ok(Self {
            cfg: cfg.clone(),
            game: GameState::new_session(&cfg.game, seed).expect("game config validated above"),
            devices: [0, 1].map(|i| DeviceState::new(DEVICE_IDS[i], ROLES[i])),
            uplink: [link("link.up.1"), link("link.up.2")],
            downlink: [link("link.down.1"), link("link.down.2")],
            channel_rng: rng::stream(seed, "channel.strength"),
            imu_rng: [rng::stream(seed, "device.1.imu"), rng::stream(seed, "device.2.imu")],
            host: Host { latest: [None, None], touch: TouchState::NoTouch, decode_errors: 0, command_seq: [0, 0] },
            tick: 0,
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn game(&self) -> &GameState {
        &self.game
    }

    pub fn devices(&self) -> &[DeviceState; 2] {
        &self.devices
    }

    /// Engine ticks taken so far, warm-up included.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.game.is_terminal()
    }

    pub fn view(&self) -> ViewModel {
        render_model(&self.game, &self.cfg.game)
    }

    pub fn link_stats(&self) -> LinkStats {
        LinkStats {
            uplink: [self.uplink[0].stats(), self.uplink[1].stats()],
            downlink: [self.downlink[0].stats(), self.downlink[1].stats()],
            decode_errors: self.host.decode_errors,
        }
    }

    /// What a player sees before acting. The fox column is withheld unless
    /// `sees_fox`.
    pub fn observation(&self, sees_fox: bool, pulse: Option<ActuatorPair>) -> Observation {
        Observation {
            clock_ms: self.game.clock_ms,
            scene: self.game.scene,
            controllable: self.game.controllable,
            entities: self.view().entities,
            fox_column: sees_fox.then_some(self.game.fox_column),
            pulse,
        }
    }

    fn now_ms(&self) -> f64 {
        self.tick as f64 * 1000.0 / self.cfg.game.tick_hz as f64
    }

    fn log_frame(&self, out: &mut Vec<Record>, link: Link, device_id: u8, bytes: &[u8]) {
        if self.cfg.log.frames {
            out.push(Record::Frame { tick: self.tick, link, device_id, hex: hex::encode(bytes) });
        }
    }

    pub fn step(&mut self, actions: [PlayerAction; 2]) -> TickReport {
        let now = self.now_ms();
        let dt = self.cfg.game.tick_ms();
        let mut out = Vec::new();

        // wrists and the body channel between them
        for (device, action) in self.devices.iter_mut().zip(actions) {
            let roll = if action.roll_deg.is_nan() { 0.0 } else { action.roll_deg.clamp(-180.0, 180.0) };
            device.pose = WristPose::following(&device.pose, roll, dt).expect("roll clamped to range");
        }
        let grip = actions[0].grip.min(actions[1].grip);
        let ch = &self.cfg.channel;
        let area = contact_area_for(grip, &ch.classifier, ch.saturation_k_cm2);
        let contact = ContactInput::new(area, ch.noise_sigma).expect("validated channel parameters");
        let strength = signal_strength(contact, ch.saturation_k_cm2, &mut self.channel_rng);

        // telemetry up
        for i in 0..2 {
            let s = (ROLES[i] == DeviceRole::Receiver).then_some(strength);
            let frame = self.devices[i]
                .tick(dt, s, &self.cfg.device, &mut self.imu_rng[i])
                .expect("strength supplied to the receiver only");
            let bytes = encode_telemetry(&frame).expect("device frames are encodable");
            self.log_frame(&mut out, Link::Up, DEVICE_IDS[i], &bytes);
            self.uplink[i].enqueue(bytes, now);
        }

        // host side: latch whatever arrived, last value wins
        for i in 0..2 {
            for bytes in self.uplink[i].poll(now) {
                match decode_telemetry(&bytes) {
                    Ok(f) if f.device_id == DEVICE_IDS[i] && f.role == ROLES[i] => self.host.latest[i] = Some(f),
                    _ => self.host.decode_errors += 1,
                }
            }
        }
        let poses = self.host.latest.map(|f| host_pose(f.as_ref()));
        let received = self.host.latest[1]
            .and_then(|f| f.strength)
            .map(|code| SignalStrength::new(strength_from_wire(code)).expect("wire strength lies in [0, 1]"))
            .unwrap_or_else(SignalStrength::zero);
        self.host.touch = classify(received, self.host.touch, &ch.classifier);

        let mut events = Vec::new();
        let mut pulse = None;
        let game_stepped = self.tick >= self.cfg.idle_ticks && !self.game.is_terminal();
        if game_stepped {
            let input = combine_inputs(&poses[0], &poses[1], self.host.touch, self.cfg.game.tilt_threshold_deg);
            out.push(Record::Input { tick: self.tick, input });
            events = self.game.step(&input, &self.cfg.game).into_events();
            for e in &events {
                out.push(Record::Event { tick: self.tick, event: e.clone() });
                if let EventKind::FoxMoved { column, .. } = e.kind {
                    let pair = self
                        .cfg
                        .haptics
                        .pulse_for(column, self.cfg.game.stage_width)
                        .expect("fox column lies on the stage");
                    out.push(Record::Haptic { tick: self.tick, column, pair });
                    self.send_pulse(&mut out, &pair, now);
                    pulse = Some(pair);
                }
            }
        }

        // commands down
        for i in 0..2 {
            for bytes in self.downlink[i].poll(now) {
                match decode_command(&bytes) {
                    Ok(cmd) => {
                        self.devices[i].apply_command(&cmd);
                    }
                    Err(_) => self.host.decode_errors += 1,
                }
            }
        }

        out.sort_by_key(Record::order_key);
        self.records.extend(out);
        let report = TickReport {
            tick: self.tick,
            game_stepped,
            events,
            pulse,
            view: self.view(),
            wrist_amplitudes: [self.devices[0].lra_amplitude, self.devices[1].lra_amplitude],
            host_touch: self.host.touch,
        };
        self.tick += 1;
        report
    }

    fn send_pulse(&mut self, out: &mut Vec<Record>, pair: &ActuatorPair, now: f64) {
        let led = if self.game.controllable { LED_HOLDING } else { LED_RELEASED };
        let duration = pair.duration_ms.min(u16::MAX as u32) as u16;
        for (i, amplitude) in [pair.left, pair.right].into_iter().enumerate() {
            let cmd = CommandFrame {
                version: PROTOCOL_VERSION,
                device_id: DEVICE_IDS[i],
                seq: self.host.command_seq[i],
                lra_amplitude: amplitude_to_wire(amplitude),
                lra_duration_ms: duration,
                led,
            };
            self.host.command_seq[i] = self.host.command_seq[i].wrapping_add(1);
            let bytes = encode_command(&cmd).expect("amplitude code within 7 bits");
            self.log_frame(out, Link::Down, DEVICE_IDS[i], &bytes);
            self.downlink[i].enqueue(bytes, now);
        }
    }

    /// Close the log. A session stopped before its end simply has no
    /// `session_ended` event.
    pub fn finish(self) -> SessionLog {
        SessionLog {
            header: LogHeader::for_config(&self.cfg),
            records: self.records,
            end_tick: self.tick.saturating_sub(1),
        }
    }
}

/// Pose the host reconstructs from a telemetry frame; level until the first frame.
fn host_pose(frame: Option<&TelemetryFrame>) -> WristPose<f64> {
    let Some(f) = frame else { return WristPose::default() };
    let accel = f.accel.map(accel_from_wire);
    let roll = roll_from_accel(&accel);
    let roll = if roll.is_nan() { 0.0 } else { roll.clamp(-180.0, 180.0) };
    WristPose::new(roll, gyro_from_wire(f.gyro[0])).expect("roll clamped to range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use holdfeel_core::game::{Direction, GameConfig};
    use holdfeel_core::protocol::TransportConfig;

    fn quiet() -> SessionConfig {
        let mut cfg = SessionConfig::default();
        cfg.game = GameConfig { cherry_spawn_rate: 0.0, bomb_spawn_rate: 0.0, ..GameConfig::default() };
        cfg.transport = TransportConfig::ideal();
        cfg
    }

    fn act(grip: TouchState, roll: f64) -> [PlayerAction; 2] {
        [PlayerAction { grip, roll_deg: roll }; 2]
    }

    #[test]
    fn holding_and_tilting_moves_the_fox_and_pulses_both_wrists() {
        let mut e = SessionEngine::new(&quiet()).unwrap();
        let mut moved = None;
        for _ in 0..10 {
            let r = e.step(act(TouchState::Gentle, 45.0));
            if let Some(ev) = r.events.iter().find(|ev| matches!(ev.kind, EventKind::FoxMoved { .. })) {
                moved = Some((ev.kind.clone(), r.pulse));
                break;
            }
        }
        let (kind, pulse) = moved.expect("fox should move within a few ticks");
        assert_eq!(kind, EventKind::FoxMoved { direction: Direction::Right, column: 5 });
        let pulse = pulse.unwrap();
        assert_eq!(pulse, e.config().haptics.pulse_for(5, 9).unwrap());
        // the ideal link delivers the commands within the same tick
        let amps = [e.devices()[0].lra_amplitude, e.devices()[1].lra_amplitude];
        assert!(amps[0] > 0.0 && amps[1] > amps[0]);
    }

    #[test]
    fn released_hands_do_not_steer() {
        let mut e = SessionEngine::new(&quiet()).unwrap();
        for _ in 0..300 {
            let r = e.step(act(TouchState::NoTouch, 60.0));
            assert!(r.events.is_empty());
            assert_eq!(r.host_touch, TouchState::NoTouch);
        }
        assert_eq!(e.game().fox_column, 4);
    }

    #[test]
    fn one_released_hand_breaks_contact() {
        let mut e = SessionEngine::new(&quiet()).unwrap();
        for _ in 0..60 {
            let r = e.step([
                PlayerAction { grip: TouchState::Strong, roll_deg: 45.0 },
                PlayerAction { grip: TouchState::NoTouch, roll_deg: 45.0 },
            ]);
            assert!(r.events.is_empty());
        }
    }

    #[test]
    fn firm_grip_classifies_strong() {
        let mut e = SessionEngine::new(&quiet()).unwrap();
        let mut last = TouchState::NoTouch;
        for _ in 0..5 {
            last = e.step(act(TouchState::Strong, 0.0)).host_touch;
        }
        assert_eq!(last, TouchState::Strong);
    }

    #[test]
    fn warm_up_ticks_do_not_advance_the_game() {
        let mut cfg = quiet();
        cfg.idle_ticks = 30;
        let mut e = SessionEngine::new(&cfg).unwrap();
        for _ in 0..30 {
            assert!(!e.step(act(TouchState::Gentle, 45.0)).game_stepped);
        }
        assert_eq!(e.game().tick, 0);
        assert!(e.step(act(TouchState::Gentle, 45.0)).game_stepped);
        // inputs latched during warm-up steer on the first game tick
        assert_eq!(e.game().fox_column, 5);
    }

    #[test]
    fn session_runs_to_the_end() {
        let mut e = SessionEngine::new(&quiet()).unwrap();
        let mut n = 0;
        while !e.is_finished() {
            e.step(act(TouchState::NoTouch, 0.0));
            n += 1;
        }
        assert_eq!(n, 7200);
        let log = e.finish();
        let (_, last) = log.events().last().unwrap();
        assert_eq!(last.kind, EventKind::SessionEnded { final_score: 0 });
        assert_eq!(last.clock_ms, 120_000.0);
        assert_eq!(log.end_tick, 7199);
    }

    #[test]
    fn frames_are_optional_in_the_log() {
        let mut cfg = quiet();
        cfg.log.frames = false;
        let mut e = SessionEngine::new(&cfg).unwrap();
        e.step(act(TouchState::Gentle, 45.0));
        assert!(!e.finish().records.iter().any(|r| matches!(r, Record::Frame { .. })));

        let mut e = SessionEngine::new(&quiet()).unwrap();
        e.step(act(TouchState::Gentle, 0.0));
        let frames = e.finish().records.iter().filter(|r| matches!(r, Record::Frame { .. })).count();
        assert_eq!(frames, 2);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = quiet();
        cfg.channel.noise_sigma = -1.0;
        assert!(SessionEngine::new(&cfg).is_err());
    }
}
