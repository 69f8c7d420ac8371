//! Socket message schema. One JSON object per websocket text message; every
//! message carries the protocol version and a `type` tag.

use holdfeel_core::channel::{contact_area_for, ClassifierConfig};
use holdfeel_core::game::{GameEvent, ViewModel};
use holdfeel_core::protocol::PROTOCOL_VERSION;
use holdfeel_core::{ActuatorPair, TouchState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Join {
        /// 1 or 2
        slot: u8,
        name: String,
    },
    InputUpdate {
        touch_held: bool,
        touch_firm: bool,
        /// Wrist roll in degrees, positive steers right.
        roll: f64,
    },
    Leave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientEnvelope {
    pub version: u8,
    /// Sender's clock, milliseconds; informational.
    #[serde(default)]
    pub client_ms: f64,
    #[serde(flatten)]
    pub message: ClientMessage,
}

impl ClientEnvelope {
    pub fn new(message: ClientMessage, client_ms: f64) -> Self {
        Self { version: PROTOCOL_VERSION, client_ms, message }
    }

    /// Checks that do not depend on session state.
    pub fn validate(&self) -> Result<(), String> {
        if self.version != PROTOCOL_VERSION {
            return Err(format!("unsupported protocol version {}, server speaks {PROTOCOL_VERSION}", self.version));
        }
        match self.message {
            ClientMessage::Join { slot, .. } if slot != 1 && slot != 2 => Err(format!("slot must be 1 or 2, got {slot}")),
            ClientMessage::InputUpdate { roll, .. } if !(-180.0..=180.0).contains(&roll) => {
                Err(format!("roll must lie in [-180, 180], got {roll}"))
            }
            ClientMessage::InputUpdate { touch_held: false, touch_firm: true, .. } => {
                Err("touch_firm requires touch_held".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    /// The session clock ran out (or a bomb ended it).
    Completed,
    /// A player left and did not return within the grace period.
    PlayerLeft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Who holds each slot. Sent on every change before and during play.
    Lobby { slots: [Option<String>; 2], started: bool },
    /// One per simulation tick, identical for every client.
    StateUpdate {
        tick: u64,
        view: ViewModel,
        /// LRA amplitude playing on each wrist (left, right), 0..1.
        amplitudes: [f64; 2],
        /// Pulse rendered this tick, if the fox stepped.
        pulse: Option<ActuatorPair>,
    },
    Event { event: GameEvent },
    /// A player dropped; the session resumes if they rejoin within `grace_ms`.
    Paused { slot: u8, grace_ms: u64 },
    Resumed,
    SessionEnd { final_score: i64, reason: EndReason },
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerEnvelope {
    pub version: u8,
    #[serde(flatten)]
    pub message: ServerMessage,
}

impl ServerEnvelope {
    pub fn new(message: ServerMessage) -> Self {
        Self { version: PROTOCOL_VERSION, message }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

/// Touch flags to the grip a player offers.
pub fn input_to_grip(touch_held: bool, touch_firm: bool) -> TouchState {
    match (touch_held, touch_firm) {
        (false, _) => TouchState::NoTouch,
        (true, false) => TouchState::Gentle,
        (true, true) => TouchState::Strong,
    }
}

/// Contact area (cm²) standing in for a client's touch flags: zero when not
/// held, otherwise an area whose noise-free strength sits inside the gentle
/// or strong band.
pub fn input_to_contact(touch_held: bool, touch_firm: bool, classifier: &ClassifierConfig<f64>, saturation_k: f64) -> f64 {
    contact_area_for(input_to_grip(touch_held, touch_firm), classifier, saturation_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use holdfeel_core::game::{EventKind, Scene};

    const K: f64 = 20.0;

    fn s(area: f64) -> f64 {
        area / (area + K)
    }

    #[test]
    fn contact_mapping() {
        let c = ClassifierConfig::default();
        assert_eq!(input_to_contact(false, false, &c, K), 0.0);
        assert_eq!(input_to_contact(false, true, &c, K), 0.0);
        let gentle = s(input_to_contact(true, false, &c, K));
        assert!(gentle > c.gentle_on && gentle < c.strong_off, "{gentle}");
        let strong = s(input_to_contact(true, true, &c, K));
        assert!(strong > c.strong_on && strong < 1.0, "{strong}");

        let tight = ClassifierConfig { gentle_on: 0.3, gentle_off: 0.25, strong_on: 0.9, strong_off: 0.8 };
        let gentle = s(input_to_contact(true, false, &tight, K));
        assert!(gentle > 0.3 && gentle < 0.8);
        assert!(s(input_to_contact(true, true, &tight, K)) > 0.9);
    }

    #[test]
    fn client_json_shape() {
        let text = r#"{"version":1,"client_ms":12.5,"type":"input_update","touch_held":true,"touch_firm":false,"roll":45.0}"#;
        let env: ClientEnvelope = serde_json::from_str(text).unwrap();
        assert_eq!(env.message, ClientMessage::InputUpdate { touch_held: true, touch_firm: false, roll: 45.0 });
        assert_eq!(env.client_ms, 12.5);
        env.validate().unwrap();

        let join: ClientEnvelope = serde_json::from_str(r#"{"version":1,"type":"join","slot":2,"name":"b"}"#).unwrap();
        assert_eq!(join.message, ClientMessage::Join { slot: 2, name: "b".into() });
        let leave: ClientEnvelope = serde_json::from_str(r#"{"version":1,"type":"leave"}"#).unwrap();
        assert_eq!(leave.message, ClientMessage::Leave);
        assert_eq!(serde_json::from_str::<ClientEnvelope>(&serde_json::to_string(&join).unwrap()).unwrap(), join);
    }

    #[test]
    fn client_validation() {
        let bad = |m| ClientEnvelope::new(m, 0.0).validate().is_err();
        assert!(bad(ClientMessage::Join { slot: 3, name: "x".into() }));
        assert!(bad(ClientMessage::InputUpdate { touch_held: false, touch_firm: true, roll: 0.0 }));
        assert!(bad(ClientMessage::InputUpdate { touch_held: true, touch_firm: false, roll: 181.0 }));
        assert!(bad(ClientMessage::InputUpdate { touch_held: true, touch_firm: false, roll: f64::NAN }));
        assert!(!bad(ClientMessage::InputUpdate { touch_held: true, touch_firm: true, roll: -180.0 }));
        let old = ClientEnvelope { version: 0, client_ms: 0.0, message: ClientMessage::Leave };
        assert!(old.validate().is_err());
    }

    #[test]
    fn server_json_shape() {
        let msg = ServerEnvelope::new(ServerMessage::Event {
            event: GameEvent { tick: 3, clock_ms: 50.0, kind: EventKind::SceneChanged { to: Scene::Night } },
        });
        let v: serde_json::Value = serde_json::from_str(&msg.to_json()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["type"], "event");
        assert_eq!(v["event"]["type"], "scene_changed");
        assert_eq!(v["event"]["to"], "night");

        let end = ServerEnvelope::new(ServerMessage::SessionEnd { final_score: 40, reason: EndReason::Completed });
        assert_eq!(end.to_json(), r#"{"version":1,"type":"session_end","final_score":40,"reason":"completed"}"#);
        assert_eq!(serde_json::from_str::<ServerEnvelope>(&end.to_json()).unwrap(), end);
    }
}
