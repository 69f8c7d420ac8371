//! Core models for a two-player bracelet game driven by interpersonal touch.
//!
//! The continuous models (signal strength, IMU, phantom-sensation panning)
//! are generic over [`Scalar`]; the aliases below fix them to `f64`, which is
//! what the game loop and harness use.

pub mod channel;
pub mod device;
pub mod game;
pub mod haptics;
pub mod protocol;
pub mod rng;
pub mod scalar;

pub use scalar::Scalar;

/// Scalar used by the game loop, wire conversions and session logs.
pub type Real = f64;

pub type ActuatorPair = haptics::ActuatorPair<Real>;
pub type PanLaw = haptics::PanLaw<Real>;
pub type PhantomPosition = haptics::PhantomPosition<Real>;
pub type HapticRenderer = haptics::HapticRenderer<Real>;
pub type SignalStrength = channel::SignalStrength<Real>;
pub type ContactInput = channel::ContactInput<Real>;
pub type ClassifierConfig = channel::ClassifierConfig<Real>;
pub type WristPose = device::WristPose<Real>;
pub type ImuReading = device::ImuReading<Real>;

pub use channel::TouchState;
pub use device::{DeviceRole, DeviceState};
pub use game::{GameConfig, GameEvent, GameState, PairInput};
pub use protocol::{CommandFrame, TelemetryFrame};
