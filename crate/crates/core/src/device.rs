//! Bracelet emulation: buttons, wrist IMU, LRA envelope and LED, producing one
//! telemetry frame per tick and consuming host commands.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::SignalStrength;
use crate::protocol::{
    accel_to_wire, amplitude_from_wire, gyro_to_wire, strength_to_wire, CommandFrame, TelemetryFrame,
    PROTOCOL_VERSION,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRole {
    Transmitter,
    Receiver,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("only the receiver measures signal strength")]
    StrengthOnTransmitter,
    #[error("the receiver must be given a signal strength every tick")]
    MissingStrength,
    #[error("roll angle must lie in [-180, 180] degrees, got {0}")]
    RollOutOfRange(f64),
}

/// D-pad and the two face buttons as a 6-bit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Buttons(u8);

impl Buttons {
    pub const DPAD_UP: Buttons = Buttons(1 << 0);
    pub const DPAD_DOWN: Buttons = Buttons(1 << 1);
    pub const DPAD_LEFT: Buttons = Buttons(1 << 2);
    pub const DPAD_RIGHT: Buttons = Buttons(1 << 3);
    pub const BUTTON_A: Buttons = Buttons(1 << 4);
    pub const BUTTON_B: Buttons = Buttons(1 << 5);
    const MASK: u8 = 0b0011_1111;

    pub const fn empty() -> Self {
        Buttons(0)
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits & !Self::MASK == 0).then_some(Buttons(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_valid(self) -> bool {
        self.0 & !Self::MASK == 0
    }

    pub fn contains(self, other: Buttons) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn with(self, other: Buttons) -> Self {
        Buttons(self.0 | other.0)
    }
}

/// Forearm rotation. Supination is positive.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WristPose<T> {
    pub roll_deg: T,
    pub roll_rate_dps: T,
}

impl<T: Scalar> WristPose<T> {
    pub fn new(roll_deg: T, roll_rate_dps: T) -> Result<Self, DeviceError> {
        if !(roll_deg >= T::lit(-180.0) && roll_deg <= T::lit(180.0)) {
            return Err(DeviceError::RollOutOfRange(roll_deg.to_f64_lossy()));
        }
        Ok(Self { roll_deg, roll_rate_dps })
    }

    /// Pose at `roll_deg`, with the rate implied by moving from `prev` over `dt_ms`.
    pub fn following(prev: &Self, roll_deg: T, dt_ms: T) -> Result<Self, DeviceError> {
        let rate = if dt_ms > T::zero() {
            (roll_deg - prev.roll_deg) * T::lit(1000.0) / dt_ms
        } else {
            T::zero()
        };
        Self::new(roll_deg, rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuReading<T> {
    /// g
    pub accel: [T; 3],
    /// °/s
    pub gyro: [T; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ImuNoise<T> {
    pub accel_sigma_g: T,
    pub gyro_sigma_dps: T,
}

impl<T: Scalar> Default for ImuNoise<T> {
    fn default() -> Self {
        Self { accel_sigma_g: T::lit(0.01), gyro_sigma_dps: T::lit(0.5) }
    }
}

impl<T: Scalar> ImuNoise<T> {
    pub fn none() -> Self {
        Self { accel_sigma_g: T::zero(), gyro_sigma_dps: T::zero() }
    }
}

/// Gravity seen by a wrist IMU rolled about the forearm (x) axis, plus gyro.
/// Always consumes six normal draws.
pub fn imu_from_pose<T: Scalar, R: Rng + ?Sized>(
    pose: &WristPose<T>,
    noise: &ImuNoise<T>,
    rng: &mut R,
) -> ImuReading<T> {
    let roll = pose.roll_deg.to_radians();
    let mut accel = [T::zero(), roll.sin(), roll.cos()];
    for a in accel.iter_mut() {
        *a = *a + T::standard_normal(rng) * noise.accel_sigma_g;
    }
    let mut gyro = [pose.roll_rate_dps, T::zero(), T::zero()];
    for g in gyro.iter_mut() {
        *g = *g + T::standard_normal(rng) * noise.gyro_sigma_dps;
    }
    ImuReading { accel, gyro }
}

/// Roll angle recovered from the gravity direction, in degrees.
pub fn roll_from_accel<T: Scalar>(accel: &[T; 3]) -> T {
    accel[1].atan2(accel[2]).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub imu_noise: ImuNoise<f64>,
    /// Receiver ADC resolution; 0 disables quantization.
    pub adc_bits: u8,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self { imu_noise: ImuNoise::default(), adc_bits: 10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceDiagnostics {
    pub misaddressed_commands: u64,
    pub duplicate_commands: u64,
    /// Σ amplitude × duration over accepted commands (amplitude·ms).
    pub commanded_energy: f64,
    /// Amplitude actually rendered, integrated over ticks.
    pub rendered_energy: f64,
    /// Envelope cut short by a superseding command.
    pub truncated_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub device_id: u8,
    pub role: DeviceRole,
    pub buttons: Buttons,
    pub pose: WristPose<f64>,
    pub lra_amplitude: f64,
    pub lra_remaining_ms: f64,
    pub led: [u8; 3],
    seq: u16,
    last_command: Option<CommandFrame>,
    diagnostics: DeviceDiagnostics,
}

impl DeviceState {
    pub fn new(device_id: u8, role: DeviceRole) -> Self {
        Self {
            device_id,
            role,
            buttons: Buttons::empty(),
            pose: WristPose::default(),
            lra_amplitude: 0.0,
            lra_remaining_ms: 0.0,
            led: [0; 3],
            seq: 0,
            last_command: None,
            diagnostics: DeviceDiagnostics::default(),
        }
    }

    pub fn diagnostics(&self) -> &DeviceDiagnostics {
        &self.diagnostics
    }

    /// Sequence number the next telemetry frame will carry.
    pub fn next_seq(&self) -> u16 {
        self.seq
    }

    /// Advance the LRA envelope by `dt_ms` and snapshot a telemetry frame.
    pub fn tick<R: Rng + ?Sized>(
        &mut self,
        dt_ms: f64,
        strength: Option<SignalStrength<f64>>,
        cfg: &DeviceConfig,
        rng: &mut R,
    ) -> Result<TelemetryFrame, DeviceError> {
        let strength = match (self.role, strength) {
            (DeviceRole::Transmitter, Some(_)) => return Err(DeviceError::StrengthOnTransmitter),
            (DeviceRole::Receiver, None) => return Err(DeviceError::MissingStrength),
            (_, s) => s,
        };

        let played = dt_ms.max(0.0).min(self.lra_remaining_ms);
        self.diagnostics.rendered_energy += self.lra_amplitude * played;
        self.lra_remaining_ms -= played;
        if self.lra_remaining_ms <= 0.0 {
            self.lra_remaining_ms = 0.0;
            self.lra_amplitude = 0.0;
        }

        let imu = imu_from_pose(&self.pose, &cfg.imu_noise, rng);
        let frame = TelemetryFrame {
            version: PROTOCOL_VERSION,
            device_id: self.device_id,
            role: self.role,
            seq: self.seq,
            buttons: self.buttons,
            accel: imu.accel.map(accel_to_wire),
            gyro: imu.gyro.map(gyro_to_wire),
            strength: strength.map(|s| strength_to_wire(s.quantized(cfg.adc_bits).value())),
        };
        self.seq = self.seq.wrapping_add(1);
        Ok(frame)
    }

    /// Apply a host command. Returns `false` when the frame was ignored
    /// (wrong address, or a repeat of the last applied command).
    pub fn apply_command(&mut self, cmd: &CommandFrame) -> bool {
        if cmd.device_id != self.device_id {
            self.diagnostics.misaddressed_commands += 1;
            return false;
        }
        if self.last_command.as_ref() == Some(cmd) {
            self.diagnostics.duplicate_commands += 1;
            return false;
        }
        self.diagnostics.truncated_energy += self.lra_amplitude * self.lra_remaining_ms;
        let amplitude = amplitude_from_wire(cmd.lra_amplitude);
        let duration = cmd.lra_duration_ms as f64;
        if amplitude > 0.0 && duration > 0.0 {
            self.lra_amplitude = amplitude;
            self.lra_remaining_ms = duration;
        } else {
            self.lra_amplitude = 0.0;
            self.lra_remaining_ms = 0.0;
        }
        self.diagnostics.commanded_energy += self.lra_amplitude * self.lra_remaining_ms;
        self.led = cmd.led;
        self.last_command = Some(*cmd);
        true
    }
}
