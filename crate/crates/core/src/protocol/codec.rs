//! Bit-exact framing for bracelet telemetry and host commands.
//!
//! Every frame is little-endian:
//!
//! ```text
//! telemetry: A7 01 ver dev role seq:u16 buttons accel:3xi16 gyro:3xi16 [strength:u16] crc:u16
//! command:   A7 02 ver dev seq:u16 amp:u8 duration:u16 led:3xu8 crc:u16
//! ```
//!
//! `strength` is present only when `role` is the receiver (role byte 1).
//! The CRC is CRC-16/CCITT-FALSE over everything from the magic byte through
//! the end of the payload.

use crc::{Crc, CRC_16_IBM_3740};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{Buttons, DeviceRole};

pub const MAGIC: u8 = 0xA7;
pub const TYPE_TELEMETRY: u8 = 0x01;
pub const TYPE_COMMAND: u8 = 0x02;
pub const PROTOCOL_VERSION: u8 = 1;

pub const TELEMETRY_LEN_TRANSMITTER: usize = 22;
pub const TELEMETRY_LEN_RECEIVER: usize = 24;
pub const COMMAND_LEN: usize = 14;

pub const MAX_LRA_CODE: u8 = 127;

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout).
const CCITT_FALSE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn crc16(bytes: &[u8]) -> u16 {
    CCITT_FALSE.checksum(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated frame: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("bad magic byte 0x{0:02x}")]
    BadMagic(u8),
    #[error("unknown frame type 0x{0:02x}")]
    UnknownType(u8),
    #[error("checksum mismatch: frame says 0x{found:04x}, computed 0x{computed:04x}")]
    BadCrc { found: u16, computed: u16 },
    #[error("unknown protocol version {0}")]
    UnknownVersion(u8),
    #[error("{extra} trailing bytes after a {expected}-byte frame")]
    TrailingBytes { expected: usize, extra: usize },
    #[error("invalid {0} field")]
    InvalidField(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("strength must be present exactly for receiver frames")]
    StrengthRoleMismatch,
    #[error("LRA amplitude code {0} exceeds {MAX_LRA_CODE}")]
    AmplitudeOverflow(u8),
    #[error("button bits outside the six defined buttons")]
    UnknownButtons,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub version: u8,
    pub device_id: u8,
    pub role: DeviceRole,
    pub seq: u16,
    pub buttons: Buttons,
    /// milli-g
    pub accel: [i16; 3],
    /// tenths of a degree per second
    pub gyro: [i16; 3],
    /// normalized strength × 65535
    pub strength: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandFrame {
    pub version: u8,
    pub device_id: u8,
    pub seq: u16,
    pub lra_amplitude: u8,
    pub lra_duration_ms: u16,
    pub led: [u8; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Telemetry(TelemetryFrame),
    Command(CommandFrame),
}

fn role_byte(role: DeviceRole) -> u8 {
    match role {
        DeviceRole::Transmitter => 0,
        DeviceRole::Receiver => 1,
    }
}

fn seal(mut out: Vec<u8>) -> Vec<u8> {
    let crc = crc16(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn encode_telemetry(frame: &TelemetryFrame) -> Result<Vec<u8>, EncodeError> {
    if frame.strength.is_some() != (frame.role == DeviceRole::Receiver) {
        return Err(EncodeError::StrengthRoleMismatch);
    }
    if !frame.buttons.is_valid() {
        return Err(EncodeError::UnknownButtons);
    }
    let mut out = Vec::with_capacity(TELEMETRY_LEN_RECEIVER);
    out.extend_from_slice(&[MAGIC, TYPE_TELEMETRY, frame.version, frame.device_id, role_byte(frame.role)]);
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.push(frame.buttons.bits());
    for v in frame.accel.iter().chain(frame.gyro.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(s) = frame.strength {
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(seal(out))
}

pub fn encode_command(frame: &CommandFrame) -> Result<Vec<u8>, EncodeError> {
    if frame.lra_amplitude > MAX_LRA_CODE {
        return Err(EncodeError::AmplitudeOverflow(frame.lra_amplitude));
    }
    let mut out = Vec::with_capacity(COMMAND_LEN);
    out.extend_from_slice(&[MAGIC, TYPE_COMMAND, frame.version, frame.device_id]);
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.push(frame.lra_amplitude);
    out.extend_from_slice(&frame.lra_duration_ms.to_le_bytes());
    out.extend_from_slice(&frame.led);
    Ok(seal(out))
}

fn u16_at(b: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([b[i], b[i + 1]])
}

fn i16_at(b: &[u8], i: usize) -> i16 {
    i16::from_le_bytes([b[i], b[i + 1]])
}

/// Checks magic, type, length and CRC; returns the expected frame length.
fn check_envelope(bytes: &[u8], kind: u8) -> Result<usize, DecodeError> {
    if bytes.len() < 2 {
        return Err(DecodeError::Truncated { needed: 2, got: bytes.len() });
    }
    if bytes[0] != MAGIC {
        return Err(DecodeError::BadMagic(bytes[0]));
    }
    if bytes[1] != kind {
        return Err(DecodeError::UnknownType(bytes[1]));
    }
    let expected = match kind {
        TYPE_COMMAND => COMMAND_LEN,
        _ => {
            if bytes.len() < 5 {
                return Err(DecodeError::Truncated { needed: TELEMETRY_LEN_TRANSMITTER, got: bytes.len() });
            }
            match bytes[4] {
                0 => TELEMETRY_LEN_TRANSMITTER,
                1 => TELEMETRY_LEN_RECEIVER,
                _ => return Err(DecodeError::InvalidField("role")),
            }
        }
    };
    if bytes.len() < expected {
        return Err(DecodeError::Truncated { needed: expected, got: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(DecodeError::TrailingBytes { expected, extra: bytes.len() - expected });
    }
    let body = expected - 2;
    let found = u16_at(bytes, body);
    let computed = crc16(&bytes[..body]);
    if found != computed {
        return Err(DecodeError::BadCrc { found, computed });
    }
    if bytes[2] != PROTOCOL_VERSION {
        return Err(DecodeError::UnknownVersion(bytes[2]));
    }
    Ok(expected)
}

pub fn decode_telemetry(bytes: &[u8]) -> Result<TelemetryFrame, DecodeError> {
    check_envelope(bytes, TYPE_TELEMETRY)?;
    let role = if bytes[4] == 1 { DeviceRole::Receiver } else { DeviceRole::Transmitter };
    let buttons = Buttons::from_bits(bytes[7]).ok_or(DecodeError::InvalidField("buttons"))?;
    let mut accel = [0i16; 3];
    let mut gyro = [0i16; 3];
    for k in 0..3 {
        accel[k] = i16_at(bytes, 8 + 2 * k);
        gyro[k] = i16_at(bytes, 14 + 2 * k);
    }
    let strength = (role == DeviceRole::Receiver).then(|| u16_at(bytes, 20));
    Ok(TelemetryFrame {
        version: bytes[2],
        device_id: bytes[3],
        role,
        seq: u16_at(bytes, 5),
        buttons,
        accel,
        gyro,
        strength,
    })
}

pub fn decode_command(bytes: &[u8]) -> Result<CommandFrame, DecodeError> {
    check_envelope(bytes, TYPE_COMMAND)?;
    if bytes[6] > MAX_LRA_CODE {
        return Err(DecodeError::InvalidField("lra_amplitude"));
    }
    Ok(CommandFrame {
        version: bytes[2],
        device_id: bytes[3],
        seq: u16_at(bytes, 4),
        lra_amplitude: bytes[6],
        lra_duration_ms: u16_at(bytes, 7),
        led: [bytes[9], bytes[10], bytes[11]],
    })
}

/// Decode whichever frame type the type byte announces.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, DecodeError> {
    match bytes.get(1) {
        Some(&TYPE_COMMAND) => decode_command(bytes).map(Frame::Command),
        Some(&TYPE_TELEMETRY) | None => decode_telemetry(bytes).map(Frame::Telemetry),
        Some(_) if bytes[0] != MAGIC => Err(DecodeError::BadMagic(bytes[0])),
        Some(&other) => Err(DecodeError::UnknownType(other)),
    }
}

/// Normalized `[0, 1]` strength to its wire code.
pub fn strength_to_wire(s: f64) -> u16 {
    (s.clamp(0.0, 1.0) * 65535.0).round() as u16
}

pub fn strength_from_wire(code: u16) -> f64 {
    code as f64 / 65535.0
}

/// Normalized `[0, 1]` amplitude to the 7-bit LRA code.
pub fn amplitude_to_wire(a: f64) -> u8 {
    (a.clamp(0.0, 1.0) * MAX_LRA_CODE as f64).round() as u8
}

pub fn amplitude_from_wire(code: u8) -> f64 {
    code.min(MAX_LRA_CODE) as f64 / MAX_LRA_CODE as f64
}

fn saturate_i16(v: f64) -> i16 {
    v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// g to milli-g, saturating.
pub fn accel_to_wire(g: f64) -> i16 {
    saturate_i16(g * 1000.0)
}

pub fn accel_from_wire(code: i16) -> f64 {
    code as f64 / 1000.0
}

/// °/s to tenths of °/s, saturating.
pub fn gyro_to_wire(dps: f64) -> i16 {
    saturate_i16(dps * 10.0)
}

pub fn gyro_from_wire(code: i16) -> f64 {
    code as f64 / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx_zero() -> TelemetryFrame {
        TelemetryFrame {
            version: PROTOCOL_VERSION,
            device_id: 0,
            role: DeviceRole::Transmitter,
            seq: 0,
            buttons: Buttons::empty(),
            accel: [0; 3],
            gyro: [0; 3],
            strength: None,
        }
    }

    #[test]
    fn crc_check_value() {
        assert_eq!(crc16(b"123456789"), 0x29B1);
    }

    #[test]
    fn zero_transmitter_payload() {
        let bytes = encode_telemetry(&tx_zero()).unwrap();
        assert_eq!(bytes.len(), TELEMETRY_LEN_TRANSMITTER);
        let back = decode_telemetry(&bytes).unwrap();
        assert_eq!(back.strength, None);
        assert_eq!(back, tx_zero());
    }

    #[test]
    fn role_strength_mismatch_refused() {
        let mut f = tx_zero();
        f.strength = Some(3);
        assert_eq!(encode_telemetry(&f), Err(EncodeError::StrengthRoleMismatch));
        f.role = DeviceRole::Receiver;
        f.strength = None;
        assert_eq!(encode_telemetry(&f), Err(EncodeError::StrengthRoleMismatch));
    }

    #[test]
    fn amplitude_overflow_refused() {
        let cmd = CommandFrame { version: 1, device_id: 1, seq: 0, lra_amplitude: 128, lra_duration_ms: 0, led: [0; 3] };
        assert_eq!(encode_command(&cmd), Err(EncodeError::AmplitudeOverflow(128)));
    }

    #[test]
    fn distinct_decode_errors() {
        let good = encode_telemetry(&tx_zero()).unwrap();
        assert!(matches!(decode_telemetry(&good[..10]), Err(DecodeError::Truncated { .. })));
        assert!(matches!(decode_telemetry(&[]), Err(DecodeError::Truncated { .. })));

        let mut bad = good.clone();
        bad[0] = 0x00;
        assert_eq!(decode_telemetry(&bad), Err(DecodeError::BadMagic(0)));

        let mut bad = good.clone();
        bad[1] = 0x09;
        assert_eq!(decode_telemetry(&bad), Err(DecodeError::UnknownType(9)));

        let mut bad = good.clone();
        bad[10] ^= 0x40;
        assert!(matches!(decode_telemetry(&bad), Err(DecodeError::BadCrc { .. })));

        let mut longer = good.clone();
        longer.push(0);
        assert!(matches!(decode_telemetry(&longer), Err(DecodeError::TrailingBytes { extra: 1, .. })));

        let mut other = tx_zero();
        other.version = 2;
        let v2 = encode_telemetry(&other).unwrap();
        assert_eq!(decode_telemetry(&v2), Err(DecodeError::UnknownVersion(2)));
    }

    #[test]
    fn decode_frame_dispatches() {
        let t = encode_telemetry(&tx_zero()).unwrap();
        assert!(matches!(decode_frame(&t), Ok(Frame::Telemetry(_))));
        let cmd = CommandFrame { version: 1, device_id: 2, seq: 9, lra_amplitude: 100, lra_duration_ms: 60, led: [1, 2, 3] };
        let c = encode_command(&cmd).unwrap();
        assert_eq!(decode_frame(&c), Ok(Frame::Command(cmd)));
        assert!(decode_telemetry(&c).is_err());
        assert!(decode_command(&t).is_err());
    }

    #[test]
    fn fixed_point_helpers() {
        assert_eq!(strength_to_wire(1.0), 65535);
        assert_eq!(strength_to_wire(0.0), 0);
        assert_eq!(amplitude_to_wire(1.0), 127);
        assert_eq!(amplitude_to_wire(0.75), 95);
        assert_eq!(accel_to_wire(1.0), 1000);
        assert_eq!(accel_to_wire(-100.0), i16::MIN);
        assert_eq!(gyro_to_wire(-12.34), -123);
        assert_eq!(gyro_from_wire(-123), -12.3);
    }
}
