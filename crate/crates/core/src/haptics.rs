//! Phantom-sensation rendering between the two players' wrists.
//!
//! A position `p` in `[0, 1]` (0 = left wrist, 1 = right wrist) is rendered
//! as an intensity ratio across the two actuators. The funneling model used
//! for localization is the inverse of the same law, so
//! `perceived_position(pan(p)) == p` up to rounding for every law and gain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HapticsError {
    #[error("phantom position must lie in [0, 1], got {0}")]
    PositionOutOfRange(f64),
    #[error("power-law exponent must be finite and positive, got {0}")]
    BadExponent(f64),
    #[error("both actuators are silent; the phantom position is undefined")]
    UndefinedPosition,
    #[error("amplitude must lie in [0, 1], got {0}")]
    AmplitudeOutOfRange(f64),
    #[error("stage width must be at least 2, got {0}")]
    StageTooNarrow(usize),
    #[error("column {column} is outside a stage of width {width}")]
    ColumnOutOfRange { column: usize, width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PanLaw<T> {
    Linear,
    Power { exponent: T },
}

impl<T: Scalar> Default for PanLaw<T> {
    fn default() -> Self {
        PanLaw::Linear
    }
}

impl<T: Scalar> PanLaw<T> {
    pub fn power(exponent: T) -> Result<Self, HapticsError> {
        let law = PanLaw::Power { exponent };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<(), HapticsError> {
        match *self {
            PanLaw::Linear => Ok(()),
            PanLaw::Power { exponent } if exponent.is_finite() && exponent > T::zero() => Ok(()),
            PanLaw::Power { exponent } => Err(HapticsError::BadExponent(exponent.to_f64_lossy())),
        }
    }

    fn shape(&self, x: T) -> T {
        match *self {
            PanLaw::Linear => x,
            PanLaw::Power { exponent } => x.powf(exponent),
        }
    }

    fn unshape(&self, y: T) -> T {
        match *self {
            PanLaw::Linear => y,
            PanLaw::Power { exponent } => y.powf(T::one() / exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PhantomPosition<T>(T);

impl<T: Scalar> PhantomPosition<T> {
    pub fn new(p: T) -> Result<Self, HapticsError> {
        if p >= T::zero() && p <= T::one() {
            Ok(Self(p))
        } else {
            Err(HapticsError::PositionOutOfRange(p.to_f64_lossy()))
        }
    }

    /// Uniform spacing of a stage column over `[0, 1]`.
    pub fn from_column(column: usize, width: usize) -> Result<Self, HapticsError> {
        if width < 2 {
            return Err(HapticsError::StageTooNarrow(width));
        }
        if column >= width {
            return Err(HapticsError::ColumnOutOfRange { column, width });
        }
        Ok(Self(T::lit(column as f64) / T::lit((width - 1) as f64)))
    }

    pub fn value(self) -> T {
        self.0
    }

    /// Nearest stage column to this position.
    pub fn nearest_column(self, width: usize) -> usize {
        let span = T::lit(width.saturating_sub(1) as f64);
        let col = (self.0 * span).round().to_f64_lossy();
        (col.max(0.0) as usize).min(width.saturating_sub(1))
    }
}

/// Per-wrist drive levels. `duration_ms` is zero for a bare amplitude pair
/// and positive for a scheduled pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorPair<T> {
    pub left: T,
    pub right: T,
    pub duration_ms: u32,
}

impl<T: Scalar> ActuatorPair<T> {
    pub fn new(left: T, right: T, duration_ms: u32) -> Result<Self, HapticsError> {
        for a in [left, right] {
            if !(a >= T::zero() && a <= T::one()) {
                return Err(HapticsError::AmplitudeOutOfRange(a.to_f64_lossy()));
            }
        }
        Ok(Self { left, right, duration_ms })
    }

    pub fn silent() -> Self {
        Self { left: T::zero(), right: T::zero(), duration_ms: 0 }
    }
}

/// Split `gain` across the wrists so that the phantom sits at `p`.
/// `gain` is clamped into `[0, 1]`.
pub fn pan<T: Scalar>(p: PhantomPosition<T>, gain: T, law: PanLaw<T>) -> ActuatorPair<T> {
    let gain = gain.clamp_to(T::zero(), T::one());
    let p = p.value();
    ActuatorPair {
        left: gain * law.shape(T::one() - p),
        right: gain * law.shape(p),
        duration_ms: 0,
    }
}

/// Funneling estimate of where the combined sensation is felt.
pub fn perceived_position<T: Scalar>(
    pair: &ActuatorPair<T>,
    law: PanLaw<T>,
) -> Result<PhantomPosition<T>, HapticsError> {
    let left = law.unshape(pair.left.max(T::zero()));
    let right = law.unshape(pair.right.max(T::zero()));
    let total = left + right;
    if !(total > T::zero()) {
        return Err(HapticsError::UndefinedPosition);
    }
    Ok(PhantomPosition((right / total).clamp_to(T::zero(), T::one())))
}

/// Pulse rendered for one fox step onto `column`.
pub fn step_pulse<T: Scalar>(
    column: usize,
    stage_width: usize,
    gain: T,
    law: PanLaw<T>,
    duration_ms: u32,
) -> Result<ActuatorPair<T>, HapticsError> {
    let p = PhantomPosition::from_column(column, stage_width)?;
    Ok(ActuatorPair { duration_ms, ..pan(p, gain, law) })
}

/// Rendering parameters bundled for the host loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct HapticRenderer<T> {
    pub law: PanLaw<T>,
    pub gain: T,
    pub pulse_ms: u32,
}

impl<T: Scalar> Default for HapticRenderer<T> {
    fn default() -> Self {
        Self { law: PanLaw::Linear, gain: T::lit(0.9), pulse_ms: 60 }
    }
}

impl<T: Scalar> HapticRenderer<T> {
    pub fn validate(&self) -> Result<(), HapticsError> {
        self.law.validate()?;
        if !(self.gain >= T::zero() && self.gain <= T::one()) {
            return Err(HapticsError::AmplitudeOutOfRange(self.gain.to_f64_lossy()));
        }
        Ok(())
    }

    pub fn pulse_for(&self, column: usize, stage_width: usize) -> Result<ActuatorPair<T>, HapticsError> {
        step_pulse(column, stage_width, self.gain, self.law, self.pulse_ms)
    }
}
