//! Skin-to-skin signal path and three-state touch classification.
//!
//! The received strength follows a saturating law in contact area,
//! `s(a) = a / (a + k)`, plus clamped Gaussian noise. A hysteretic
//! classifier turns strength into [`TouchState`].

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("contact area must be non-negative, got {0}")]
    NegativeArea(f64),
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("signal strength must lie in [0, 1], got {0}")]
    StrengthOutOfRange(f64),
    #[error("saturation constant must be positive, got {0}")]
    BadSaturation(f64),
    #[error("classifier thresholds must satisfy 0 < gentle_off < gentle_on < strong_off < strong_on <= 1")]
    UnorderedThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactInput<T> {
    contact_area: T,
    noise_sigma: T,
}

impl<T: Scalar> ContactInput<T> {
    pub fn new(contact_area: T, noise_sigma: T) -> Result<Self, ChannelError> {
        if !(contact_area >= T::zero()) {
            return Err(ChannelError::NegativeArea(contact_area.to_f64_lossy()));
        }
        if !(noise_sigma >= T::zero()) {
            return Err(ChannelError::NegativeSigma(noise_sigma.to_f64_lossy()));
        }
        Ok(Self { contact_area, noise_sigma })
    }

    pub fn contact_area(&self) -> T {
        self.contact_area
    }

    pub fn noise_sigma(&self) -> T {
        self.noise_sigma
    }
}

/// Normalized receiver reading, 1 being a saturated ADC.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SignalStrength<T>(T);

impl<T: Scalar> SignalStrength<T> {
    pub fn new(value: T) -> Result<Self, ChannelError> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(ChannelError::StrengthOutOfRange(value.to_f64_lossy()))
        }
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn value(self) -> T {
        self.0
    }

    /// Round to the nearest code of an unsigned ADC with `bits` of resolution.
    /// `bits == 0` disables quantization.
    pub fn quantized(self, bits: u8) -> Self {
        if bits == 0 {
            return self;
        }
        let full = T::lit(((1u64 << bits.min(52)) - 1) as f64);
        Self((self.0 * full).round() / full)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchState {
    #[default]
    NoTouch,
    Gentle,
    Strong,
}

impl TouchState {
    pub fn is_touching(self) -> bool {
        self != TouchState::NoTouch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ClassifierConfig<T> {
    pub gentle_on: T,
    pub gentle_off: T,
    pub strong_on: T,
    pub strong_off: T,
}

impl<T: Scalar> Default for ClassifierConfig<T> {
    fn default() -> Self {
        Self {
            gentle_on: T::lit(0.20),
            gentle_off: T::lit(0.15),
            strong_on: T::lit(0.60),
            strong_off: T::lit(0.50),
        }
    }
}

impl<T: Scalar> ClassifierConfig<T> {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let ordered = T::zero() < self.gentle_off
            && self.gentle_off < self.gentle_on
            && self.gentle_on < self.strong_off
            && self.strong_off < self.strong_on
            && self.strong_on <= T::one();
        if ordered {
            Ok(())
        } else {
            Err(ChannelError::UnorderedThresholds)
        }
    }
}

/// Noise-free part of the saturation law.
pub fn noiseless_strength<T: Scalar>(contact_area: T, saturation_k: T) -> T {
    if contact_area <= T::zero() {
        return T::zero();
    }
    contact_area / (contact_area + saturation_k)
}

/// Contact area whose noise-free strength equals `strength` (inverse of the saturation law).
pub fn area_for_strength<T: Scalar>(strength: T, saturation_k: T) -> Result<T, ChannelError> {
    if !(strength >= T::zero() && strength < T::one()) {
        return Err(ChannelError::StrengthOutOfRange(strength.to_f64_lossy()));
    }
    Ok(strength * saturation_k / (T::one() - strength))
}

/// Received strength for a contact. Always consumes exactly one normal draw from `rng`.
pub fn signal_strength<T: Scalar, R: Rng + ?Sized>(
    input: ContactInput<T>,
    saturation_k: T,
    rng: &mut R,
) -> SignalStrength<T> {
    let clean = noiseless_strength(input.contact_area, saturation_k);
    let noise = T::standard_normal(rng) * input.noise_sigma;
    // zero contact carries no carrier at all
    if input.contact_area <= T::zero() {
        return SignalStrength::zero();
    }
    SignalStrength((clean + noise).clamp_to(T::zero(), T::one()))
}

/// Hysteretic three-state classifier. Escalation uses the `_on` thresholds,
/// de-escalation the `_off` thresholds.
pub fn classify<T: Scalar>(
    strength: SignalStrength<T>,
    previous: TouchState,
    cfg: &ClassifierConfig<T>,
) -> TouchState {
    let s = strength.value();
    if s <= T::zero() {
        return TouchState::NoTouch;
    }
    match previous {
        TouchState::NoTouch => {
            if s >= cfg.strong_on {
                TouchState::Strong
            } else if s >= cfg.gentle_on {
                TouchState::Gentle
            } else {
                TouchState::NoTouch
            }
        }
        TouchState::Gentle => {
            if s >= cfg.strong_on {
                TouchState::Strong
            } else if s < cfg.gentle_off {
                TouchState::NoTouch
            } else {
                TouchState::Gentle
            }
        }
        TouchState::Strong => {
            if s >= cfg.strong_off {
                TouchState::Strong
            } else if s >= cfg.gentle_off {
                TouchState::Gentle
            } else {
                TouchState::NoTouch
            }
        }
    }
}

/// Contact area that lands squarely inside `target`'s band: the midpoint of
/// `(gentle_on, strong_off)` for gentle and of `(strong_on, 1)` for strong.
pub fn contact_area_for<T: Scalar>(
    target: TouchState,
    cfg: &ClassifierConfig<T>,
    saturation_k: T,
) -> T {
    let strength = match target {
        TouchState::NoTouch => return T::zero(),
        TouchState::Gentle => (cfg.gentle_on + cfg.strong_off) * T::half(),
        TouchState::Strong => (cfg.strong_on + T::one()) * T::half(),
    };
    // midpoints of a validated config are strictly inside [0, 1)
    area_for_strength(strength, saturation_k).unwrap_or(T::zero())
}
