//! Session configuration file (TOML) and its field-by-field validation.

use std::fmt;
use std::path::Path;

use holdfeel_core::channel::ClassifierConfig;
use holdfeel_core::device::DeviceConfig;
use holdfeel_core::game::GameConfig;
use holdfeel_core::haptics::HapticRenderer;
use holdfeel_core::protocol::TransportConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bots::BotPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Contact area (cm²) at which the strength reads 0.5.
    pub saturation_k_cm2: f64,
    pub noise_sigma: f64,
    pub classifier: ClassifierConfig<f64>,
    /// Carrier parameters; recorded, not simulated.
    pub carrier_vpp: f64,
    pub carrier_mhz: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            saturation_k_cm2: 20.0,
            noise_sigma: 0.02,
            classifier: ClassifierConfig::default(),
            carrier_vpp: 3.3,
            carrier_mhz: 10.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BotsSection {
    pub player1: BotPolicy,
    pub player2: BotPolicy,
}

impl Default for BotsSection {
    fn default() -> Self {
        Self { player1: BotPolicy::hold_and_chase(), player2: BotPolicy::hold_and_chase() }
    }
}

impl BotsSection {
    pub fn both(policy: BotPolicy) -> Self {
        Self { player1: policy.clone(), player2: policy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogSection {
    /// Record every telemetry and command frame as hex.
    pub frames: bool,
}

impl Default for LogSection {
    fn default() -> Self {
        Self { frames: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub seed: u64,
    /// Ticks of device/radio warm-up before the game clock starts.
    pub idle_ticks: u64,
    pub game: GameConfig,
    pub channel: ChannelSection,
    pub device: DeviceConfig,
    pub transport: TransportConfig,
    pub haptics: HapticRenderer<f64>,
    pub bots: BotsSection,
    pub log: LogSection,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            idle_ticks: 0,
            game: GameConfig::default(),
            channel: ChannelSection::default(),
            device: DeviceConfig::default(),
            transport: TransportConfig::default(),
            haptics: HapticRenderer::default(),
            bots: BotsSection::default(),
            log: LogSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid session config:")?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConfigLoadError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigErrors),
}

impl SessionConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigLoadError> {
        let cfg: SessionConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigLoadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigLoadError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("session config always serializes")
    }

    /// Every violated field, not just the first.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut errors = Vec::new();
        let mut push = |field: &str, message: String| errors.push(FieldError { field: field.to_string(), message });

        if let Err(e) = self.game.validate() {
            push(&format!("game.{}", e.field), e.reason);
        }
        let ch = &self.channel;
        if !(ch.saturation_k_cm2 > 0.0 && ch.saturation_k_cm2.is_finite()) {
            push("channel.saturation_k_cm2", format!("must be positive, got {}", ch.saturation_k_cm2));
        }
        if !(ch.noise_sigma >= 0.0 && ch.noise_sigma.is_finite()) {
            push("channel.noise_sigma", format!("must be non-negative, got {}", ch.noise_sigma));
        }
        if let Err(e) = ch.classifier.validate() {
            push("channel.classifier", e.to_string());
        }
        let noise = &self.device.imu_noise;
        if !(noise.accel_sigma_g >= 0.0) {
            push("device.imu_noise.accel_sigma_g", "must be non-negative".into());
        }
        if !(noise.gyro_sigma_dps >= 0.0) {
            push("device.imu_noise.gyro_sigma_dps", "must be non-negative".into());
        }
        if self.device.adc_bits > 16 {
            push("device.adc_bits", format!("must be at most 16, got {}", self.device.adc_bits));
        }
        if let Err(e) = self.transport.validate() {
            push("transport", e.to_string());
        }
        if let Err(e) = self.haptics.validate() {
            push("haptics", e.to_string());
        }
        if self.haptics.pulse_ms == 0 || self.haptics.pulse_ms > u16::MAX as u32 {
            push("haptics.pulse_ms", format!("must be in 1..=65535, got {}", self.haptics.pulse_ms));
        }
        for (name, bot) in [("bots.player1", &self.bots.player1), ("bots.player2", &self.bots.player2)] {
            if let Err(msg) = bot.validate() {
                push(name, msg);
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("session config always serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
