//! Emulated radio link: seeded latency, jitter and drops with FIFO delivery.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportConfigError {
    #[error("drop_probability must lie in [0, 1], got {0}")]
    DropProbability(f64),
    #[error("{field} must be a non-negative number of milliseconds, got {value}")]
    NegativeLatency { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub latency_mean_ms: f64,
    pub latency_jitter_ms: f64,
    pub drop_probability: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { latency_mean_ms: 15.0, latency_jitter_ms: 5.0, drop_probability: 0.005 }
    }
}

impl TransportConfig {
    pub fn ideal() -> Self {
        Self { latency_mean_ms: 0.0, latency_jitter_ms: 0.0, drop_probability: 0.0 }
    }

    pub fn validate(&self) -> Result<(), TransportConfigError> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(TransportConfigError::DropProbability(self.drop_probability));
        }
        for (field, value) in [("latency_mean_ms", self.latency_mean_ms), ("latency_jitter_ms", self.latency_jitter_ms)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(TransportConfigError::NegativeLatency { field, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportStats {
    pub enqueued: u64,
    pub dropped: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct InFlight {
    due_ms: f64,
    bytes: Vec<u8>,
}

/// One direction of one device link. Single owner; time must not run backwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    cfg: TransportConfig,
    rng: StreamRng,
    queue: VecDeque<InFlight>,
    last_due_ms: f64,
    last_now_ms: f64,
    stats: TransportStats,
}

impl Transport {
    pub fn new(cfg: TransportConfig, rng: StreamRng) -> Result<Self, TransportConfigError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            rng,
            queue: VecDeque::new(),
            last_due_ms: f64::NEG_INFINITY,
            last_now_ms: f64::NEG_INFINITY,
            stats: TransportStats::default(),
        })
    }

    pub fn seeded(cfg: TransportConfig, seed: u64) -> Result<Self, TransportConfigError> {
        Self::new(cfg, rng::stream(seed, "transport"))
    }

    fn advance_clock(&mut self, now_ms: f64) {
        assert!(now_ms >= self.last_now_ms, "transport clock went backwards: {now_ms} < {}", self.last_now_ms);
        self.last_now_ms = now_ms;
    }

    /// Queue `bytes` sent at `now_ms`. Exactly two draws are taken per call
    /// whether or not the message is dropped.
    pub fn enqueue(&mut self, bytes: Vec<u8>, now_ms: f64) {
        self.advance_clock(now_ms);
        self.stats.enqueued += 1;
        let drop_draw: f64 = self.rng.random();
        let jitter_draw: f64 = self.rng.random_range(-1.0..=1.0);
        if drop_draw < self.cfg.drop_probability {
            self.stats.dropped += 1;
            return;
        }
        let latency = (self.cfg.latency_mean_ms + jitter_draw * self.cfg.latency_jitter_ms).max(0.0);
        // a message never overtakes an earlier one on the same link
        let due_ms = (now_ms + latency).max(self.last_due_ms);
        self.last_due_ms = due_ms;
        self.queue.push_back(InFlight { due_ms, bytes });
    }

    /// Messages whose delivery time has arrived, oldest first.
    pub fn poll(&mut self, now_ms: f64) -> Vec<Vec<u8>> {
        self.advance_clock(now_ms);
        let mut out = Vec::new();
        while self.queue.front().is_some_and(|m| m.due_ms <= now_ms) {
            out.extend(self.queue.pop_front().map(|m| m.bytes));
        }
        self.stats.delivered += out.len() as u64;
        out
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn stats(&self) -> TransportStats {
        self.stats
    }

    pub fn config(&self) -> &TransportConfig {
        &self.cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(latency: f64) -> TransportConfig {
        TransportConfig { latency_mean_ms: latency, latency_jitter_ms: 0.0, drop_probability: 0.0 }
    }

    #[test]
    fn deterministic_delay() {
        let mut t = Transport::seeded(fixed(20.0), 1).unwrap();
        t.enqueue(vec![1], 0.0);
        assert!(t.poll(19.0).is_empty());
        assert_eq!(t.poll(20.0), vec![vec![1]]);
        assert!(t.poll(40.0).is_empty());
    }

    #[test]
    fn always_drop() {
        let cfg = TransportConfig { drop_probability: 1.0, ..TransportConfig::default() };
        let mut t = Transport::seeded(cfg, 5).unwrap();
        for i in 0..500 {
            t.enqueue(vec![i as u8], i as f64);
            assert!(t.poll(i as f64).is_empty());
        }
        assert!(t.poll(1e9).is_empty());
        assert_eq!(t.stats().dropped, 500);
    }

    #[test]
    fn fifo_under_heavy_jitter() {
        let cfg = TransportConfig { latency_mean_ms: 30.0, latency_jitter_ms: 30.0, drop_probability: 0.2 };
        let mut t = Transport::seeded(cfg, 11).unwrap();
        let mut got = Vec::new();
        for i in 0..2000u32 {
            t.enqueue(i.to_le_bytes().to_vec(), i as f64);
            got.extend(t.poll(i as f64));
        }
        got.extend(t.poll(1e9));
        let ids: Vec<u32> = got.iter().map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        let s = t.stats();
        assert_eq!(s.delivered + s.dropped, s.enqueued);
    }

    #[test]
    fn seeded_schedules_repeat() {
        let run = || {
            let mut t = Transport::seeded(TransportConfig::default(), 42).unwrap();
            let mut log = Vec::new();
            for i in 0..1000 {
                let now = i as f64 * 16.0;
                t.enqueue(vec![(i % 256) as u8], now);
                for m in t.poll(now) {
                    log.push((i, m));
                }
            }
            log
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TransportConfig { drop_probability: 1.5, ..TransportConfig::default() };
        assert!(Transport::seeded(cfg, 0).is_err());
        let cfg = TransportConfig { latency_mean_ms: -1.0, ..TransportConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    #[should_panic(expected = "backwards")]
    fn time_must_not_go_backwards() {
        let mut t = Transport::seeded(TransportConfig::ideal(), 0).unwrap();
        t.poll(10.0);
        t.poll(5.0);
    }
}
