use serde::{Deserialize, Serialize};

use crate::channel::TouchState;
use crate::device::WristPose;

/// What the game sees from the pair each tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairInput {
    pub touch: TouchState,
    /// Steering signal, degrees; positive (supination) steers right.
    pub combined_roll: f64,
    /// Raw per-player poses, kept for the log.
    pub poses: [WristPose<f64>; 2],
}

impl PairInput {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn new(touch: TouchState, combined_roll: f64) -> Self {
        Self { touch, combined_roll: combined_roll.clamp(-180.0, 180.0), poses: Default::default() }
    }
}

/// Fuse the two players' wrist rolls into one steering angle: the mean,
/// except that opposing tilts which both clear the threshold cancel to zero.
pub fn combine_inputs(
    p1: &WristPose<f64>,
    p2: &WristPose<f64>,
    touch: TouchState,
    tilt_threshold_deg: f64,
) -> PairInput {
    let (a, b) = (p1.roll_deg, p2.roll_deg);
    let conflicting = a.signum() != b.signum()
        && a != 0.0
        && b != 0.0
        && a.abs() >= tilt_threshold_deg
        && b.abs() >= tilt_threshold_deg;
    let combined_roll = if conflicting { 0.0 } else { ((a + b) / 2.0).clamp(-180.0, 180.0) };
    PairInput { touch, combined_roll, poses: [*p1, *p2] }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(r: f64) -> WristPose<f64> {
        WristPose::new(r, 0.0).unwrap()
    }

    fn roll(a: f64, b: f64) -> f64 {
        combine_inputs(&pose(a), &pose(b), TouchState::Gentle, 20.0).combined_roll
    }

    #[test]
    fn agreement_averages() {
        assert_eq!(roll(40.0, 40.0), 40.0);
        assert_eq!(roll(-30.0, -50.0), -40.0);
    }

    #[test]
    fn opposing_tilts_cancel() {
        assert_eq!(roll(40.0, -40.0), 0.0);
        assert_eq!(roll(-25.0, 90.0), 0.0);
    }

    /// Mean-plus-cancel rule table: the cancel branch only fires when both
    /// magnitudes reach the threshold with opposite signs.
    #[test]
    fn rule_table() {
        let table = [
            (40.0, 10.0, 25.0),
            (40.0, -10.0, 15.0),
            (-40.0, 19.9, -10.05),
            (20.0, -20.0, 0.0),
            (0.0, 30.0, 15.0),
            (0.0, 0.0, 0.0),
        ];
        for (a, b, want) in table {
            assert!((roll(a, b) - want).abs() < 1e-12, "{a} {b}");
        }
        // +25 clears the default 20° threshold and therefore steers right
        assert!(roll(40.0, 10.0) >= 20.0);
    }

    #[test]
    fn keeps_raw_poses_and_touch() {
        let input = combine_inputs(&pose(5.0), &pose(-7.0), TouchState::Strong, 20.0);
        assert_eq!(input.poses[0].roll_deg, 5.0);
        assert_eq!(input.poses[1].roll_deg, -7.0);
        assert_eq!(input.touch, TouchState::Strong);
    }
}
