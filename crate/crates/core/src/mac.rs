//! Per-user transmission-probability controller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::{d_star, invert_q_star, invert_q_v_star, MacDesign};

/// Which feedback the users act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// The receiver broadcasts its estimate of the virtual success rate.
    ReceiverContention,
    /// Each user reconstructs the contention level from its own success
    /// rate, then inverts it.
    TwoStep,
    /// Each user inverts its own success rate directly.
    OneStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant {
        alpha: f64,
    },
    /// `alpha(t) = a / (t + c)`.
    Diminishing {
        a: f64,
        c: f64,
    },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(
                Error::InvalidSchedule(format!("constant step {alpha} must lie in (0, 1)")),
            ),
            StepSchedule::Diminishing { a, c } if !(a > 0.0 && c >= 1.0 && a <= c) => {
                Err(Error::InvalidSchedule(format!(
                    "diminishing step needs a > 0, c >= 1 and a <= c (got a = {a}, c = {c})"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn alpha(&self, t: u64) -> f64 {
        match *self {
            StepSchedule::Constant { alpha } => alpha,
            StepSchedule::Diminishing { a, c } => a / (t as f64 + c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub p: f64,
    pub schedule: StepSchedule,
    /// Number of updates applied so far.
    pub t: u64,
}

impl ControllerState {
    pub fn new(p: f64, schedule: StepSchedule) -> Self {
        Self { p, schedule, t: 0 }
    }

    /// `p <- (1 - alpha(t)) p + alpha(t) target`.
    pub fn apply_update(self, target: f64) -> Self {
        let alpha = self.schedule.alpha(self.t);
        Self {
            p: ((1.0 - alpha) * self.p + alpha * target).clamp(0.0, 1.0),
            schedule: self.schedule,
            t: self.t + 1,
        }
    }
}

pub fn target_receiver(q_v_estimate: f64, design: &MacDesign) -> f64 {
    invert_q_v_star(q_v_estimate, design).clamp(0.0, design.p_max)
}

/// Reconstructs the contention level as `(1 - p_k) q_k + p_k d*(p)` where
/// `p` solves `q*(p) = q_k`, then inverts it.
pub fn target_two_step(p_k: f64, q_k_estimate: f64, design: &MacDesign) -> f64 {
    let intermediate = invert_q_star(q_k_estimate, design);
    let q_v = (1.0 - p_k) * q_k_estimate + p_k * d_star(intermediate, design);
    target_receiver(q_v, design)
}

pub fn target_one_step(q_k_estimate: f64, design: &MacDesign) -> f64 {
    invert_q_star(q_k_estimate, design).clamp(0.0, design.p_max)
}
