//! Canned experiments: two analytic tables and three simulations.

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SCHEMA_VERSION};
use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::mac::{FeedbackMode, StepSchedule};
use crate::sim::{
    DesignSource, EstimatorConfig, EstimatorKind, EventAction, Scenario, ScheduledEvent,
};
use crate::theory::UtilitySpec;

pub const PRESET_NAMES: [&str; 5] = ["ex1", "ex2", "ex3", "ex4", "ex5"];

const EPSILON_V: f64 = 0.01;
const B_MARGIN: f64 = 0.01;
const EMA_WEIGHT: f64 = 1.0 / 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Collision-channel idle-probability rule, see [`crate::theory::hajek_pa`].
    Hajek,
    /// Idle probability held at `exp(-x*)`.
    IdleTarget,
}

/// An analytic equilibrium table over a range of user counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableJob {
    pub name: String,
    pub channel: ChannelModel,
    pub utility: UtilitySpec,
    pub epsilon_v: f64,
    pub b_margin: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub baseline: Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Table(TableJob),
    Run(RunConfig),
}

fn fading_utility() -> UtilitySpec {
    UtilitySpec::EnergyWeightedThroughput { energy_cost: 0.3 }
}

fn ex3() -> RunConfig {
    RunConfig {
        schema: SCHEMA_VERSION,
        name: "ex3".into(),
        seeds: 10,
        out_dir: None,
        scenario: Scenario {
            channel: ChannelModel::two_state_fading(),
            design: DesignSource::Derive {
                utility: fading_utility(),
                epsilon_v: EPSILON_V,
                b_margin: B_MARGIN,
            },
            mode: FeedbackMode::ReceiverContention,
            schedule: StepSchedule::Constant { alpha: 0.05 },
            estimator: EstimatorConfig {
                kind: EstimatorKind::Ema { weight: EMA_WEIGHT },
                initial_value: 1.0,
            },
            horizon: 3000,
            initial_users: 8,
            initial_p: 0.0,
            seed: 20_240_003,
            events: vec![],
            utility_ema_weight: EMA_WEIGHT,
            stride: 1,
            summary_window: 500,
        },
    }
}

pub fn preset(name: &str) -> Result<Job> {
    match name {
        "ex1" => Ok(Job::Table(TableJob {
            name: "ex1".into(),
            channel: ChannelModel::Collision,
            utility: UtilitySpec::SumThroughput,
            epsilon_v: EPSILON_V,
            b_margin: B_MARGIN,
            k_min: 1,
            k_max: 30,
            baseline: Baseline::Hajek,
        })),
        "ex2" => Ok(Job::Table(TableJob {
            name: "ex2".into(),
            channel: ChannelModel::two_state_fading(),
            utility: fading_utility(),
            epsilon_v: EPSILON_V,
            b_margin: B_MARGIN,
            k_min: 1,
            k_max: 30,
            baseline: Baseline::IdleTarget,
        })),
        "ex3" => Ok(Job::Run(ex3())),
        "ex4" => {
            let mut cfg = ex3();
            cfg.name = "ex4".into();
            cfg.scenario.mode = FeedbackMode::OneStep;
            cfg.scenario.seed = 20_240_004;
            Ok(Job::Run(cfg))
        }
        "ex5" => {
            let mut cfg = ex3();
            cfg.name = "ex5".into();
            cfg.scenario.mode = FeedbackMode::OneStep;
            cfg.scenario.seed = 20_240_005;
            cfg.scenario.horizon = 9000;
            cfg.scenario.summary_window = 1000;
            cfg.scenario.events = vec![
                ScheduledEvent {
                    slot: 3001,
                    action: EventAction::Join(7),
                },
                ScheduledEvent {
                    slot: 6001,
                    action: EventAction::Leave(5),
                },
            ];
            Ok(Job::Run(cfg))
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}
