//! Slotted Monte-Carlo engine.
//!
//! Each slot runs, in order: scheduled join/leave events, the channel-state
//! draw, one transmit draw per active user (index order), outcome
//! resolution, estimator updates, probability updates on feedback epochs,
//! and utility bookkeeping. All randomness comes from one ChaCha stream
//! seeded by the scenario, so a run is a pure function of its [`Scenario`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::mac::{
    target_one_step, target_receiver, target_two_step, ControllerState, FeedbackMode, StepSchedule,
};
use crate::theory::{build_design, optimal_p, utility_finite, MacDesign, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorKind {
    /// Average indicators over `q` slots, then feed back once.
    Window { q: u64 },
    /// Per-slot exponential moving average, fed back every slot.
    Ema { weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Starting value of the receiver's `q_v` and of each user's `q_k`.
    pub initial_value: f64,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EstimatorKind::Window { q: 0 } => {
                return Err(Error::InvalidScenario(
                    "window length Q must be >= 1".into(),
                ))
            }
            EstimatorKind::Ema { weight } if !(weight > 0.0 && weight < 1.0) => {
                return Err(Error::InvalidScenario(format!(
                    "EMA weight {weight} must lie in (0, 1)"
                )))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.initial_value) {
            return Err(Error::InvalidScenario(format!(
                "estimator initial value {} is not a probability",
                self.initial_value
            )));
        }
        Ok(())
    }
}

/// Either the inputs to derive a design or a fully specified one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSource {
    Derive {
        utility: UtilitySpec,
        epsilon_v: f64,
        b_margin: f64,
    },
    Explicit {
        design: MacDesign,
    },
}

/// Population change; the payload is the number of users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    Join(usize),
    Leave(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledEvent {
    /// 1-based slot at whose start the event takes effect.
    pub slot: u64,
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub channel: ChannelModel,
    pub design: DesignSource,
    pub mode: FeedbackMode,
    pub schedule: StepSchedule,
    pub estimator: EstimatorConfig,
    pub horizon: u64,
    pub initial_users: usize,
    pub initial_p: f64,
    pub seed: u64,
    #[serde(default)]
    pub events: Vec<ScheduledEvent>,
    pub utility_ema_weight: f64,
    /// Record every `stride`-th slot.
    #[serde(default = "default_stride")]
    pub stride: u64,
    /// Slots at the end of the run averaged into the final mean probability.
    #[serde(default = "default_summary_window")]
    pub summary_window: u64,
}

fn default_stride() -> u64 {
    1
}

fn default_summary_window() -> u64 {
    500
}

impl Scenario {
    /// Checks every invariant and returns the design the run will use.
    pub fn validate(&self) -> Result<MacDesign> {
        self.channel.validate()?;
        self.schedule.validate()?;
        self.estimator.validate()?;
        if self.initial_users == 0 {
            return Err(Error::InvalidScenario(
                "initial user count must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.initial_p) {
            return Err(Error::InvalidScenario(format!(
                "initial probability {} is not a probability",
                self.initial_p
            )));
        }
        if !(self.utility_ema_weight > 0.0 && self.utility_ema_weight < 1.0) {
            return Err(Error::InvalidScenario(format!(
                "utility EMA weight {} must lie in (0, 1)",
                self.utility_ema_weight
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidScenario("stride must be >= 1".into()));
        }
        let mut users = self.initial_users as i64;
        let mut last = 0;
        for ev in &self.events {
            if ev.slot <= last {
                return Err(Error::InvalidScenario(format!(
                    "event slots must be strictly increasing and >= 1 (slot {} after {last})",
                    ev.slot
                )));
            }
            if ev.slot > self.horizon {
                return Err(Error::InvalidScenario(format!(
                    "event at slot {} lies beyond the horizon {}",
                    ev.slot, self.horizon
                )));
            }
            last = ev.slot;
            users += match ev.action {
                EventAction::Join(n) => n as i64,
                EventAction::Leave(n) => -(n as i64),
            };
            if users < 1 {
                return Err(Error::InvalidScenario(format!(
                    "event at slot {} leaves fewer than one user",
                    ev.slot
                )));
            }
        }
        let channel_params = self.channel.derive_params();
        match &self.design {
            DesignSource::Derive {
                utility,
                epsilon_v,
                b_margin,
            } => build_design(&channel_params, utility, *epsilon_v, *b_margin),
            DesignSource::Explicit { design } => {
                design.validate()?;
                if design.params != channel_params {
                    return Err(Error::InvalidScenario(
                        "explicit design parameters do not match the channel".into(),
                    ));
                }
                Ok(design.clone())
            }
        }
    }

    /// User count after all events at or before `slot` (1-based).
    pub fn users_at(&self, slot: u64) -> usize {
        let mut users = self.initial_users;
        for ev in self.events.iter().filter(|e| e.slot <= slot) {
            match ev.action {
                EventAction::Join(n) => users += n,
                EventAction::Leave(n) => users -= n,
            }
        }
        users
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub active_users: usize,
    pub p_mean: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_v_estimate: f64,
    pub q_k_mean: f64,
    pub q_k_min: f64,
    pub q_k_max: f64,
    pub virtual_success: bool,
    pub n_transmitted: usize,
    pub successes: usize,
    pub utility_sample: f64,
    pub utility_ema: f64,
}

/// A stretch of the run with a fixed population and its reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub start_slot: u64,
    pub end_slot: u64,
    pub users: usize,
    pub p_star: f64,
    pub p_opt: f64,
    pub u_star: f64,
    pub u_opt: f64,
}

impl Stage {
    fn new(start_slot: u64, end_slot: u64, users: usize, design: &MacDesign) -> Self {
        let p_star = design.equilibrium_p(users);
        let p_opt = optimal_p(users, &design.params, &design.utility);
        Stage {
            start_slot,
            end_slot,
            users,
            p_star,
            p_opt,
            u_star: utility_finite(users, p_star, &design.params, &design.utility),
            u_opt: utility_finite(users, p_opt, &design.params, &design.utility),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_users: usize,
    /// Mean over the last `window` slots of the across-user mean probability.
    pub mean_p: f64,
    pub window: u64,
    pub final_utility_ema: f64,
    pub p_star: f64,
    pub p_opt: f64,
    pub u_star: f64,
    pub u_opt: f64,
    /// `final_utility_ema / u_opt`.
    pub utility_ratio: f64,
    /// `u_star / u_opt`.
    pub equilibrium_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub scenario: Scenario,
    pub design: MacDesign,
    pub records: Vec<SlotRecord>,
    pub stages: Vec<Stage>,
    pub summary: Summary,
}

/// How departing users are picked.
pub const LEAVE_POLICY: &str = "uniform random among active users (seeded)";

struct User {
    ctrl: ControllerState,
    q_k: f64,
    window_attempts: u64,
    window_successes: u64,
}

impl User {
    fn new(p: f64, q_k: f64, schedule: StepSchedule) -> Self {
        User {
            ctrl: ControllerState::new(p, schedule),
            q_k,
            window_attempts: 0,
            window_successes: 0,
        }
    }
}

fn min_mean_max(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        n += 1;
    }
    (lo, sum / n as f64, hi)
}

pub fn run(scenario: &Scenario) -> Result<SimTrace> {
    let design = scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let energy = design.utility.energy_cost();

    let mut users: Vec<User> = (0..scenario.initial_users)
        .map(|_| {
            User::new(
                scenario.initial_p,
                scenario.estimator.initial_value,
                scenario.schedule,
            )
        })
        .collect();
    let mut q_v = scenario.estimator.initial_value;
    let mut window_virtual = 0u64;
    let mut window_len = 0u64;
    let mut utility_ema = 0.0;

    let capacity = scenario.horizon.div_ceil(scenario.stride) as usize;
    let mut records = Vec::with_capacity(capacity);
    let window = scenario.summary_window.min(scenario.horizon);
    let mut tail_p_sum = 0.0;
    let mut events = scenario.events.iter().peekable();
    let mut flags: Vec<bool> = Vec::new();

    for slot in 1..=scenario.horizon {
        while let Some(ev) = events.next_if(|e| e.slot == slot) {
            match ev.action {
                EventAction::Join(n) => {
                    users.extend((0..n).map(|_| User::new(0.0, 1.0, scenario.schedule)))
                }
                EventAction::Leave(n) => {
                    let mut gone = sample(&mut rng, users.len(), n).into_vec();
                    gone.sort_unstable_by(|a, b| b.cmp(a));
                    for i in gone {
                        users.remove(i);
                    }
                }
            }
        }

        let state = scenario.channel.draw_state(&mut rng);
        flags.clear();
        flags.extend(users.iter().map(|u| rng.gen::<f64>() < u.ctrl.p));
        let outcome = scenario.channel.resolve(state, &flags, &mut rng);

        // estimators
        let feedback = match scenario.estimator.kind {
            EstimatorKind::Ema { weight } => {
                q_v = (1.0 - weight) * q_v + weight * f64::from(u8::from(outcome.virtual_success));
                let mut next = outcome.real_success.iter();
                for (user, &sent) in users.iter_mut().zip(&flags) {
                    if sent {
                        let ok = *next.next().expect("one outcome per transmitter");
                        user.q_k = (1.0 - weight) * user.q_k + weight * f64::from(u8::from(ok));
                    }
                }
                true
            }
            EstimatorKind::Window { q } => {
                window_virtual += u64::from(outcome.virtual_success);
                window_len += 1;
                let mut next = outcome.real_success.iter();
                for (user, &sent) in users.iter_mut().zip(&flags) {
                    if sent {
                        user.window_attempts += 1;
                        user.window_successes +=
                            u64::from(*next.next().expect("one outcome per transmitter"));
                    }
                }
                if window_len == q {
                    q_v = window_virtual as f64 / q as f64;
                    for user in users.iter_mut() {
                        if user.window_attempts > 0 {
                            user.q_k = user.window_successes as f64 / user.window_attempts as f64;
                        }
                        user.window_attempts = 0;
                        user.window_successes = 0;
                    }
                    window_virtual = 0;
                    window_len = 0;
                    true
                } else {
                    false
                }
            }
        };

        if feedback {
            match scenario.mode {
                FeedbackMode::ReceiverContention => {
                    let target = target_receiver(q_v, &design);
                    for user in users.iter_mut() {
                        user.ctrl = user.ctrl.apply_update(target);
                    }
                }
                FeedbackMode::TwoStep => {
                    for user in users.iter_mut() {
                        let target = target_two_step(user.ctrl.p, user.q_k, &design);
                        user.ctrl = user.ctrl.apply_update(target);
                    }
                }
                FeedbackMode::OneStep => {
                    for user in users.iter_mut() {
                        let target = target_one_step(user.q_k, &design);
                        user.ctrl = user.ctrl.apply_update(target);
                    }
                }
            }
        }

        let successes = outcome.successes();
        let utility_sample = successes as f64 - energy * outcome.n_transmitted as f64;
        utility_ema = (1.0 - scenario.utility_ema_weight) * utility_ema
            + scenario.utility_ema_weight * utility_sample;

        let (p_min, p_mean, p_max) = min_mean_max(users.iter().map(|u| u.ctrl.p));
        if slot + window > scenario.horizon {
            tail_p_sum += p_mean;
        }
        if (slot - 1) % scenario.stride == 0 {
            let (q_k_min, q_k_mean, q_k_max) = min_mean_max(users.iter().map(|u| u.q_k));
            records.push(SlotRecord {
                slot,
                active_users: users.len(),
                p_mean,
                p_min,
                p_max,
                q_v_estimate: q_v,
                q_k_mean,
                q_k_min,
                q_k_max,
                virtual_success: outcome.virtual_success,
                n_transmitted: outcome.n_transmitted,
                successes,
                utility_sample,
                utility_ema,
            });
        }
    }

    let stages = stages_for(scenario, &design);
    let last = stages.last().expect("at least one stage").clone();
    let mean_p = if window == 0 {
        min_mean_max(users.iter().map(|u| u.ctrl.p)).1
    } else {
        tail_p_sum / window as f64
    };
    let summary = Summary {
        final_users: users.len(),
        mean_p,
        window,
        final_utility_ema: utility_ema,
        p_star: last.p_star,
        p_opt: last.p_opt,
        u_star: last.u_star,
        u_opt: last.u_opt,
        utility_ratio: utility_ema / last.u_opt,
        equilibrium_ratio: last.u_star / last.u_opt,
    };
    Ok(SimTrace {
        scenario: scenario.clone(),
        design,
        records,
        stages,
        summary,
    })
}

fn stages_for(scenario: &Scenario, design: &MacDesign) -> Vec<Stage> {
    let mut starts: Vec<u64> = vec![1];
    starts.extend(scenario.events.iter().map(|e| e.slot).filter(|&s| s > 1));
    starts
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let end = starts.get(i + 1).map_or(scenario.horizon, |next| next - 1);
            Stage::new(start, end, scenario.users_at(start), design)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStat {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesStat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SeriesStat {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub slot: u64,
    pub p_mean: SeriesStat,
    pub q_v_estimate: SeriesStat,
    pub utility_ema: SeriesStat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub n_seeds: usize,
    pub first_seed: u64,
    pub traces: Vec<SimTrace>,
    pub per_slot: Vec<AggregateRow>,
    pub final_mean_p: SeriesStat,
    pub final_utility_ema: SeriesStat,
    pub final_utility_ratio: SeriesStat,
}

/// Runs the scenario under seeds `seed, seed + 1, ...` in parallel.
pub fn run_many(scenario: &Scenario, n_seeds: usize) -> Result<Aggregate> {
    if n_seeds == 0 {
        return Err(Error::InvalidScenario("need at least one seed".into()));
    }
    scenario.validate()?;
    let traces: Vec<SimTrace> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = scenario.clone();
            s.seed = scenario.seed.wrapping_add(i);
            run(&s)
        })
        .collect::<Result<_>>()?;

    let per_slot = (0..traces[0].records.len())
        .map(|r| {
            let col = |f: fn(&SlotRecord) -> f64| -> SeriesStat {
                SeriesStat::of(&traces.iter().map(|t| f(&t.records[r])).collect::<Vec<_>>())
            };
            AggregateRow {
                slot: traces[0].records[r].slot,
                p_mean: col(|x| x.p_mean),
                q_v_estimate: col(|x| x.q_v_estimate),
                utility_ema: col(|x| x.utility_ema),
            }
        })
        .collect();
    let summary_stat = |f: fn(&Summary) -> f64| -> SeriesStat {
        SeriesStat::of(&traces.iter().map(|t| f(&t.summary)).collect::<Vec<_>>())
    };
    Ok(Aggregate {
        n_seeds,
        first_seed: scenario.seed,
        final_mean_p: summary_stat(|s| s.mean_p),
        final_utility_ema: summary_stat(|s| s.final_utility_ema),
        final_utility_ratio: summary_stat(|s| s.utility_ratio),
        per_slot,
        traces,
    })
}

/// Fraction of `n_slots` slots in which the virtual packet succeeds while
/// `k` users transmit with fixed probability `p`.
pub fn measure_stationary_qv(
    p: f64,
    k: usize,
    channel: &ChannelModel,
    n_slots: u64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flags = vec![false; k];
    let mut hits = 0u64;
    for _ in 0..n_slots {
        let state = channel.draw_state(&mut rng);
        for f in flags.iter_mut() {
            *f = rng.gen::<f64>() < p;
        }
        hits += u64::from(channel.resolve(state, &flags, &mut rng).virtual_success);
    }
    hits as f64 / n_slots as f64
}
