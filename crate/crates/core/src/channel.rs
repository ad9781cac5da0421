//! Link-layer channel models.
//!
//! A channel is summarised by two success profiles: `c_real[j]`, the chance
//! a real packet gets through alongside `j` other real packets, and
//! `c_virtual[j]`, the chance the (never transmitted) virtual packet would
//! get through alongside `j` real packets. Generative models sample per-slot
//! outcomes whose marginals match those profiles.
//!
//! Random draws within a slot happen in a fixed order: the channel state
//! first ([`ChannelModel::draw_state`]), then whatever the caller draws for
//! transmit decisions, then per-packet outcomes in transmitter order
//! followed by the virtual packet ([`ChannelModel::resolve`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// A probability sequence indexed by `j >= 0` that is constant (`tail`)
/// beyond its stored prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessProfile {
    values: Vec<f64>,
    tail: f64,
}

impl SuccessProfile {
    pub fn new(values: Vec<f64>, tail: f64) -> Result<Self> {
        let profile = Self { values, tail };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, &v) in self
            .values
            .iter()
            .chain(std::iter::once(&self.tail))
            .enumerate()
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidChannel(format!(
                    "profile entry {j} = {v} is not a probability"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(self.tail)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Number of stored entries; `get(j) == tail()` for every `j >= len()`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_non_increasing(&self) -> bool {
        (0..=self.values.len()).all(|j| self.get(j) >= self.get(j + 1))
    }

    /// The profile seen from one index further along: `j -> get(j + 1)`.
    pub fn shifted(&self) -> SuccessProfile {
        SuccessProfile {
            values: self.values.iter().skip(1).copied().collect(),
            tail: self.tail,
        }
    }
}

/// The real and virtual channel parameter sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub c_real: SuccessProfile,
    pub c_virtual: SuccessProfile,
}

impl ChannelParams {
    pub fn new(c_real: SuccessProfile, c_virtual: SuccessProfile) -> Result<Self> {
        let params = Self { c_real, c_virtual };
        params.validate()?;
        Ok(params)
    }

    /// Real and virtual profiles identical, as when the virtual packet uses
    /// the coding parameters of a real packet.
    pub fn symmetric(profile: SuccessProfile) -> Result<Self> {
        Self::new(profile.clone(), profile)
    }

    pub fn validate(&self) -> Result<()> {
        self.c_real.validate()?;
        self.c_virtual.validate()?;
        if !self.c_virtual.is_non_increasing() {
            return Err(Error::InvalidChannel(
                "virtual profile must be non-increasing".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn c_r(&self, j: usize) -> f64 {
        self.c_real.get(j)
    }

    #[inline]
    pub fn c_v(&self, j: usize) -> f64 {
        self.c_virtual.get(j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingState {
    pub probability: f64,
    /// Maximum number of parallel packets the channel supports in this state.
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// Success only when exactly one packet is on the air.
    Collision,
    /// Each slot the channel supports at most `capacity` packets of a
    /// randomly drawn state; everything fails beyond it.
    ThresholdFading { states: Vec<FadingState> },
    /// Explicit profiles with independent per-packet draws.
    Parametric { params: ChannelParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub n_transmitted: usize,
    /// One flag per transmitter, in transmitter order.
    pub real_success: Vec<bool>,
    pub virtual_success: bool,
    /// Index of the sampled fading state, if the model has states.
    pub channel_state: Option<usize>,
}

impl SlotOutcome {
    pub fn successes(&self) -> usize {
        self.real_success.iter().filter(|&&s| s).count()
    }
}

impl ChannelModel {
    /// Channel from the fading example: capacity 4 with probability 0.3,
    /// capacity 6 otherwise.
    pub fn two_state_fading() -> Self {
        ChannelModel::ThresholdFading {
            states: vec![
                FadingState {
                    probability: 0.3,
                    capacity: 4,
                },
                FadingState {
                    probability: 0.7,
                    capacity: 6,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Collision => Ok(()),
            ChannelModel::ThresholdFading { states } => {
                if states.is_empty() {
                    return Err(Error::InvalidChannel("fading model has no states".into()));
                }
                if let Some(s) = states
                    .iter()
                    .find(|s| !(0.0..=1.0).contains(&s.probability))
                {
                    return Err(Error::InvalidChannel(format!(
                        "state probability {} is not a probability",
                        s.probability
                    )));
                }
                let total: f64 = states.iter().map(|s| s.probability).sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::InvalidChannel(format!(
                        "state probabilities sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
            ChannelModel::Parametric { params } => params.validate(),
        }
    }

    pub fn derive_params(&self) -> ChannelParams {
        match self {
            ChannelModel::Collision => {
                let profile = SuccessProfile {
                    values: vec![1.0],
                    tail: 0.0,
                };
                ChannelParams {
                    c_real: profile.clone(),
                    c_virtual: profile,
                }
            }
            ChannelModel::ThresholdFading { states } => {
                // C_j = P(j + 1 <= M); the virtual packet counts as one more packet.
                let max_cap = states.iter().map(|s| s.capacity).max().unwrap_or(0) as usize;
                let values = (0..max_cap)
                    .map(|j| {
                        states
                            .iter()
                            .filter(|s| j < s.capacity as usize)
                            .map(|s| s.probability)
                            .sum::<f64>()
                    })
                    .collect();
                let profile = SuccessProfile { values, tail: 0.0 };
                ChannelParams {
                    c_real: profile.clone(),
                    c_virtual: profile,
                }
            }
            ChannelModel::Parametric { params } => params.clone(),
        }
    }

    /// Draws the per-slot channel state. Consumes one uniform for fading
    /// models and nothing otherwise.
    pub fn draw_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        match self {
            ChannelModel::ThresholdFading { states } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, s) in states.iter().enumerate() {
                    acc += s.probability;
                    if u < acc {
                        return Some(i);
                    }
                }
                Some(states.len() - 1)
            }
            _ => None,
        }
    }

    /// Resolves the outcome of a slot given an already drawn state.
    pub fn resolve<R: Rng + ?Sized>(
        &self,
        state: Option<usize>,
        transmit_flags: &[bool],
        rng: &mut R,
    ) -> SlotOutcome {
        let n = transmit_flags.iter().filter(|&&f| f).count();
        let (real_success, virtual_success) = match self {
            ChannelModel::Collision => (vec![n == 1; n], n == 0),
            ChannelModel::ThresholdFading { states } => {
                let cap = state.map(|i| states[i].capacity as usize).unwrap_or(0);
                (vec![n <= cap; n], n < cap)
            }
            ChannelModel::Parametric { params } => {
                let p_real = if n > 0 { params.c_r(n - 1) } else { 0.0 };
                let real = (0..n).map(|_| rng.gen::<f64>() < p_real).collect();
                let virt = rng.gen::<f64>() < params.c_v(n);
                (real, virt)
            }
        };
        SlotOutcome {
            n_transmitted: n,
            real_success,
            virtual_success,
            channel_state: state,
        }
    }

    pub fn sample_slot<R: Rng + ?Sized>(
        &self,
        transmit_flags: &[bool],
        rng: &mut R,
    ) -> SlotOutcome {
        let state = self.draw_state(rng);
        self.resolve(state, transmit_flags, rng)
    }
}
