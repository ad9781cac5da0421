//! Distributed random-access MAC driven by a virtual-packet contention
//! measure.
//!
//! Users on a slotted channel adapt their transmission probabilities by
//! stochastic approximation toward a designed equilibrium
//! `min(p_max, x* / (K + b))`, without knowing the user count `K`. The
//! receiver (or each user, from its own success rate) measures how often a
//! never-transmitted virtual packet would have succeeded, and that reading
//! is inverted into a probability target.
//!
//! - [`channel`]: channel models, parameter sets and per-slot sampling
//! - [`theory`]: utilities, design constants, contention curves, baselines
//! - [`mac`]: per-user targets and the step-size update
//! - [`sim`]: the slotted Monte-Carlo engine
//! - [`cli`]: scenario files, presets and CSV output

pub mod channel;
pub mod cli;
pub mod error;
pub mod mac;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
