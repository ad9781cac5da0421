use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("virtual profile never drops by more than epsilon_v = {epsilon_v}; contention cannot be measured")]
    FlatVirtualProfile { epsilon_v: f64 },

    #[error("gamma_ev undefined at N = {n}: every virtual-profile difference in the sum is zero")]
    DegenerateGamma { n: usize },

    #[error("gamma_ev running minimum still moving at n_max = {n_max}")]
    GammaNotConverged { n_max: usize },

    #[error(
        "asymptotic utility still increasing at the search bound x = {x_hi}; x* is degenerate"
    )]
    SearchBoundReached { x_hi: f64 },

    #[error("asymptotic utility has two separated maxima near x = {x1} and x = {x2}")]
    NonUniqueOptimum { x1: f64, x2: f64 },

    #[error("b iteration did not settle within {rounds} rounds (last b = {last_b})")]
    DesignNotSettled { rounds: usize, last_b: f64 },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown preset `{0}` (expected one of ex1, ex2, ex3, ex4, ex5)")]
    UnknownPreset(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
