use serde::{Deserialize, Serialize};

use super::search::{argmax, bisect_decreasing_root, golden_section_max, grid_then_golden};
use super::sums::{binomial_mean, poisson_mean};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Symmetric system utility. Sum throughput is the energy-weighted form
/// with zero energy cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    SumThroughput,
    EnergyWeightedThroughput { energy_cost: f64 },
}

impl UtilitySpec {
    pub fn energy_cost(&self) -> f64 {
        match *self {
            UtilitySpec::SumThroughput => 0.0,
            UtilitySpec::EnergyWeightedThroughput { energy_cost } => energy_cost,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.energy_cost();
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "energy cost {e} must be >= 0"
            )));
        }
        Ok(())
    }
}

/// `U(K, p) = K p (E[C_r(J)] - E)` with `J ~ Bin(K - 1, p)`.
pub fn utility_finite(k: usize, p: f64, params: &ChannelParams, spec: &UtilitySpec) -> f64 {
    if k == 0 || p <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    kf * p * (binomial_mean(k - 1, p, &params.c_real) - spec.energy_cost())
}

/// Poisson limit of `utility_finite(K, x / K)` as `K` grows.
pub fn utility_asymptotic(x: f64, params: &ChannelParams, spec: &UtilitySpec) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x * (poisson_mean(x, &params.c_real) - spec.energy_cost())
}

pub const DEFAULT_X_HI: f64 = 20.0;
const X_GRID_STEP: f64 = 0.01;

/// Maximiser of the asymptotic utility on `[0, x_hi]`.
pub fn compute_x_star(params: &ChannelParams, spec: &UtilitySpec, x_hi: f64) -> Result<f64> {
    let steps = (x_hi / X_GRID_STEP).round().max(2.0) as usize;
    let h = x_hi / steps as f64;
    let f = |x: f64| utility_asymptotic(x, params, spec);
    let values: Vec<f64> = (0..=steps).map(|i| f(i as f64 * h)).collect();
    if values[steps] >= values[steps - 1] {
        return Err(Error::SearchBoundReached { x_hi });
    }
    let best = argmax(&values);

    // interior local maxima on the grid that tie with the best one
    for i in 1..steps {
        if i != best
            && values[i] >= values[i - 1]
            && values[i] >= values[i + 1]
            && (values[i] - values[best]).abs() < 1e-9
            && ((i as f64 - best as f64) * h).abs() > 0.1
        {
            return Err(Error::NonUniqueOptimum {
                x1: best as f64 * h,
                x2: i as f64 * h,
            });
        }
    }
    if best == 0 {
        return Ok(0.0);
    }
    let a = (best - 1) as f64 * h;
    let b = (best + 1) as f64 * h;
    let x = golden_section_max(f, a, b, 1e-9);
    // the peak is flat to machine precision over ~1e-8; polish on the slope
    let slope = |x: f64| utility_asymptotic_slope(x, params, spec);
    let (lo, hi) = ((x - 1e-6).max(a), (x + 1e-6).min(b));
    if slope(lo) > 0.0 && slope(hi) < 0.0 {
        return Ok(bisect_decreasing_root(slope, lo, hi, 1e-15));
    }
    Ok(x)
}

/// Derivative of [`utility_asymptotic`] in `x`:
/// `E[C(J)] - E + x (E[C(J + 1)] - E[C(J)])` with `J ~ Poisson(x)`.
fn utility_asymptotic_slope(x: f64, params: &ChannelParams, spec: &UtilitySpec) -> f64 {
    let here = poisson_mean(x, &params.c_real);
    let next = poisson_mean(x, &params.c_real.shifted());
    here - spec.energy_cost() + x * (next - here)
}

/// Maximiser of `utility_finite(K, .)` over `[0, 1]`.
pub fn optimal_p(k: usize, params: &ChannelParams, spec: &UtilitySpec) -> f64 {
    grid_then_golden(|p| utility_finite(k, p, params, spec), 0.0, 1.0, 1000, 1e-9)
}
