use serde::{Deserialize, Serialize};

use super::contention;
use super::sums::{binomial_ln_pmf, poisson_ln_pmf};
use super::utility::{compute_x_star, UtilitySpec, DEFAULT_X_HI};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

const MAX_B_ROUNDS: usize = 100;
const B_SETTLE_TOL: f64 = 1e-9;
const MONOTONE_GRID: usize = 1024;

/// Design constants shared by every user and the receiver.
///
/// The equilibrium for `K` users is `min(p_max, x_star / (K + b))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacDesign {
    pub x_star: f64,
    pub epsilon_v: f64,
    pub j_ev: usize,
    pub gamma_ev: f64,
    pub b: f64,
    pub p_max: f64,
    pub params: ChannelParams,
    pub utility: UtilitySpec,
    /// Whether `q_star` was found non-decreasing on a grid over `[0, p_max]`.
    /// When false, inversion falls back to a grid-bracketed search.
    #[serde(default = "default_true")]
    pub q_star_monotone: bool,
}

fn default_true() -> bool {
    true
}

impl MacDesign {
    /// Assembles a design from explicit constants and checks its invariants.
    /// `p_max` is recomputed from `x_star`, `j_ev` and `b`.
    pub fn from_parts(
        params: ChannelParams,
        utility: UtilitySpec,
        x_star: f64,
        epsilon_v: f64,
        j_ev: usize,
        gamma_ev: f64,
        b: f64,
    ) -> Result<Self> {
        let mut design = MacDesign {
            x_star,
            epsilon_v,
            j_ev,
            gamma_ev,
            b,
            p_max: p_max_for(x_star, j_ev, b),
            params,
            utility,
            q_star_monotone: true,
        };
        design.validate()?;
        design.q_star_monotone = contention::q_star_is_monotone(&design, MONOTONE_GRID);
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.utility.validate()?;
        if !(self.x_star > 0.0 && self.x_star.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "x* = {} must be positive",
                self.x_star
            )));
        }
        let bound = 1f64.max(self.x_star - self.gamma_ev);
        if !(self.b > bound) {
            return Err(Error::InvalidDesign(format!(
                "b = {} must exceed max(1, x* - gamma_ev) = {bound}",
                self.b
            )));
        }
        let expected = p_max_for(self.x_star, self.j_ev, self.b);
        if (self.p_max - expected).abs() > 1e-12 {
            return Err(Error::InvalidDesign(format!(
                "p_max = {} disagrees with min(1, x*/(J + b)) = {expected}",
                self.p_max
            )));
        }
        if !(self.p_max > 0.0 && self.p_max <= 1.0) {
            return Err(Error::InvalidDesign(format!(
                "p_max = {} out of (0, 1]",
                self.p_max
            )));
        }
        Ok(())
    }

    /// Designed equilibrium probability for `k` users.
    pub fn equilibrium_p(&self, k: usize) -> f64 {
        self.p_max.min(self.x_star / (k as f64 + self.b))
    }
}

pub fn p_max_for(x_star: f64, j_ev: usize, b: f64) -> f64 {
    1f64.min(x_star / (j_ev as f64 + b))
}

/// First index where the virtual profile drops by more than `epsilon_v`.
pub fn compute_j_ev(params: &ChannelParams, epsilon_v: f64) -> Result<usize> {
    let cv = &params.c_virtual;
    (0..=cv.len())
        .find(|&j| cv.get(j) > cv.get(j + 1) + epsilon_v)
        .ok_or(Error::FlatVirtualProfile { epsilon_v })
}

/// Mean of `j` under weights `P(J = j) * (C_vj - C_v(j+1))`, from log pmf values.
fn weighted_drop_index(ln_pmf: &[f64], params: &ChannelParams) -> Option<f64> {
    let cv = &params.c_virtual;
    let terms: Vec<(usize, f64, f64)> = ln_pmf
        .iter()
        .enumerate()
        .filter_map(|(j, &lp)| {
            let drop = cv.get(j) - cv.get(j + 1);
            (drop > 0.0).then_some((j, lp, drop))
        })
        .collect();
    let peak = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, lp, drop) in terms {
        let w = (lp - peak).exp() * drop;
        num += j as f64 * w;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

/// `gamma_ev`: the minimum over admissible `N` of the drop-weighted mean
/// index under `Bin(N, p_{N+1})`, also compared against its `N -> inf`
/// Poisson limit.
///
/// `n_max` defaults to `10 (J + x* + b)`. The result is accepted when the
/// running minimum is flat over the last half of the range or the limit
/// already attains it.
pub fn compute_gamma_ev(
    params: &ChannelParams,
    x_star: f64,
    b: f64,
    epsilon_v: f64,
    n_max: Option<usize>,
) -> Result<f64> {
    if b < 1.0 {
        return Err(Error::InvalidDesign(format!("b = {b} must be >= 1")));
    }
    let j_ev = compute_j_ev(params, epsilon_v)?;
    let p_max = p_max_for(x_star, j_ev, b);
    // floor, not ceil: the curve blends around N = floor(x*/p - b), which reaches
    // floor(x* - b) when p_max clamps at 1
    let n_lo = j_ev.max((x_star - b).floor().max(0.0) as usize);
    let n_max = n_max.unwrap_or_else(|| (10.0 * (j_ev as f64 + x_star + b)).ceil() as usize);
    if n_max < n_lo {
        return Err(Error::InvalidDesign(format!(
            "n_max = {n_max} below the smallest admissible N = {n_lo}"
        )));
    }
    let upto = params.c_virtual.len();

    let mut running = f64::INFINITY;
    let mut history = Vec::with_capacity(n_max - n_lo + 1);
    for n in n_lo..=n_max {
        let p_next = p_max.min(x_star / (n as f64 + 1.0 + b));
        let ratio = weighted_drop_index(&binomial_ln_pmf(n, p_next, upto), params)
            .ok_or(Error::DegenerateGamma { n })?;
        running = running.min(ratio);
        history.push(running);
    }
    let limit = weighted_drop_index(&poisson_ln_pmf(x_star, upto), params)
        .ok_or(Error::DegenerateGamma { n: usize::MAX })?;

    let half = history[history.len() / 2];
    let settled = half - running <= 1e-9;
    if !settled && limit > running {
        return Err(Error::GammaNotConverged { n_max });
    }
    Ok(running.min(limit))
}

/// Derives a full design: x*, J_ev, then the fixed point
/// `b = max(1, x* - gamma_ev(b)) + b_margin`.
pub fn build_design(
    params: &ChannelParams,
    utility: &UtilitySpec,
    epsilon_v: f64,
    b_margin: f64,
) -> Result<MacDesign> {
    if !(b_margin > 0.0) {
        return Err(Error::InvalidDesign(format!(
            "b_margin = {b_margin} must be > 0 (b has to exceed max(1, x* - gamma_ev) strictly)"
        )));
    }
    params.validate()?;
    utility.validate()?;
    let x_star = x_star_with_growing_bound(params, utility)?;
    let j_ev = compute_j_ev(params, epsilon_v)?;

    let mut b = 1.0 + b_margin;
    let mut gamma = compute_gamma_ev(params, x_star, b, epsilon_v, None)?;
    let mut settled = false;
    for _ in 0..MAX_B_ROUNDS {
        let next = 1f64.max(x_star - gamma) + b_margin;
        let moved = (next - b).abs();
        b = next;
        gamma = compute_gamma_ev(params, x_star, b, epsilon_v, None)?;
        if moved < B_SETTLE_TOL {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::DesignNotSettled {
            rounds: MAX_B_ROUNDS,
            last_b: b,
        });
    }
    MacDesign::from_parts(params.clone(), *utility, x_star, epsilon_v, j_ev, gamma, b)
}

fn x_star_with_growing_bound(params: &ChannelParams, utility: &UtilitySpec) -> Result<f64> {
    let mut x_hi = DEFAULT_X_HI;
    loop {
        match compute_x_star(params, utility, x_hi) {
            Err(Error::SearchBoundReached { .. }) if x_hi < 640.0 => x_hi *= 2.0,
            Ok(x) if x <= 0.0 => {
                return Err(Error::InvalidDesign(
                    "asymptotic utility is maximised at x = 0".into(),
                ))
            }
            other => return other,
        }
    }
}
