use serde::{Deserialize, Serialize};

use super::presets::{Baseline, TableJob};
use crate::error::Result;
use crate::theory::{build_design, hajek_pa, idle_target_p, optimal_p, utility_finite, MacDesign};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumTableRow {
    pub k: usize,
    pub p_opt: f64,
    pub p_star: f64,
    pub p_baseline: f64,
    pub u_opt: f64,
    pub u_star: f64,
    pub u_baseline: f64,
}

pub fn equilibrium_table(job: &TableJob) -> Result<(MacDesign, Vec<EquilibriumTableRow>)> {
    job.channel.validate()?;
    let params = job.channel.derive_params();
    let design = build_design(&params, &job.utility, job.epsilon_v, job.b_margin)?;
    let u = |k, p| utility_finite(k, p, &params, &job.utility);
    let rows = (job.k_min..=job.k_max)
        .map(|k| {
            let p_opt = optimal_p(k, &params, &job.utility);
            let p_star = design.equilibrium_p(k);
            let p_baseline = match job.baseline {
                Baseline::Hajek => hajek_pa(k),
                Baseline::IdleTarget => idle_target_p(k, design.x_star),
            };
            EquilibriumTableRow {
                k,
                p_opt,
                p_star,
                p_baseline,
                u_opt: u(k, p_opt),
                u_star: u(k, p_star),
                u_baseline: u(k, p_baseline),
            }
        })
        .collect();
    Ok((design, rows))
}
