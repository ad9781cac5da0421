#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpmac::channel::{ChannelModel, ChannelParams, SuccessProfile};
use vpmac::theory::{build_design, MacDesign, UtilitySpec};

pub fn collision_design() -> MacDesign {
    build_design(
        &ChannelModel::Collision.derive_params(),
        &UtilitySpec::SumThroughput,
        0.01,
        0.01,
    )
    .unwrap()
}

pub fn fading_utility() -> UtilitySpec {
    UtilitySpec::EnergyWeightedThroughput { energy_cost: 0.3 }
}

pub fn fading_design() -> MacDesign {
    build_design(
        &ChannelModel::two_state_fading().derive_params(),
        &fading_utility(),
        0.01,
        0.01,
    )
    .unwrap()
}

/// Random non-increasing profile with a prefix of 1..=8 entries.
pub fn random_profile(rng: &mut ChaCha8Rng) -> SuccessProfile {
    let len = rng.gen_range(1..=8);
    let mut values: Vec<f64> = (0..=len).map(|_| rng.gen::<f64>()).collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let tail = values.pop().unwrap();
    SuccessProfile::new(values, tail).unwrap()
}

/// Random non-increasing virtual profiles, each paired with a real profile
/// that falls to zero so the load optimum is finite.
pub fn random_params(n: usize, seed: u64) -> Vec<ChannelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let cv = random_profile(&mut rng);
            let mut real: Vec<f64> = cv.values().to_vec();
            real.push(cv.tail());
            let cr = SuccessProfile::new(real, 0.0).unwrap();
            ChannelParams::new(cr, cv).unwrap()
        })
        .collect()
}

/// Designs built from [`random_params`]; profiles whose design cannot be
/// derived (for example a flat virtual profile) are skipped.
pub fn random_designs(n: usize, seed: u64) -> Vec<MacDesign> {
    random_params(n, seed)
        .into_iter()
        .filter_map(|p| build_design(&p, &UtilitySpec::SumThroughput, 0.01, 0.01).ok())
        .collect()
}

pub fn all_designs(n_random: usize, seed: u64) -> Vec<MacDesign> {
    let mut designs = vec![collision_design(), fading_design()];
    designs.extend(random_designs(n_random, seed));
    designs
}
