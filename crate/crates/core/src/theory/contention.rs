//! Contention curves and their inverses.
//!
//! A probability `p` in `(0, p_max]` is read as the equilibrium of an
//! estimated, possibly fractional, user count `x*/p - b`. Curves between
//! integer counts are linear blends of the two neighbouring binomial sums,
//! weighted by where `p` sits between the neighbouring equilibria.

use super::design::MacDesign;
use super::search::{bisect_threshold, invert_nondecreasing};
use super::sums::{binomial_mean, poisson_mean};
use crate::channel::{ChannelParams, SuccessProfile};

/// Cap on the estimated user count inside curve evaluation.
pub const MAX_EST_USERS: f64 = 1e6;
pub const INVERSION_TOL: f64 = 1e-12;
const FALLBACK_GRID: usize = 4096;

/// Virtual-packet success probability when `k` users all transmit with `p`.
pub fn q_v_identical(p: f64, k: usize, params: &ChannelParams) -> f64 {
    binomial_mean(k, p, &params.c_virtual)
}

/// Analytic derivative of [`q_v_identical`] in `p`.
pub fn q_v_identical_derivative(p: f64, k: usize, params: &ChannelParams) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let cv = &params.c_virtual;
    let upto = cv.len();
    -(k as f64) * super::sums::binomial_expect(k - 1, p, upto, |j| cv.get(j) - cv.get(j + 1))
}

/// Where `p` falls between consecutive integer user-count equilibria.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bracket {
    n: usize,
    /// Evaluation point; differs from the input only when the count cap bites.
    p: f64,
    /// Weight on the `n`-user term; `1 - w_lower` goes to `n + 1`.
    w_lower: f64,
}

fn bracket(p_hat: f64, design: &MacDesign) -> Bracket {
    let x = design.x_star;
    let b = design.b;
    let p_max = design.p_max;
    let p_hat = p_hat.min(p_max);
    let k_min = x / p_max - b;
    let k_raw = x / p_hat - b;
    let (k_est, p) = if k_raw > MAX_EST_USERS {
        (MAX_EST_USERS, x / (MAX_EST_USERS + b))
    } else {
        (k_raw.max(k_min), p_hat)
    };
    let n = k_est.floor().max(0.0) as usize;
    let p_n = p_max.min(x / (n as f64 + b));
    let p_n1 = p_max.min(x / (n as f64 + 1.0 + b));
    if p_n - p_n1 <= 0.0 {
        return Bracket {
            n: k_min.ceil().max(0.0) as usize,
            p,
            w_lower: 1.0,
        };
    }
    let w_lower = ((p - p_n1) / (p_n - p_n1)).clamp(0.0, 1.0);
    Bracket { n, p, w_lower }
}

/// Contention level expected at the designed equilibrium of the user count
/// implied by `p_hat`. At `p_hat = 0` this is the Poisson limit.
pub fn q_v_star(p_hat: f64, design: &MacDesign) -> f64 {
    let cv = &design.params.c_virtual;
    if p_hat <= 0.0 {
        return poisson_mean(design.x_star, cv);
    }
    let br = bracket(p_hat, design);
    let lower = binomial_mean(br.n, br.p, cv);
    if br.w_lower >= 1.0 {
        return lower;
    }
    br.w_lower * lower + (1.0 - br.w_lower) * binomial_mean(br.n + 1, br.p, cv)
}

/// Target probability whose theoretical contention matches `q_v`.
pub fn invert_q_v_star(q_v: f64, design: &MacDesign) -> f64 {
    invert_nondecreasing(|p| q_v_star(p, design), q_v, design.p_max, INVERSION_TOL)
}

fn blend_other_users(p_breve: f64, design: &MacDesign, profile: &SuccessProfile) -> f64 {
    if p_breve <= 0.0 {
        return poisson_mean(design.x_star, profile);
    }
    let br = bracket(p_breve, design);
    // n users in total means n - 1 others. Below one user both readings are
    // C_v0, so (1 - p) q* + p d* still reproduces q_v_star there.
    let lower = match br.n {
        0 => design.params.c_virtual.get(0),
        n => binomial_mean(n - 1, br.p, profile),
    };
    if br.w_lower >= 1.0 {
        return lower;
    }
    br.w_lower * lower + (1.0 - br.w_lower) * binomial_mean(br.n, br.p, profile)
}

/// Virtual success probability seen by a user that idles, all others
/// transmitting with `p_breve`.
pub fn q_star(p_breve: f64, design: &MacDesign) -> f64 {
    blend_other_users(p_breve, design, &design.params.c_virtual)
}

/// Virtual success probability seen by a user that transmits.
pub fn d_star(p_breve: f64, design: &MacDesign) -> f64 {
    blend_other_users(p_breve, design, &design.params.c_virtual.shifted())
}

pub(crate) fn q_star_is_monotone(design: &MacDesign, points: usize) -> bool {
    let values: Vec<f64> = (0..=points)
        .map(|i| q_star(design.p_max * i as f64 / points as f64, design))
        .collect();
    values.windows(2).all(|w| w[1] >= w[0] - 1e-12)
}

/// Intermediate probability whose own-success curve matches `q_k`.
pub fn invert_q_star(q_k: f64, design: &MacDesign) -> f64 {
    let f = |p: f64| q_star(p, design);
    if design.q_star_monotone {
        return invert_nondecreasing(f, q_k, design.p_max, INVERSION_TOL);
    }
    if q_k > f(design.p_max) {
        return design.p_max;
    }
    if q_k <= f(0.0) {
        return 0.0;
    }
    // first grid cell where the curve reaches q_k, then refine inside it
    let step = design.p_max / FALLBACK_GRID as f64;
    let mut prev = 0.0;
    for i in 1..=FALLBACK_GRID {
        let p = if i == FALLBACK_GRID {
            design.p_max
        } else {
            i as f64 * step
        };
        if f(p) >= q_k {
            return bisect_threshold(f, q_k, prev, p, INVERSION_TOL);
        }
        prev = p;
    }
    design.p_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelModel;
    use crate::theory::{build_design, UtilitySpec};

    fn collision_design() -> MacDesign {
        build_design(
            &ChannelModel::Collision.derive_params(),
            &UtilitySpec::SumThroughput,
            0.01,
            0.01,
        )
        .unwrap()
    }

    fn fading_design() -> MacDesign {
        build_design(
            &ChannelModel::two_state_fading().derive_params(),
            &UtilitySpec::EnergyWeightedThroughput { energy_cost: 0.3 },
            0.01,
            0.01,
        )
        .unwrap()
    }

    #[test]
    fn identical_collision_is_idle_probability() {
        let c = ChannelModel::Collision.derive_params();
        assert_eq!(q_v_identical(0.5, 2, &c), 0.25);
        let p: f64 = 1.0 / 9.01;
        assert!((q_v_identical(p, 8, &c) - (1.0 - p).powi(8)).abs() < 1e-15);
        assert!((q_v_identical(p, 8, &c) - 0.390177).abs() < 1e-6);
        let f = ChannelModel::two_state_fading().derive_params();
        assert_eq!(q_v_identical(0.0, 12, &f), f.c_v(0));
    }

    #[test]
    fn q_v_star_collision_points() {
        let d = collision_design();
        let p: f64 = 1.0 / 9.01;
        assert!((q_v_star(p, &d) - (1.0 - p).powi(8)).abs() < 1e-12);
        assert!((q_v_star(0.0, &d) - (-1.0f64).exp()).abs() < 1e-15);
        // tiny p approaches the Poisson limit from above
        let near_zero = q_v_star(1e-7, &d);
        assert!(near_zero >= q_v_star(0.0, &d) && near_zero - (-1.0f64).exp() < 1e-5);
    }

    #[test]
    fn q_v_star_at_integer_count_is_unblended() {
        let d = fading_design();
        for n in [3usize, 5, 11] {
            let p = d.equilibrium_p(n);
            let want = q_v_identical(p, n, &d.params);
            assert!((q_v_star(p, &d) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_clamps() {
        let d = collision_design();
        assert_eq!(invert_q_v_star(1.0, &d), d.p_max);
        assert_eq!(invert_q_v_star(0.0, &d), 0.0);
        let p: f64 = 1.0 / 9.01;
        assert!((invert_q_v_star((1.0 - p).powi(8), &d) - p).abs() < 1e-9);
        let f = fading_design();
        let top = q_v_star(f.p_max, &f);
        if top + 0.1 <= 1.0 {
            assert_eq!(invert_q_v_star(top + 0.1, &f), f.p_max);
        }
    }

    #[test]
    fn collision_q_star_and_d_star() {
        let d = collision_design();
        for k in 1..20usize {
            let p = d.equilibrium_p(k);
            assert!(
                (q_star(p, &d) - (1.0 - p).powi(k as i32 - 1)).abs() < 1e-12,
                "k={k}"
            );
            assert_eq!(d_star(p, &d), 0.0);
        }
    }

    #[test]
    fn invert_q_star_collision() {
        let d = collision_design();
        assert!(d.q_star_monotone);
        let p: f64 = 1.0 / 9.01;
        assert!((invert_q_star((1.0 - p).powi(7), &d) - p).abs() < 1e-9);
        assert_eq!(invert_q_star(0.0, &d), 0.0);
        // a pristine reading maps to the single-user equilibrium, the
        // lower end of the segment where q_star = 1
        let top = invert_q_star(1.0, &d);
        assert!((top - d.equilibrium_p(1)).abs() < 1e-9);
    }

    #[test]
    fn fading_q_star_is_monotone() {
        assert!(fading_design().q_star_monotone);
    }
}
