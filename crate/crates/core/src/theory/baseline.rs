//! Reference policies used to judge the designed equilibrium.

use super::search::bisect_decreasing_root;

/// Probability that holds the collision-channel idle probability at the
/// level solving `e (1 - p)^K = 1 + sqrt(p) / 2`.
pub fn hajek_pa(k: usize) -> f64 {
    assert!(k >= 1, "hajek_pa needs at least one user");
    let kf = k as f64;
    let f = |p: f64| std::f64::consts::E * (1.0 - p).powf(kf) - 1.0 - 0.5 * p.sqrt();
    bisect_decreasing_root(f, 0.0, 1.0, 1e-12)
}

/// Probability that keeps the channel idle with probability `exp(-x*)`.
pub fn idle_target_p(k: usize, x_star: f64) -> f64 {
    -(-x_star / k as f64).exp_m1()
}
