//! Closed-form and numerical analysis: utilities, design constants and the
//! contention curves the controllers invert.

mod baseline;
mod contention;
mod design;
mod search;
pub mod sums;
mod utility;

pub use baseline::{hajek_pa, idle_target_p};
pub use contention::{
    d_star, invert_q_star, invert_q_v_star, q_star, q_v_identical, q_v_identical_derivative,
    q_v_star, INVERSION_TOL, MAX_EST_USERS,
};
pub use design::{build_design, compute_gamma_ev, compute_j_ev, p_max_for, MacDesign};
pub use search::{golden_section_max, grid_then_golden};
pub use utility::{
    compute_x_star, optimal_p, utility_asymptotic, utility_finite, UtilitySpec, DEFAULT_X_HI,
};
