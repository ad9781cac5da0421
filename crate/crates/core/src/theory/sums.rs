//! Binomial and Poisson expectations evaluated in log space.
//!
//! Profiles are constant beyond a short prefix, so expectations only need
//! the prefix terms: `E[c(J)] = tail + sum_{j < len} P(J = j) (c_j - tail)`.
//! That keeps every evaluation `O(len)` even for `n` in the millions.

use crate::channel::SuccessProfile;

/// `sum_{j=0}^{min(n, upto)} P(Bin(n, p) = j) * f(j)`.
pub fn binomial_expect(n: usize, p: f64, upto: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let last = n.min(upto);
    if p <= 0.0 {
        return f(0);
    }
    if p >= 1.0 {
        return if n <= upto { f(n) } else { 0.0 };
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let nf = n as f64;
    let mut ln_choose = 0.0;
    let mut acc = 0.0;
    for j in 0..=last {
        if j > 0 {
            ln_choose += ((nf - (j - 1) as f64) / j as f64).ln();
        }
        let ln_pmf = ln_choose + j as f64 * ln_p + (nf - j as f64) * ln_q;
        acc += ln_pmf.exp() * f(j);
    }
    acc
}

/// Log of the binomial pmf for `j = 0..=min(n, upto)`; `p` strictly inside (0, 1).
pub fn binomial_ln_pmf(n: usize, p: f64, upto: usize) -> Vec<f64> {
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let nf = n as f64;
    let mut ln_choose = 0.0;
    (0..=n.min(upto))
        .map(|j| {
            if j > 0 {
                ln_choose += ((nf - (j - 1) as f64) / j as f64).ln();
            }
            ln_choose + j as f64 * ln_p + (nf - j as f64) * ln_q
        })
        .collect()
}

/// Log of the Poisson pmf for `j = 0..=upto`; `x > 0`.
pub fn poisson_ln_pmf(x: f64, upto: usize) -> Vec<f64> {
    let ln_x = x.ln();
    let mut ln_fact = 0.0;
    (0..=upto)
        .map(|j| {
            if j > 0 {
                ln_fact += (j as f64).ln();
            }
            -x + j as f64 * ln_x - ln_fact
        })
        .collect()
}

/// `E[c(J)]` for `J ~ Bin(n, p)`.
pub fn binomial_mean(n: usize, p: f64, profile: &SuccessProfile) -> f64 {
    let tail = profile.tail();
    let values = profile.values();
    if values.is_empty() {
        return tail;
    }
    tail + binomial_expect(n, p, values.len() - 1, |j| values[j] - tail)
}

/// `E[c(J)]` for `J ~ Poisson(x)`.
pub fn poisson_mean(x: f64, profile: &SuccessProfile) -> f64 {
    let tail = profile.tail();
    let values = profile.values();
    if x <= 0.0 || values.is_empty() {
        return profile.get(0);
    }
    let ln_pmf = poisson_ln_pmf(x, values.len() - 1);
    tail + ln_pmf
        .iter()
        .zip(values)
        .map(|(lp, v)| lp.exp() * (v - tail))
        .sum::<f64>()
}
