//! One-dimensional search helpers shared by the analytic routines.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximises a unimodal `f` on `[a, b]` by golden-section search until the
/// bracket is narrower than `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Grid scan on `[lo, hi]` with `steps` intervals followed by golden-section
/// refinement on the bracket around the best grid point.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize, tol: f64) -> f64 {
    let h = (hi - lo) / steps as f64;
    let values: Vec<f64> = (0..=steps).map(|i| f(lo + i as f64 * h)).collect();
    let best = argmax(&values);
    let a = lo + best.saturating_sub(1) as f64 * h;
    let b = lo + (best + 1).min(steps) as f64 * h;
    let x = golden_section_max(&f, a, b, tol);
    // golden section never evaluates the endpoints
    [x, lo + best as f64 * h]
        .into_iter()
        .max_by(|u, v| f(*u).total_cmp(&f(*v)))
        .unwrap()
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best })
}

/// Smallest `x` in `[0, hi]` with `f(x) >= target` for non-decreasing `f`,
/// with the clamping convention of the MAC target rule: `hi` when
/// `target > f(hi)` and `0` when `target <= f(0)`.
pub fn invert_nondecreasing(f: impl Fn(f64) -> f64, target: f64, hi: f64, tol: f64) -> f64 {
    if target > f(hi) {
        return hi;
    }
    if target <= f(0.0) {
        return 0.0;
    }
    bisect_threshold(&f, target, 0.0, hi, tol)
}

/// Bisection for the threshold where `f` first reaches `target`, given
/// `f(lo) < target <= f(hi)`.
pub fn bisect_threshold(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of a strictly decreasing `f` on `[lo, hi]` with `f(lo) > 0 > f(hi)`.
pub fn bisect_decreasing_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
