//! Scalar root finding and minimization used throughout the crate.

/// Solves `f(u) = target` for a nondecreasing `f` on `[0, inf)` with
/// `f(0) <= target`.
///
/// The bracket is located by doubling or halving from `u = 1`, then
/// bisection runs until the midpoint no longer separates the endpoints, so
/// the result is accurate to a couple of ulps of `u`. Infinite values of `f`
/// are treated as "above target". Returns the upper end of the final bracket,
/// i.e. the smallest representable `u` found with `f(u) >= target`.
pub fn solve_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let above = |u: f64| {
        let v = f(u);
        v.is_nan() || v >= target
    };
    let (mut lo, mut hi);
    if above(1.0) {
        hi = 1.0;
        lo = 0.5;
        while above(lo) {
            hi = lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return hi;
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !above(hi) {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::MAX;
            }
        }
    }
    bisect(above, lo, hi)
}

/// Bisection on a monotone predicate with `pred(lo) == false`,
/// `pred(hi) == true`. Runs to floating-point resolution.
pub fn bisect(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2100 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `rtol` relative to its midpoint.
/// Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rtol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if (b - a) <= rtol * 0.5 * (a.abs() + b.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Central difference with step `max(1e-6, 1e-8 * |u|)`.
pub fn central_difference(f: impl Fn(f64) -> f64, u: f64) -> f64 {
    let h = (1e-8 * u.abs()).max(1e-6);
    (f(u + h) - f(u - h)) / (2.0 * h)
}

/// `n` log-spaced points from `lo` to `hi` inclusive (`lo, hi > 0`).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_root() {
        let u = solve_increasing(|u| u * u, 2.0);
        assert!((u - 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn solves_tiny_and_huge_targets() {
        let u = solve_increasing(|u| u * u, 1e-200);
        assert!((u / 1e-100 - 1.0).abs() < 1e-14);
        let u = solve_increasing(|u| u * u, 1e200);
        assert!((u / 1e100 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn infinite_values_count_as_above() {
        let u = solve_increasing(|u| if u > 3.0 { f64::INFINITY } else { u }, 2.5);
        assert!((u - 2.5).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_minimize(|x| (x - 1.5).powi(2) + 2.0, 0.0, 4.0, 1e-10);
        assert!((x - 1.5).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-6, 1e6, 13);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[12], 1e6);
        assert!((g[6] - 1.0).abs() < 1e-12);
    }
}
