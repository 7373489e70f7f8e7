//! Finite-grid evidence for the limit conditions on N-functions.
//!
//! Limits are not computable, so every probe evaluates the relevant ratio on
//! a log grid and applies an explicit threshold. Overflow means "exceeds the
//! float range": probes record the last finite point and degrade gracefully.

use serde::Serialize;

use super::NFunction;
use crate::error::{Error, Result};
use crate::scalar::log_grid;

const PROBE_GRID_POINTS: usize = 200;
const CONVEXITY_RTOL: f64 = 1e-12;
const SMALL_U: f64 = 1e-6;
const LARGE_U: f64 = 1e6;
const SMALL_RATIO_MAX: f64 = 1e-3;
/// `M(u)/u` at `u = 1e6` must exceed this multiple of `M(1)/1`.
const LARGE_RATIO_GROWTH: f64 = 10.0;
/// Condition (4) growth threshold per decade at the top of the grid.
const CONDITION4_DECADE_GROWTH: f64 = 1.25;

#[derive(Debug, Clone, Serialize)]
pub struct NFunctionReport {
    /// Largest relative excess `(M(mid) - avg) / avg` over all tested pairs.
    pub worst_convexity_violation: f64,
    pub pairs_tested: usize,
    /// Pairs skipped because a value overflowed.
    pub pairs_skipped: usize,
    pub ratio_at_grid_min: f64,
    pub ratio_at_grid_max: f64,
    /// `M(1e-6)/1e-6`.
    pub ratio_near_zero: f64,
    /// `M(1)/1`.
    pub ratio_at_one: f64,
    /// `M(1e6)/1e6`, `+inf` on overflow.
    pub ratio_near_infinity: f64,
    pub convex: bool,
    pub zero_limit: bool,
    pub infinity_limit: bool,
    pub pass: bool,
}

/// Checks midpoint convexity on `grid` plus both limit conditions.
///
/// Pass iff the worst relative midpoint violation is at most `1e-12`,
/// `M(u)/u < 1e-3` at `u = 1e-6`, and `M(u)/u` at `u = 1e6` exceeds ten times
/// its value at `u = 1`.
pub fn verify_nfunction(m: &NFunction, grid: &[f64]) -> Result<NFunctionReport> {
    if grid.is_empty() {
        return Err(Error::Precondition("grid must be nonempty".into()));
    }
    if grid.iter().any(|u| !u.is_finite() || *u < 0.0) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("grid must be sorted, finite and nonnegative".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&u| m.value(u)).collect();
    let n = grid.len();
    let mut worst = f64::NEG_INFINITY;
    let mut tested = 0;
    let mut skipped = 0;
    let mut visit = |i: usize, j: usize| {
        let (a, b) = (values[i], values[j]);
        if !a.is_finite() || !b.is_finite() {
            skipped += 1;
            return;
        }
        let avg = 0.5 * (a + b);
        let mid = m.value(0.5 * (grid[i] + grid[j]));
        let excess = mid - avg;
        let rel = if avg > 0.0 { excess / avg } else if excess > 0.0 { f64::INFINITY } else { 0.0 };
        worst = worst.max(rel);
        tested += 1;
    };
    if n <= 256 {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
    } else {
        let mut stride = 1;
        while stride < n {
            for i in 0..n - stride {
                visit(i, i + stride);
            }
            stride *= 2;
        }
    }
    if tested == 0 {
        worst = 0.0;
    }
    let ratio = |u: f64| if u > 0.0 { m.value(u) / u } else { 0.0 };
    let ratio_near_zero = ratio(SMALL_U);
    let ratio_at_one = ratio(1.0);
    let ratio_near_infinity = ratio(LARGE_U);
    let convex = worst <= CONVEXITY_RTOL;
    let zero_limit = ratio_near_zero < SMALL_RATIO_MAX;
    let infinity_limit = ratio_near_infinity > LARGE_RATIO_GROWTH * ratio_at_one;
    Ok(NFunctionReport {
        worst_convexity_violation: worst,
        pairs_tested: tested,
        pairs_skipped: skipped,
        ratio_at_grid_min: ratio(grid[0]),
        ratio_at_grid_max: ratio(grid[n - 1]),
        ratio_near_zero,
        ratio_at_one,
        ratio_near_infinity,
        convex,
        zero_limit,
        infinity_limit,
        pass: convex && zero_limit && infinity_limit,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta2Report {
    pub sup_ratio: f64,
    pub ratio_at_max: f64,
    pub ratio_at_tenth: f64,
    pub verdict: bool,
    /// First grid point where `M(2u)` overflowed.
    pub diverging_u: Option<f64>,
}

/// `sup M(2u)/M(u)` over a log grid on `[1, u_max]`.
///
/// Verdict: the ratio at `u_max` is at most twice the ratio at `u_max/10`.
/// Overflow of `M(2u)` gives verdict false.
pub fn delta2_probe(m: &NFunction, u_max: f64) -> Result<Delta2Report> {
    if !(u_max >= 10.0) || !u_max.is_finite() {
        return Err(Error::Precondition(format!("delta2 probe needs finite u_max >= 10, got {u_max}")));
    }
    let ratio = |u: f64| m.value(2.0 * u) / m.value(u);
    let mut sup: f64 = 0.0;
    for u in log_grid(1.0, u_max, PROBE_GRID_POINTS) {
        let r = ratio(u);
        if !r.is_finite() {
            return Ok(Delta2Report {
                sup_ratio: f64::INFINITY,
                ratio_at_max: f64::INFINITY,
                ratio_at_tenth: ratio(u_max / 10.0),
                verdict: false,
                diverging_u: Some(u),
            });
        }
        sup = sup.max(r);
    }
    let ratio_at_max = ratio(u_max);
    let ratio_at_tenth = ratio(u_max / 10.0);
    Ok(Delta2Report {
        sup_ratio: sup,
        ratio_at_max,
        ratio_at_tenth,
        verdict: ratio_at_max <= 2.0 * ratio_at_tenth,
        diverging_u: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta3Report {
    pub verdict: bool,
    /// Smallest grid point from which `u M(u) <= M(ku)` holds to the end of
    /// the examined range.
    pub u0: Option<f64>,
    /// Set when both sides overflowed and the scan stopped early.
    pub last_finite_u: Option<f64>,
}

/// Scans `u M(u) <= M(ku)` on a log grid over `[1, u_max]`.
///
/// Verdict true iff the inequality holds over at least the top decade of the
/// examined range.
pub fn delta3_probe(m: &NFunction, k: f64, u_max: f64) -> Result<Delta3Report> {
    if !(k > 1.0) || !k.is_finite() {
        return Err(Error::Precondition(format!("delta3 probe needs k > 1, got {k}")));
    }
    if !(u_max > 10.0) || !u_max.is_finite() {
        return Err(Error::Precondition(format!("delta3 probe needs finite u_max > 10, got {u_max}")));
    }
    let grid = log_grid(1.0, u_max, PROBE_GRID_POINTS);
    let mut holds = Vec::with_capacity(grid.len());
    let mut last_finite_u = None;
    for (i, &u) in grid.iter().enumerate() {
        let lhs = u * m.value(u);
        let rhs = m.value(k * u);
        if !lhs.is_finite() {
            last_finite_u = Some(if i > 0 { grid[i - 1] } else { 1.0 });
            break;
        }
        holds.push(lhs <= rhs);
    }
    let end = holds.len();
    let top = last_finite_u.unwrap_or(u_max);
    let first_good = holds.iter().rposition(|h| !h).map_or(0, |i| i + 1);
    let u0 = (first_good < end).then(|| grid[first_good]);
    let verdict = u0.is_some_and(|u0| u0 <= top / 10.0);
    Ok(Delta3Report { verdict, u0, last_finite_u })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthTrend {
    Increasing,
    Bounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct Condition4Report {
    pub trend: GrowthTrend,
    pub verdict: bool,
    pub r_at_max: f64,
    pub r_at_tenth: f64,
    /// First grid point where `M(ku)` overflowed.
    pub diverging_u: Option<f64>,
}

/// Evidence for `M(ku) / (u (M*)^{-1}(u)) -> inf`.
///
/// Verdict true iff the ratio increases strictly over the top decade of the
/// log grid on `[1, u_max]` and grows by at least a factor 1.25 across it.
/// Overflow of the numerator counts as divergence (verdict true).
pub fn growth_condition4_probe(m: &NFunction, k: f64, u_max: f64) -> Result<Condition4Report> {
    if !(k > 1.0) || !k.is_finite() {
        return Err(Error::Precondition(format!("condition (4) probe needs k > 1, got {k}")));
    }
    if !(u_max >= 10.0) || !u_max.is_finite() {
        return Err(Error::Precondition(format!(
            "condition (4) probe needs finite u_max >= 10, got {u_max}"
        )));
    }
    let conj = m.conjugate();
    let r = |u: f64| -> Result<f64> { Ok(m.value(k * u) / (u * conj.inverse(u)?)) };
    let grid = log_grid(1.0, u_max, PROBE_GRID_POINTS);
    let tenth = u_max / 10.0;
    let mut prev: Option<f64> = None;
    let mut increasing = true;
    for &u in &grid {
        let value = r(u)?;
        if !value.is_finite() {
            return Ok(Condition4Report {
                trend: GrowthTrend::Increasing,
                verdict: true,
                r_at_max: f64::INFINITY,
                r_at_tenth: r(tenth)?,
                diverging_u: Some(u),
            });
        }
        if u >= tenth {
            if let Some(p) = prev {
                increasing &= value > p;
            }
            prev = Some(value);
        }
    }
    let r_at_max = r(u_max)?;
    let r_at_tenth = r(tenth)?;
    let verdict = increasing && r_at_max >= CONDITION4_DECADE_GROWTH * r_at_tenth;
    Ok(Condition4Report {
        trend: if verdict { GrowthTrend::Increasing } else { GrowthTrend::Bounded },
        verdict,
        r_at_max,
        r_at_tenth,
        diverging_u: None,
    })
}
