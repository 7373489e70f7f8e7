//! The modular functional, the Luxemburg and Orlicz norms, and checkable
//! reports of the relations between them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::measure::{GridFunction, MeasureSpace};
use crate::nfunction::{NFunction, NFunctionSpec};
use crate::rng::{gaussian_vec, seeded};
use crate::scalar::{bisect, golden_section_minimize};

/// Default relative tolerance of the Orlicz-norm minimization.
pub const ROOT_TOL: f64 = 1e-10;
/// Default relative slack allowed in relation reports.
pub const REPORT_SLACK: f64 = 1e-8;

/// `sum M(|x_i|) mu_i`. Overflow gives `+inf` (x numerically outside the
/// Orlicz class); test with `f64::is_finite`.
pub fn modular(m: &NFunction, space: &MeasureSpace, x: &GridFunction) -> Result<f64> {
    check_len(space.len(), x.len())?;
    Ok(modular_scaled(m, space, x.values(), 1.0))
}

/// `sum M(s |x_i|) mu_i`.
pub(crate) fn modular_scaled(m: &NFunction, space: &MeasureSpace, x: &[f64], s: f64) -> f64 {
    space.weights().iter().zip(x).map(|(w, v)| m.value((v * s).abs()) * w).sum()
}

/// `inf { lambda > 0 : M(x / lambda) <= 1 }`, by bisection on `lambda` to
/// floating-point resolution. Zero for `x == 0`.
pub fn luxemburg_norm(m: &NFunction, space: &MeasureSpace, x: &GridFunction) -> Result<f64> {
    check_len(space.len(), x.len())?;
    Ok(luxemburg_unchecked(m, space, x.values()))
}

pub(crate) fn luxemburg_unchecked(m: &NFunction, space: &MeasureSpace, x: &[f64]) -> f64 {
    let start = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if start == 0.0 {
        return 0.0;
    }
    // pred(lambda): M(x / lambda) <= 1, monotone in lambda
    let pred = |lambda: f64| modular_scaled(m, space, x, 1.0 / lambda) <= 1.0;
    let (mut lo, mut hi);
    if pred(start) {
        hi = start;
        lo = 0.5 * start;
        while pred(lo) {
            hi = lo;
            lo *= 0.5;
        }
    } else {
        lo = start;
        hi = 2.0 * start;
        while !pred(hi) {
            lo = hi;
            hi *= 2.0;
        }
    }
    bisect(pred, lo, hi)
}

/// Value and minimizer of `g(lambda) = (1 + M(lambda x)) / lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrliczNorm {
    pub value: f64,
    pub minimizer: f64,
}

/// `inf_{lambda > 0} (1 + M(lambda x)) / lambda`.
pub fn orlicz_norm(m: &NFunction, space: &MeasureSpace, x: &GridFunction) -> Result<f64> {
    Ok(orlicz_norm_detailed(m, space, x, ROOT_TOL)?.value)
}

/// Orlicz norm with its minimizer, refined to relative tolerance `rtol`.
///
/// `g` is quasi-convex (`lambda M'(lambda) - M(lambda) - 1` is nondecreasing), so a
/// geometric scan from `1 / (2 ||x||_L)` up to the first non-decrease of `g`
/// brackets the minimum, and golden-section search refines it. The lower
/// scan start is safe because `||x||_A <= 2 ||x||_L` forces the minimizer
/// above it. Overflowing values of `g` act as `+inf` walls.
pub fn orlicz_norm_detailed(
    m: &NFunction,
    space: &MeasureSpace,
    x: &GridFunction,
    rtol: f64,
) -> Result<OrliczNorm> {
    check_len(space.len(), x.len())?;
    Ok(orlicz_unchecked(m, space, x.values(), rtol))
}

pub(crate) fn orlicz_unchecked(m: &NFunction, space: &MeasureSpace, x: &[f64], rtol: f64) -> OrliczNorm {
    let lux = luxemburg_unchecked(m, space, x);
    if lux == 0.0 {
        return OrliczNorm { value: 0.0, minimizer: f64::INFINITY };
    }
    let g = |lambda: f64| (1.0 + modular_scaled(m, space, x, lambda)) / lambda;
    const STEP: f64 = 1.2;
    let mut lambdas = vec![0.5 / lux];
    let mut values = vec![g(lambdas[0])];
    loop {
        let next = lambdas[lambdas.len() - 1] * STEP;
        let value = g(next);
        lambdas.push(next);
        values.push(value);
        let k = values.len() - 1;
        // g is not decreasing from k-1 to k: minimum lies in [lambda_{k-2}, lambda_k]
        if !(value < values[k - 1]) || !next.is_finite() {
            let a = lambdas[k.saturating_sub(2)];
            let b = lambdas[k];
            let (minimizer, value) = golden_section_minimize(g, a, b, rtol);
            let best_scan = values.iter().cloned().fold(f64::INFINITY, f64::min);
            return if value <= best_scan {
                OrliczNorm { value, minimizer }
            } else {
                let i = values.iter().position(|v| *v == best_scan).unwrap_or(0);
                OrliczNorm { value: best_scan, minimizer: lambdas[i] }
            };
        }
    }
}

/// Closed-form norms of an indicator of measure `mu(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharNorms {
    pub luxemburg: f64,
    pub orlicz: f64,
}

/// `||chi_D||_L = 1 / M^{-1}(1/mu(D))` and `||chi_D||_A = mu(D) (M*)^{-1}(1/mu(D))`.
pub fn char_norms(m: &NFunction, measure: f64) -> Result<CharNorms> {
    if !(measure > 0.0) || !measure.is_finite() {
        return Err(Error::Precondition(format!("mu(D) must be positive and finite, got {measure}")));
    }
    let y = 1.0 / measure;
    Ok(CharNorms {
        luxemburg: 1.0 / m.inverse(y)?,
        orlicz: measure * m.conjugate_inverse(y)?,
    })
}

/// One `value >= bound` comparison; `slack = value - bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationCheck {
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

impl RelationCheck {
    fn at_least(quantity: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        let slack = value - bound;
        let scale = 1f64.max(value.abs()).max(bound.abs());
        let pass = value == bound || slack >= -tol * scale || (value.is_infinite() && value > 0.0);
        Self { quantity: quantity.into(), value, bound, slack, pass }
    }

    fn close(quantity: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let slack = -(value - target).abs();
        let pass = -slack <= tol * 1f64.max(value.abs());
        Self { quantity: quantity.into(), value, bound: target, slack, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub luxemburg: f64,
    pub orlicz: f64,
    pub modular_value: f64,
    pub modular_finite: bool,
    pub checks: Vec<RelationCheck>,
}

impl NormReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, quantity: &str) -> Option<&RelationCheck> {
        self.checks.iter().find(|c| c.quantity == quantity)
    }
}

/// Evaluates the modular/norm relations for `x` and, when a dual function
/// `y` is supplied, the four Hölder-type coupling bounds with `y` measured in
/// the conjugate space.
///
/// Quantities: `eq1_lower` (`||x||_A >= ||x||_L`), `eq1_upper`
/// (`2||x||_L >= ||x||_A`), `relation1_small` / `relation1_large`, one
/// `eq2[lambda=..]` per sample, `lp_identity` for power kinds, and
/// `holder_LA`, `holder_AL`, `holder_AA`, `holder_2LL`.
pub fn check_relations(
    m: &NFunction,
    space: &MeasureSpace,
    x: &GridFunction,
    lambda_samples: &[f64],
    y: Option<&GridFunction>,
    tol: f64,
) -> Result<NormReport> {
    check_len(space.len(), x.len())?;
    if let Some(y) = y {
        check_len(space.len(), y.len())?;
    }
    if let Some(l) = lambda_samples.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Precondition(format!("lambda samples must be positive, got {l}")));
    }
    let lux = luxemburg_unchecked(m, space, x.values());
    let orl = orlicz_unchecked(m, space, x.values(), ROOT_TOL).value;
    let modular_value = modular_scaled(m, space, x.values(), 1.0);
    let mut checks = vec![
        RelationCheck::at_least("eq1_lower", orl, lux, tol),
        RelationCheck::at_least("eq1_upper", 2.0 * lux, orl, tol),
    ];
    if lux <= 1.0 {
        checks.push(RelationCheck::at_least("relation1_small", lux, modular_value, tol));
    }
    if lux >= 1.0 {
        checks.push(RelationCheck::at_least("relation1_large", modular_value, lux, tol));
    }
    for &lambda in lambda_samples {
        let lhs = modular_scaled(m, space, x.values(), lambda);
        checks.push(RelationCheck::at_least(format!("eq2[lambda={lambda}]"), lhs, lambda * orl - 1.0, tol));
    }
    if let NFunctionSpec::Power { p } = m.spec() {
        checks.push(RelationCheck::close("lp_identity", modular_value, lux.powf(*p), tol));
    }
    if let Some(y) = y {
        let conj = m.conjugate();
        let y_lux = luxemburg_unchecked(&conj, space, y.values());
        let y_orl = orlicz_unchecked(&conj, space, y.values(), ROOT_TOL).value;
        let pairing = space.coupling_unchecked(y.values(), x.values());
        checks.push(RelationCheck::at_least("holder_LA", y_lux * orl, pairing, tol));
        checks.push(RelationCheck::at_least("holder_AL", y_orl * lux, pairing, tol));
        checks.push(RelationCheck::at_least("holder_AA", y_orl * orl, pairing, tol));
        checks.push(RelationCheck::at_least("holder_2LL", 2.0 * y_lux * lux, pairing, tol));
    }
    Ok(NormReport { luxemburg: lux, orlicz: orl, modular_value, modular_finite: modular_value.is_finite(), checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingEstimate {
    /// Empirical lower bound of `sup ||x||_2 / ||x||_L`.
    pub gamma: f64,
    pub samples: usize,
}

/// Number of random directions used by [`embedding_constant`].
pub const EMBEDDING_RANDOM_SAMPLES: usize = 10_000;

/// Lower estimate of the embedding constant `gamma` in `gamma ||x||_L >= ||x||_2`.
pub fn embedding_constant(m: &NFunction, space: &MeasureSpace, seed: u64) -> EmbeddingEstimate {
    embedding_constant_with(m, space, EMBEDDING_RANDOM_SAMPLES, seed)
}

/// Running supremum of `||x||_2 / ||x||_L` over all single-cell indicators,
/// the constant function, and `random` seeded Gaussian grid functions. The
/// first `k` random samples are the same for every `random >= k`.
pub fn embedding_constant_with(
    m: &NFunction,
    space: &MeasureSpace,
    random: usize,
    seed: u64,
) -> EmbeddingEstimate {
    let n = space.len();
    let mut candidates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        })
        .collect();
    candidates.push(vec![1.0; n]);
    let mut rng = seeded(seed);
    candidates.extend((0..random).map(|_| gaussian_vec(&mut rng, n)));
    let ratio = |x: &Vec<f64>| {
        let lux = luxemburg_unchecked(m, space, x);
        if lux > 0.0 {
            space.coupling_unchecked(x, x).sqrt() / lux
        } else {
            0.0
        }
    };
    let gamma = candidates.par_iter().map(ratio).reduce(|| 0.0, f64::max);
    EmbeddingEstimate { gamma, samples: candidates.len() }
}
