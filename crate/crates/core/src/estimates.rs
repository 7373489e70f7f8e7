//! Minorant inequalities `M(lambda u) >= phi(lambda[, u]) M(u)` and the modular lower
//! bounds they imply, for large norms (`||x|| >= 1`) and small norms
//! (`||x|| <= 1`), plus the two-sided ratio bounds of the entropy-type
//! catalog members.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::measure::{GridFunction, MeasureSpace};
use crate::modular::{char_norms, luxemburg_unchecked, modular_scaled};
use crate::nfunction::{exp_minus_linear, NFunction, NFunctionSpec};
use crate::rng::{gaussian_vec, uniform, SampleRng};
use crate::scalar::log_grid;

/// Relative slack for pointwise minorant and sandwich checks.
pub const POINTWISE_RTOL: f64 = 1e-12;
/// Relative slack for modular bound reports.
pub const BOUND_RTOL: f64 = 1e-9;
/// Points per default grid.
pub const GRID_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiDomain {
    /// `lambda >= 1`.
    Large,
    /// `0 < lambda <= 1`.
    Small,
}

impl PhiDomain {
    pub fn contains(self, lambda: f64) -> bool {
        match self {
            PhiDomain::Large => lambda >= 1.0 && lambda.is_finite(),
            PhiDomain::Small => lambda > 0.0 && lambda <= 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PhiForm {
    /// `0` below 1, `lambda` from 1 on; valid for every N-function.
    Baseline,
    /// `lambda^exponent`.
    Power { exponent: f64 },
    /// `(e^{lambda u} - lambda u - 1) / (e^u - u - 1)`.
    ExpMinusLinearRatio,
    /// `(e^{lambda^2 u^2} - 1) / (e^{u^2} - 1)`.
    ExpSquareRatio,
    /// `M(lambda u) / M(u)` for the given N-function.
    Ratio { nfunction: NFunctionSpec },
}

/// A growth minorant `phi` with its domain tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMinorant {
    #[serde(flatten)]
    pub form: PhiForm,
    pub domain: PhiDomain,
}

impl PhiMinorant {
    pub fn new(form: PhiForm, domain: PhiDomain) -> Self {
        Self { form, domain }
    }

    pub fn baseline() -> Self {
        Self::new(PhiForm::Baseline, PhiDomain::Large)
    }

    pub fn power(exponent: f64, domain: PhiDomain) -> Self {
        Self::new(PhiForm::Power { exponent }, domain)
    }

    pub fn exp_minus_linear_ratio() -> Self {
        Self::new(PhiForm::ExpMinusLinearRatio, PhiDomain::Large)
    }

    pub fn exp_square_ratio() -> Self {
        Self::new(PhiForm::ExpSquareRatio, PhiDomain::Large)
    }

    pub fn ratio(nfunction: NFunctionSpec, domain: PhiDomain) -> Self {
        Self::new(PhiForm::Ratio { nfunction }, domain)
    }

    pub fn arity(&self) -> usize {
        match self.form {
            PhiForm::Baseline | PhiForm::Power { .. } => 1,
            _ => 2,
        }
    }

    pub fn label(&self) -> String {
        let form = match &self.form {
            PhiForm::Baseline => "baseline".to_string(),
            PhiForm::Power { exponent } => format!("lambda^{exponent}"),
            PhiForm::ExpMinusLinearRatio => "exp_minus_linear_ratio".to_string(),
            PhiForm::ExpSquareRatio => "exp_square_ratio".to_string(),
            PhiForm::Ratio { nfunction } => format!("ratio[{}]", nfunction.label()),
        };
        let domain = match self.domain {
            PhiDomain::Large => "large",
            PhiDomain::Small => "small",
        };
        format!("{form}@{domain}")
    }

    /// `phi(lambda)` for one-argument forms.
    pub fn eval1(&self, lambda: f64) -> Result<f64> {
        match &self.form {
            PhiForm::Baseline => Ok(if lambda < 1.0 { 0.0 } else { lambda }),
            PhiForm::Power { exponent } => Ok(lambda.powf(*exponent)),
            _ => Err(Error::Precondition(format!("{} takes two arguments", self.label()))),
        }
    }

    /// `phi(lambda, u)`; one-argument forms ignore `u`.
    pub fn eval2(&self, lambda: f64, u: f64) -> f64 {
        match &self.form {
            PhiForm::Baseline | PhiForm::Power { .. } => self.eval1(lambda).unwrap_or(f64::NAN),
            PhiForm::ExpMinusLinearRatio => {
                if u == 0.0 {
                    lambda * lambda
                } else {
                    (ln_exp_minus_linear(lambda * u) - ln_exp_minus_linear(u)).exp()
                }
            }
            PhiForm::ExpSquareRatio => {
                if u == 0.0 {
                    lambda * lambda
                } else {
                    (ln_expm1(lambda * lambda * u * u) - ln_expm1(u * u)).exp()
                }
            }
            PhiForm::Ratio { nfunction } => {
                let m = NFunction::new_unchecked(nfunction.clone());
                let u = if u == 0.0 { f64::EPSILON } else { u };
                m.value(lambda * u) / m.value(u)
            }
        }
    }
}

fn ln_exp_minus_linear(a: f64) -> f64 {
    if a < 40.0 {
        exp_minus_linear(a).ln()
    } else {
        a + (-(a + 1.0) * (-a).exp()).ln_1p()
    }
}

fn ln_expm1(t: f64) -> f64 {
    if t < 40.0 {
        t.exp_m1().ln()
    } else {
        t + (-(-t).exp()).ln_1p()
    }
}

/// Log-spaced `lambda` grid for a domain: `[1, 1e3]` or `[1e-3, 1]`.
pub fn default_lambda_grid(domain: PhiDomain) -> Vec<f64> {
    match domain {
        PhiDomain::Large => log_grid(1.0, 1e3, GRID_POINTS),
        PhiDomain::Small => log_grid(1e-3, 1.0, GRID_POINTS),
    }
}

/// Log-spaced `u` grid on `[1e-6, 1e6]`; points past the overflow edge of a
/// given N-function are skipped by the checks.
pub fn default_u_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, GRID_POINTS)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinorantReport {
    /// `min M(lambda u) - phi M(u)` over the finite part of the grid.
    pub worst_margin: f64,
    /// Worst margin divided by `phi M(u)`.
    pub worst_relative: f64,
    pub worst_at: (f64, f64),
    pub violations: usize,
    pub points: usize,
    /// Points where `M(lambda u)` or `phi M(u)` overflowed.
    pub skipped: usize,
    /// Grid monotonicity of `phi` in `lambda` and in `u` (two-argument forms).
    pub monotone_in_lambda: Option<bool>,
    pub monotone_in_u: Option<bool>,
    pub pass: bool,
}

/// Grid check of `M(lambda u) >= phi M(u)` with relative slack `1e-12` of
/// `phi M(u)`, plus grid monotonicity of two-argument `phi`.
pub fn verify_minorant(
    m: &NFunction,
    phi: &PhiMinorant,
    lambda_grid: &[f64],
    u_grid: &[f64],
) -> Result<MinorantReport> {
    if let Some(l) = lambda_grid.iter().find(|l| !phi.domain.contains(**l)) {
        return Err(Error::Precondition(format!("lambda {l} outside the {:?} domain", phi.domain)));
    }
    if let Some(u) = u_grid.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        return Err(Error::Precondition(format!("u grid must be positive, got {u}")));
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_relative = f64::INFINITY;
    let mut worst_at = (f64::NAN, f64::NAN);
    let (mut violations, mut points, mut skipped) = (0, 0, 0);
    let mut table = vec![vec![f64::NAN; u_grid.len()]; lambda_grid.len()];
    for (i, &lambda) in lambda_grid.iter().enumerate() {
        for (j, &u) in u_grid.iter().enumerate() {
            let f = phi.eval2(lambda, u);
            table[i][j] = f;
            let lhs = m.value(lambda * u);
            let rhs = f * m.value(u);
            if !lhs.is_finite() || !rhs.is_finite() {
                skipped += 1;
                continue;
            }
            points += 1;
            let margin = lhs - rhs;
            let relative = if rhs > 0.0 { margin / rhs } else { 0.0 };
            if relative < -POINTWISE_RTOL {
                violations += 1;
            }
            if relative < worst_relative {
                worst_relative = relative;
                worst_margin = margin;
                worst_at = (lambda, u);
            }
        }
    }
    let (monotone_in_lambda, monotone_in_u) = if phi.arity() == 2 {
        (Some(monotone_table(&table, lambda_grid, true)), Some(monotone_table(&table, u_grid, false)))
    } else {
        (None, None)
    };
    let pass = violations == 0 && monotone_in_lambda.unwrap_or(true) && monotone_in_u.unwrap_or(true);
    Ok(MinorantReport {
        worst_margin,
        worst_relative,
        worst_at,
        violations,
        points,
        skipped,
        monotone_in_lambda,
        monotone_in_u,
        pass,
    })
}

/// Nondecreasing along rows (`along_lambda`) or columns, assuming the grid
/// axis is sorted. Non-finite entries are skipped.
fn monotone_table(table: &[Vec<f64>], axis: &[f64], along_lambda: bool) -> bool {
    let sorted = axis.windows(2).all(|w| w[0] <= w[1]);
    if !sorted {
        return true;
    }
    let ok = |a: f64, b: f64| !a.is_finite() || !b.is_finite() || b >= a * (1.0 - POINTWISE_RTOL);
    if along_lambda {
        (0..table.first().map_or(0, Vec::len))
            .all(|j| table.windows(2).all(|w| ok(w[0][j], w[1][j])))
    } else {
        table.iter().all(|row| row.windows(2).all(|w| ok(w[0], w[1])))
    }
}

/// Truncation witness `x_h`: `x` with entries below `threshold` zeroed.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationWitness {
    pub h: f64,
    pub threshold: f64,
    pub norm: f64,
    /// Lower bound on `||x_h||` from the triangle inequality.
    pub required_norm: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub theorem: String,
    pub applicable: bool,
    pub norm: f64,
    pub bound_value: f64,
    /// The modular `M(x)`.
    pub actual: f64,
    pub slack: f64,
    pub pass: bool,
    pub witness: Option<TruncationWitness>,
    pub x: Vec<f64>,
}

impl BoundReport {
    fn not_applicable(theorem: &str, norm: f64, actual: f64, x: &GridFunction) -> Self {
        Self {
            theorem: theorem.into(),
            applicable: false,
            norm,
            bound_value: f64::NAN,
            actual,
            slack: f64::NAN,
            pass: true,
            witness: None,
            x: x.values().to_vec(),
        }
    }

    fn evaluated(
        theorem: &str,
        norm: f64,
        bound_value: f64,
        actual: f64,
        witness: Option<TruncationWitness>,
        x: &GridFunction,
    ) -> Self {
        let slack = actual - bound_value;
        let pass = actual >= bound_value - BOUND_RTOL * bound_value.abs().max(1.0)
            || (actual.is_infinite() && actual > 0.0);
        Self {
            theorem: theorem.into(),
            applicable: true,
            norm,
            bound_value,
            actual,
            slack,
            pass,
            witness,
            x: x.values().to_vec(),
        }
    }
}

fn require(phi: &PhiMinorant, domain: PhiDomain, arity_one: bool, theorem: &str) -> Result<()> {
    if phi.domain != domain {
        return Err(Error::Precondition(format!("{theorem} needs a {domain:?}-domain phi, got {}", phi.label())));
    }
    if arity_one && phi.arity() != 1 {
        return Err(Error::Precondition(format!("{theorem} needs a one-argument phi, got {}", phi.label())));
    }
    Ok(())
}

fn norm_and_modular(m: &NFunction, space: &MeasureSpace, x: &GridFunction) -> Result<(f64, f64)> {
    check_len(space.len(), x.len())?;
    Ok((luxemburg_unchecked(m, space, x.values()), modular_scaled(m, space, x.values(), 1.0)))
}

fn truncation_witness(
    m: &NFunction,
    space: &MeasureSpace,
    x: &GridFunction,
    h: f64,
    norm: f64,
    required_norm: f64,
) -> Result<TruncationWitness> {
    let threshold = h * norm;
    let xh = x.truncate_below(threshold)?;
    let witness_norm = luxemburg_unchecked(m, space, xh.values());
    let holds = witness_norm >= required_norm * (1.0 - BOUND_RTOL);
    Ok(TruncationWitness { h, threshold, norm: witness_norm, required_norm, holds })
}

/// `M(x) >= phi(||x||)` for `||x|| >= 1`.
pub fn theorem1_bound(m: &NFunction, space: &MeasureSpace, x: &GridFunction, phi: &PhiMinorant) -> Result<BoundReport> {
    require(phi, PhiDomain::Large, true, "theorem 1")?;
    let (norm, actual) = norm_and_modular(m, space, x)?;
    if norm < 1.0 {
        return Ok(BoundReport::not_applicable("theorem1", norm, actual, x));
    }
    Ok(BoundReport::evaluated("theorem1", norm, phi.eval1(norm)?, actual, None, x))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Options {
    /// Accept `R = 1` (then `h = 0`); valid when `phi` is continuous.
    pub allow_r_one: bool,
}

/// `M(x) >= phi(||x|| / R, (R - 1) / (R ||1||))` for `||x|| >= R > 1`.
pub fn theorem2_bound(
    m: &NFunction,
    space: &MeasureSpace,
    x: &GridFunction,
    phi: &PhiMinorant,
    r: f64,
    options: Theorem2Options,
) -> Result<BoundReport> {
    require(phi, PhiDomain::Large, false, "theorem 2")?;
    if !(r > 1.0 || (options.allow_r_one && r == 1.0)) || !r.is_finite() {
        return Err(Error::Precondition(format!("theorem 2 needs R > 1, got {r}")));
    }
    let (norm, actual) = norm_and_modular(m, space, x)?;
    if norm < r {
        return Ok(BoundReport::not_applicable("theorem2", norm, actual, x));
    }
    let ones_norm = luxemburg_unchecked(m, space, &vec![1.0; space.len()]);
    let h = (r - 1.0) / (r * ones_norm);
    let bound = phi.eval2(norm / r, h);
    let witness = truncation_witness(m, space, x, h, norm, norm / r)?;
    Ok(BoundReport::evaluated("theorem2", norm, bound, actual, Some(witness), x))
}

/// `M(x) >= phi(||x||)` for `0 < ||x|| <= 1`.
pub fn theorem3_bound(m: &NFunction, space: &MeasureSpace, x: &GridFunction, phi: &PhiMinorant) -> Result<BoundReport> {
    require(phi, PhiDomain::Small, true, "theorem 3")?;
    let (norm, actual) = norm_and_modular(m, space, x)?;
    if !(norm > 0.0 && norm <= 1.0) {
        return Ok(BoundReport::not_applicable("theorem3", norm, actual, x));
    }
    Ok(BoundReport::evaluated("theorem3", norm, phi.eval1(norm)?, actual, None, x))
}

/// `M(x) >= phi((1 - h ||1||) ||x||, h)` for `0 < ||x|| <= 1`, `0 < h < 1/||1||`.
pub fn theorem4_bound(
    m: &NFunction,
    space: &MeasureSpace,
    x: &GridFunction,
    phi: &PhiMinorant,
    h: f64,
) -> Result<BoundReport> {
    require(phi, PhiDomain::Small, false, "theorem 4")?;
    check_len(space.len(), x.len())?;
    let ones_norm = luxemburg_unchecked(m, space, &vec![1.0; space.len()]);
    if !(h > 0.0 && h * ones_norm < 1.0) {
        return Err(Error::Precondition(format!("theorem 4 needs 0 < h < 1/||1|| = {}, got {h}", 1.0 / ones_norm)));
    }
    let (norm, actual) = norm_and_modular(m, space, x)?;
    if !(norm > 0.0 && norm <= 1.0) {
        return Ok(BoundReport::not_applicable("theorem4", norm, actual, x));
    }
    let shrink = 1.0 - h * ones_norm;
    let bound = phi.eval2(shrink * norm, h);
    let witness = truncation_witness(m, space, x, h, norm, shrink * norm)?;
    Ok(BoundReport::evaluated("theorem4", norm, bound, actual, Some(witness), x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sandwich {
    /// `lambda^2 M1(u) <= M1(lambda u) <= lambda M1(u)`, `M1 = (1+u)ln(1+u) - u`.
    M1,
    /// `lambda^{p+1} M2(u) <= M2(lambda u) <= lambda^p M2(u)`, `M2 = u^p ln(1+u)`.
    M2,
    /// `lambda^{p+1} M3(u) <= M3(lambda u) <= lambda M3(u)`, `M3 = M1 + M2`.
    M3,
}

impl Sandwich {
    pub fn nfunction(self, p: f64) -> Result<NFunction> {
        match self {
            Sandwich::M1 => Ok(NFunction::entropy_like()),
            Sandwich::M2 => NFunction::power_log(p),
            Sandwich::M3 => NFunction::sum(vec![NFunctionSpec::EntropyLike, NFunctionSpec::PowerLog { p }]),
        }
    }

    fn exponents(self, p: f64) -> (f64, f64) {
        match self {
            Sandwich::M1 => (2.0, 1.0),
            Sandwich::M2 => (p + 1.0, p),
            Sandwich::M3 => (p + 1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub which: Sandwich,
    pub p: f64,
    /// `min (M(lambda u) - lower) / lower` over the grid.
    pub worst_lower: f64,
    /// `min (upper - M(lambda u)) / upper` over the grid.
    pub worst_upper: f64,
    pub points: usize,
    pub pass: bool,
}

/// Pointwise check of the two-sided ratio bounds on `lambda_grid x u_grid` with
/// relative slack `1e-12`.
pub fn sandwich_check(which: Sandwich, p: f64, lambda_grid: &[f64], u_grid: &[f64]) -> Result<SandwichReport> {
    if which != Sandwich::M1 && !(p > 1.0) {
        return Err(Error::Precondition(format!("{which:?} needs p > 1, got {p}")));
    }
    if let Some(l) = lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Precondition(format!("lambda must lie in (0, 1), got {l}")));
    }
    if let Some(u) = u_grid.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        return Err(Error::Precondition(format!("u must be positive, got {u}")));
    }
    let m = which.nfunction(p)?;
    let (lo_exp, hi_exp) = which.exponents(p);
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    let mut points = 0;
    for &u in u_grid {
        let mu = m.value(u);
        if !mu.is_finite() {
            continue;
        }
        for &lambda in lambda_grid {
            let mid = m.value(lambda * u);
            let lower = lambda.powf(lo_exp) * mu;
            let upper = lambda.powf(hi_exp) * mu;
            if lower > 0.0 {
                worst_lower = worst_lower.min((mid - lower) / lower);
            }
            if upper > 0.0 {
                worst_upper = worst_upper.min((upper - mid) / upper);
            }
            points += 1;
        }
    }
    Ok(SandwichReport {
        which,
        p,
        worst_lower,
        worst_upper,
        points,
        pass: worst_lower >= -POINTWISE_RTOL && worst_upper >= -POINTWISE_RTOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub target_norm: f64,
    /// `mu(D_k)`, halving each step.
    pub measures: Vec<f64>,
    /// Computed `||x_k||`, equal to the target up to root-finding error.
    pub norms: Vec<f64>,
    pub modulars: Vec<f64>,
    /// First step at which the modular fell below `1e-3`.
    pub reached_below: Option<usize>,
    pub pass: bool,
}

/// Threshold the witness modulars must cross for the probe to pass.
pub const DEGENERACY_THRESHOLD: f64 = 1e-3;

/// Builds witnesses `x_k = c_k chi_{D_k}` with `||x_k|| = R` on sets of
/// measure `2^{-k}` carved out of a unit-measure space by repeated halving,
/// and records `M(x_k)`. Passes iff the modular drops below `1e-3` within
/// `refinements` steps.
pub fn small_norm_degeneracy_probe(m: &NFunction, r: f64, refinements: usize) -> Result<DegeneracyReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!("R must lie in (0, 1), got {r}")));
    }
    let mut space = MeasureSpace::new(vec![1.0])?;
    let mut report = DegeneracyReport {
        target_norm: r,
        measures: Vec::new(),
        norms: Vec::new(),
        modulars: Vec::new(),
        reached_below: None,
        pass: false,
    };
    for step in 1..=refinements {
        space = space.split_cell(0, 2)?;
        let (indicator, measure) = space.indicator(&[0])?;
        let scale = r / char_norms(m, measure)?.luxemburg;
        let x = indicator.scale(scale);
        report.measures.push(measure);
        report.norms.push(luxemburg_unchecked(m, &space, x.values()));
        let value = modular_scaled(m, &space, x.values(), 1.0);
        report.modulars.push(value);
        if value < DEGENERACY_THRESHOLD && report.reached_below.is_none() {
            report.reached_below = Some(step);
        }
    }
    report.pass = report.reached_below.is_some();
    Ok(report)
}

/// Seeded random grid function rescaled to Luxemburg norm `target`.
///
/// Entries are Gaussian; with probability one half a random subset of cells
/// is zeroed so that truncation witnesses see sparse supports.
pub fn sample_with_norm(
    m: &NFunction,
    space: &MeasureSpace,
    rng: &mut SampleRng,
    target: f64,
) -> GridFunction {
    let n = space.len();
    loop {
        let mut v = gaussian_vec(rng, n);
        if uniform(rng, 0.0, 1.0) < 0.5 {
            for value in v.iter_mut() {
                if uniform(rng, 0.0, 1.0) < 0.5 {
                    *value = 0.0;
                }
            }
        }
        let norm = luxemburg_unchecked(m, space, &v);
        if norm > 0.0 {
            let s = target / norm;
            return GridFunction::new(v.into_iter().map(|e| e * s).collect()).expect("finite sample");
        }
    }
}
