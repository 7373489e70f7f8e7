//! Discretized Hammerstein equations `x = S f(x) + g`.
//!
//! Existence is certified through the auxiliary operator
//! `Phi x = T x - f(x) - T g` (with `S T = I`): Minty monotonicity from
//! `sigma >= delta`, and the Rothe condition on a sphere `||x|| = R` from the
//! coercivity certificate. Uniqueness follows from `sigma - delta > 0`. The
//! solver itself is independent of the certificates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimates::{PhiDomain, PhiMinorant};
use crate::measure::{GridFunction, MeasureSpace};
use crate::modular::{embedding_constant, luxemburg_unchecked};
use crate::nfunction::{NFunction, NFunctionSpec};
use crate::rng::{gaussian_vec, log_uniform, seeded};
use crate::scalar::{bisect, central_difference, log_grid};

/// Maximum `|(S T - I)_{ij}|` accepted by [`HammersteinProblem::new`].
pub const LEFT_INVERSE_TOL: f64 = 1e-10;
/// Slack for sampled Minty and Rothe inner products.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// Upper end of the Rothe radius search.
pub const ROTHE_R_MAX: f64 = 1e6;

/// User-supplied pointwise rule `(cell, u) -> f(cell, u)`.
#[derive(Clone)]
pub struct CustomRule(pub Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>);

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomRule(..)")
    }
}

impl PartialEq for CustomRule {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// The scalar rule `u -> f(u)` behind the superposition operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PointwiseRule {
    /// `sum_k coeffs[k] u^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `-coef sign(u) (e^{|u|} - 1)`.
    SignedExp { coef: f64 },
    /// Closure without analytic derivative; not serializable.
    #[serde(skip)]
    Custom(CustomRule),
}

impl PointwiseRule {
    fn eval(&self, cell: usize, u: f64) -> f64 {
        match self {
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c),
            Self::SignedExp { coef } => -coef * u.signum() * u.abs().exp_m1(),
            Self::Custom(rule) => (rule.0)(cell, u),
        }
    }

    fn deriv(&self, cell: usize, u: f64) -> f64 {
        match self {
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * u + k as f64 * c),
            Self::SignedExp { coef } => -coef * u.abs().exp(),
            Self::Custom(_) => central_difference(|t| self.eval(cell, t), u),
        }
    }
}

/// Coercivity certificate `-u f(cell, u) >= a M(b|u|) - c(cell)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub a: f64,
    pub b: f64,
    pub c: Vec<f64>,
}

/// Superposition operator `f(x)(cell) = scale[cell] * rule(x(cell))` with its
/// monotonicity constant `delta` and optional coercivity certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    #[serde(flatten)]
    pub rule: PointwiseRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_scale: Option<Vec<f64>>,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<Coercivity>,
}

impl NonlinearitySpec {
    pub fn new(rule: PointwiseRule, delta: f64) -> Self {
        Self { rule, cell_scale: None, delta, coercivity: None }
    }

    pub fn with_coercivity(mut self, a: f64, b: f64, c: Vec<f64>) -> Self {
        self.coercivity = Some(Coercivity { a, b, c });
        self
    }

    fn scale(&self, cell: usize) -> f64 {
        self.cell_scale.as_ref().map_or(1.0, |s| s[cell])
    }

    pub fn eval(&self, cell: usize, u: f64) -> f64 {
        self.scale(cell) * self.rule.eval(cell, u)
    }

    pub fn deriv(&self, cell: usize, u: f64) -> f64 {
        self.scale(cell) * self.rule.deriv(cell, u)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &u)| self.eval(i, u)).collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::InvalidInput(format!("delta must be finite, got {}", self.delta)));
        }
        if let Some(s) = &self.cell_scale {
            check_len(n, s.len())?;
        }
        if let Some(c) = &self.coercivity {
            check_len(n, c.c.len())?;
            if !(c.a > 0.0 && c.b > 0.0) || c.c.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidInput("coercivity needs a, b > 0 and c >= 0".into()));
            }
        }
        Ok(())
    }

    /// Grid test of the monotonicity constant and the coercivity certificate
    /// on `u` in `{0} U +-[1e-3, 1e2]`.
    pub fn check_grid(&self, m: &NFunction, n: usize) -> NonlinearityReport {
        let mut us = vec![0.0];
        for u in log_grid(1e-3, 1e2, 40) {
            us.push(u);
            us.push(-u);
        }
        let mut worst_monotone = f64::NEG_INFINITY;
        let mut worst_coercive = f64::INFINITY;
        for cell in 0..n {
            let values: Vec<f64> = us.iter().map(|&u| self.eval(cell, u)).collect();
            for i in 0..us.len() {
                for j in i + 1..us.len() {
                    let d = us[i] - us[j];
                    let excess = (values[i] - values[j]) * d - self.delta * d * d;
                    if excess.is_finite() {
                        worst_monotone = worst_monotone.max(excess / (d * d));
                    }
                }
                if let Some(c) = &self.coercivity {
                    let u = us[i];
                    let margin = -u * values[i] - (c.a * m.value(c.b * u.abs()) - c.c[cell]);
                    if !margin.is_nan() {
                        worst_coercive = worst_coercive.min(margin / (1.0 + c.c[cell]).max(1.0));
                    }
                }
            }
        }
        NonlinearityReport {
            worst_monotone_excess: worst_monotone,
            monotone_ok: worst_monotone <= CERTIFICATE_TOL,
            worst_coercivity_margin: self.coercivity.as_ref().map(|_| worst_coercive),
            coercivity_ok: self.coercivity.as_ref().map(|_| worst_coercive >= -CERTIFICATE_TOL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearityReport {
    /// `max ((f(u1) - f(u2))(u1 - u2) - delta (u1 - u2)^2) / (u1 - u2)^2`.
    pub worst_monotone_excess: f64,
    pub monotone_ok: bool,
    pub worst_coercivity_margin: Option<f64>,
    pub coercivity_ok: Option<bool>,
}

/// A validated problem `x = S f(x) + g` with `S T = I`.
#[derive(Debug, Clone)]
pub struct HammersteinProblem {
    pub space: MeasureSpace,
    pub nfunction: NFunction,
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub f: NonlinearitySpec,
    pub g: GridFunction,
    pub sigma: f64,
}

impl HammersteinProblem {
    pub fn new(
        space: MeasureSpace,
        nfunction: NFunction,
        s: DMatrix<f64>,
        t: DMatrix<f64>,
        f: NonlinearitySpec,
        g: GridFunction,
        sigma: f64,
    ) -> Result<Self> {
        let n = space.len();
        for m in [&s, &t] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.nrows().max(m.ncols()) });
            }
        }
        check_len(n, g.len())?;
        f.validate(n)?;
        if !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be finite, got {sigma}")));
        }
        let residual = check_left_inverse(&s, &t)?;
        if residual > LEFT_INVERSE_TOL {
            return Err(Error::Precondition(format!("S T differs from I by {residual:e}")));
        }
        Ok(Self { space, nfunction, s, t, f, g, sigma })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.space.coupling_unchecked(a, b)
    }

    fn mul(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        (m * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    /// `Phi x = T x - f(x) - T g`.
    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        let tx = Self::mul(&self.t, x);
        let tg = Self::mul(&self.t, self.g.values());
        let fx = self.f.apply(x);
        tx.iter().zip(&fx).zip(&tg).map(|((a, b), c)| a - b - c).collect()
    }

    /// `x - S f(x) - g`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let sf = Self::mul(&self.s, &self.f.apply(x));
        x.iter().zip(&sf).zip(self.g.values()).map(|((a, b), c)| a - b - c).collect()
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        if r.iter().all(|v| v.is_finite()) {
            luxemburg_unchecked(&self.nfunction, &self.space, &r)
        } else {
            f64::INFINITY
        }
    }

    fn norm(&self, x: &[f64]) -> f64 {
        luxemburg_unchecked(&self.nfunction, &self.space, x)
    }
}

/// Problem file layout: `{space, nfunction, S, T, f, g, sigma}` with `S` and
/// `T` row-major (nested rows or one flat array).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub space: MeasureSpace,
    pub nfunction: NFunctionSpec,
    #[serde(rename = "S")]
    pub s: MatrixInput,
    #[serde(rename = "T")]
    pub t: MatrixInput,
    pub f: NonlinearitySpec,
    pub g: GridFunction,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixInput {
    pub fn to_matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        let flat: Vec<f64> = match self {
            MatrixInput::Rows(rows) => {
                check_len(n, rows.len())?;
                for r in rows {
                    check_len(n, r.len())?;
                }
                rows.iter().flatten().copied().collect()
            }
            MatrixInput::Flat(v) => {
                check_len(n * n, v.len())?;
                v.clone()
            }
        };
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixInput::Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<HammersteinProblem> {
        let n = self.space.len();
        let s = self.s.to_matrix(n)?;
        let t = self.t.to_matrix(n)?;
        HammersteinProblem::new(self.space, NFunction::new(self.nfunction)?, s, t, self.f, self.g, self.sigma)
    }

    pub fn from_problem(p: &HammersteinProblem) -> Self {
        Self {
            space: p.space.clone(),
            nfunction: p.nfunction.spec().clone(),
            s: MatrixInput::from_matrix(&p.s),
            t: MatrixInput::from_matrix(&p.t),
            f: p.f.clone(),
            g: p.g.clone(),
            sigma: p.sigma,
        }
    }
}

/// `max |(S T - I)_{ij}|`.
pub fn check_left_inverse(s: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<f64> {
    if !s.is_square() || !t.is_square() || s.ncols() != t.nrows() {
        return Err(Error::DimensionMismatch { expected: s.ncols(), found: t.nrows() });
    }
    let st = s * t;
    let n = st.nrows();
    Ok((0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (st[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaEstimate {
    /// Smallest eigenvalue of the weighted symmetric part.
    pub sigma: f64,
    /// Smallest of the sampled Rayleigh quotients `<Tx, x> / ||x||_2^2`.
    pub rayleigh_min: f64,
    pub samples: usize,
    /// Every sampled quotient is at least `sigma - 1e-9`.
    pub certified: bool,
}

/// Largest `sigma` with `<Tx, x> >= sigma ||x||_2^2` under the weighted
/// coupling.
///
/// With `W = diag(mu)`, `<Tx, x> = x^t W T x` and `||x||_2^2 = x^t W x`. The
/// substitution `y = W^{1/2} x` turns this into the symmetric eigenproblem of
/// `(B + B^t) / 2` with `B = W^{1/2} T W^{-1/2}`.
pub fn sigma_estimate(t: &DMatrix<f64>, space: &MeasureSpace, samples: usize, seed: u64) -> Result<SigmaEstimate> {
    let n = space.len();
    if t.nrows() != n || t.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: t.nrows() });
    }
    let root: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| root[i] * t[(i, j)] / root[j]);
    let sym = (&b + b.transpose()) * 0.5;
    let sigma = SymmetricEigen::new(sym).eigenvalues.min();
    let mut rng = seeded(seed);
    let mut rayleigh_min = f64::INFINITY;
    for _ in 0..samples {
        let x = gaussian_vec(&mut rng, n);
        let tx = (t * DVector::from_column_slice(&x)).as_slice().to_vec();
        let q = space.coupling_unchecked(&tx, &x) / space.coupling_unchecked(&x, &x);
        rayleigh_min = rayleigh_min.min(q);
    }
    let certified = samples == 0 || rayleigh_min >= sigma - CERTIFICATE_TOL * sigma.abs().max(1.0);
    Ok(SigmaEstimate { sigma, rayleigh_min, samples, certified })
}

/// `sigma - delta > 0`: solutions of the equation are unique.
pub fn uniqueness_certificate(sigma: f64, delta: f64) -> bool {
    sigma - delta > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MintyReport {
    /// `min <Phi x1 - Phi x2, x1 - x2>` over sampled pairs.
    pub min_inner: f64,
    /// `min <Phi x1 - Phi x2, x1 - x2> / ||x1 - x2||_2^2`.
    pub min_ratio: f64,
    pub pairs: usize,
    /// The sufficient condition `sigma >= delta`.
    pub sigma_ge_delta: bool,
}

/// Samples `pairs` random pairs at log-uniform scales in `[0.1, 3]`.
pub fn verify_minty(problem: &HammersteinProblem, pairs: usize, seed: u64) -> MintyReport {
    let n = problem.len();
    let mut rng = seeded(seed);
    let mut min_inner = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..pairs {
        let s1 = log_uniform(&mut rng, 0.1, 3.0);
        let s2 = log_uniform(&mut rng, 0.1, 3.0);
        let x1: Vec<f64> = gaussian_vec(&mut rng, n).into_iter().map(|v| v * s1).collect();
        let x2: Vec<f64> = gaussian_vec(&mut rng, n).into_iter().map(|v| v * s2).collect();
        minty_pair(problem, &x1, &x2, &mut min_inner, &mut min_ratio);
    }
    MintyReport { min_inner, min_ratio, pairs, sigma_ge_delta: problem.sigma >= problem.f.delta }
}

/// Minty inner product for one explicit pair.
pub fn minty_inner(problem: &HammersteinProblem, x1: &[f64], x2: &[f64]) -> f64 {
    let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
    minty_pair(problem, x1, x2, &mut a, &mut b);
    a
}

fn minty_pair(problem: &HammersteinProblem, x1: &[f64], x2: &[f64], min_inner: &mut f64, min_ratio: &mut f64) {
    let p1 = problem.phi(x1);
    let p2 = problem.phi(x2);
    let dp: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let inner = problem.inner(&dp, &dx);
    let dd = problem.inner(&dx, &dx);
    if inner.is_nan() {
        return;
    }
    *min_inner = min_inner.min(inner);
    if dd > 0.0 {
        *min_ratio = min_ratio.min(inner / dd);
    }
}

/// Ingredients of the Rothe lower bound
/// `E(R) = [sigma < 0] sigma gamma^2 R + a phi(bR) / R - 2 ||Tg||_{M*} - c / R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotheBound {
    pub sigma: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    /// `||c||_1`.
    pub c: f64,
    /// Luxemburg norm of `T g` in the conjugate space.
    pub tg_dual_norm: f64,
}

impl RotheBound {
    /// Lower bound of `<Phi x, x> / ||x||` on `||x|| = r`. `phi` applies only
    /// from `b r >= 1` on; below that the modular is merely nonnegative.
    pub fn value(&self, phi: &PhiMinorant, r: f64) -> f64 {
        let sigma_term = if self.sigma >= 0.0 { 0.0 } else { self.sigma * self.gamma * self.gamma * r };
        let br = self.b * r;
        let growth = if br >= 1.0 { phi.eval1(br).unwrap_or(0.0) } else { 0.0 };
        sigma_term + self.a * growth / r - 2.0 * self.tg_dual_norm - self.c / r
    }
}

pub fn rothe_bound(problem: &HammersteinProblem, gamma: f64) -> Result<RotheBound> {
    let cert = problem
        .f
        .coercivity
        .as_ref()
        .ok_or_else(|| Error::Precondition("Rothe radius needs a coercivity certificate".into()))?;
    let tg = HammersteinProblem::mul(&problem.t, problem.g.values());
    let dual = problem.nfunction.conjugate();
    Ok(RotheBound {
        sigma: problem.sigma,
        gamma,
        a: cert.a,
        b: cert.b,
        c: cert.c.iter().zip(problem.space.weights()).map(|(c, w)| c * w).sum(),
        tg_dual_norm: luxemburg_unchecked(&dual, &problem.space, &tg),
    })
}

/// Smallest `R >= 1` (up to `1e6`) at which the Rothe lower bound is
/// nonnegative, or `None`. `phi` must be a one-argument large-norm minorant
/// of `M`; `gamma` is the embedding constant, used only when `sigma < 0`.
pub fn rothe_radius(problem: &HammersteinProblem, phi: &PhiMinorant, gamma: f64) -> Result<Option<f64>> {
    if phi.arity() != 1 || phi.domain != PhiDomain::Large {
        return Err(Error::Precondition(format!(
            "Rothe radius needs a one-argument large-norm phi, got {}",
            phi.label()
        )));
    }
    let bound = rothe_bound(problem, gamma)?;
    let ok = |r: f64| bound.value(phi, r) >= 0.0;
    if ok(1.0) {
        return Ok(Some(1.0));
    }
    let grid = log_grid(1.0, ROTHE_R_MAX, 601);
    for w in grid.windows(2) {
        if ok(w[1]) {
            return Ok(Some(bisect(ok, w[0], w[1])));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotheReport {
    pub radius: f64,
    pub min_inner: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Minimum of `<Phi x, x>` over samples on the sphere `||x||_L = R`: random
/// Gaussian directions plus cell indicators, the constant function and `+-Tg`.
pub fn verify_rothe(problem: &HammersteinProblem, radius: f64, samples: usize, seed: u64) -> Result<RotheReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
    }
    let n = problem.len();
    let mut directions: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        })
        .collect();
    directions.push(vec![1.0; n]);
    let tg = HammersteinProblem::mul(&problem.t, problem.g.values());
    if tg.iter().any(|v| *v != 0.0) {
        directions.push(tg.clone());
        directions.push(tg.iter().map(|v| -v).collect());
    }
    let mut rng = seeded(seed);
    directions.extend((0..samples).map(|_| gaussian_vec(&mut rng, n)));
    let mut min_inner = f64::INFINITY;
    for d in &directions {
        let norm = problem.norm(d);
        if norm == 0.0 {
            continue;
        }
        let x: Vec<f64> = d.iter().map(|v| v * radius / norm).collect();
        let value = problem.inner(&problem.phi(&x), &x);
        if !value.is_nan() {
            min_inner = min_inner.min(value);
        }
    }
    Ok(RotheReport { radius, min_inner, samples: directions.len(), pass: min_inner >= -CERTIFICATE_TOL })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Starting point; `g` when absent.
    pub x0: Option<Vec<f64>>,
    /// Random pairs / sphere samples for the certificates.
    pub certificate_samples: usize,
    /// Random starts for the uniqueness cross-check.
    pub multistart: usize,
    /// Minorant used for the Rothe radius; the baseline when absent.
    pub rothe_phi: Option<PhiMinorant>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            seed: 0,
            x0: None,
            certificate_samples: 1000,
            multistart: 10,
            rothe_phi: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Damped,
    Newton,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificates {
    pub left_inverse_residual: f64,
    pub sigma: f64,
    pub sigma_estimate: SigmaEstimate,
    /// `sigma` does not exceed the computed estimate.
    pub sigma_valid: bool,
    pub delta: f64,
    pub nonlinearity: NonlinearityReport,
    pub minty: MintyReport,
    pub rothe_radius: Option<f64>,
    pub rothe: Option<RotheReport>,
    pub uniqueness: bool,
    /// Largest pairwise L2 distance between multi-start solutions.
    pub multistart_spread: Option<f64>,
    /// `||S Phi(x)||_L` and the bound `||S||_inf ||Phi(x)||_L` at the solution.
    pub s_phi_norm: f64,
    pub s_phi_bound: f64,
}

impl Certificates {
    /// Existence (Minty plus Rothe when available) and the supplied
    /// constants all check out.
    pub fn ok(&self) -> bool {
        self.sigma_valid
            && self.minty.sigma_ge_delta
            && self.nonlinearity.monotone_ok
            && self.nonlinearity.coercivity_ok.unwrap_or(true)
            && self.rothe.is_none_or(|r| r.pass)
            && self.multistart_spread.is_none_or(|d| d <= 1e-6)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub residual_l: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: SolveMethod,
    pub history: Vec<f64>,
    pub certificates: Option<Certificates>,
}

impl SolveResult {
    /// 0 solved, 2 solved but certificates failed, 3 not converged.
    pub fn exit_code(&self) -> i32 {
        match (self.converged, self.certificates.as_ref().is_none_or(Certificates::ok)) {
            (false, _) => 3,
            (true, true) => 0,
            (true, false) => 2,
        }
    }
}

/// Solves `x = S f(x) + g` and attaches every certificate.
pub fn solve(problem: &HammersteinProblem, options: &SolveOptions) -> Result<SolveResult> {
    if !(options.tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be positive, got {}", options.tol)));
    }
    let x0 = match &options.x0 {
        Some(v) => {
            check_len(problem.len(), v.len())?;
            v.clone()
        }
        None => problem.g.values().to_vec(),
    };
    let mut result = iterate(problem, x0, options.tol, options.max_iter);
    result.certificates = Some(certificates(problem, options, &result)?);
    Ok(result)
}

/// The bare iteration: damped fixed-point steps, then Newton on `Phi` when
/// the damped phase stagnates.
pub fn iterate(problem: &HammersteinProblem, x0: Vec<f64>, tol: f64, max_iter: usize) -> SolveResult {
    const TAU_MIN: f64 = 1e-6;
    const WINDOW: usize = 20;
    let mut x = x0;
    let mut r = problem.residual_norm(&x);
    let mut history = vec![r];
    let mut tau = 1.0;
    let mut iterations = 0;
    let mut stagnated = false;
    while r > tol && iterations < max_iter {
        iterations += 1;
        let sf = HammersteinProblem::mul(&problem.s, &problem.f.apply(&x));
        let candidate: Vec<f64> = x
            .iter()
            .zip(&sf)
            .zip(problem.g.values())
            .map(|((xi, si), gi)| (1.0 - tau) * xi + tau * (si + gi))
            .collect();
        let rc = problem.residual_norm(&candidate);
        if rc < r {
            x = candidate;
            r = rc;
            tau = (1.25 * tau).min(1.0);
        } else {
            tau *= 0.5;
        }
        history.push(r);
        let k = history.len();
        if tau < TAU_MIN || (k > WINDOW && r > 0.9 * history[k - 1 - WINDOW]) {
            stagnated = true;
            break;
        }
    }
    if r <= tol || !stagnated {
        return SolveResult { x, residual_l: r, iterations, converged: r <= tol, method: SolveMethod::Damped, history, certificates: None };
    }
    newton(problem, x, tol, max_iter, iterations, history)
}

fn merit(problem: &HammersteinProblem, x: &[f64]) -> f64 {
    let p = problem.phi(x);
    0.5 * problem.inner(&p, &p)
}

fn newton(
    problem: &HammersteinProblem,
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
    mut iterations: usize,
    mut history: Vec<f64>,
) -> SolveResult {
    let n = problem.len();
    let mut r = problem.residual_norm(&x);
    let mut value = merit(problem, &x);
    while r > tol && iterations < max_iter {
        iterations += 1;
        let jac = DMatrix::from_fn(n, n, |i, j| problem.t[(i, j)] - if i == j { problem.f.deriv(i, x[i]) } else { 0.0 });
        let rhs = -DVector::from_vec(problem.phi(&x));
        let Some(step) = jac.lu().solve(&rhs) else { break };
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            let trial_value = merit(problem, &trial);
            if trial_value < value {
                x = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        r = problem.residual_norm(&x);
        history.push(r);
        if !accepted {
            break;
        }
    }
    SolveResult { x, residual_l: r, iterations, converged: r <= tol, method: SolveMethod::Newton, history, certificates: None }
}

fn certificates(problem: &HammersteinProblem, options: &SolveOptions, solved: &SolveResult) -> Result<Certificates> {
    let n = problem.len();
    let samples = options.certificate_samples;
    let estimate = sigma_estimate(&problem.t, &problem.space, samples, options.seed)?;
    let sigma_valid = problem.sigma <= estimate.sigma + CERTIFICATE_TOL * estimate.sigma.abs().max(1.0);
    let nonlinearity = problem.f.check_grid(&problem.nfunction, n);
    let minty = verify_minty(problem, samples, options.seed.wrapping_add(1));
    let (rothe_radius_value, rothe) = if problem.f.coercivity.is_some() {
        let phi = options.rothe_phi.clone().unwrap_or_else(PhiMinorant::baseline);
        let gamma = if problem.sigma < 0.0 {
            embedding_constant(&problem.nfunction, &problem.space, options.seed).gamma
        } else {
            0.0
        };
        let radius = rothe_radius(problem, &phi, gamma)?;
        let report = match radius {
            Some(r) => Some(verify_rothe(problem, r, samples, options.seed.wrapping_add(2))?),
            None => None,
        };
        (radius, report)
    } else {
        (None, None)
    };
    let uniqueness = uniqueness_certificate(problem.sigma, problem.f.delta);
    let multistart_spread = if uniqueness && solved.converged && options.multistart > 0 {
        let mut rng = seeded(options.seed.wrapping_add(3));
        let scale = 1.0 + problem.g.max_abs();
        let mut solutions = vec![solved.x.clone()];
        for _ in 0..options.multistart {
            let start: Vec<f64> = gaussian_vec(&mut rng, n).into_iter().map(|v| v * scale).collect();
            let run = iterate(problem, start, options.tol, options.max_iter);
            if !run.converged {
                solutions.clear();
                break;
            }
            solutions.push(run.x);
        }
        if solutions.is_empty() {
            Some(f64::INFINITY)
        } else {
            let mut spread: f64 = 0.0;
            for i in 0..solutions.len() {
                for j in i + 1..solutions.len() {
                    let d: Vec<f64> = solutions[i].iter().zip(&solutions[j]).map(|(a, b)| a - b).collect();
                    spread = spread.max(problem.inner(&d, &d).sqrt());
                }
            }
            Some(spread)
        }
    } else {
        None
    };
    let phi_x = problem.phi(&solved.x);
    let s_phi = HammersteinProblem::mul(&problem.s, &phi_x);
    let s_inf = problem.s.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    Ok(Certificates {
        left_inverse_residual: check_left_inverse(&problem.s, &problem.t)?,
        sigma: problem.sigma,
        sigma_estimate: estimate,
        sigma_valid,
        delta: problem.f.delta,
        nonlinearity,
        minty,
        rothe_radius: rothe_radius_value,
        rothe,
        uniqueness,
        multistart_spread,
        s_phi_norm: problem.norm(&s_phi),
        s_phi_bound: s_inf * problem.norm(&phi_x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn unit_space() -> MeasureSpace {
        MeasureSpace::new(vec![1.0]).unwrap()
    }

    fn cubic_problem() -> HammersteinProblem {
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 0.0, 0.0, -1.0] }, 0.0)
            .with_coercivity(1.0, 1.0, vec![0.25]);
        HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[0.5]),
            diag(&[2.0]),
            f,
            GridFunction::new(vec![1.5]).unwrap(),
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn left_inverse_examples() {
        assert_eq!(check_left_inverse(&diag(&[0.5, 0.5]), &diag(&[2.0, 2.0])).unwrap(), 0.0);
        assert_eq!(check_left_inverse(&diag(&[1.0, 2.0]), &diag(&[1.0, 0.5])).unwrap(), 0.0);
        let mut t = DMatrix::identity(3, 3);
        t[(0, 1)] = 1e-6;
        t[(2, 0)] = 1e-6;
        assert_relative_eq!(check_left_inverse(&DMatrix::identity(3, 3), &t).unwrap(), 1e-6);
        assert!(check_left_inverse(&DMatrix::identity(2, 2), &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn sigma_examples() {
        let s = MeasureSpace::new(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(sigma_estimate(&diag(&[2.0, 2.0]), &s, 100, 1).unwrap().sigma, 2.0, epsilon = 1e-12);
        let e = sigma_estimate(&diag(&[1.0, 3.0]), &s, 1000, 1).unwrap();
        assert_relative_eq!(e.sigma, 1.0, epsilon = 1e-12);
        assert!(e.certified && e.rayleigh_min >= 1.0 - 1e-12);
        let skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(sigma_estimate(&skew, &s, 100, 1).unwrap().sigma.abs() < 1e-12);
    }

    #[test]
    fn sigma_respects_weights() {
        // nonuniform weights and a nonsymmetric T: the eigenvalue must still
        // lower-bound every Rayleigh quotient and be attained
        let s = MeasureSpace::new(vec![0.2, 1.5, 0.7]).unwrap();
        let t = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.5, 1.0, 0.2, 0.0, -0.4, 3.0]);
        let e = sigma_estimate(&t, &s, 5000, 9).unwrap();
        assert!(e.certified);
        assert!(e.rayleigh_min - e.sigma < 1e-2);
    }

    #[test]
    fn minty_examples() {
        let p = cubic_problem();
        let r = verify_minty(&p, 500, 3);
        assert!(r.min_inner >= 0.0 && r.sigma_ge_delta);

        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 1.5] }, 1.5);
        let p = HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[1.0 / 1.5]),
            diag(&[1.5]),
            f,
            GridFunction::new(vec![1.0]).unwrap(),
            1.5,
        )
        .unwrap();
        assert!(verify_minty(&p, 200, 3).min_inner.abs() <= 1e-12 * 100.0);

        // sigma < delta: T = sigma I, f = delta u, x1 - x2 = 1 gives sigma - delta
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 2.0] }, 2.0);
        let p = HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[1.0]),
            diag(&[1.0]),
            f,
            GridFunction::new(vec![1.0]).unwrap(),
            1.0,
        )
        .unwrap();
        assert_relative_eq!(minty_inner(&p, &[1.0], &[0.0]), -1.0, epsilon = 1e-15);
        let r = verify_minty(&p, 50, 3);
        assert!(r.min_inner < 0.0 && !r.sigma_ge_delta);
    }

    #[test]
    fn rothe_radius_trivial_problem() {
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![] }, 0.0).with_coercivity(1.0, 1.0, vec![0.0]);
        let p = HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[0.5]),
            diag(&[2.0]),
            f,
            GridFunction::new(vec![0.0]).unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(rothe_radius(&p, &PhiMinorant::baseline(), 0.0).unwrap(), Some(1.0));
        for r in [0.5, 1.0, 7.0] {
            let rep = verify_rothe(&p, r, 50, 1).unwrap();
            // <Phi x, x> = 2 ||x||_2^2 = 2 r^2 on a single unit cell with M = u^2
            assert_relative_eq!(rep.min_inner, 2.0 * r * r, max_relative = 1e-12);
        }
    }

    #[test]
    fn rothe_radius_exp_sigma_zero() {
        let space = MeasureSpace::uniform(4, 1.0).unwrap();
        let m = NFunction::exp_minus_linear();
        let f = NonlinearitySpec::new(PointwiseRule::SignedExp { coef: 1.0 }, 0.0).with_coercivity(1.0, 1.0, vec![0.0; 4]);
        let g = GridFunction::new(vec![0.05, -0.02, 0.01, 0.03]).unwrap();
        let p = HammersteinProblem::new(space, m.clone(), DMatrix::zeros(4, 4) + DMatrix::identity(4, 4), DMatrix::identity(4, 4), f, g, 0.0)
            .unwrap();
        let phi = PhiMinorant::power(2.0, PhiDomain::Large);
        let r = rothe_radius(&p, &phi, 0.0).unwrap().unwrap();
        // independent check: with a = b = 1 and c = 0 the bound is R - 2||Tg||, so R = max(1, 2||Tg||)
        let bound = rothe_bound(&p, 0.0).unwrap();
        assert_relative_eq!(r, (2.0 * bound.tg_dual_norm).max(1.0), max_relative = 1e-12);
        assert!(verify_rothe(&p, r, 500, 4).unwrap().pass);
    }

    #[test]
    fn rothe_radius_negative_sigma_baseline_none() {
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 0.0, 0.0, -1.0] }, 0.0)
            .with_coercivity(1.0, 1.0, vec![0.25]);
        let p = HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[-1.0]),
            diag(&[-1.0]),
            f,
            GridFunction::new(vec![0.5]).unwrap(),
            -1.0,
        )
        .unwrap();
        assert_eq!(rothe_radius(&p, &PhiMinorant::baseline(), 1.0).unwrap(), None);
        assert!(rothe_radius(&p, &PhiMinorant::exp_minus_linear_ratio(), 1.0).is_err());
    }

    #[test]
    fn rothe_rejects_large_g() {
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![] }, 0.0);
        let p = HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[1.0]),
            diag(&[1.0]),
            f,
            GridFunction::new(vec![100.0]).unwrap(),
            1.0,
        )
        .unwrap();
        let rep = verify_rothe(&p, 1.0, 20, 1).unwrap();
        // <x - g, x> at x = g/|g| is 1 - 100
        assert!(!rep.pass && rep.min_inner <= -98.0);
    }

    #[test]
    fn solve_cubic() {
        let p = cubic_problem();
        let options = SolveOptions {
            tol: 1e-12,
            max_iter: 200,
            rothe_phi: Some(PhiMinorant::power(2.0, PhiDomain::Large)),
            ..Default::default()
        };
        let res = solve(&p, &options).unwrap();
        assert!(res.converged, "{res:?}");
        assert_relative_eq!(res.x[0], 1.0, epsilon = 1e-10);
        let c = res.certificates.as_ref().unwrap();
        assert!(c.uniqueness && c.multistart_spread.unwrap() <= 1e-6);
        // E(R) = R - 2 * 1.5 - 0.25 / R
        assert_relative_eq!(c.rothe_radius.unwrap(), (3.0 + 10f64.sqrt()) / 2.0, max_relative = 1e-9);
        assert!(c.rothe.unwrap().pass);
        assert!(c.s_phi_norm <= c.s_phi_bound * (1.0 + 1e-12) + 1e-15);
        assert_eq!(res.exit_code(), 0);
    }

    #[test]
    fn solve_zero_nonlinearity() {
        let space = MeasureSpace::new(vec![0.5, 1.0, 2.0]).unwrap();
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.0, 1.0, 0.3, 0.1, 0.0, 1.0]);
        let t = s.clone().try_inverse().unwrap();
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![] }, 0.0);
        let g = GridFunction::new(vec![1.0, -2.0, 0.5]).unwrap();
        let sigma = sigma_estimate(&t, &space, 0, 0).unwrap().sigma;
        let p = HammersteinProblem::new(space, NFunction::exp_minus_linear(), s, t, f, g.clone(), sigma).unwrap();
        let res = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(res.x, g.values());
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn solve_linear_matches_direct() {
        let space = MeasureSpace::new(vec![0.25, 0.25, 0.5]).unwrap();
        let s = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.0, 0.4, 0.1, 0.05, 0.0, 0.6]);
        let t = s.clone().try_inverse().unwrap();
        let delta = 0.3;
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, delta] }, delta);
        let g = GridFunction::new(vec![1.0, 2.0, -1.0]).unwrap();
        let sigma = sigma_estimate(&t, &space, 0, 0).unwrap().sigma;
        assert!(sigma > delta);
        let p = HammersteinProblem::new(space, NFunction::power(2.0).unwrap(), s.clone(), t, f, g.clone(), sigma).unwrap();
        let res = solve(&p, &SolveOptions::default()).unwrap();
        assert!(res.converged);
        // dense oracle: (I - delta S) x = g
        let direct = (DMatrix::identity(3, 3) - &s * delta)
            .lu()
            .solve(&DVector::from_column_slice(g.values()))
            .unwrap();
        for (a, b) in res.x.iter().zip(direct.iter()) {
            assert!((a - b).abs() <= 1e-8);
        }
        assert!(res.certificates.unwrap().multistart_spread.unwrap() <= 1e-6);
    }

    #[test]
    fn solve_reports_non_convergence() {
        // x = x^2 + x + 1 has no real solution
        let f = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 1.0, 1.0] }, 1e3);
        let p = HammersteinProblem::new(
            unit_space(),
            NFunction::power(2.0).unwrap(),
            diag(&[1.0]),
            diag(&[1.0]),
            f,
            GridFunction::new(vec![1.0]).unwrap(),
            1.0,
        )
        .unwrap();
        let res = solve(&p, &SolveOptions { max_iter: 100, ..Default::default() }).unwrap();
        assert!(!res.converged);
        assert_eq!(res.exit_code(), 3);
        assert!(!res.history.is_empty());
    }

    #[test]
    fn uniqueness_examples() {
        assert!(uniqueness_certificate(2.0, 0.0));
        assert!(!uniqueness_certificate(1.0, 1.0));
    }

    #[test]
    fn nonlinearity_grid_checks() {
        let m = NFunction::power(2.0).unwrap();
        let cubic = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 0.0, 0.0, -0.5] }, 0.0)
            .with_coercivity(1.0, 1.0, vec![0.5]);
        let r = cubic.check_grid(&m, 1);
        assert!(r.monotone_ok && r.coercivity_ok == Some(true), "{r:?}");
        let wrong = NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 1.0] }, 0.5);
        assert!(!wrong.check_grid(&m, 1).monotone_ok);
        let custom = NonlinearitySpec::new(PointwiseRule::Custom(CustomRule(Arc::new(|_, u: f64| -u.powi(3)))), 0.0);
        assert_relative_eq!(custom.deriv(0, 2.0), -12.0, max_relative = 1e-6);
    }

    #[test]
    fn problem_file_roundtrip() {
        let p = cubic_problem();
        let text = serde_json::to_string(&ProblemFile::from_problem(&p)).unwrap();
        let back: ProblemFile = serde_json::from_str(&text).unwrap();
        let q = back.into_problem().unwrap();
        assert_eq!(q.s, p.s);
        assert_eq!(q.f, p.f);
        let flat = r#"{"space":[1.0],"nfunction":{"kind":"power","params":{"p":2}},"S":[0.5],"T":[2.0],
            "f":{"kind":"polynomial","params":{"coeffs":[0,0,0,-1]},"delta":0,"coercivity":{"a":1,"b":1,"c":[0.25]}},
            "g":[1.5],"sigma":2}"#;
        let q: ProblemFile = serde_json::from_str(flat).unwrap();
        assert_eq!(q.into_problem().unwrap().t, p.t);
        let bad = flat.replace(r#""T":[2.0]"#, r#""T":[3.0]"#);
        let q: ProblemFile = serde_json::from_str(&bad).unwrap();
        assert!(matches!(q.into_problem(), Err(Error::Precondition(_))));
    }
}
