//! N-functions: catalog, evaluation, inverse, conjugation and structural
//! probes.

mod probes;
mod spec;

pub use probes::{
    delta2_probe, delta3_probe, growth_condition4_probe, verify_nfunction, Condition4Report,
    Delta2Report, Delta3Report, GrowthTrend, NFunctionReport,
};
pub use spec::NFunctionSpec;

use crate::error::{Error, Result};
use crate::scalar::{central_difference, solve_increasing};

/// A validated N-function.
///
/// Cheap to clone; evaluation is pure and allocation free except for
/// numeric conjugates, which nest a root solve per evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NFunction {
    spec: NFunctionSpec,
}

impl NFunction {
    pub fn new(spec: NFunctionSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    /// Builds an N-function without validating parameters. Intended for
    /// probing degenerate members such as `u^1`, which fail the N-function
    /// limit conditions.
    pub fn new_unchecked(spec: NFunctionSpec) -> Self {
        Self { spec }
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(NFunctionSpec::Power { p })
    }

    pub fn exp_minus_linear() -> Self {
        Self { spec: NFunctionSpec::ExpMinusLinear }
    }

    pub fn exp_square() -> Self {
        Self { spec: NFunctionSpec::ExpSquare }
    }

    pub fn entropy_like() -> Self {
        Self { spec: NFunctionSpec::EntropyLike }
    }

    pub fn power_log(p: f64) -> Result<Self> {
        Self::new(NFunctionSpec::PowerLog { p })
    }

    pub fn sum(members: Vec<NFunctionSpec>) -> Result<Self> {
        Self::new(NFunctionSpec::Sum(members))
    }

    pub fn spec(&self) -> &NFunctionSpec {
        &self.spec
    }

    /// `M(u)` for `u >= 0`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(Error::Domain(format!("M(u) needs finite u >= 0, got {u}")));
        }
        Ok(self.value(u))
    }

    /// `M(u)` without domain checks; callers pass `|x|`. Overflow yields `+inf`.
    pub fn value(&self, u: f64) -> f64 {
        value(&self.spec, u)
    }

    /// `M'(u)`, analytic for every catalog member.
    pub fn deriv(&self, u: f64) -> f64 {
        deriv(&self.spec, u)
    }

    /// Central-difference derivative, used to cross-check `deriv`.
    pub fn deriv_numeric(&self, u: f64) -> f64 {
        central_difference(|t| self.value(t.abs()), u)
    }

    /// `M^{-1}(y)`: the `u >= 0` with `M(u) = y`, solved by bracketed
    /// bisection to floating-point resolution.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Domain(format!("M^-1(y) needs finite y, got {y}")));
        }
        if y < 0.0 {
            return Err(Error::Domain(format!("M^-1(y) needs y >= 0, got {y}")));
        }
        Ok(solve_increasing(|u| self.value(u), y))
    }

    /// The complementary N-function `M*(v) = sup_u {uv - M(u)}`.
    ///
    /// Known pairs are returned in closed form (power and scaled power map to
    /// scaled power, `e^u - u - 1` and `(1+u)ln(1+u) - u` map to each other).
    /// Every other member gets a numeric transform that solves `M'(u) = v`.
    pub fn conjugate(&self) -> NFunction {
        let spec = match &self.spec {
            NFunctionSpec::Power { p } => scaled_power_conjugate(1.0, *p),
            NFunctionSpec::ScaledPower { coef, p } => scaled_power_conjugate(*coef, *p),
            NFunctionSpec::ExpMinusLinear => NFunctionSpec::EntropyLike,
            NFunctionSpec::EntropyLike => NFunctionSpec::ExpMinusLinear,
            other => NFunctionSpec::Conjugate(Box::new(other.clone())),
        };
        NFunction { spec }
    }

    /// `(M^*)^{-1}(w)`.
    pub fn conjugate_inverse(&self, w: f64) -> Result<f64> {
        self.conjugate().inverse(w)
    }
}

fn scaled_power_conjugate(coef: f64, p: f64) -> NFunctionSpec {
    let q = p / (p - 1.0);
    NFunctionSpec::ScaledPower { coef: (p - 1.0) * coef * (coef * p).powf(-q), p: q }
}

/// `e^u - u - 1`, by series below 1 to avoid cancellation.
pub(crate) fn exp_minus_linear(u: f64) -> f64 {
    if u < 1.0 {
        let mut term = u * u / 2.0;
        let mut sum = term;
        let mut k = 2.0;
        while term > 1e-18 * sum {
            k += 1.0;
            term *= u / k;
            sum += term;
        }
        sum
    } else {
        u.exp_m1() - u
    }
}

/// `(1+u)ln(1+u) - u`, by series below 1/2.
pub(crate) fn entropy_like(u: f64) -> f64 {
    if u < 0.5 {
        // sum_{k>=2} (-1)^k u^k / (k(k-1))
        let mut pow = u * u;
        let mut sum = 0.0;
        let mut k = 2.0_f64;
        loop {
            let term = pow / (k * (k - 1.0));
            if k as i64 % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            if term <= 1e-18 * sum.abs() || pow == 0.0 {
                break;
            }
            pow *= u;
            k += 1.0;
        }
        sum
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

fn value(spec: &NFunctionSpec, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    match spec {
        NFunctionSpec::Power { p } => u.powf(*p),
        NFunctionSpec::ScaledPower { coef, p } => coef * u.powf(*p),
        NFunctionSpec::ExpMinusLinear => exp_minus_linear(u),
        NFunctionSpec::ExpSquare => (u * u).exp_m1(),
        NFunctionSpec::EntropyLike => entropy_like(u),
        NFunctionSpec::PowerLog { p } => u.powf(*p) * u.ln_1p(),
        NFunctionSpec::Sum(members) => members.iter().map(|m| value(m, u)).sum(),
        NFunctionSpec::Conjugate(inner) => {
            let arg = conjugate_argmax(inner, u);
            if !arg.is_finite() || arg >= f64::MAX {
                return f64::INFINITY;
            }
            (arg * u - value(inner, arg)).max(0.0)
        }
    }
}

/// The maximizer of `uv - M(u)`, i.e. the root of `M'(u) = v`.
fn conjugate_argmax(inner: &NFunctionSpec, v: f64) -> f64 {
    solve_increasing(|u| deriv(inner, u), v)
}

fn deriv(spec: &NFunctionSpec, u: f64) -> f64 {
    match spec {
        NFunctionSpec::Power { p } => p * u.powf(p - 1.0),
        NFunctionSpec::ScaledPower { coef, p } => coef * p * u.powf(p - 1.0),
        NFunctionSpec::ExpMinusLinear => u.exp_m1(),
        NFunctionSpec::ExpSquare => 2.0 * u * (u * u).exp(),
        NFunctionSpec::EntropyLike => u.ln_1p(),
        NFunctionSpec::PowerLog { p } => {
            if u == 0.0 {
                0.0
            } else {
                p * u.powf(p - 1.0) * u.ln_1p() + u.powf(*p) / (1.0 + u)
            }
        }
        NFunctionSpec::Sum(members) => members.iter().map(|m| deriv(m, u)).sum(),
        // (M*)'(v) is the maximizer of uv - M(u)
        NFunctionSpec::Conjugate(inner) => {
            if u == 0.0 {
                0.0
            } else {
                conjugate_argmax(inner, u)
            }
        }
    }
}
