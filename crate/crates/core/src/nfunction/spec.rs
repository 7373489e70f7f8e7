use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Catalog tag plus parameters of an N-function.
///
/// Serialized as `{"kind": "...", "params": {...}}`:
///
/// | kind               | params                      | M(u)                      |
/// |--------------------|-----------------------------|---------------------------|
/// | `power`            | `p`                         | `u^p`                     |
/// | `scaled_power`     | `coef`, `p`                 | `coef * u^p`              |
/// | `exp_minus_linear` | none                        | `e^u - u - 1`             |
/// | `exp_square`       | none                        | `e^{u^2} - 1`             |
/// | `entropy_like`     | none                        | `(1+u)ln(1+u) - u`        |
/// | `power_log`        | `p`                         | `u^p ln(1+u)`             |
/// | `sum`              | `members`: list of specs    | sum of members            |
/// | `conjugate`        | `of`: spec                  | numeric Legendre transform|
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub enum NFunctionSpec {
    Power { p: f64 },
    ScaledPower { coef: f64, p: f64 },
    ExpMinusLinear,
    ExpSquare,
    EntropyLike,
    PowerLog { p: f64 },
    Sum(Vec<NFunctionSpec>),
    Conjugate(Box<NFunctionSpec>),
}

impl NFunctionSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::ScaledPower { .. } => "scaled_power",
            Self::ExpMinusLinear => "exp_minus_linear",
            Self::ExpSquare => "exp_square",
            Self::EntropyLike => "entropy_like",
            Self::PowerLog { .. } => "power_log",
            Self::Sum(_) => "sum",
            Self::Conjugate(_) => "conjugate",
        }
    }

    /// Short human-readable label, e.g. `power(p=2)`.
    pub fn label(&self) -> String {
        match self {
            Self::Power { p } => format!("power(p={p})"),
            Self::ScaledPower { coef, p } => format!("scaled_power(coef={coef},p={p})"),
            Self::PowerLog { p } => format!("power_log(p={p})"),
            Self::Sum(m) => {
                let parts: Vec<_> = m.iter().map(|s| s.label()).collect();
                format!("sum({})", parts.join("+"))
            }
            Self::Conjugate(inner) => format!("conjugate({})", inner.label()),
            other => other.kind().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let exponent = |p: f64| {
            if p.is_finite() && p > 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{} needs exponent p > 1, got {p}", self.kind())))
            }
        };
        match self {
            Self::Power { p } | Self::PowerLog { p } => exponent(*p),
            Self::ScaledPower { coef, p } => {
                exponent(*p)?;
                if coef.is_finite() && *coef > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("scaled_power needs coef > 0, got {coef}")))
                }
            }
            Self::ExpMinusLinear | Self::ExpSquare | Self::EntropyLike => Ok(()),
            Self::Sum(members) => {
                if members.len() < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "sum needs at least 2 members, got {}",
                        members.len()
                    )));
                }
                members.iter().try_for_each(|m| m.validate())
            }
            Self::Conjugate(inner) => inner.validate(),
        }
    }

    /// The five named catalog members used in sweeps.
    pub fn catalog() -> Vec<NFunctionSpec> {
        vec![
            Self::Power { p: 2.0 },
            Self::ExpMinusLinear,
            Self::ExpSquare,
            Self::EntropyLike,
            Self::PowerLog { p: 2.0 },
        ]
    }
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    kind: String,
    #[serde(default)]
    params: Map<String, Value>,
}

fn number(params: &Map<String, Value>, key: &str, kind: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::InvalidSpec(format!("{kind} needs numeric param '{key}'")))
}

impl TryFrom<RawSpec> for NFunctionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let k = raw.kind.as_str();
        let spec = match k {
            "power" => Self::Power { p: number(&raw.params, "p", k)? },
            "scaled_power" => Self::ScaledPower {
                coef: number(&raw.params, "coef", k)?,
                p: number(&raw.params, "p", k)?,
            },
            "exp_minus_linear" => Self::ExpMinusLinear,
            "exp_square" => Self::ExpSquare,
            "entropy_like" => Self::EntropyLike,
            "power_log" => Self::PowerLog { p: number(&raw.params, "p", k)? },
            "sum" => {
                let members = raw
                    .params
                    .get("members")
                    .cloned()
                    .ok_or_else(|| Error::InvalidSpec("sum needs param 'members'".into()))?;
                let members: Vec<NFunctionSpec> = serde_json::from_value(members)
                    .map_err(|e| Error::InvalidSpec(format!("sum members: {e}")))?;
                Self::Sum(members)
            }
            "conjugate" => {
                let of = raw
                    .params
                    .get("of")
                    .cloned()
                    .ok_or_else(|| Error::InvalidSpec("conjugate needs param 'of'".into()))?;
                let of: NFunctionSpec = serde_json::from_value(of)
                    .map_err(|e| Error::InvalidSpec(format!("conjugate of: {e}")))?;
                Self::Conjugate(Box::new(of))
            }
            other => return Err(Error::InvalidSpec(format!("unknown kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<NFunctionSpec> for RawSpec {
    fn from(spec: NFunctionSpec) -> Self {
        let kind = spec.kind().to_string();
        let params = match spec {
            NFunctionSpec::Power { p } | NFunctionSpec::PowerLog { p } => json!({ "p": p }),
            NFunctionSpec::ScaledPower { coef, p } => json!({ "coef": coef, "p": p }),
            NFunctionSpec::Sum(members) => json!({ "members": members }),
            NFunctionSpec::Conjugate(of) => json!({ "of": of }),
            _ => json!({}),
        };
        let Value::Object(params) = params else { unreachable!() };
        RawSpec { kind, params }
    }
}
