//! JSON model files.
//!
//! ```json
//! { "dim": 2, "alpha": "1/2",
//!   "momenta": [[[1, 1], [0, 1]], [[-1, 1], [0, 1]]],
//!   "collisions": "auto" }
//! ```
//!
//! Momentum components are `[numerator, denominator]` pairs (a bare integer
//! is also accepted; big values may be given as strings). Collision indices
//! are 1-based; `"collisions"` is either `"auto"` or a list of
//! `{"i", "j", "k", "l", "gamma"}` objects.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::model::{enumerate_collisions, DiscreteModel, MomentumLattice, RawCollision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    #[serde(default = "unit_gamma")]
    pub gamma: f64,
}

fn unit_gamma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CollisionSpec {
    Keyword(String),
    List(Vec<CollisionEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dim: usize,
    pub alpha: Value,
    pub momenta: Vec<Vec<Value>>,
    pub collisions: CollisionSpec,
}

/// Parses `"p/q"`, a decimal string or a JSON number.
pub fn parse_real(value: &Value) -> Result<f64> {
    let parsed = match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let s = s.trim();
            match s.split_once('/') {
                Some((p, q)) => match (p.trim().parse::<f64>(), q.trim().parse::<f64>()) {
                    (Ok(p), Ok(q)) if q != 0.0 => Some(p / q),
                    _ => None,
                },
                None => s.parse::<f64>().ok(),
            }
        }
        _ => None,
    };
    parsed.filter(|x| x.is_finite()).ok_or_else(|| {
        Error::Parse(format!(
            "expected a rational or decimal number, got {value}"
        ))
    })
}

fn parse_int(value: &Value) -> Result<BigInt> {
    match value {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Parse(format!("momentum entries must be integers, got {n}"))),
        Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("invalid integer {s:?}"))),
        other => Err(Error::Parse(format!("expected an integer, got {other}"))),
    }
}

fn parse_component(value: &Value) -> Result<Rational> {
    let (num, den) = match value {
        Value::Array(pair) if pair.len() == 2 => (parse_int(&pair[0])?, parse_int(&pair[1])?),
        Value::Array(_) => {
            return Err(Error::Parse(
                "momentum components are [numerator, denominator] pairs".into(),
            ))
        }
        other => (parse_int(other)?, BigInt::from(1)),
    };
    if den.is_zero() {
        return Err(Error::Parse(
            "zero denominator in momentum component".into(),
        ));
    }
    Ok(Rational::new(num, den))
}

fn int_value(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => Value::from(v),
        None => Value::String(x.to_string()),
    }
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn alpha(&self) -> Result<f64> {
        parse_real(&self.alpha)
    }

    pub fn lattice(&self) -> Result<MomentumLattice> {
        let momenta = self
            .momenta
            .iter()
            .map(|point| {
                point
                    .iter()
                    .map(parse_component)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        MomentumLattice::new(self.dim, momenta)
    }

    /// Builds the model; `alpha_override` replaces the file's `alpha`.
    pub fn build(&self, alpha_override: Option<f64>) -> Result<DiscreteModel> {
        let lattice = self.lattice()?;
        let alpha = match alpha_override {
            Some(a) => a,
            None => self.alpha()?,
        };
        let raw = match &self.collisions {
            CollisionSpec::Keyword(k) if k == "auto" => enumerate_collisions(&lattice)
                .iter()
                .map(|q| RawCollision::new(q.i, q.j, q.k, q.l, q.gamma))
                .collect(),
            CollisionSpec::Keyword(k) => {
                return Err(Error::Parse(format!(
                    "collisions must be \"auto\" or a list, got {k:?}"
                )))
            }
            CollisionSpec::List(list) => list
                .iter()
                .map(|c| {
                    if [c.i, c.j, c.k, c.l].contains(&0) {
                        Err(Error::Parse("collision indices are 1-based".into()))
                    } else {
                        Ok(RawCollision::new(
                            c.i - 1,
                            c.j - 1,
                            c.k - 1,
                            c.l - 1,
                            c.gamma,
                        ))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        };
        DiscreteModel::new(lattice, alpha, &raw)
    }

    /// Describes `model` exactly, with its canonical collision list.
    pub fn from_model(model: &DiscreteModel) -> Self {
        let momenta = model
            .lattice()
            .momenta()
            .iter()
            .map(|p| {
                p.iter()
                    .map(|x| Value::Array(vec![int_value(x.numer()), int_value(x.denom())]))
                    .collect()
            })
            .collect();
        let collisions = model
            .collisions()
            .iter()
            .map(|q| CollisionEntry {
                i: q.i + 1,
                j: q.j + 1,
                k: q.k + 1,
                l: q.l + 1,
                gamma: q.gamma,
            })
            .collect();
        Self {
            dim: model.dim(),
            alpha: Value::String(model.alpha().to_string()),
            momenta,
            collisions: CollisionSpec::List(collisions),
        }
    }
}

pub fn read_model(text: &str, alpha_override: Option<f64>) -> Result<DiscreteModel> {
    ModelFile::from_json(text)?.build(alpha_override)
}

pub fn write_model(model: &DiscreteModel) -> String {
    ModelFile::from_model(model).to_json()
}
