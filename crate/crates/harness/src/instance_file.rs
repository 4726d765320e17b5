//! The JSON instance format and the family-parameter block.
//!
//! ```json
//! {
//!   "m": 3,
//!   "hypotheses": [[-1, -1, -1], [-1, 1, -1]],
//!   "distributions": [{"marginal": [0.9, 0.1, 0.0], "eta_plus": [0.0, 1.0, 1.0]}],
//!   "nu": 0.1,
//!   "metadata": {"family": "prop1", "params": {"k": 2, "eps": 0.1}}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use amdl_core::domain::{Hypothesis, HypothesisClass, LabeledDistribution, MdlInstance};
use amdl_core::instances::{Example1Case, FamilySpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub marginal: Vec<f64>,
    pub eta_plus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub m: usize,
    pub hypotheses: Vec<Vec<i64>>,
    pub distributions: Vec<DistributionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl InstanceFile {
    pub fn from_instance(inst: &MdlInstance, metadata: Option<Metadata>) -> Self {
        InstanceFile {
            m: inst.num_points(),
            hypotheses: inst
                .class()
                .hypotheses()
                .iter()
                .map(|h| h.labels().iter().map(|&l| l as i64).collect())
                .collect(),
            distributions: inst
                .distributions()
                .iter()
                .map(|d| DistributionFile { marginal: d.marginal().to_vec(), eta_plus: d.eta_plus().to_vec() })
                .collect(),
            nu: inst.declared_nu(),
            metadata,
        }
    }

    /// Validates the document and builds the instance.
    pub fn to_instance(&self) -> Result<MdlInstance> {
        let mut hyps = Vec::with_capacity(self.hypotheses.len());
        for row in &self.hypotheses {
            if row.len() != self.m {
                return Err(HarnessError::Schema(format!("hypothesis of length {} but m = {}", row.len(), self.m)));
            }
            hyps.push(Hypothesis::from_ints(row)?);
        }
        let class = HypothesisClass::new(hyps)?;
        let mut dists = Vec::with_capacity(self.distributions.len());
        for d in &self.distributions {
            if d.marginal.len() != self.m || d.eta_plus.len() != self.m {
                return Err(HarnessError::Schema(format!("distribution arrays must have length m = {}", self.m)));
            }
            dists.push(LabeledDistribution::new(d.marginal.clone(), d.eta_plus.clone())?);
        }
        Ok(MdlInstance::new(class, dists, self.nu)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<(MdlInstance, Option<Metadata>)> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    let inst = file.to_instance()?;
    Ok((inst, file.metadata))
}

pub fn read_instance(path: &Path) -> Result<(MdlInstance, Option<Metadata>)> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_instance(&text)
}

pub fn write_instance(path: &Path, inst: &MdlInstance, metadata: Option<Metadata>) -> Result<()> {
    let text = InstanceFile::from_instance(inst, metadata).to_json();
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// Metadata block describing a family member.
pub fn family_metadata(spec: &FamilySpec) -> Metadata {
    let mut p = BTreeMap::new();
    match *spec {
        FamilySpec::Prop1 { k, eps } => {
            p.insert("k".into(), Value::from(k));
            p.insert("eps".into(), num(eps));
        }
        FamilySpec::StarLb { k, theta, i, j } => {
            p.insert("k".into(), Value::from(k));
            p.insert("theta".into(), Value::from(theta));
            p.insert("i".into(), Value::from(i));
            p.insert("j".into(), Value::from(j));
        }
        FamilySpec::AgnosticLb { k, nu, eps, flipped } => {
            p.insert("k".into(), Value::from(k));
            p.insert("nu".into(), num(nu));
            p.insert("eps".into(), num(eps));
            if let Some(f) = flipped {
                p.insert("flipped".into(), Value::from(f));
            }
        }
        FamilySpec::Example1 { nu_prime, eps, case } => {
            p.insert("nu_prime".into(), num(nu_prime));
            p.insert("eps".into(), num(eps));
            let tag = match case {
                Example1Case::A => "a",
                Example1Case::B => "b",
            };
            p.insert("case".into(), Value::from(tag));
        }
        FamilySpec::Random { m, hypotheses, k, noisy, seed } => {
            p.insert("m".into(), Value::from(m));
            p.insert("hypotheses".into(), Value::from(hypotheses));
            p.insert("k".into(), Value::from(k));
            p.insert("noisy".into(), Value::from(noisy));
            p.insert("seed".into(), Value::from(seed));
        }
    }
    Metadata { family: spec.tag().to_string(), params: p }
}

struct Params<'a> {
    family: &'a str,
    map: &'a BTreeMap<String, Value>,
}

impl Params<'_> {
    fn missing(&self, key: &str) -> HarnessError {
        HarnessError::Config(format!("family {} needs parameter `{key}`", self.family))
    }

    fn float(&self, key: &str) -> Result<f64> {
        let v = self.map.get(key).ok_or_else(|| self.missing(key))?;
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| self.missing(key)),
            Value::String(s) => {
                s.trim().parse().map_err(|_| HarnessError::Config(format!("`{key}` = `{s}` is not a number")))
            }
            _ => Err(HarnessError::Config(format!("`{key}` must be a number"))),
        }
    }

    fn int(&self, key: &str) -> Result<u64> {
        let f = self.float(key)?;
        if f < 0.0 || f.fract() != 0.0 || f > 1e15 {
            return Err(HarnessError::Config(format!("`{key}` must be a non-negative integer, got {f}")));
        }
        Ok(f as u64)
    }

    fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.int(key)? as usize)
    }

    fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) if s == "none" => Ok(None),
            Some(_) => self.usize(key).map(Some),
        }
    }

    fn text(&self, key: &str) -> Result<String> {
        match self.map.get(key).ok_or_else(|| self.missing(key))? {
            Value::String(s) => Ok(s.clone()),
            other => Ok(other.to_string()),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.map.get(key) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::String(s)) => match s.as_str() {
                "true" | "1" => Ok(true),
                "false" | "0" => Ok(false),
                _ => Err(HarnessError::Config(format!("`{key}` must be a boolean"))),
            },
            Some(Value::Number(n)) => Ok(n.as_f64() != Some(0.0)),
            _ => Err(HarnessError::Config(format!("`{key}` must be a boolean"))),
        }
    }
}

/// Rebuilds a family description from its tag and parameters.
pub fn family_spec(family: &str, params: &BTreeMap<String, Value>) -> Result<FamilySpec> {
    let p = Params { family, map: params };
    Ok(match family {
        "prop1" => FamilySpec::Prop1 { k: p.usize("k")?, eps: p.float("eps")? },
        "star-lb" => {
            FamilySpec::StarLb { k: p.usize("k")?, theta: p.usize("theta")?, i: p.usize("i")?, j: p.usize("j")? }
        }
        "agnostic-lb" => FamilySpec::AgnosticLb {
            k: p.usize("k")?,
            nu: p.float("nu")?,
            eps: p.float("eps")?,
            flipped: p.opt_usize("flipped")?,
        },
        "example1" => FamilySpec::Example1 {
            nu_prime: p.float("nu_prime")?,
            eps: p.float("eps")?,
            case: match p.text("case")?.as_str() {
                "a" => Example1Case::A,
                "b" => Example1Case::B,
                other => return Err(HarnessError::Config(format!("example1 case must be a or b, got {other}"))),
            },
        },
        "random" => FamilySpec::Random {
            m: p.usize("m")?,
            hypotheses: p.usize("hypotheses")?,
            k: p.usize("k")?,
            noisy: p.flag("noisy")?,
            seed: p.int("seed")?,
        },
        other => return Err(HarnessError::Config(format!("unknown family `{other}`"))),
    })
}

/// `key=value` pairs from the command line; values that parse as numbers
/// become numbers.
pub fn parse_params(pairs: &[String]) -> Result<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| HarnessError::Config(format!("expected key=value, got `{pair}`")))?;
        let value = match v.parse::<f64>() {
            Ok(f) if f.is_finite() => num(f),
            _ => Value::String(v.to_string()),
        };
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

/// Short stable id such as `star-lb_i=1_j=2_k=2_theta=4`.
pub fn instance_id(meta: &Metadata) -> String {
    let mut id = meta.family.clone();
    for (k, v) in &meta.params {
        let v = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        id.push('_');
        id.push_str(k);
        id.push('=');
        id.push_str(&v);
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        for spec in [
            FamilySpec::Prop1 { k: 3, eps: 0.05 },
            FamilySpec::AgnosticLb { k: 4, nu: 0.4, eps: 0.05, flipped: Some(3) },
            FamilySpec::Example1 { nu_prime: 0.2, eps: 0.02, case: Example1Case::B },
            FamilySpec::Random { m: 6, hypotheses: 9, k: 3, noisy: true, seed: 77 },
        ] {
            let inst = spec.generate().unwrap();
            let meta = family_metadata(&spec);
            let text = InstanceFile::from_instance(&inst, Some(meta.clone())).to_json();
            let (back, back_meta) = parse_instance(&text).unwrap();
            assert_eq!(back, inst);
            let back_meta = back_meta.unwrap();
            assert_eq!(back_meta, meta);
            assert_eq!(family_spec(&back_meta.family, &back_meta.params).unwrap(), spec);
        }
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(matches!(parse_instance("{"), Err(HarnessError::Parse(_))));
        let bad_len = r#"{"m": 2, "hypotheses": [[1]], "distributions": [{"marginal": [1, 0], "eta_plus": [0, 0]}]}"#;
        assert!(matches!(parse_instance(bad_len), Err(HarnessError::Schema(_))));
        let bad_label = r#"{"m": 1, "hypotheses": [[2]], "distributions": [{"marginal": [1], "eta_plus": [0]}]}"#;
        assert!(matches!(parse_instance(bad_label), Err(HarnessError::Core(_))));
        let unknown = r#"{"m": 1, "hypotheses": [[1]], "distributions": [], "extra": 1}"#;
        assert!(matches!(parse_instance(unknown), Err(HarnessError::Parse(_))));
        let bad_nu =
            r#"{"m": 1, "hypotheses": [[1]], "distributions": [{"marginal": [1], "eta_plus": [0]}], "nu": 0.5}"#;
        assert!(parse_instance(bad_nu).is_err());
    }

    #[test]
    fn cli_params() {
        let p = parse_params(&["k=4".into(), "case=a".into(), "eps=0.05".into()]).unwrap();
        assert_eq!(p["k"], num(4.0));
        assert_eq!(p["case"], Value::from("a"));
        assert!(parse_params(&["novalue".into()]).is_err());
        let spec = family_spec("prop1", &parse_params(&["k=4".into(), "eps=0.05".into()]).unwrap()).unwrap();
        assert_eq!(spec, FamilySpec::Prop1 { k: 4, eps: 0.05 });
        assert!(family_spec("prop1", &parse_params(&["k=4.5".into(), "eps=0.05".into()]).unwrap()).is_err());
    }
}
