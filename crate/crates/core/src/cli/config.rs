//! Sweep configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Backend, ChainLength};

/// Serde helpers writing `f64::INFINITY` as the string `"inf"`.
pub mod inf_token {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        Real(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Real::deserialize(d).map(|r| r.0)
    }
}

/// A real number that may be the token `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Real(x)),
            Raw::Text(t) => parse_real(&t).map(Real).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("`{s}` is not a number or `inf`")))
}

/// Values of one swept parameter: a number, a list, or `{start, stop, step}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<Real>),
    Single(Real),
}

impl Axis {
    /// `a:b:c` is a range, `a,b` a list, anything else a single value.
    pub fn parse(s: &str) -> Result<Axis> {
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("range `{s}` must be start:stop:step")));
            }
            let v = parts.iter().map(|p| parse_real(p)).collect::<Result<Vec<_>>>()?;
            return Ok(Axis::Range {
                start: v[0],
                stop: v[1],
                step: v[2],
            });
        }
        if s.contains(',') {
            return s
                .split(',')
                .map(|p| parse_real(p).map(Real))
                .collect::<Result<_>>()
                .map(Axis::List);
        }
        parse_real(s).map(|x| Axis::Single(Real(x)))
    }

    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let v = match self {
            Axis::Single(x) => vec![x.0],
            Axis::List(xs) => xs.iter().map(|x| x.0).collect(),
            Axis::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return Err(Error::Config(format!("field `{name}`: range bounds must be finite")));
                }
                if *step <= 0.0 {
                    return Err(Error::Config(format!("field `{name}`: step {step} must be positive")));
                }
                if stop < start {
                    return Err(Error::Config(format!("field `{name}`: empty range {start}..{stop}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + step * i as f64).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config(format!("field `{name}` is empty")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    List(Vec<ChainLength>),
    Single(ChainLength),
}

impl Sizes {
    pub fn parse(s: &str) -> Result<Sizes> {
        s.split(',').map(|p| p.parse()).collect::<Result<_>>().map(Sizes::List)
    }

    pub fn values(&self) -> Result<Vec<ChainLength>> {
        let v = match self {
            Sizes::Single(l) => vec![*l],
            Sizes::List(ls) => ls.clone(),
        };
        if v.is_empty() {
            return Err(Error::Config("field `L` is empty".into()));
        }
        for l in &v {
            if let ChainLength::Finite(n) = l {
                if *n < 2 {
                    return Err(Error::Config(format!(
                        "field `L`: {n} sites is too few (need at least 2)"
                    )));
                }
            }
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Sizes>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Axis>,
    #[serde(rename = "h", default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Largest chain handled by exact diagonalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    /// Measurement schedule for `bayes-sim`.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub measurements: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Prior support `[J_min, J_max]` for `bayes-sim`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<[f64; 2]>,
}

/// Flag values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub sizes: Option<String>,
    pub coupling: Option<String>,
    pub field: Option<String>,
    pub beta: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub backend: Option<String>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let value: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("field `{path}`: {inner}"))
            }
        })?;
        de.end().map_err(|e| Error::Config(e.to_string()))?;
        Ok(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = &o.sizes {
            self.sizes = Some(Sizes::parse(s)?);
        }
        if let Some(s) = &o.coupling {
            self.coupling = Some(Axis::parse(s)?);
        }
        if let Some(s) = &o.field {
            self.field = Some(Axis::parse(s)?);
        }
        if let Some(s) = &o.beta {
            self.beta = Some(Axis::parse(s)?);
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(b) = &o.backend {
            self.backend = Some(b.parse()?);
        }
        Ok(())
    }

    pub fn check_task(&self, task: &str) -> Result<()> {
        match &self.task {
            Some(t) if t != task => Err(Error::Config(format!("config is for task `{t}`, not `{task}`"))),
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring `threads` and `out`.
    pub fn hash(&self) -> String {
        let canonical = SweepConfig {
            threads: None,
            out: None,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn sizes(&self) -> Result<Vec<ChainLength>> {
        self.sizes.as_ref().ok_or_else(|| missing("L"))?.values()
    }

    pub fn couplings(&self) -> Result<Vec<f64>> {
        let v = self.coupling.as_ref().ok_or_else(|| missing("J"))?.values("J")?;
        if let Some(bad) = v.iter().find(|&&j| !(j.is_finite() && j > 0.0)) {
            return Err(Error::Config(format!("field `J`: {bad} must be finite and positive")));
        }
        Ok(v)
    }

    pub fn fields(&self) -> Result<Vec<f64>> {
        let v = self.field.as_ref().ok_or_else(|| missing("h"))?.values("h")?;
        if let Some(bad) = v.iter().find(|&&h| !(h.is_finite() && h >= 0.0)) {
            return Err(Error::Config(format!(
                "field `h`: {bad} must be finite and non-negative"
            )));
        }
        Ok(v)
    }

    pub fn betas(&self) -> Result<Vec<f64>> {
        let v = self.beta.as_ref().ok_or_else(|| missing("beta"))?.values("beta")?;
        if let Some(bad) = v.iter().find(|&&b| !(b > 0.0)) {
            return Err(Error::Config(format!("field `beta`: {bad} must be positive or `inf`")));
        }
        Ok(v)
    }

    pub fn threads(&self) -> Result<Option<usize>> {
        match self.threads {
            Some(0) => Err(Error::Config("field `threads` must be at least 1".into())),
            t => Ok(t),
        }
    }
}

fn missing(name: &str) -> Error {
    Error::Config(format!("missing field `{name}`"))
}

/// The single element of a list, or a config error naming the field.
pub fn single<T: Copy>(values: &[T], name: &str) -> Result<T> {
    match values {
        [x] => Ok(*x),
        _ => Err(Error::Config(format!(
            "field `{name}` must hold exactly one value, got {}",
            values.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_forms() {
        let c = SweepConfig::from_json(
            r#"{"L": [2, "inf"], "J": 0.5, "h": {"start": 0, "stop": 3, "step": 0.01}, "beta": [1, 10, "inf"]}"#,
        )
        .unwrap();
        assert_eq!(c.sizes().unwrap(), vec![ChainLength::Finite(2), ChainLength::Infinite]);
        assert_eq!(c.couplings().unwrap(), vec![0.5]);
        let h = c.fields().unwrap();
        assert_eq!(h.len(), 301);
        assert!((h[300] - 3.0).abs() < 1e-12);
        assert_eq!(c.betas().unwrap(), vec![1.0, 10.0, f64::INFINITY]);
    }

    #[test]
    fn validation_errors() {
        let c = SweepConfig::from_json(r#"{"h": {"start": 1, "stop": 0, "step": 0.1}}"#).unwrap();
        assert!(matches!(c.fields(), Err(Error::Config(m)) if m.contains("empty")));
        let e = SweepConfig::from_json("{\n  \"L\": [2],\n  \"bogus\": 1\n}").unwrap_err();
        assert!(matches!(e, Error::Config(m) if m.contains("bogus") && m.contains("line 3")));
        let e = SweepConfig::from_json("{\n  \"J\": \"fast\"\n}").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.starts_with("field `J`")), "{e}");
        let c = SweepConfig::from_json(r#"{"J": [0, 1]}"#).unwrap();
        assert!(c.couplings().is_err());
        assert!(SweepConfig::default().sizes().is_err());
    }

    #[test]
    fn overrides_and_hash() {
        let mut c = SweepConfig::from_json(r#"{"L": [2], "J": 1, "h": 1, "beta": "inf"}"#).unwrap();
        let base = c.hash();
        c.apply(&Overrides {
            threads: Some(8),
            out: Some("x.csv".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.hash(), base);
        c.apply(&Overrides {
            coupling: Some("0.5:1.5:0.5".into()),
            sizes: Some("4,inf".into()),
            ..Default::default()
        })
        .unwrap();
        assert_ne!(c.hash(), base);
        assert_eq!(c.couplings().unwrap(), vec![0.5, 1.0, 1.5]);
        assert_eq!(c.sizes().unwrap(), vec![ChainLength::Finite(4), ChainLength::Infinite]);
        let back = SweepConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
