//! Job configuration: a flat JSON document. Numbers may be written as
//! decimals or as exact fraction strings such as `"1/3"`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use super::CliError;
use crate::selfsim::SimilarityParams;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_AUTO_DEPTH_TOL: f64 = 1e-3;

/// A real number given as a JSON number or a `"p/q"` string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

/// Parses `"p/q"`, `"p"` or a decimal string to the nearest double.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let bad = || format!("cannot parse {text:?} as a number or fraction");
    match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(format!("zero denominator in {text:?}"));
            }
            Ok(p / q)
        }
        None => text.parse().map_err(|_| bad()),
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a fraction string \"p/q\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                parse_real(v).map(Real).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RealVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Fixed(usize),
    Auto,
}

impl std::str::FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Depth::Auto);
        }
        s.parse()
            .map(Depth::Fixed)
            .map_err(|_| format!("depth must be a positive integer or \"auto\", got {s:?}"))
    }
}

impl<'de> Deserialize<'de> for Depth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(v) => Ok(Depth::Fixed(v)),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub n: usize,
    #[serde(rename = "N", default)]
    pub branches: Option<usize>,
    pub a: Vec<Real>,
    pub beta: Vec<Real>,
    pub d: Vec<Real>,
    #[serde(default = "default_depth")]
    pub depth: Depth,
    #[serde(default)]
    pub pos_count: usize,
    #[serde(default)]
    pub neg_count: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: Real,
    #[serde(default = "default_auto_depth_tol")]
    pub auto_depth_tol: Real,
    /// File path; absent or `"-"` means standard output.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

fn default_depth() -> Depth {
    Depth::Auto
}

fn default_rel_tol() -> Real {
    Real(DEFAULT_REL_TOL)
}

fn default_auto_depth_tol() -> Real {
    Real(DEFAULT_AUTO_DEPTH_TOL)
}

fn values(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validated similarity parameters; also checks `N`, the depth and the
    /// tolerances.
    pub fn params(&self) -> Result<SimilarityParams, CliError> {
        if let Some(n_branches) = self.branches {
            if n_branches != self.a.len() {
                return Err(CliError::Invalid(format!(
                    "LengthMismatch: N = {n_branches} but {} branch lengths given",
                    self.a.len()
                )));
            }
        }
        if self.depth == Depth::Fixed(0) {
            return Err(CliError::Invalid("depth must be at least 1".into()));
        }
        for (name, v) in [
            ("rel_tol", self.rel_tol.0),
            ("auto_depth_tol", self.auto_depth_tol.0),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::Invalid(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        SimilarityParams::validate(
            self.n,
            &values(&self.a),
            &values(&self.beta),
            &values(&self.d),
        )
        .map_err(|e| CliError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_real("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_real(" -2/3 ").unwrap(), -2.0 / 3.0);
        assert_eq!(parse_real("0.5").unwrap(), 0.5);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("x").is_err());
    }

    #[test]
    fn parses_a_full_config() {
        let cfg = JobConfig::from_json(
            r#"{"n": 2, "N": 3, "a": ["1/3", "1/3", "1/3"], "beta": [0, "2/3", 1],
                "d": [0, 0, 0.5], "depth": 12, "pos_count": 8, "format": "csv"}"#,
        )
        .unwrap();
        assert_eq!(cfg.depth, Depth::Fixed(12));
        assert_eq!(cfg.a[0].0, 1.0 / 3.0);
        assert_eq!(cfg.rel_tol.0, DEFAULT_REL_TOL);
        assert_eq!(cfg.format, Some(Format::Csv));
        let p = cfg.params().unwrap();
        assert_eq!(p.m(), 3);
    }

    #[test]
    fn auto_depth_and_rejections() {
        let base = r#""n": 2, "a": ["1/3", "1/3", "1/3"], "beta": [0, -1, 0], "d": [0, 0, 0.5]"#;
        let cfg = JobConfig::from_json(&format!(r#"{{{base}, "depth": "auto"}}"#)).unwrap();
        assert_eq!(cfg.depth, Depth::Auto);
        let cfg = JobConfig::from_json(&format!(r#"{{{base}, "N": 4}}"#)).unwrap();
        assert!(matches!(cfg.params(), Err(CliError::Invalid(m)) if m.contains("LengthMismatch")));
        let cfg = JobConfig::from_json(&format!(r#"{{{base}, "depth": 0}}"#)).unwrap();
        assert!(cfg.params().is_err());
        assert!(JobConfig::from_json(&format!(r#"{{{base}, "bogus": 1}}"#)).is_err());
        assert!(JobConfig::from_json(&format!(r#"{{{base}, "depth": "deep"}}"#)).is_err());
        let cfg =
            JobConfig::from_json(r#"{"n": 2, "a": [0.5, 0.4], "beta": [0, 1], "d": [0, 0.5]}"#)
                .unwrap();
        assert!(matches!(cfg.params(), Err(CliError::Invalid(m)) if m.contains("SumNotOne")));
    }
}
