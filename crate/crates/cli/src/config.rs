//! JSON run configuration with `--set key=value` overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use pbs_core::expr::substitute_param;
use pbs_core::family::{build_bounded, build_family, preset, ASYMMETRIC};
use pbs_core::{parse, NormSplit, PbsFamily, QuadratureSpec, DEFAULT_SEED};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const MAX_ABS_K: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Error)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Superpotential `s_A`; may use `k`. Takes precedence over `Phi`.
    #[serde(rename = "s_A", skip_serializing_if = "Option::is_none")]
    pub s_a: Option<String>,
    /// Bounded part of `s_A = x^2/4 + kx/2 + Phi`.
    #[serde(rename = "Phi", skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    pub k: f64,
    pub norm_split: NormSplit,
    pub nmax: usize,
    pub quadrature: QuadratureSpec,
    /// Overrides of the named tolerances in [`default_tolerances`].
    pub tolerances: BTreeMap<String, f64>,
    /// Preset name when neither `s_A` nor `Phi` is given, otherwise the label of the custom family.
    pub family_label: String,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            s_a: None,
            phi: None,
            k: 0.5,
            norm_split: NormSplit::Symmetric,
            nmax: 20,
            quadrature: QuadratureSpec::default(),
            tolerances: BTreeMap::new(),
            family_label: ASYMMETRIC.into(),
            seed: DEFAULT_SEED,
        }
    }
}

/// Named tolerances used by the suites.
pub fn default_tolerances() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("asymptotic", 0.05),
        ("asymptotic_slope", 0.15),
        ("continuity", 0.05),
        ("eigen_l2", 1e-9),
        ("exact", 0.0),
        ("factorization", 1e-12),
        ("family_independence", 1e-12),
        ("gram", 1e-10),
        ("hermite_eval", 1e-10),
        ("identity", 1e-12),
        ("metric", 1e-10),
        ("moments", 1e-10),
        ("normalization", 1e-12),
        ("norms", 1e-8),
        ("oracle", 1e-8),
        ("quasi_basis", 1e-6),
        ("resolution", 1e-6),
        ("tail", 1e-12),
        ("vacuum", 1e-12),
        ("weak_eigen", 1e-8),
    ])
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("$", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Config, ConfigError> {
        let cfg: Config = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if any), applies `key=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, ConfigError> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError::new("--config", format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| ConfigError::new("$", e.to_string()))?
            }
            None => Value::Object(Map::new()),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.k.is_finite() || self.k.abs() > MAX_ABS_K {
            return Err(ConfigError::new("k", format!("|k| must be at most {MAX_ABS_K}, got {}", self.k)));
        }
        if self.nmax < 1 {
            return Err(ConfigError::new("nmax", "must be at least 1"));
        }
        self.quadrature.validate().map_err(|m| {
            let field = m.split_whitespace().next().unwrap_or("");
            ConfigError::new(format!("quadrature.{field}"), m)
        })?;
        for (name, &t) in &self.tolerances {
            if !(t > 0.0) || !t.is_finite() {
                return Err(ConfigError::new(format!("tolerances.{name}"), format!("must be positive, got {t}")));
            }
        }
        self.family()?;
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| default_tolerances().get(name).copied())
            .unwrap_or_else(|| panic!("unknown tolerance name {name}"))
    }

    /// The configured family: custom `s_A`, custom `Phi`, or a preset.
    pub fn family(&self) -> Result<Arc<PbsFamily>, ConfigError> {
        let source = |key: &str, text: &str| {
            parse(&substitute_param(text, "k", self.k)).map_err(|e| ConfigError::new(key, e.to_string()))
        };
        let f = if let Some(s) = &self.s_a {
            build_family(source("s_A", s)?, self.k, self.norm_split).with_label(&self.family_label)
        } else if let Some(p) = &self.phi {
            build_bounded(source("Phi", p)?, self.k, self.norm_split).with_label(&self.family_label)
        } else {
            let mut f = preset(&self.family_label, self.k).ok_or_else(|| {
                ConfigError::new("family_label", format!("unknown preset '{}'", self.family_label))
            })?;
            if self.norm_split != NormSplit::Symmetric {
                let rebuilt = match &f.phi {
                    Some(phi) => build_bounded(phi.clone(), self.k, self.norm_split),
                    None => build_family(f.s_a.clone(), self.k, self.norm_split),
                };
                f = rebuilt.with_label(&self.family_label);
            }
            f
        };
        Ok(Arc::new(f))
    }

    /// The config as echoed into reports.
    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// `a.b=value`, where `value` is JSON when it parses as JSON and a string otherwise.
fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new("--set", format!("expected key=value, got '{assignment}'")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::new("--set", "empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(ConfigError::new(parts[..i].join("."), "not an object"));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.family().unwrap().label, ASYMMETRIC);
    }

    #[test]
    fn field_paths_in_errors() {
        let e = Config::from_json(r#"{"k": 60}"#).unwrap_err();
        assert_eq!(e.path, "k");
        let e = Config::from_json(r#"{"nmax": 0}"#).unwrap_err();
        assert_eq!(e.path, "nmax");
        let e = Config::from_json(r#"{"quadrature": {"hermite_points": 8}}"#).unwrap_err();
        assert_eq!(e.path, "quadrature.hermite_points");
        let e = Config::from_json(r#"{"tolerances": {"gram": -1}}"#).unwrap_err();
        assert_eq!(e.path, "tolerances.gram");
        let e = Config::from_json(r#"{"quadrature": {"legendre_points": "many"}}"#).unwrap_err();
        assert_eq!(e.path, "quadrature.legendre_points");
        let e = Config::from_json(r#"{"s_A": "x^2/4 + q"}"#).unwrap_err();
        assert_eq!(e.path, "s_A");
        let e = Config::from_json(r#"{"bogus": 1}"#).unwrap_err();
        assert_eq!(e.path, "bogus");
        let e = Config::from_json(r#"{"family_label": "nope"}"#).unwrap_err();
        assert_eq!(e.path, "family_label");
    }

    #[test]
    fn overrides() {
        let c = Config::load(None, &["k=0.25".into(), "quadrature.hermite_points=64".into(), "tolerances.gram=1e-9".into()])
            .unwrap();
        assert_eq!(c.k, 0.25);
        assert_eq!(c.quadrature.hermite_points, 64);
        assert_eq!(c.quadrature.legendre_points, 128);
        assert_eq!(c.tolerance("gram"), 1e-9);
        let c = Config::load(None, &["family_label=quartic-nonL2".into()]).unwrap();
        assert_eq!(c.family().unwrap().label, "quartic-nonL2");
        assert!(Config::load(None, &["novalue".into()]).is_err());
    }

    #[test]
    fn custom_superpotential_uses_k() {
        let c = Config::from_json(r#"{"s_A": "x^2/4 + k*x/2 + cos(x)", "k": 0.5, "family_label": "mine"}"#).unwrap();
        let f = c.family().unwrap();
        let w = f.w_a.eval_real(1.0).unwrap().re;
        assert!((w - (0.5 + 0.25 - 1f64.sin())).abs() < 1e-14);
        let c = Config::from_json(r#"{"Phi": "sin(x)"}"#).unwrap();
        assert!(c.family().unwrap().phi.is_some());
    }

    #[test]
    fn echo_round_trips() {
        let c = Config::load(None, &["seed=7".into(), "norm_split=\"phi_unit\"".into()]).unwrap();
        assert_eq!(Config::from_value(c.echo()).unwrap(), c);
        assert_eq!(c.family().unwrap().n_phi.re, 1.0);
    }
}
