//! Experiment configuration files.
//!
//! ```toml
//! [model]
//! name = "quadratic"
//! dim = 5
//! a = 1.0
//!
//! [grid]
//! horizon = 1.0
//! steps = 10
//!
//! [space]
//! family = "prewavelet"
//! level = 3
//! width = 2.0
//!
//! [algo]
//! kind = "direct"
//! steps = 2000
//! init_y = 0.5
//! init_z0 = -0.2
//! init_zn = 0.0
//!
//! [schedule.y]
//! alpha = 1.0
//! beta1 = 0.0
//! beta0 = 1.0
//! m0 = 100.0
//! # [schedule.z0], [schedule.zn] alike; per-iteration overrides go in
//! # [schedule.overrides."p=3".y] etc.
//!
//! [picard]
//! outer = 6
//!
//! [seeds]
//! base = 0
//! replicas = 1
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ModelParams, MODEL_NAMES};
use crate::sgd::{GroupRate, ResidualMode, Schedule, ScheduleSet};
use crate::sparse_grid::Family;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub family: Family,
    pub level: u32,
    /// Box width factor `r`.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoKind {
    Direct,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoSection {
    pub kind: AlgoKind,
    /// `M`: SGD steps per run (per Picard iteration for the Picard algorithm).
    pub steps: u64,
    #[serde(default)]
    pub init_y: f64,
    #[serde(default)]
    pub init_z0: f64,
    #[serde(default)]
    pub init_zn: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub euler_strict: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawSection {
    pub gamma: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTriple {
    pub y: GroupRate,
    pub z0: GroupRate,
    pub zn: GroupRate,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<GroupRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<GroupRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zn: Option<GroupRate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_law: Option<PowerLawSection>,
    /// Keyed `p=<k>`: rates used from Picard iteration `k` on.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, GroupTriple>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    /// `P`.
    pub outer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_k: Option<f64>,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// `(beta0, beta1)` scaled by `decay^{p-1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "is_block")]
    pub residual: ResidualMode,
}

fn default_true() -> bool {
    true
}

fn is_block(r: &ResidualMode) -> bool {
    *r == ResidualMode::Block
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub base: u64,
    #[serde(default = "one")]
    pub replicas: usize,
}

fn one() -> usize {
    1
}

impl Default for SeedSection {
    fn default() -> Self {
        Self {
            base: 0,
            replicas: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub space: SpaceSection,
    pub algo: AlgoSection,
    pub schedule: ScheduleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSection>,
    #[serde(default)]
    pub seeds: SeedSection,
}

fn parse_override_key(key: &str) -> Option<usize> {
    key.strip_prefix("p=")?
        .trim()
        .parse()
        .ok()
        .filter(|p| *p >= 1)
}

fn check_rate(path: &str, g: &GroupRate) -> Result<(), ConfigError> {
    for (name, v) in [
        ("alpha", g.alpha),
        ("beta1", g.beta1),
        ("beta0", g.beta0),
        ("m0", g.m0),
    ] {
        if !v.is_finite() {
            return Err(invalid(format!("{path}.{name}"), "must be finite"));
        }
    }
    if !(g.alpha > 0.0 && g.alpha <= 1.0) {
        return Err(invalid(
            format!("{path}.alpha"),
            format!("must lie in (0, 1], got {}", g.alpha),
        ));
    }
    for (name, v) in [("beta1", g.beta1), ("beta0", g.beta0), ("m0", g.m0)] {
        if v < 0.0 {
            return Err(invalid(
                format!("{path}.{name}"),
                format!("must be non-negative, got {v}"),
            ));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            dim: self.model.dim,
            horizon: self.grid.horizon,
            a: self.model.a,
        }
    }

    /// Checks every field; errors carry the dotted path of the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !MODEL_NAMES.contains(&self.model.name.as_str()) {
            return Err(invalid(
                "model.name",
                format!(
                    "unknown model '{}'; valid names: {}",
                    self.model.name,
                    MODEL_NAMES.join(", ")
                ),
            ));
        }
        if self.model.dim == 0 {
            return Err(invalid("model.dim", "must be at least 1"));
        }
        if self.model.name == "bifurcation" && self.model.a.is_none() {
            return Err(invalid("model.a", "required for the bifurcation model"));
        }
        if let Some(a) = self.model.a {
            if !a.is_finite() {
                return Err(invalid("model.a", "must be finite"));
            }
        }
        if !(self.grid.horizon > 0.0 && self.grid.horizon.is_finite()) {
            return Err(invalid("grid.horizon", "must be positive"));
        }
        if self.grid.steps == 0 {
            return Err(invalid("grid.steps", "must be at least 1"));
        }
        if self.space.level == 0 {
            return Err(invalid("space.level", "must be at least 1"));
        }
        if !(self.space.width > 0.0 && self.space.width.is_finite()) {
            return Err(invalid("space.width", "must be positive"));
        }
        for (name, v) in [
            ("init_y", self.algo.init_y),
            ("init_z0", self.algo.init_z0),
            ("init_zn", self.algo.init_zn),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("algo.{name}"), "must be finite"));
            }
        }
        let s = &self.schedule;
        match &s.power_law {
            Some(pl) => {
                if !(pl.gamma > 0.0 && pl.gamma.is_finite()) {
                    return Err(invalid("schedule.power_law.gamma", "must be positive"));
                }
                if !(pl.rho > 0.0 && pl.rho <= 1.0) {
                    return Err(invalid("schedule.power_law.rho", "must lie in (0, 1]"));
                }
            }
            None => {
                for (name, g) in [("y", &s.y), ("z0", &s.z0), ("zn", &s.zn)] {
                    match g {
                        Some(g) => check_rate(&format!("schedule.{name}"), g)?,
                        None => {
                            return Err(invalid(
                                format!("schedule.{name}"),
                                "missing (or give schedule.power_law)",
                            ))
                        }
                    }
                }
            }
        }
        for (key, t) in &s.overrides {
            if parse_override_key(key).is_none() {
                return Err(invalid(
                    format!("schedule.overrides.{key}"),
                    "key must look like p=<k> with k >= 1",
                ));
            }
            check_rate(&format!("schedule.overrides.{key}.y"), &t.y)?;
            check_rate(&format!("schedule.overrides.{key}.z0"), &t.z0)?;
            check_rate(&format!("schedule.overrides.{key}.zn"), &t.zn)?;
        }
        match (self.algo.kind, &self.picard) {
            (AlgoKind::Picard, None) => {
                return Err(invalid("picard", "required when algo.kind = \"picard\""))
            }
            (AlgoKind::Picard, Some(p)) => {
                if p.outer == 0 {
                    return Err(invalid("picard.outer", "must be at least 1"));
                }
                if let Some(b) = p.beta_k {
                    if !(b >= 1.0) {
                        return Err(invalid("picard.beta_k", "must be at least 1"));
                    }
                }
                if let Some(f) = p.decay {
                    if !(f > 0.0 && f.is_finite()) {
                        return Err(invalid("picard.decay", "must be positive"));
                    }
                }
            }
            (AlgoKind::Direct, _) => {}
        }
        if self.seeds.replicas == 0 {
            return Err(invalid("seeds.replicas", "must be at least 1"));
        }
        Ok(())
    }

    /// The base schedule, overrides and decay as solver input.
    pub fn schedules(&self) -> ScheduleSet {
        let s = &self.schedule;
        let base = match (&s.power_law, s.y, s.z0, s.zn) {
            (Some(pl), ..) => Schedule::PowerLaw {
                gamma: pl.gamma,
                rho: pl.rho,
            },
            (None, Some(y), Some(z0), Some(zn)) => Schedule::Empirical { y, z0, zn },
            _ => panic!("schedules() on an unvalidated config"),
        };
        let overrides = s
            .overrides
            .iter()
            .filter_map(|(k, t)| {
                parse_override_key(k).map(|p| {
                    (
                        p,
                        Schedule::Empirical {
                            y: t.y,
                            z0: t.z0,
                            zn: t.zn,
                        },
                    )
                })
            })
            .collect();
        ScheduleSet {
            base,
            overrides,
            decay: self.picard.and_then(|p| p.decay),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[model]
name = "bifurcation"
dim = 2
a = -0.4

[grid]
horizon = 1.0
steps = 10

[space]
family = "prewavelet"
level = 3
width = 2.0

[algo]
kind = "picard"
steps = 5000
init_y = 0.3

[schedule.y]
alpha = 1.0
beta1 = 0.0
beta0 = 1.0
m0 = 300.0

[schedule.z0]
alpha = 1.0
beta1 = 0.0
beta0 = 1.0
m0 = 300.0

[schedule.zn]
alpha = 1.0
beta1 = 0.6
beta0 = 0.1
m0 = 300.0

[schedule.overrides."p=3".y]
alpha = 1.0
beta1 = 0.0
beta0 = 0.5
m0 = 300.0

[schedule.overrides."p=3".z0]
alpha = 1.0
beta1 = 0.0
beta0 = 0.5
m0 = 300.0

[schedule.overrides."p=3".zn]
alpha = 1.0
beta1 = 0.3
beta0 = 0.05
m0 = 300.0

[picard]
outer = 9
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.model.a, Some(-0.4));
        assert!(c.picard.unwrap().warm_start);
        assert_eq!(c.seeds, SeedSection::default());
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let set = c.schedules();
        assert_eq!(set.overrides.len(), 1);
        assert_ne!(set.for_iteration(3), set.for_iteration(2));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = SAMPLE.replace("name = \"bifurcation\"", "name = \"heston\"");
        let e = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(
            e.starts_with("model.name") && e.contains("quadratic"),
            "{e}"
        );

        let bad = SAMPLE.replacen("alpha = 1.0", "alpha = 1.5", 1);
        let e = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(e.starts_with("schedule.y.alpha"), "{e}");

        let bad = SAMPLE.replace("\"p=3\"", "\"q3\"");
        let e = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(e.starts_with("schedule.overrides.q3"), "{e}");

        let bad = SAMPLE.replace("[picard]\nouter = 9", "");
        let e = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(e.starts_with("picard"), "{e}");

        assert!(matches!(
            ExperimentConfig::from_toml("[model]\nname = 1"),
            Err(ConfigError::Parse(_))
        ));
    }
}
