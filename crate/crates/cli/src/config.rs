//! Experiment configuration files.
//!
//! A config is a JSON object whose `experiment` field selects one of the layouts
//! below; every layout rejects unknown fields.

use std::path::{Path, PathBuf};

use edgeworth_core::corrector::MAX_EXPANSION_ORDER;
use edgeworth_core::{ComponentDistribution, ModelSpec, MultiIndex, Polynomial, TestFunction};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<String>,
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Expand(ExpandConfig),
    Rate(RateConfig),
    Density(DensityConfig),
    Occupation(OccupationConfig),
    Roots(RootsConfig),
    #[serde(rename = "smallball")]
    SmallBall(SmallBallConfig),
    Nummelin(NummelinConfig),
    Kernel(KernelConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    /// Inline model or `{"file": "path"}`.
    pub model: Value,
    #[serde(default)]
    pub normalize: bool,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub model: Value,
    #[serde(default)]
    pub normalize: bool,
    pub ns: Vec<usize>,
    /// Catalog name or inline test function.
    pub f: Value,
    #[serde(default)]
    pub gamma: Option<Vec<u32>>,
    pub orders: Vec<usize>,
    pub mode: ModeName,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub common_random_numbers: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub model: Value,
    #[serde(default)]
    pub normalize: bool,
    pub ns: Vec<usize>,
    pub order: usize,
    /// Defaults to the origin.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub delta_scale: Option<f64>,
    #[serde(default)]
    pub min_hits: Option<usize>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub common_random_numbers: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationConfig {
    pub distribution: ComponentDistribution,
    pub rho: f64,
    pub ns: Vec<usize>,
    #[serde(default)]
    pub brownian_steps: Option<usize>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub common_random_numbers: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootsConfig {
    /// Law of the cosine coefficients.
    pub first: ComponentDistribution,
    /// Law of the sine coefficients.
    pub second: ComponentDistribution,
    pub ns: Vec<usize>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub common_random_numbers: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallBallConfig {
    pub distribution: ComponentDistribution,
    pub n: usize,
    #[serde(default)]
    pub u: Option<f64>,
    pub etas: Vec<f64>,
    pub theta: f64,
    pub a: f64,
    pub u_points: usize,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NummelinConfig {
    pub distribution: ComponentDistribution,
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub resolution: Option<usize>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub plateau: Option<f64>,
    #[serde(default)]
    pub rolloff: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Expand(_) => "expand",
            ExperimentConfig::Rate(_) => "rate",
            ExperimentConfig::Density(_) => "density",
            ExperimentConfig::Occupation(_) => "occupation",
            ExperimentConfig::Roots(_) => "roots",
            ExperimentConfig::SmallBall(_) => "smallball",
            ExperimentConfig::Nummelin(_) => "nummelin",
            ExperimentConfig::Kernel(_) => "kernel",
        }
    }

    /// Whether the layout has `seed` / `workers` fields.
    pub fn takes_seed(&self) -> bool {
        !matches!(self, ExperimentConfig::Expand(_) | ExperimentConfig::Kernel(_))
    }

    pub fn takes_workers(&self) -> bool {
        self.takes_seed() && !matches!(self, ExperimentConfig::Nummelin(_))
    }

    pub fn output(&self) -> OutputPaths {
        match self {
            ExperimentConfig::Expand(_) => OutputPaths::default(),
            ExperimentConfig::Rate(c) => c.output.clone(),
            ExperimentConfig::Density(c) => c.output.clone(),
            ExperimentConfig::Occupation(c) => c.output.clone(),
            ExperimentConfig::Roots(c) => c.output.clone(),
            ExperimentConfig::SmallBall(c) => c.output.clone(),
            ExperimentConfig::Nummelin(c) => c.output.clone(),
            ExperimentConfig::Kernel(c) => c.output.clone(),
        }
    }

    /// Checks that do not need the model: the expansion-order cap, sampling sizes.
    pub fn validate(&self) -> Result<(), CliError> {
        let cap = |field: String, order: usize| {
            if order > MAX_EXPANSION_ORDER {
                Err(CliError::config(
                    field,
                    format!("expansion order {order} exceeds the supported cap {MAX_EXPANSION_ORDER}"),
                ))
            } else {
                Ok(())
            }
        };
        match self {
            ExperimentConfig::Expand(c) => cap("order".into(), c.order),
            ExperimentConfig::Rate(c) => {
                for (i, &o) in c.orders.iter().enumerate() {
                    cap(format!("orders[{i}]"), o)?;
                }
                if c.mode == ModeName::MonteCarlo && c.samples.is_none() {
                    return Err(CliError::config("samples", "required in monte_carlo mode"));
                }
                if c.mode == ModeName::Exact && c.samples.is_some() {
                    return Err(CliError::config("samples", "not used in exact mode"));
                }
                Ok(())
            }
            ExperimentConfig::Density(c) => cap("order".into(), c.order),
            _ => Ok(()),
        }
    }
}

/// Parses a config, applying `--seed` / `--workers` overrides, and returns it with the
/// effective JSON (the value that is hashed into the outputs).
pub fn parse(
    text: &str,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<(ExperimentConfig, Value), CliError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))?;
    let probe: ExperimentConfig = from_value(value.clone())?;
    let obj = value.as_object_mut().expect("a parsed config is an object");
    if let Some(s) = seed {
        if !probe.takes_seed() {
            return Err(CliError::config("--seed", format!("`{}` uses no random numbers", probe.name())));
        }
        obj.insert("seed".into(), s.into());
    }
    if let Some(w) = workers {
        if !probe.takes_workers() {
            return Err(CliError::config("--workers", format!("`{}` runs on one thread", probe.name())));
        }
        obj.insert("workers".into(), w.into());
    }
    let config = from_value(value.clone())?;
    config.validate()?;
    Ok((config, value))
}

fn from_value(value: Value) -> Result<ExperimentConfig, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::config("config", e.to_string()))
}

/// Resolves an inline model or a `{"file": path}` reference relative to `base`.
pub fn resolve_model(value: &Value, base: &Path, normalize: bool) -> Result<ModelSpec, CliError> {
    let model_value = match value.as_object() {
        Some(obj) if obj.len() == 1 && obj.contains_key("file") => {
            let rel = obj["file"]
                .as_str()
                .ok_or_else(|| CliError::config("model.file", "must be a path string"))?;
            let path: PathBuf = base.join(rel);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::config("model.file", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::config("model.file", e.to_string()))?
        }
        _ => value.clone(),
    };
    let model: ModelSpec =
        serde_json::from_value(model_value).map_err(|e| CliError::config("model", e.to_string()))?;
    if normalize {
        Ok(edgeworth_core::corrector::normalize(&model)?)
    } else {
        Ok(model)
    }
}

/// Named test functions in `d` variables.
pub const CATALOG: [&str; 5] = [
    "power_sum_3",
    "power_sum_4",
    "cubic_plus_quartic",
    "cosine",
    "gaussian_bump",
];

/// Resolves a catalog name or an inline test function.
pub fn resolve_function(value: &Value, d: usize) -> Result<TestFunction, CliError> {
    let Some(name) = value.as_str() else {
        return serde_json::from_value(value.clone()).map_err(|e| CliError::config("f", e.to_string()));
    };
    Ok(match name {
        "power_sum_3" => TestFunction::power_sum(d, 3),
        "power_sum_4" => TestFunction::power_sum(d, 4),
        "cubic_plus_quartic" => {
            let mut p = Polynomial::zero(d);
            for i in 0..d {
                let mut m = vec![0u32; d];
                m[i] = 3;
                p.add_term(MultiIndex::new(m.clone()).expect("d ≥ 1"), 1.0);
                m[i] = 4;
                p.add_term(MultiIndex::new(m).expect("d ≥ 1"), 1.0);
            }
            TestFunction::Polynomial { poly: p }
        }
        "cosine" => TestFunction::Cosine { omega: vec![1.0; d] },
        "gaussian_bump" => TestFunction::GaussianBump {
            center: vec![0.0; d],
            width: 1.0,
        },
        other => {
            return Err(CliError::config(
                "f",
                format!("unknown test function `{other}` (catalog: {})", CATALOG.join(", ")),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn uniform_model() -> Value {
        json!({"d": 1, "n": 100, "iid": true, "summands": [{"C": [[1.0]], "components": [{"kind": "uniform_centered"}]}]})
    }

    #[test]
    fn parses_and_rejects_unknown_fields() {
        let cfg = json!({"experiment": "expand", "model": uniform_model(), "order": 2});
        let (c, _) = parse(&cfg.to_string(), None, None).unwrap();
        assert_eq!(c.name(), "expand");
        let bad = json!({"experiment": "expand", "model": uniform_model(), "order": 2, "typo": 1});
        let err = parse(&bad.to_string(), None, None).unwrap_err();
        assert!(err.to_string().contains("typo"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let unknown = json!({"experiment": "nope"});
        assert!(parse(&unknown.to_string(), None, None).is_err());
    }

    #[test]
    fn order_cap_names_the_field() {
        let cfg = json!({"experiment": "rate", "model": uniform_model(), "ns": [8], "f": "power_sum_4",
                         "orders": [0, 5], "mode": "exact"});
        let err = parse(&cfg.to_string(), None, None).unwrap_err();
        assert!(err.to_string().contains("orders[1]"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_are_applied_and_hashed() {
        let cfg = json!({"experiment": "roots", "first": {"kind": "rademacher"}, "second": {"kind": "rademacher"},
                         "ns": [4], "samples": 10, "seed": 1});
        let (c, v) = parse(&cfg.to_string(), Some(9), Some(3)).unwrap();
        match c {
            ExperimentConfig::Roots(r) => assert_eq!((r.seed, r.workers), (9, 3)),
            _ => unreachable!(),
        }
        assert_eq!(v["seed"], 9);
        let kernel = json!({"experiment": "kernel"});
        assert!(parse(&kernel.to_string(), Some(1), None).is_err());
    }

    #[test]
    fn catalog_functions() {
        let f = resolve_function(&json!("cubic_plus_quartic"), 2).unwrap();
        assert_eq!(f.eval(&[1.0, 2.0]), 1.0 + 1.0 + 8.0 + 16.0);
        assert!(resolve_function(&json!("nope"), 1).is_err());
        let inline = resolve_function(&json!({"kind": "cosine", "omega": [2.0]}), 1).unwrap();
        assert_eq!(inline, TestFunction::Cosine { omega: vec![2.0] });
    }

    #[test]
    fn model_from_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.json"), uniform_model().to_string()).unwrap();
        let m = resolve_model(&json!({"file": "m.json"}), dir.path(), false).unwrap();
        assert_eq!((m.d(), m.n()), (1, 100));
        assert!(resolve_model(&json!({"file": "missing.json"}), dir.path(), false).is_err());
    }
}
