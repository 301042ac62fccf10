use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use edgeworth_core::experiments::{
    density_experiment, kac_rice_roots, nummelin_experiment, occupation_time, rate_experiment,
    small_ball, DensityParams, ExperimentResult, NummelinParams, OccupationParams, RateMode,
    RateParams, RootsParams, SmallBallParams,
};
use edgeworth_core::kernels::{KernelParams, SuperKernel};
use edgeworth_core::sampling::McConfig;
use edgeworth_core::{corrector, CorrectorPolynomial, MultiIndex};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{self, ExperimentConfig, ModeName, OutputPaths};
use crate::error::CliError;

pub const KERNEL_SCHEMA: &str = "edgeworth-kernel/v1";

/// What a finished run produced.
pub enum Outcome {
    Expansion(CorrectorPolynomial),
    Experiment {
        result: ExperimentResult,
        files: Vec<PathBuf>,
    },
    Kernel {
        summary: Value,
        files: Vec<PathBuf>,
    },
}

pub struct Invocation<'a> {
    pub subcommand: &'a str,
    /// `None` runs the experiment with every optional field at its default.
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: &'a Path,
}

/// SHA-256 of the compact JSON of the effective config (object keys sorted).
pub fn config_hash(effective: &Value) -> String {
    hex::encode(Sha256::digest(effective.to_string().as_bytes()))
}

pub fn run(inv: &Invocation) -> Result<Outcome, CliError> {
    let text = match inv.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => json!({ "experiment": inv.subcommand }).to_string(),
    };
    let (cfg, effective) = config::parse(&text, inv.seed, inv.workers)?;
    if cfg.name() != inv.subcommand {
        return Err(CliError::config(
            "experiment",
            format!("config describes `{}` but the subcommand is `{}`", cfg.name(), inv.subcommand),
        ));
    }
    let base = inv.config.and_then(Path::parent).unwrap_or(Path::new("."));
    let hash = config_hash(&effective);
    let result = match &cfg {
        ExperimentConfig::Expand(c) => {
            let model = config::resolve_model(&c.model, base, c.normalize)?;
            return Ok(Outcome::Expansion(corrector(&model, c.order)?));
        }
        ExperimentConfig::Kernel(c) => {
            let defaults = KernelParams::default();
            let params = KernelParams {
                plateau: c.plateau.unwrap_or(defaults.plateau),
                rolloff: c.rolloff.unwrap_or(defaults.rolloff),
                half_width: c.half_width.unwrap_or(defaults.half_width),
                points: c.points.unwrap_or(defaults.points),
            };
            return write_kernel(params, &c.output, inv.out_dir, &hash);
        }
        ExperimentConfig::Rate(c) => {
            let model = config::resolve_model(&c.model, base, c.normalize)?;
            let f = config::resolve_function(&c.f, model.d())?;
            let gamma = match &c.gamma {
                Some(g) => Some(MultiIndex::new(g.clone()).map_err(|e| CliError::config("gamma", e.to_string()))?),
                None => None,
            };
            let mode = match c.mode {
                ModeName::Exact => RateMode::Exact,
                ModeName::MonteCarlo => RateMode::MonteCarlo {
                    mc: McConfig::new(c.samples.unwrap_or(0), c.seed, c.workers),
                    common_random_numbers: c.common_random_numbers,
                },
            };
            let params = RateParams {
                ns: c.ns.clone(),
                f,
                gamma,
                orders: c.orders.clone(),
                mode,
            };
            rate_experiment(&model, &params)?
        }
        ExperimentConfig::Density(c) => {
            let model = config::resolve_model(&c.model, base, c.normalize)?;
            let mut v = json!({
                "ns": c.ns,
                "order": c.order,
                "point": c.point.clone().unwrap_or_else(|| vec![0.0; model.d()]),
                "mc": McConfig::new(c.samples, c.seed, c.workers),
                "common_random_numbers": c.common_random_numbers,
            });
            insert_some(&mut v, "delta_scale", c.delta_scale);
            insert_some(&mut v, "min_hits", c.min_hits);
            let params: DensityParams = core_params(v)?;
            density_experiment(&model, &params)?
        }
        ExperimentConfig::Occupation(c) => {
            let mut v = json!({
                "distribution": c.distribution,
                "rho": c.rho,
                "ns": c.ns,
                "mc": McConfig::new(c.samples, c.seed, c.workers),
                "common_random_numbers": c.common_random_numbers,
            });
            insert_some(&mut v, "brownian_steps", c.brownian_steps);
            let params: OccupationParams = core_params(v)?;
            occupation_time(&params)?
        }
        ExperimentConfig::Roots(c) => kac_rice_roots(&RootsParams {
            first: c.first.clone(),
            second: c.second.clone(),
            ns: c.ns.clone(),
            mc: McConfig::new(c.samples, c.seed, c.workers),
            common_random_numbers: c.common_random_numbers,
        })?,
        ExperimentConfig::SmallBall(c) => {
            let mut v = json!({
                "distribution": c.distribution,
                "n": c.n,
                "etas": c.etas,
                "theta": c.theta,
                "a": c.a,
                "u_points": c.u_points,
                "mc": McConfig::new(c.samples, c.seed, c.workers),
            });
            insert_some(&mut v, "u", c.u);
            let params: SmallBallParams = core_params(v)?;
            small_ball(&params)?
        }
        ExperimentConfig::Nummelin(c) => nummelin_experiment(&NummelinParams {
            distribution: c.distribution.clone(),
            y: c.y,
            r: c.r,
            eps: c.eps,
            resolution: c.resolution.unwrap_or(NummelinParams::DEFAULT_RESOLUTION),
            samples: c.samples,
            seed: c.seed,
        })?,
    };
    write_experiment(result, &cfg, &effective, inv.out_dir, &hash)
}

/// Builds core parameters through serde so that omitted options take the library defaults.
fn core_params<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::config("config", e.to_string()))
}

fn insert_some<T: serde::Serialize>(v: &mut Value, key: &str, value: Option<T>) {
    if let Some(x) = value {
        v[key] = json!(x);
    }
}

fn output_path(out_dir: &Path, chosen: &Option<String>, default: String) -> PathBuf {
    out_dir.join(chosen.clone().unwrap_or(default))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_experiment(
    mut result: ExperimentResult,
    cfg: &ExperimentConfig,
    effective: &Value,
    out_dir: &Path,
    hash: &str,
) -> Result<Outcome, CliError> {
    result.metadata.insert("config_sha256".into(), hash.into());
    result.metadata.insert("config".into(), effective.clone());
    result
        .metadata
        .insert("generator".into(), format!("edgeworth {}", env!("CARGO_PKG_VERSION")).into());
    let out = cfg.output();
    let csv_path = output_path(out_dir, &out.csv, format!("{}.csv", cfg.name()));
    let json_path = output_path(out_dir, &out.json, format!("{}.json", cfg.name()));
    let mut w = create(&csv_path)?;
    result.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    let mut w = create(&json_path)?;
    result.write_json(&mut w)?;
    w.flush().map_err(|e| CliError::io(&json_path, e))?;
    Ok(Outcome::Experiment {
        result,
        files: vec![csv_path, json_path],
    })
}

fn write_kernel(params: KernelParams, out: &OutputPaths, out_dir: &Path, hash: &str) -> Result<Outcome, CliError> {
    let kernel = SuperKernel::build(params)?;
    let csv_path = output_path(out_dir, &out.csv, "kernel.csv".into());
    let json_path = output_path(out_dir, &out.json, "kernel.json".into());

    let mut w = create(&csv_path)?;
    writeln!(w, "# schema={KERNEL_SCHEMA} experiment=kernel config_sha256={hash}")
        .map_err(|e| CliError::io(&csv_path, e))?;
    kernel.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;

    let moments: Vec<f64> = (0..=6).map(|k| kernel.moment(k)).collect();
    let derivative_norms: Vec<Vec<f64>> = (0..=2)
        .map(|m| (0..=2).map(|order| kernel.weighted_derivative_norm(m, order)).collect())
        .collect();
    let summary = json!({
        "schema": KERNEL_SCHEMA,
        "params": params,
        "spacing": kernel.spacing(),
        "mass": moments[0],
        "moments": moments,
        "l1_norm": kernel.l1_norm(),
        "weighted_derivative_norms": derivative_norms,
        "metadata": { "config_sha256": hash },
    });
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| CliError::config("output", e.to_string()))?;
    writeln!(w).map_err(|e| CliError::io(&json_path, e))?;
    w.flush().map_err(|e| CliError::io(&json_path, e))?;
    Ok(Outcome::Kernel {
        summary,
        files: vec![csv_path, json_path],
    })
}

/// `expand` without a config file: a model file plus an order.
pub fn expand_model(path: &Path, order: usize, normalize: bool) -> Result<CorrectorPolynomial, CliError> {
    let cfg = json!({ "experiment": "expand", "model": { "file": path.file_name().map(|f| f.to_string_lossy().into_owned()) }, "order": order, "normalize": normalize });
    let (cfg, _) = config::parse(&cfg.to_string(), None, None)?;
    let ExperimentConfig::Expand(c) = cfg else { unreachable!() };
    let model = config::resolve_model(&c.model, path.parent().unwrap_or(Path::new(".")), c.normalize)?;
    Ok(corrector(&model, c.order)?)
}
