//! One-screen text summary of a finished run.

use std::fmt::Write;

use edgeworth_core::experiments::{ExperimentResult, RowFlag, SlopeFit};

const MAX_ROWS: usize = 30;

/// Slack allowed above the nominal `-(N+1)/2` rate slope.
pub const RATE_SLACK: f64 = 0.3;
/// Allowed distance of the small-ball exponent from the dimension.
pub const EXPONENT_SLACK: f64 = 0.2;

/// The target a fit is judged against, if the experiment has one.
fn verdict(result: &ExperimentResult, fit: &SlopeFit) -> Option<(String, bool)> {
    if fit.all_degenerate {
        return Some(("error vanishes to rounding".into(), true));
    }
    let slope = fit.fitted_slope?;
    let order = |series: &str| series.strip_prefix("N=").and_then(|k| k.parse::<usize>().ok());
    match result.name.as_str() {
        "rate" => {
            let bound = -((order(&fit.series)? + 1) as f64) / 2.0 + RATE_SLACK;
            Some((format!("target ≤ {bound:.2}"), slope <= bound))
        }
        "density" => {
            let n = result.params.get("order")?.as_u64()? as f64;
            let bound = -(n + 1.0) / 2.0 + RATE_SLACK;
            Some((format!("target ≤ {bound:.2}"), slope <= bound))
        }
        "smallball" if fit.series == "pointwise" => {
            let target = result.summary.get("exponent_target")?.as_f64()?;
            Some((format!("target {target} ± {EXPONENT_SLACK}"), (slope - target).abs() <= EXPONENT_SLACK))
        }
        _ => None,
    }
}

fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e5).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

fn sweep(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e12 {
        format!("{x:.0}")
    } else {
        num(x)
    }
}

pub fn render(result: &ExperimentResult, files: &[std::path::PathBuf]) -> String {
    let mut s = String::new();
    let hash = result
        .metadata
        .get("config_sha256")
        .and_then(|v| v.as_str())
        .unwrap_or("-");
    let _ = write!(s, "{} ({})", result.name, result.schema);
    if let Some(seed) = &result.seed {
        let _ = write!(s, "  seed {}  workers {}  samples {}", seed.seed, seed.workers, seed.samples);
    }
    let _ = writeln!(s, "\nconfig sha256 {hash}");
    let _ = writeln!(
        s,
        "{:<12} {:>10} {:>14} {:>11} {:>14} {:>11}  flag",
        "series", "sweep", "estimate", "se", "reference", "error"
    );
    for row in result.rows.iter().take(MAX_ROWS) {
        let flag = serde_json::to_value(row.flag).ok();
        let flag = flag.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        let _ = writeln!(
            s,
            "{:<12} {:>10} {:>14} {:>11} {:>14} {:>11}  {flag}",
            row.series,
            sweep(row.sweep),
            num(row.estimate),
            row.se.map(num).unwrap_or_else(|| "-".into()),
            num(row.reference),
            num(row.error),
        );
    }
    if result.rows.len() > MAX_ROWS {
        let _ = writeln!(s, "… {} more rows in the CSV", result.rows.len() - MAX_ROWS);
    }
    let unresolved = result.rows.iter().filter(|r| r.flag != RowFlag::Ok && r.flag != RowFlag::Degenerate).count();
    if unresolved > 0 {
        let _ = writeln!(s, "{unresolved} row(s) at the noise floor or short of hits");
    }
    for fit in &result.fits {
        let slope = match (fit.fitted_slope, fit.slope_stderr) {
            (Some(m), Some(se)) => format!("{m:.3} ± {se:.3}"),
            (Some(m), None) => format!("{m:.3}"),
            (None, _) if fit.all_degenerate => "-∞".into(),
            (None, _) => "n/a".into(),
        };
        let _ = write!(s, "fit {:<10} slope {slope} ({} pts, {} excluded)", fit.series, fit.points, fit.excluded);
        match verdict(result, fit) {
            Some((target, true)) => {
                let _ = writeln!(s, "  {target}: PASS");
            }
            Some((target, false)) => {
                let _ = writeln!(s, "  {target}: FAIL");
            }
            None => {
                let _ = writeln!(s);
            }
        }
    }
    for f in files {
        let _ = writeln!(s, "wrote {}", f.display());
    }
    s
}
