use std::fs;
use std::path::PathBuf;
use std::thread;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

/// Agreement between the base run and the enlarged one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub max_abs_diff: f64,
    /// `max_abs_diff` over the largest magnitude in the base run.
    pub relative_diff: f64,
    pub agreed: bool,
}

pub fn compare(base: &[f64], enlarged: &[f64], tol: f64) -> Convergence {
    if base.len() != enlarged.len() {
        return Convergence {
            max_abs_diff: f64::INFINITY,
            relative_diff: f64::INFINITY,
            agreed: false,
        };
    }
    let diff = base.iter().zip(enlarged).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = base.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let rel = if scale > 0.0 { diff / scale } else { diff };
    Convergence {
        max_abs_diff: diff,
        relative_diff: rel,
        agreed: rel <= tol,
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    pub convergence: Convergence,
}

/// Runs the experiment at the base and the enlarged truncation, writes one
/// CSV per table of the base run and `manifest.json`.
///
/// Outputs are written even when the two runs disagree; the disagreement is
/// then returned as an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let job = cfg.experiment.plan(cfg)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let start = Instant::now();
    let (base, enlarged) = thread::scope(|s| {
        let e = s.spawn(|| job.compute(true));
        let b = job.compute(false);
        (b, e.join().expect("enlarged run panicked"))
    });
    let base = base.with_context(|| format!("{} at {}", cfg.experiment.name, job.truncation(false)))?;
    let enlarged = enlarged.with_context(|| format!("{} at {}", cfg.experiment.name, job.truncation(true)))?;
    let wall = start.elapsed().as_secs_f64();
    let conv = compare(&base.probe, &enlarged.probe, cfg.convergence_tol);

    let mut files = Vec::new();
    let mut outputs = Vec::new();
    for t in &base.tables {
        t.write(&cfg.output_dir)?;
        files.push(cfg.output_dir.join(t.file_name()));
        outputs.push(json!({ "file": t.file_name(), "columns": t.columns, "rows": t.rows.len() }));
    }
    let manifest = json!({
        "experiment": cfg.experiment.name,
        "parameters": cfg.to_json(),
        "tolerances": job.tolerances(),
        "convergence": {
            "base": job.truncation(false),
            "enlarged": job.truncation(true),
            "max_abs_diff": conv.max_abs_diff,
            "relative_diff": conv.relative_diff,
            "tolerance": cfg.convergence_tol,
            "agreed": conv.agreed,
        },
        "results": Value::Object(base.results),
        "outputs": outputs,
        "wall_time_seconds": wall,
    });
    let path = cfg.output_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    if !conv.agreed {
        bail!(
            "convergence check failed: {} and {} differ by {:.3e} (relative), above convergence_tol = {:.1e}",
            job.truncation(false),
            job.truncation(true),
            conv.relative_diff,
            cfg.convergence_tol
        );
    }
    Ok(RunSummary {
        manifest: path,
        files,
        convergence: conv,
    })
}
