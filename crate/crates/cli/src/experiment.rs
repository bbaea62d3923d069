//! Replicated ISE experiments: sample from a reference density, fit the
//! log-concave MLE and the KDE, and tabulate the integrated squared errors.

use std::path::PathBuf;
use std::time::Instant;

use lctree::hull::Mode;
use lctree::integrate::{Density, GridSpec};
use lctree::mle::{fit, FitOptions};
use lctree::refdensities::{kde_fit, RefKind, ReferenceDensity};
use lctree::Space;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lcmle,
    Kde,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lcmle => "lcmle",
            Method::Kde => "kde",
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Lcmle, Method::Kde]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Reference density name, as accepted by `sample --ref`.
    pub case: String,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// ISE grid (and KDE normalization grid); see [`ise_grid`] for the default.
    #[serde(default)]
    pub grid: Option<GridSpec<f64>>,
    /// MLE class; bent for case5 and case6, log-concave otherwise.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Where `ise.csv` and `summary.csv` go; nothing is written when absent.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.replications < 1 {
            return Err(CliError::Io("replications must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
            return Err(CliError::Io("sizes must be non-empty and at least 2".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Io("no methods given".into()));
        }
        if let Some(g) = self.grid {
            GridSpec::new(g.spacing, g.radius).map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

/// Default ISE grid: the library default in T3, spacing 0.05 to radius 6 in
/// T4, where the finer default makes every ISE a 9.6M-cell pass.
pub fn ise_grid(space: Space) -> GridSpec<f64> {
    match space {
        Space::T3 => GridSpec::default_for(Space::T3),
        Space::T4 => GridSpec { spacing: 0.05, radius: 6.0 },
    }
}

pub fn default_mode(reference: &ReferenceDensity) -> Mode {
    match reference.kind() {
        RefKind::Case5Brownian | RefKind::Case6Coalescent => Mode::Bent,
        _ => Mode::LogConcave,
    }
}

/// Seed of replication `rep` at size `n`.
pub fn replication_seed(seed: u64, n: usize, rep: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((n as u64) << 20).wrapping_add(rep as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub case: String,
    pub n: usize,
    pub rep: usize,
    pub method: Method,
    pub ise: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub method: Method,
    pub mean_ise: f64,
    pub sd_ise: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn mean_ise(&self, n: usize, method: Method) -> Option<f64> {
        self.summary.iter().find(|s| s.n == n && s.method == method).map(|s| s.mean_ise)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from("case,n,rep,method,ise,runtime_ms\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{:e},{:.1}\n", r.case, r.n, r.rep, r.method.name(), r.ise, r.runtime_ms));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("n,method,mean_ise,sd_ise,mean_runtime_ms\n");
        for s in &self.summary {
            out.push_str(&format!("{},{},{:e},{:e},{:.1}\n", s.n, s.method.name(), s.mean_ise, s.sd_ise, s.mean_runtime_ms));
        }
        out
    }
}

fn ise_against(truth: &[f64], f: &dyn Density<f64>, grid: &GridSpec<f64>) -> f64 {
    let vals = f.density_on_grid(grid);
    let s: f64 = vals.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    s * grid.cell_measure(f.space())
}

fn one_replication(
    cfg: &ExperimentConfig,
    reference: &ReferenceDensity,
    truth: &[f64],
    grid: &GridSpec<f64>,
    mode: Mode,
    n: usize,
    rep: usize,
) -> CliResult<Vec<Row>> {
    let seed = replication_seed(cfg.seed, n, rep);
    let x = reference.sample(n, seed)?;
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let model: Box<dyn Density<f64>> = match method {
            Method::Lcmle => Box::new(
                fit(&x, None, &FitOptions { mode, ..Default::default() })
                    .map_err(|e| CliError::Domain(format!("{} n={n} rep={rep}: {e}", cfg.case)))?,
            ),
            Method::Kde => Box::new(kde_fit(&x, None, Some(grid))?),
        };
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(Row {
            case: cfg.case.clone(),
            n,
            rep,
            method,
            ise: ise_against(truth, model.as_ref(), grid),
            runtime_ms,
        });
    }
    Ok(rows)
}

/// Runs every (size, replication) pair, replications in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentResult> {
    cfg.validate()?;
    let reference = ReferenceDensity::from_name(&cfg.case).map_err(|e| CliError::Io(e.to_string()))?;
    let space = reference.space();
    let grid = cfg.grid.unwrap_or_else(|| ise_grid(space));
    let mode = cfg.mode.unwrap_or_else(|| default_mode(&reference));
    let truth = reference.density_on_grid(&grid);

    let jobs: Vec<(usize, usize)> = cfg.sizes.iter().flat_map(|&n| (0..cfg.replications).map(move |r| (n, r))).collect();
    let per_job: Vec<CliResult<Vec<Row>>> = jobs
        .par_iter()
        .map(|&(n, rep)| one_replication(cfg, &reference, &truth, &grid, mode, n, rep))
        .collect();
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }

    let mut summary = Vec::new();
    for &n in &cfg.sizes {
        for &method in &cfg.methods {
            let sel: Vec<&Row> = rows.iter().filter(|r| r.n == n && r.method == method).collect();
            let k = sel.len() as f64;
            let mean = sel.iter().map(|r| r.ise).sum::<f64>() / k;
            let sd = if sel.len() > 1 {
                (sel.iter().map(|r| (r.ise - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            summary.push(SummaryRow {
                n,
                method,
                mean_ise: mean,
                sd_ise: sd,
                mean_runtime_ms: sel.iter().map(|r| r.runtime_ms).sum::<f64>() / k,
            });
        }
    }
    Ok(ExperimentResult { rows, summary })
}
