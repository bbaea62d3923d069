use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lctree::clustering::{accuracy, em_mixture, frechet_mean, kmeanspp, ClusterAssignment, EmOptions, FrechetOptions};
use lctree::hull::Mode;
use lctree::integrate::{grid_csv, integrate_density, ise, Density, GridSpec};
use lctree::mle::{check_existence, fit, EstimateJson, FitOptions};
use lctree::refdensities::{kde_fit, ReferenceDensity};
use lctree::treespace::{geodesic, GeodesicKind};
use lctree::{Space, TreePoint};
use lctree_cli::experiment::{ise_grid, run_experiment, ExperimentConfig};
use lctree_cli::io::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lctree", version, about = "Log-concave density estimation on tree space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    /// Grid cell width (default depends on the command and tree space).
    #[arg(long)]
    grid_spacing: Option<f64>,
    /// Grid extent along every axis.
    #[arg(long)]
    grid_radius: Option<f64>,
}

impl GridArgs {
    fn given(&self) -> bool {
        self.grid_spacing.is_some() || self.grid_radius.is_some()
    }

    fn resolve(&self, default: GridSpec<f64>) -> CliResult<GridSpec<f64>> {
        GridSpec::new(self.grid_spacing.unwrap_or(default.spacing), self.grid_radius.unwrap_or(default.radius))
            .map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Logconcave,
    Bent,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterMethod {
    Em,
    Kmeanspp,
}

#[derive(Subcommand)]
enum Command {
    /// Geodesic between two points (inline JSON or files).
    Geodesic {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Fréchet mean of a point file.
    FrechetMean {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw points from a reference density.
    Sample {
        /// case1..case6, g1, g2 or mix.
        #[arg(long = "ref")]
        reference: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the log-concave (or bent) maximum likelihood estimate.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "logconcave")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        /// When given, also report the fitted density's integral on this grid.
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Fit a kernel density estimate.
    Kde {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Grid on which every kernel is normalized.
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Evaluate a model or reference density on a grid or at given points.
    Eval {
        #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
        model: Option<PathBuf>,
        #[arg(long = "ref")]
        reference: Option<String>,
        /// CSV of the density at every grid cell centre.
        #[arg(long)]
        grid_out: Option<PathBuf>,
        /// Point file; prints one density value per line.
        #[arg(long)]
        at: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Integrated squared error between a model and a reference density.
    Ise {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "ref")]
        reference: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check the sufficient condition for the MLE to exist; exit 1 if it fails.
    CheckExistence {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Cluster a point file.
    Cluster {
        #[arg(long, value_enum)]
        method: ClusterMethod,
        #[arg(long)]
        k: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated ISE experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Serialize)]
struct GeodesicOut {
    length: f64,
    kind: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    orthants: Vec<lctree::OrthantId>,
    breakpoints: Vec<TreePoint>,
    fractions: Vec<f64>,
}

#[derive(Serialize)]
struct EstimateSummary {
    sigma: f64,
    iterations: usize,
    normalization: f64,
    hull_converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_integral: Option<f64>,
}

#[derive(Serialize)]
struct T3Existence {
    space: Space,
    distinct_points: usize,
    overall: bool,
}

#[derive(Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
enum ClusterOut {
    Kmeanspp {
        #[serde(flatten)]
        assignment: ClusterAssignment,
        #[serde(skip_serializing_if = "Option::is_none")]
        accuracy: Option<f64>,
    },
    Em {
        labels: Vec<usize>,
        proportions: Vec<f64>,
        components: Vec<EstimateJson>,
        responsibilities: Vec<Vec<f64>>,
        loglik_trace: Vec<f64>,
        iterations: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        accuracy: Option<f64>,
    },
}

/// Unknown names are usage errors, not domain failures.
fn reference_by_name(name: &str) -> CliResult<ReferenceDensity> {
    ReferenceDensity::from_name(name).map_err(|e| CliError::Io(e.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Geodesic { a, b } => {
            let (p, q) = (read_point(&a)?, read_point(&b)?);
            let g = geodesic(&p, &q)?;
            let (kind, orthants) = match g.kind {
                GeodesicKind::SameOrthant => ("same_orthant", Vec::new()),
                GeodesicKind::Unfolded(o) => ("unfolded", o),
                GeodesicKind::ConePath => ("cone_path", Vec::new()),
            };
            let out = GeodesicOut { length: g.length, kind, orthants, breakpoints: g.breakpoints, fractions: g.fractions };
            println!("{}", to_json(&out));
        }
        Command::FrechetMean { input, seed } => {
            let pts = read_points(&input)?.points;
            let m = frechet_mean(&pts, None, &FrechetOptions { seed, ..Default::default() })?;
            println!("{}", to_json(&m));
        }
        Command::Sample { reference, n, seed, out } => {
            let r = reference_by_name(&reference)?;
            let header = SampleHeader { reference: r.clone(), n, seed };
            let text = if matches!(r.kind(), lctree::refdensities::RefKind::Mixture(_)) {
                let (pts, labels) = r.sample_labelled(n, seed)?;
                points_jsonl(&header, &pts, Some(&labels))
            } else {
                points_jsonl(&header, &r.sample(n, seed)?, None)
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Estimate { input, mode, out, grid } => {
            let pts = read_points(&input)?.points;
            let mode = match mode {
                ModeArg::Logconcave => Mode::LogConcave,
                ModeArg::Bent => Mode::Bent,
            };
            let est = fit(&pts, None, &FitOptions { mode, ..Default::default() })?;
            let grid_integral = if grid.given() {
                Some(integrate_density(&est, &grid.resolve(GridSpec::default_for(est.space()))?))
            } else {
                None
            };
            write_text(&out, &to_json(&ModelFile::Lcmle(EstimateJson::from(&est))))?;
            let s = EstimateSummary {
                sigma: est.sigma,
                iterations: est.trace.iterations,
                normalization: est.normalization,
                hull_converged: est.trace.hull_converged,
                grid_integral,
            };
            println!("{}", to_json(&s));
        }
        Command::Kde { input, bandwidth, out, grid } => {
            let pts = read_points(&input)?.points;
            let space = pts[0].space();
            let g = grid.resolve(GridSpec::default_for(space))?;
            let model = kde_fit(&pts, bandwidth, Some(&g))?;
            println!("{}", serde_json::json!({ "bandwidth": model.bandwidth, "n": model.samples.len() }));
            write_text(&out, &to_json(&ModelFile::Kde(model)))?;
        }
        Command::Eval { model, reference, grid_out, at, grid } => {
            let f: Box<dyn Density<f64> + Send + Sync> = match (model, reference) {
                (Some(m), _) => read_model(&m)?.into_density()?,
                (None, Some(r)) => Box::new(reference_by_name(&r)?),
                (None, None) => unreachable!("clap requires one of --model and --ref"),
            };
            if grid_out.is_none() && at.is_none() {
                return Err(CliError::Io("nothing to do: give --grid-out and/or --at".into()));
            }
            if let Some(path) = grid_out {
                let g = grid.resolve(GridSpec::default_for(f.space()))?;
                write_text(&path, &grid_csv(f.as_ref(), &g))?;
            }
            if let Some(path) = at {
                let pts = read_points(&path)?.points;
                let mut text = String::new();
                for p in &pts {
                    if p.space() != f.space() {
                        return Err(lctree::Error::SpaceMismatch.into());
                    }
                    text.push_str(&format!("{:e}\n", f.density(p)));
                }
                print!("{text}");
            }
        }
        Command::Ise { model, reference, grid } => {
            let f = read_model(&model)?.into_density()?;
            let r = reference_by_name(&reference)?;
            let g = grid.resolve(ise_grid(f.space()))?;
            println!("{:e}", ise(f.as_ref(), &r, &g)?);
        }
        Command::CheckExistence { input } => {
            let pts = read_points(&input)?.points;
            let overall = match pts[0].space() {
                Space::T4 => {
                    let rep = check_existence(&pts)?;
                    println!("{}", to_json(&rep));
                    rep.overall
                }
                Space::T3 => {
                    if pts.iter().any(|p| p.space() != Space::T3) {
                        return Err(lctree::Error::SpaceMismatch.into());
                    }
                    let mut distinct: Vec<TreePoint> = Vec::new();
                    for p in &pts {
                        if !distinct.iter().any(|q| q.approx_eq(p, 0.0)) {
                            distinct.push(*p);
                        }
                    }
                    let rep = T3Existence { space: Space::T3, distinct_points: distinct.len(), overall: distinct.len() >= 2 };
                    println!("{}", to_json(&rep));
                    rep.overall
                }
            };
            return Ok(if overall { 0 } else { 1 });
        }
        Command::Cluster { method, k, input, seed, out } => {
            let file = read_points(&input)?;
            let score = |labels: &[usize]| file.labels.as_ref().map(|t| accuracy(labels, t));
            let result = match method {
                ClusterMethod::Kmeanspp => {
                    let a = kmeanspp(&file.points, k, seed)?;
                    let acc = score(&a.labels);
                    ClusterOut::Kmeanspp { assignment: a, accuracy: acc }
                }
                ClusterMethod::Em => {
                    let m = em_mixture(&file.points, k, seed, &EmOptions::default())?;
                    let labels = m.labels();
                    let acc = score(&labels);
                    ClusterOut::Em {
                        labels,
                        proportions: m.proportions.clone(),
                        components: m.components.iter().map(EstimateJson::from).collect(),
                        responsibilities: m.responsibilities.clone(),
                        loglik_trace: m.loglik_trace.clone(),
                        iterations: m.iterations,
                        accuracy: acc,
                    }
                }
            };
            let acc = match &result {
                ClusterOut::Kmeanspp { accuracy, .. } | ClusterOut::Em { accuracy, .. } => *accuracy,
            };
            println!("{}", serde_json::json!({ "k": k, "accuracy": acc }));
            write_text(&out, &to_json(&result))?;
        }
        Command::Experiment { config } => {
            let cfg: ExperimentConfig = parse_json(&read_text(&config)?, &config.display().to_string())?;
            let res = run_experiment(&cfg)?;
            if let Some(dir) = &cfg.out_dir {
                write_text(&dir.join("ise.csv"), &res.rows_csv())?;
                write_text(&dir.join("summary.csv"), &res.summary_csv())?;
            }
            print!("{}", res.summary_csv());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
