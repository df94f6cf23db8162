//! Command-line front end: cluster multi-view data from CSV files, run
//! the simulation benchmark grid, or generate simulated datasets.
//!
//! Exit codes: 0 success, 1 benchmark finished with failed cells,
//! 2 invalid input or usage, 3 numerical degeneracy.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mkkc::bench::{emit_table, run_grid, ExperimentGrid, GridConfig, TableFormat};
use mkkc::io::{read_labels_csv, read_matrix_csv, write_labels_csv, write_matrix_csv};
use mkkc::kernels::{standardize_columns, KernelBundle, KernelSpec};
use mkkc::metrics::{adjusted_rand_index, normalized_mutual_information, purity, NmiMode};
use mkkc::rounding::{round_assignment, DEFAULT_KMEANS_STARTS};
use mkkc::simgen::{
    generate, Perturbation, Scenario, ScenarioSpec, DEFAULT_FEATURES, DEFAULT_MU_SEP,
    DEFAULT_N_PER_CLUSTER,
};
use mkkc::solver::{solve, SolveConfig, Variant, DEFAULT_MAX_ITER, DEFAULT_TOL};
use mkkc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mkkc",
    version,
    about = "Min-max multiple kernel k-means clustering",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster multi-view data given as one CSV file per view.
    Cluster(ClusterArgs),
    /// Run the simulation benchmark grid and write result tables.
    Bench(BenchArgs),
    /// Generate a simulated multi-view dataset with known clusters.
    Simgen(SimgenArgs),
}

#[derive(Args)]
struct ClusterArgs {
    /// Per-view data CSV (rows are samples, columns are features);
    /// repeat the flag once per view.
    #[arg(long = "view", value_name = "FILE", required = true)]
    views: Vec<PathBuf>,

    /// Kernel per view: `rbf`, `rbf:<gamma>`, `rbf-paper-real`, or
    /// `linear`. Give the flag once to use the same kernel for every
    /// view, or once per view.
    #[arg(long = "kernel", value_name = "SPEC", default_values_t = vec!["rbf".to_string()])]
    kernels: Vec<String>,

    /// Width for plain `rbf` kernels, replacing the built-in gamma 0.5:
    /// either a number sigma, mapping the k(x,y) = exp(-|x-y|^2/(2
    /// sigma^2)) convention to gamma = 1/(2 sigma^2), or `paper-real`,
    /// which sets gamma = 1/(2 + p^2) for a view with p features.
    #[arg(long = "rbf-sigma", value_name = "SIGMA|paper-real")]
    rbf_sigma: Option<String>,

    /// Number of clusters (at least 2).
    #[arg(short, long)]
    k: usize,

    /// Weighting variant: minmax, minmax-minc, minmin, uniform, or
    /// single-best.
    #[arg(long, default_value = "minmax")]
    variant: String,

    /// Iteration cap for the alternating solver.
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,

    /// Convergence tolerance on the weight step.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Lower bound per view weight for the minmax-minc variant
    /// (default 0.5/m).
    #[arg(long)]
    minc_floor: Option<f64>,

    /// Restarts for the k-means rounding step.
    #[arg(long, default_value_t = DEFAULT_KMEANS_STARTS)]
    n_starts: usize,

    /// RNG seed for the rounding step.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Standardize each feature column (mean 0, unit variance) before
    /// building kernels.
    #[arg(long)]
    standardize: bool,

    /// Optional ground-truth labels CSV; when given, summary.json
    /// includes ari/nmi/purity scores.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,

    /// NMI entropy base when scoring against --truth: standard
    /// (natural log) or log2.
    #[arg(long, default_value = "standard")]
    nmi_mode: String,

    /// Directory for assignments.csv, theta.csv, and summary.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid description in TOML; omitted keys fall back to the
    /// `paper-tables` preset values.
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in grid preset; `paper-tables` is the full comparison grid
    /// (default when no --config is given).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Base seed hashed into every cell (overrides config/preset).
    #[arg(long)]
    base_seed: Option<u64>,

    /// Directory for results.csv and per-cell theta trajectories.
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,

    /// Summary table printed to stdout: markdown or csv.
    #[arg(long, default_value = "markdown")]
    format: String,
}

#[derive(Args)]
struct SimgenArgs {
    /// Scenario geometry: A, B, or C.
    #[arg(long)]
    scenario: String,

    /// Append this many pure-noise columns to view 1.
    #[arg(long, value_name = "COUNT", conflicts_with_all = ["redundant", "rho"])]
    noise: Option<usize>,

    /// Append this many redundant near-copies of view 1 columns.
    #[arg(long, value_name = "COUNT", requires = "rho")]
    redundant: Option<usize>,

    /// Correlation of each redundant copy with its source column,
    /// in (0, 1].
    #[arg(long, requires = "redundant")]
    rho: Option<f64>,

    /// Samples per cluster (three clusters are always generated).
    #[arg(long, default_value_t = DEFAULT_N_PER_CLUSTER)]
    n_per_cluster: usize,

    /// Informative features per view.
    #[arg(long, default_value_t = DEFAULT_FEATURES)]
    features: usize,

    /// Cluster mean separation.
    #[arg(long, default_value_t = DEFAULT_MU_SEP)]
    mu_sep: f64,

    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory for view_<i>.csv and truth.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Summary {
    k: usize,
    variant: String,
    n_samples: usize,
    n_views: usize,
    objective: f64,
    iterations: usize,
    converged: bool,
    eigengap_warning: bool,
    theta: Vec<f64>,
    rounding_wcss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<BTreeMap<String, f64>>,
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Simgen(args) => cmd_simgen(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Cap the worker pool when MKKC_THREADS is set to a positive integer.
fn init_threads() {
    if let Ok(text) = std::env::var("MKKC_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Write via a temporary file plus rename so the destination is never
/// observed partially written.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn resolve_kernel_specs(args: &ClusterArgs) -> Result<Vec<KernelSpec>> {
    let override_spec = match args.rbf_sigma.as_deref() {
        None => None,
        Some("paper-real") => Some(KernelSpec::RbfDimScaled),
        Some(text) => {
            let sigma: f64 = text.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "--rbf-sigma expects a positive number or `paper-real`, got `{text}`"
                ))
            })?;
            if !sigma.is_finite() || sigma <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "--rbf-sigma must be positive and finite, got {sigma}"
                )));
            }
            Some(KernelSpec::Rbf { gamma: 1.0 / (2.0 * sigma * sigma) })
        }
    };

    let mut specs = Vec::with_capacity(args.kernels.len());
    for token in &args.kernels {
        let spec = if token == "rbf" {
            override_spec.unwrap_or(KernelSpec::Rbf { gamma: mkkc::kernels::DEFAULT_RBF_GAMMA })
        } else {
            token.parse::<KernelSpec>()?
        };
        specs.push(spec);
    }
    Ok(specs)
}

fn cmd_cluster(args: &ClusterArgs) -> Result<ExitCode> {
    if args.k < 2 {
        return Err(Error::InvalidInput(format!("k must be at least 2, got {}", args.k)));
    }
    let variant: Variant = args.variant.parse()?;
    let specs = resolve_kernel_specs(args)?;
    if specs.len() != 1 && specs.len() != args.views.len() {
        return Err(Error::InvalidInput(format!(
            "give --kernel once or once per view ({} views, {} kernels)",
            args.views.len(),
            specs.len()
        )));
    }

    let mut views = Vec::with_capacity(args.views.len());
    for path in &args.views {
        let mut view = read_matrix_csv(path).map_err(|e| match e {
            Error::Csv { line, msg } => {
                Error::Csv { line, msg: format!("{}: {msg}", path.display()) }
            }
            other => other,
        })?;
        if args.standardize {
            standardize_columns(&mut view)?;
        }
        views.push(view);
    }

    let bundle = KernelBundle::from_views(&views, &specs)?;
    let mut config = SolveConfig::new(args.k, variant);
    config.max_iter = args.max_iter;
    config.tol = args.tol;
    config.seed = args.seed;
    config.minc_floor = args.minc_floor;
    let result = solve(&bundle, &config)?;
    let outcome = round_assignment(result.embedding.matrix(), args.k, args.n_starts, args.seed)?;

    let metrics = match &args.truth {
        None => None,
        Some(path) => {
            let truth = read_labels_csv(path)?;
            let nmi_mode = match args.nmi_mode.as_str() {
                "standard" => NmiMode::Standard,
                "log2" => NmiMode::Log2,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown NMI mode `{other}` (expected standard or log2)"
                    )))
                }
            };
            let predicted = outcome.assignment.labels();
            let mut scores = BTreeMap::new();
            scores.insert("ari".to_string(), adjusted_rand_index(predicted, &truth)?);
            scores.insert(
                "nmi".to_string(),
                normalized_mutual_information(predicted, &truth, nmi_mode)?,
            );
            scores.insert("purity".to_string(), purity(predicted, &truth)?);
            Some(scores)
        }
    };

    fs::create_dir_all(&args.out_dir)?;
    write_labels_csv(&args.out_dir.join("assignments.csv"), outcome.assignment.labels())?;

    let mut theta_csv = String::from("view,theta\n");
    for (i, w) in result.theta.theta().iter().enumerate() {
        theta_csv.push_str(&format!("{},{w}\n", i + 1));
    }
    write_atomic(&args.out_dir.join("theta.csv"), &theta_csv)?;

    let summary = Summary {
        k: args.k,
        variant: variant.to_string(),
        n_samples: bundle.n(),
        n_views: bundle.len(),
        objective: result.objective,
        iterations: result.iterations(),
        converged: result.converged,
        eigengap_warning: result.eigengap_warning,
        theta: result.theta.theta().to_vec(),
        rounding_wcss: outcome.wcss,
        metrics,
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize summary: {e}")))?;
    write_atomic(&args.out_dir.join("summary.json"), &format!("{json}\n"))?;

    if !result.converged {
        eprintln!(
            "warning: weights did not converge within {} iterations",
            args.max_iter
        );
    }
    if result.eigengap_warning {
        eprintln!("warning: near-zero eigengap at the cluster cut; embedding is not unique");
    }
    println!(
        "wrote {} samples in {} clusters to {}",
        bundle.n(),
        args.k,
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let format: TableFormat = args.format.parse()?;
    let mut grid: ExperimentGrid = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            GridConfig::from_toml(&text)?.resolve()?
        }
        (None, Some(name)) => match name.as_str() {
            "paper-tables" => ExperimentGrid::table_preset(),
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown preset `{other}` (expected paper-tables)"
                )))
            }
        },
        (None, None) => ExperimentGrid::table_preset(),
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    };
    if let Some(seed) = args.base_seed {
        grid.base_seed = seed;
    }

    let run = run_grid(&grid)?;

    fs::create_dir_all(&args.out_dir)?;
    write_atomic(&args.out_dir.join("results.csv"), &emit_table(&run.rows, TableFormat::Csv))?;
    for (cell, csv) in &run.trajectories {
        write_atomic(&args.out_dir.join(format!("theta_{cell}.csv")), csv)?;
    }

    print!("{}", emit_table(&run.rows, format));
    eprintln!(
        "wrote {} rows and {} trajectories to {}",
        run.rows.len(),
        run.trajectories.len(),
        args.out_dir.display()
    );
    if run.any_error {
        eprintln!("warning: some cells failed; see the error column in results.csv");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simgen(args: &SimgenArgs) -> Result<ExitCode> {
    let scenario: Scenario = args.scenario.parse()?;
    let perturbation = match (args.noise, args.redundant, args.rho) {
        (None, None, None) => Perturbation::None,
        (Some(0), None, None) => Perturbation::None,
        (Some(count), None, None) => Perturbation::Noise { count },
        (None, Some(count), Some(rho)) => Perturbation::Redundant { count, rho },
        _ => unreachable!("clap enforces the flag pairing"),
    };

    let mut spec = ScenarioSpec::new(scenario, args.seed);
    spec.perturbation = perturbation;
    spec.n_per_cluster = args.n_per_cluster;
    spec.p = args.features;
    spec.mu_sep = args.mu_sep;
    let data = generate(&spec)?;

    fs::create_dir_all(&args.out_dir)?;
    for (i, view) in data.views.iter().enumerate() {
        write_matrix_csv(&args.out_dir.join(format!("view_{}.csv", i + 1)), view)?;
    }
    write_labels_csv(&args.out_dir.join("truth.csv"), data.truth.labels())?;

    println!(
        "wrote {} views of {} samples to {}",
        data.views.len(),
        data.views[0].nrows(),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
