//! Benchmark harness: runs clustering variants across a grid of
//! simulated scenarios and perturbation levels, scores them against the
//! generating labels, and renders result tables.
//!
//! Reproducibility contract: every cell of the grid derives its own RNG
//! seed by hashing `(base_seed, scenario, level, variant, replicate)`
//! with FNV-1a, so results are independent of execution order and thread
//! count, and two runs with the same configuration produce byte-identical
//! output. Cells that fail (e.g. a degenerate kernel) are reported as
//! error rows; the rest of the grid still runs.

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernels::{KernelBundle, KernelSpec, DEFAULT_RBF_GAMMA};
use crate::metrics::{adjusted_rand_index, normalized_mutual_information, purity, NmiMode};
use crate::rounding::{round_assignment, DEFAULT_KMEANS_STARTS};
use crate::simgen::{generate, Perturbation, Scenario, ScenarioSpec};
use crate::solver::{solve, SolveConfig, SolveResult, Variant, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Default base seed for the benchmark grid.
pub const DEFAULT_BASE_SEED: u64 = 17;

/// Clustering quality score computed against ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Adjusted Rand index.
    Ari,
    /// Normalized mutual information with natural-log entropies.
    NmiStandard,
    /// Normalized mutual information with base-2 entropies.
    NmiLog2,
    /// Fraction of samples in their cluster's majority class.
    Purity,
}

impl MetricKind {
    /// All metrics, in canonical order.
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Ari,
        MetricKind::NmiStandard,
        MetricKind::NmiLog2,
        MetricKind::Purity,
    ];

    /// Score a predicted labeling against the truth.
    pub fn compute(&self, predicted: &[usize], truth: &[usize]) -> Result<f64> {
        match self {
            MetricKind::Ari => adjusted_rand_index(predicted, truth),
            MetricKind::NmiStandard => {
                normalized_mutual_information(predicted, truth, NmiMode::Standard)
            }
            MetricKind::NmiLog2 => {
                normalized_mutual_information(predicted, truth, NmiMode::Log2)
            }
            MetricKind::Purity => purity(predicted, truth),
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            MetricKind::Ari => "ari",
            MetricKind::NmiStandard => "nmi",
            MetricKind::NmiLog2 => "nmi-log2",
            MetricKind::Purity => "purity",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ari" => Ok(MetricKind::Ari),
            "nmi" => Ok(MetricKind::NmiStandard),
            "nmi-log2" => Ok(MetricKind::NmiLog2),
            "purity" => Ok(MetricKind::Purity),
            other => Err(Error::InvalidInput(format!(
                "unknown metric `{other}` (expected ari, nmi, nmi-log2, or purity)"
            ))),
        }
    }
}

/// Stable text label for a perturbation level, used in table rows, cell
/// seeds, and trajectory file names.
pub fn level_label(p: &Perturbation) -> String {
    match p {
        Perturbation::None => "none".to_string(),
        Perturbation::Noise { count } => format!("noise{count}"),
        Perturbation::Redundant { count, rho } => format!("redun{count}-{rho:.2}"),
    }
}

/// Full grid of benchmark cells: the cross product of scenarios,
/// perturbation levels, and solver variants, each run for a fixed number
/// of replicates and scored on every configured metric.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    /// Scenario geometries to simulate.
    pub scenarios: Vec<Scenario>,
    /// Perturbation levels applied to the first view.
    pub levels: Vec<Perturbation>,
    /// Solver variants to compare.
    pub variants: Vec<Variant>,
    /// Metrics computed for every cell.
    pub metrics: Vec<MetricKind>,
    /// Independent repetitions per cell (averaged).
    pub replicates: usize,
    /// Seed hashed into every cell's RNG stream.
    pub base_seed: u64,
    /// Samples per cluster in each simulated dataset.
    pub n_per_cluster: usize,
    /// Informative features per view.
    pub p: usize,
    /// Cluster mean separation.
    pub mu_sep: f64,
    /// Number of clusters requested from the solver.
    pub k: usize,
    /// Gaussian kernel width used for every view.
    pub rbf_gamma: f64,
    /// Restarts for the k-means rounding step.
    pub kmeans_starts: usize,
    /// Solver iteration cap.
    pub max_iter: usize,
    /// Solver convergence tolerance.
    pub tol: f64,
}

impl ExperimentGrid {
    /// The full comparison grid at desk scale: scenarios A/B/C, noise
    /// levels 0..=5 and 10, redundant levels over correlations
    /// {0.45, 0.72, 0.90, 0.97, 1.0} with 2 and 4 copies, all five
    /// variants, five replicates.
    pub fn table_preset() -> Self {
        let mut levels = vec![Perturbation::None];
        for count in [1usize, 2, 3, 4, 5, 10] {
            levels.push(Perturbation::Noise { count });
        }
        for count in [2usize, 4] {
            for rho in [0.45, 0.72, 0.90, 0.97, 1.0] {
                levels.push(Perturbation::Redundant { count, rho });
            }
        }
        ExperimentGrid {
            scenarios: vec![Scenario::A, Scenario::B, Scenario::C],
            levels,
            variants: Variant::ALL.to_vec(),
            metrics: vec![MetricKind::Ari, MetricKind::NmiLog2, MetricKind::Purity],
            replicates: 5,
            base_seed: DEFAULT_BASE_SEED,
            n_per_cluster: 100,
            p: 10,
            mu_sep: crate::simgen::DEFAULT_MU_SEP,
            k: 3,
            rbf_gamma: DEFAULT_RBF_GAMMA,
            kmeans_starts: DEFAULT_KMEANS_STARTS,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }

    /// Check the grid is runnable.
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidInput("grid has no scenarios".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("grid has no perturbation levels".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidInput("grid has no variants".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidInput("grid has no metrics".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicates must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidInput(format!("k must be at least 2, got {}", self.k)));
        }
        if !(self.rbf_gamma.is_finite() && self.rbf_gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rbf_gamma must be positive and finite, got {}",
                self.rbf_gamma
            )));
        }
        if self.kmeans_starts == 0 {
            return Err(Error::InvalidInput("kmeans_starts must be at least 1".into()));
        }
        // Reuse the simulation validator for the shared fields.
        let mut probe = ScenarioSpec::new(Scenario::A, self.base_seed);
        probe.n_per_cluster = self.n_per_cluster;
        probe.p = self.p;
        probe.mu_sep = self.mu_sep;
        for level in &self.levels {
            probe.perturbation = level.clone();
            probe.validate()?;
        }
        Ok(())
    }
}

/// TOML-friendly grid description; every field is optional and falls
/// back to the corresponding [`ExperimentGrid::table_preset`] value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Scenario names, e.g. `["A", "B"]`.
    pub scenarios: Option<Vec<String>>,
    /// Noise-column counts; `0` means the unperturbed level.
    pub noise: Option<Vec<usize>>,
    /// Redundant-copy counts, crossed with `redundant_rhos`.
    pub redundant_counts: Option<Vec<usize>>,
    /// Redundant-copy correlations, crossed with `redundant_counts`.
    pub redundant_rhos: Option<Vec<f64>>,
    /// Variant names, e.g. `["minmax", "uniform"]`.
    pub variants: Option<Vec<String>>,
    /// Metric names, e.g. `["ari", "purity"]`.
    pub metrics: Option<Vec<String>>,
    /// Repetitions per cell.
    pub replicates: Option<usize>,
    /// Base RNG seed.
    pub base_seed: Option<u64>,
    /// Samples per cluster.
    pub n_per_cluster: Option<usize>,
    /// Informative features per view.
    pub p: Option<usize>,
    /// Cluster mean separation.
    pub mu_sep: Option<f64>,
    /// Number of clusters.
    pub k: Option<usize>,
    /// Gaussian kernel width.
    pub rbf_gamma: Option<f64>,
    /// k-means restarts.
    pub kmeans_starts: Option<usize>,
    /// Solver iteration cap.
    pub max_iter: Option<usize>,
    /// Solver convergence tolerance.
    pub tol: Option<f64>,
}

impl GridConfig {
    /// Parse a TOML document into a config; parse errors name the
    /// offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("bad benchmark config: {e}")))
    }

    /// Resolve the config against preset defaults into a runnable grid.
    pub fn resolve(&self) -> Result<ExperimentGrid> {
        let preset = ExperimentGrid::table_preset();
        let mut grid = preset.clone();

        if let Some(names) = &self.scenarios {
            grid.scenarios = names
                .iter()
                .map(|s| s.parse::<Scenario>())
                .collect::<Result<Vec<_>>>()?;
        }
        let noise_given = self.noise.is_some();
        let redun_given = self.redundant_counts.is_some() || self.redundant_rhos.is_some();
        if noise_given || redun_given {
            let mut levels = Vec::new();
            let noise = self.noise.clone().unwrap_or_else(|| vec![0]);
            for count in noise {
                if count == 0 {
                    if !levels.contains(&Perturbation::None) {
                        levels.push(Perturbation::None);
                    }
                } else {
                    levels.push(Perturbation::Noise { count });
                }
            }
            if redun_given {
                let counts = self.redundant_counts.clone().unwrap_or_else(|| vec![2, 4]);
                let rhos = self
                    .redundant_rhos
                    .clone()
                    .unwrap_or_else(|| vec![0.45, 0.72, 0.90, 0.97, 1.0]);
                for count in &counts {
                    for rho in &rhos {
                        levels.push(Perturbation::Redundant { count: *count, rho: *rho });
                    }
                }
            }
            grid.levels = levels;
        }
        if let Some(names) = &self.variants {
            grid.variants = names
                .iter()
                .map(|s| s.parse::<Variant>())
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(names) = &self.metrics {
            grid.metrics = names
                .iter()
                .map(|s| s.parse::<MetricKind>())
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(v) = self.replicates {
            grid.replicates = v;
        }
        if let Some(v) = self.base_seed {
            grid.base_seed = v;
        }
        if let Some(v) = self.n_per_cluster {
            grid.n_per_cluster = v;
        }
        if let Some(v) = self.p {
            grid.p = v;
        }
        if let Some(v) = self.mu_sep {
            grid.mu_sep = v;
        }
        if let Some(v) = self.k {
            grid.k = v;
        }
        if let Some(v) = self.rbf_gamma {
            grid.rbf_gamma = v;
        }
        if let Some(v) = self.kmeans_starts {
            grid.kmeans_starts = v;
        }
        if let Some(v) = self.max_iter {
            grid.max_iter = v;
        }
        if let Some(v) = self.tol {
            grid.tol = v;
        }

        grid.validate()?;
        Ok(grid)
    }
}

/// One output row: a (scenario, level, variant) cell scored on one
/// metric, averaged over replicates.
#[derive(Debug, Clone)]
pub struct ResultRow {
    /// Scenario label, e.g. `"B"`.
    pub scenario: String,
    /// Perturbation level label, e.g. `"noise3"`.
    pub level: String,
    /// Variant label, e.g. `"minmax"`.
    pub variant: String,
    /// Metric label, e.g. `"ari"`.
    pub metric: String,
    /// Mean score over replicates; `NaN` for error rows.
    pub value: f64,
    /// Elementwise mean of the final view weights over replicates.
    pub theta_final: Vec<f64>,
    /// Mean iteration count over replicates.
    pub iterations: f64,
    /// Whether every replicate converged within the iteration cap.
    pub converged: bool,
    /// First failure message if any replicate errored.
    pub error: Option<String>,
}

/// Output of a full grid run.
#[derive(Debug, Clone)]
pub struct GridRun {
    /// Scored rows in deterministic (scenario, level, variant, metric) order.
    pub rows: Vec<ResultRow>,
    /// `(cell label, trajectory CSV)` for each successful cell's first replicate.
    pub trajectories: Vec<(String, String)>,
    /// True if any cell produced an error row.
    pub any_error: bool,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Deterministic per-cell seed: FNV-1a over the base seed and the cell's
/// labels. Stable across platforms, runs, and execution order.
pub fn cell_seed(
    base_seed: u64,
    scenario: &str,
    level: &str,
    variant: &str,
    replicate: usize,
) -> u64 {
    let mut h = FNV_OFFSET;
    h = fnv1a_extend(h, &base_seed.to_le_bytes());
    h = fnv1a_extend(h, scenario.as_bytes());
    h = fnv1a_extend(h, b"/");
    h = fnv1a_extend(h, level.as_bytes());
    h = fnv1a_extend(h, b"/");
    h = fnv1a_extend(h, variant.as_bytes());
    h = fnv1a_extend(h, b"/");
    h = fnv1a_extend(h, &(replicate as u64).to_le_bytes());
    h
}

struct ReplicateOutcome {
    scores: Vec<f64>,
    theta: Vec<f64>,
    iterations: usize,
    converged: bool,
    result: SolveResult,
}

fn run_replicate(
    grid: &ExperimentGrid,
    scenario: Scenario,
    level: &Perturbation,
    variant: Variant,
    replicate: usize,
) -> Result<ReplicateOutcome> {
    let scenario_label = scenario.to_string();
    let level_text = level_label(level);
    let variant_label = variant.to_string();
    let seed = cell_seed(grid.base_seed, &scenario_label, &level_text, &variant_label, replicate);

    let mut spec = ScenarioSpec::new(scenario, seed);
    spec.perturbation = level.clone();
    spec.n_per_cluster = grid.n_per_cluster;
    spec.p = grid.p;
    spec.mu_sep = grid.mu_sep;
    let data = generate(&spec)?;

    let bundle = KernelBundle::from_views(
        &data.views,
        &[KernelSpec::Rbf { gamma: grid.rbf_gamma }],
    )?;

    let mut config = SolveConfig::new(grid.k, variant);
    config.max_iter = grid.max_iter;
    config.tol = grid.tol;
    config.seed = seed;
    let result = solve(&bundle, &config)?;

    // Separate stream for the rounding restarts so k-means draws are
    // decoupled from the data draws.
    let round_seed = fnv1a_extend(fnv1a_extend(FNV_OFFSET, &seed.to_le_bytes()), b"round");
    let outcome = round_assignment(
        result.embedding.matrix(),
        grid.k,
        grid.kmeans_starts,
        round_seed,
    )?;

    let truth = data.truth.labels();
    let predicted = outcome.assignment.labels();
    let scores = grid
        .metrics
        .iter()
        .map(|m| m.compute(predicted, truth))
        .collect::<Result<Vec<f64>>>()?;

    Ok(ReplicateOutcome {
        scores,
        theta: result.theta.theta().to_vec(),
        iterations: result.iterations(),
        converged: result.converged,
        result,
    })
}

fn run_cell(
    grid: &ExperimentGrid,
    scenario: Scenario,
    level: &Perturbation,
    variant: Variant,
) -> (Vec<ResultRow>, Option<(String, String)>) {
    let scenario_label = scenario.to_string();
    let level_text = level_label(level);
    let variant_label = variant.to_string();
    let cell_label = format!("{scenario_label}-{level_text}-{variant_label}");

    let mut outcomes = Vec::with_capacity(grid.replicates);
    let mut first_error: Option<String> = None;
    for replicate in 0..grid.replicates {
        match run_replicate(grid, scenario, level, variant, replicate) {
            Ok(outcome) => outcomes.push(outcome),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e.to_string());
                }
            }
        }
    }

    if let Some(msg) = first_error {
        let rows = grid
            .metrics
            .iter()
            .map(|metric| ResultRow {
                scenario: scenario_label.clone(),
                level: level_text.clone(),
                variant: variant_label.clone(),
                metric: metric.to_string(),
                value: f64::NAN,
                theta_final: Vec::new(),
                iterations: 0.0,
                converged: false,
                error: Some(msg.clone()),
            })
            .collect();
        return (rows, None);
    }

    let reps = outcomes.len() as f64;
    let m = outcomes[0].theta.len();
    let mut theta_mean = vec![0.0; m];
    for outcome in &outcomes {
        for (acc, v) in theta_mean.iter_mut().zip(&outcome.theta) {
            *acc += v / reps;
        }
    }
    let iterations = outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / reps;
    let converged = outcomes.iter().all(|o| o.converged);

    let rows = grid
        .metrics
        .iter()
        .enumerate()
        .map(|(mi, metric)| ResultRow {
            scenario: scenario_label.clone(),
            level: level_text.clone(),
            variant: variant_label.clone(),
            metric: metric.to_string(),
            value: outcomes.iter().map(|o| o.scores[mi]).sum::<f64>() / reps,
            theta_final: theta_mean.clone(),
            iterations,
            converged,
            error: None,
        })
        .collect();

    let trajectory = (cell_label.clone(), emit_theta_trajectory(&outcomes[0].result));
    (rows, Some(trajectory))
}

/// Run every cell of the grid and assemble rows in deterministic order.
/// Cells run in parallel on the current rayon pool; failures become
/// error rows instead of aborting the run.
pub fn run_grid(grid: &ExperimentGrid) -> Result<GridRun> {
    grid.validate()?;

    let mut cells = Vec::new();
    for scenario in &grid.scenarios {
        for level in &grid.levels {
            for variant in &grid.variants {
                cells.push((*scenario, level.clone(), *variant));
            }
        }
    }

    let outputs: Vec<(Vec<ResultRow>, Option<(String, String)>)> = cells
        .par_iter()
        .map(|(scenario, level, variant)| run_cell(grid, *scenario, level, *variant))
        .collect();

    let mut rows = Vec::new();
    let mut trajectories = Vec::new();
    let mut any_error = false;
    for (cell_rows, trajectory) in outputs {
        any_error |= cell_rows.iter().any(|r| r.error.is_some());
        rows.extend(cell_rows);
        if let Some(t) = trajectory {
            trajectories.push(t);
        }
    }

    Ok(GridRun { rows, trajectories, any_error })
}

/// Output format for [`emit_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Machine-readable CSV with full-precision floats.
    Csv,
    /// Markdown table with three-decimal floats.
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::InvalidInput(format!(
                "unknown table format `{other}` (expected csv or markdown)"
            ))),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render result rows as a table. The leading columns are always
/// `scenario, level, variant, metric, value`; the CSV form appends the
/// diagnostic columns and keeps full float precision, while the Markdown
/// form shows scores to three decimals.
pub fn emit_table(rows: &[ResultRow], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut out = String::from(
                "scenario,level,variant,metric,value,theta_final,iterations,converged,error\n",
            );
            for row in rows {
                let value = if row.value.is_nan() {
                    String::new()
                } else {
                    format!("{}", row.value)
                };
                let theta = row
                    .theta_final
                    .iter()
                    .map(|v| format!("{v}"))
                    .collect::<Vec<_>>()
                    .join(";");
                let error = row.error.as_deref().unwrap_or("");
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    csv_field(&row.scenario),
                    csv_field(&row.level),
                    csv_field(&row.variant),
                    csv_field(&row.metric),
                    value,
                    theta,
                    row.iterations,
                    row.converged,
                    csv_field(error),
                ));
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = String::from("| scenario | level | variant | metric | value |\n");
            out.push_str("| --- | --- | --- | --- | --- |\n");
            for row in rows {
                let value = if row.value.is_nan() {
                    row.error.clone().unwrap_or_else(|| "error".to_string())
                } else {
                    format!("{:.3}", row.value)
                };
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    row.scenario, row.level, row.variant, row.metric, value
                ));
            }
            out
        }
    }
}

/// Render a solve's per-iteration view weights as CSV with columns
/// `iter,theta_1..theta_m,objective,delta`.
pub fn emit_theta_trajectory(result: &SolveResult) -> String {
    let m = result.theta.theta().len();
    let mut out = String::from("iter");
    for v in 1..=m {
        out.push_str(&format!(",theta_{v}"));
    }
    out.push_str(",objective,delta\n");
    for (i, record) in result.trace.records().iter().enumerate() {
        out.push_str(&format!("{}", i + 1));
        for v in &record.theta {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{},{}\n", record.objective, record.delta));
    }
    out
}
