//! Batch experiment runner: baseline and related-city models for every city,
//! evaluated and written out as CSV reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    aggregate, best_baseline_algorithm, evaluate_city, forecast_trace, EvalContext, EvalReport,
    ForecastPoint, MaseDenominator, Stratum, SummaryRow,
};
use crate::features::augment_dataset;
use crate::ingest::{build_cohort, load_case_series, load_city_meta, CityId, CityMeta, Cohort};
use crate::learn::{self, default_grid, grid_search, Algorithm, FeatureSubset, HyperParams, SplitCriterion, CV_SPLITS};
use crate::output;
use crate::preprocess::{split_and_normalize, DiseaseConfig, SplitSeries};
use crate::similarity::{rank_all, top_k, Criterion, NeighborRanking, SimilarityOptions};
use crate::week::{EpiWeek, WeekRange};

// ---------------------------------------------------------------------------
// configuration file
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    cities: PathBuf,
    gdp: PathBuf,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default)]
    seed: u64,
    jobs: Option<usize>,
    #[serde(default = "default_criteria")]
    criteria: Vec<Criterion>,
    #[serde(default = "default_k")]
    neighbors: Vec<usize>,
    #[serde(default = "default_algorithms")]
    algorithms: Vec<Algorithm>,
    #[serde(default)]
    include_anomalous: bool,
    #[serde(default = "yes")]
    forecasts: bool,
    #[serde(default)]
    haversine: bool,
    #[serde(default)]
    normalize_gdp: bool,
    #[serde(default)]
    grid: GridSection,
    disease: Vec<DiseaseSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiseaseSection {
    name: String,
    cases: PathBuf,
    train: (EpiWeek, EpiWeek),
    test: (EpiWeek, EpiWeek),
    gdp_years: (i32, i32),
    #[serde(default = "five")]
    lags: usize,
    #[serde(default = "one")]
    horizon: usize,
    seasonal_m: Option<usize>,
    #[serde(default = "four")]
    z_threshold: f64,
    #[serde(default)]
    mase_denominator: MaseDenominator,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    random_forest: Option<GridSpec>,
    gradient_boosting: Option<GridSpec>,
}

/// Cartesian grid; `max_depth = 0` means unlimited.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    n_trees: Vec<usize>,
    max_depth: Vec<usize>,
    #[serde(default)]
    learning_rate: Vec<f64>,
    split_criterion: Option<SplitCriterion>,
    bootstrap: Option<bool>,
    feature_subset: Option<FeatureSubset>,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}
fn default_criteria() -> Vec<Criterion> {
    vec![Criterion::None, Criterion::Geographic, Criterion::GdpDtw, Criterion::CasesDtw]
}
fn default_k() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::RandomForest, Algorithm::GradientBoosting]
}
fn yes() -> bool {
    true
}
fn five() -> usize {
    5
}
fn one() -> usize {
    1
}
fn four() -> f64 {
    4.0
}

impl GridSpec {
    fn expand(&self, algorithm: Algorithm) -> Vec<HyperParams> {
        let rates: Vec<f64> = match algorithm {
            Algorithm::RandomForest => vec![0.1],
            Algorithm::GradientBoosting if self.learning_rate.is_empty() => vec![0.1],
            Algorithm::GradientBoosting => self.learning_rate.clone(),
        };
        let mut grid = Vec::new();
        for &n_trees in &self.n_trees {
            for &depth in &self.max_depth {
                for &learning_rate in &rates {
                    let mut p = HyperParams::new(algorithm, n_trees);
                    p.max_depth = (depth > 0).then_some(depth);
                    p.learning_rate = learning_rate;
                    if let Some(c) = self.split_criterion {
                        p.split_criterion = c;
                    }
                    if let Some(b) = self.bootstrap {
                        p.bootstrap = b;
                    }
                    if let Some(f) = self.feature_subset {
                        p.feature_subset = f;
                    }
                    grid.push(p);
                }
            }
        }
        grid
    }
}

/// One disease: its settings and cases file.
#[derive(Debug, Clone)]
pub struct DiseaseRun {
    pub config: DiseaseConfig,
    pub cases: PathBuf,
}

/// What to fit for each city of a cohort.
#[derive(Debug, Clone)]
pub struct RunPlan {
    /// Related-city criteria; the `none` baseline always runs.
    pub criteria: Vec<Criterion>,
    pub k_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub grids: BTreeMap<Algorithm, Vec<HyperParams>>,
    pub seed: u64,
    pub similarity: SimilarityOptions,
    /// Criterion and neighbor count whose test forecasts are traced.
    pub trace: Option<(Criterion, usize)>,
}

impl RunPlan {
    /// Every (criterion, k) pair to fit, baseline first.
    pub fn configurations(&self) -> Vec<(Criterion, usize)> {
        let mut out = vec![(Criterion::None, 0)];
        let augmented: BTreeSet<Criterion> = self.criteria.iter().copied().filter(|c| *c != Criterion::None).collect();
        for c in augmented {
            let ks: BTreeSet<usize> = self.k_values.iter().copied().collect();
            out.extend(ks.into_iter().map(|k| (c, k)));
        }
        out
    }

    pub fn augmented_criteria(&self) -> Vec<Criterion> {
        self.configurations()
            .into_iter()
            .map(|(c, _)| c)
            .filter(|c| *c != Criterion::None)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn trace_target(&self) -> (Criterion, usize) {
        match self.trace {
            Some(t) if self.configurations().contains(&t) => t,
            _ => (Criterion::None, 0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub cities: PathBuf,
    pub gdp: PathBuf,
    pub out: PathBuf,
    pub diseases: Vec<DiseaseRun>,
    pub criteria: Vec<Criterion>,
    pub k_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub grids: BTreeMap<Algorithm, Vec<HyperParams>>,
    pub seed: u64,
    pub jobs: usize,
    /// Adds the all-cities stratum to `plotdata.csv`.
    pub include_anomalous: bool,
    pub forecasts: bool,
    pub haversine: bool,
    pub normalize_gdp: bool,
}

impl ExperimentConfig {
    /// Parses a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let diseases = file
            .disease
            .iter()
            .map(|d| DiseaseRun {
                config: DiseaseConfig {
                    disease: d.name.clone(),
                    train_range: WeekRange { start: d.train.0, end: d.train.1 },
                    test_range: WeekRange { start: d.test.0, end: d.test.1 },
                    lags: d.lags,
                    horizon: d.horizon,
                    seasonal_m: d.seasonal_m.unwrap_or(d.horizon),
                    z_threshold: d.z_threshold,
                    gdp_years: d.gdp_years,
                    mase_denominator: d.mase_denominator,
                },
                cases: resolve(&d.cases),
            })
            .collect();

        let grids = file
            .algorithms
            .iter()
            .map(|&a| {
                let spec = match a {
                    Algorithm::RandomForest => file.grid.random_forest.as_ref(),
                    Algorithm::GradientBoosting => file.grid.gradient_boosting.as_ref(),
                };
                (a, spec.map_or_else(|| default_grid(a), |s| s.expand(a)))
            })
            .collect();

        Ok(ExperimentConfig {
            cities: resolve(&file.cities),
            gdp: resolve(&file.gdp),
            out: resolve(&file.out),
            diseases,
            criteria: file.criteria,
            k_values: file.neighbors,
            algorithms: file.algorithms,
            grids,
            seed: file.seed,
            jobs: file
                .jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            include_anomalous: file.include_anomalous,
            forecasts: file.forecasts,
            haversine: file.haversine,
            normalize_gdp: file.normalize_gdp,
        })
    }

    /// Keeps only the named disease.
    pub fn select_disease(&mut self, name: &str) -> Result<()> {
        self.diseases.retain(|d| d.config.disease == name);
        if self.diseases.is_empty() {
            return Err(Error::Config(format!("no disease named `{name}` in config")));
        }
        Ok(())
    }

    pub fn plan_for(&self, disease: &DiseaseConfig) -> RunPlan {
        let mut similarity = SimilarityOptions::new(disease.gdp_years);
        similarity.haversine = self.haversine;
        similarity.normalize_gdp = self.normalize_gdp;
        RunPlan {
            criteria: self.criteria.clone(),
            k_values: self.k_values.clone(),
            algorithms: self.algorithms.clone(),
            grids: self.grids.clone(),
            seed: self.seed,
            similarity,
            trace: Some((Criterion::Geographic, 3)),
        }
    }
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

fn check_disease(config: &DiseaseConfig, out: &mut Vec<Diagnostic>) {
    let mut err = |m: String| {
        out.push(Diagnostic {
            severity: Severity::Error,
            message: format!("{}: {m}", config.disease),
        })
    };
    let (train, test) = (&config.train_range, &config.test_range);
    if train.end < train.start || test.end < test.start {
        err("a week range is reversed".into());
        return;
    }
    if train.end >= test.start && test.end >= train.start {
        err("ranges overlap".into());
    } else if test.start < train.start {
        err("test range precedes train range".into());
    } else if train.end.offset(1) != test.start {
        err("test range must start the week after the train range ends".into());
    }
    if config.lags == 0 || config.horizon == 0 || config.seasonal_m == 0 {
        err("lags, horizon and seasonal_m must be at least 1".into());
        return;
    }
    if !(config.z_threshold > 0.0) {
        err("z_threshold must be positive".into());
    }
    if config.gdp_years.0 > config.gdp_years.1 {
        err("gdp year range is reversed".into());
    }
    if config.seasonal_m < config.horizon || config.seasonal_m > config.lags + config.horizon - 1 {
        err(format!(
            "seasonal_m {} must lie in horizon..=lags+horizon-1",
            config.seasonal_m
        ));
    }
    let rows = train.len() as i64 - (config.lags + config.horizon) as i64 + 1;
    if rows < (CV_SPLITS + 1) as i64 {
        err(format!(
            "train range yields {rows} lagged rows, cross-validation needs at least {}",
            CV_SPLITS + 1
        ));
    }
}

/// Read-only checks of a configuration and the files it names.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |m: String| Diagnostic {
        severity: Severity::Error,
        message: m,
    };

    if config.criteria.is_empty() {
        out.push(error("at least one criterion is required".into()));
    }
    if config.k_values.iter().any(|k| !(1..=3).contains(k)) {
        out.push(error("neighbor counts must be in 1..=3".into()));
    }
    if config.algorithms.is_empty() {
        out.push(error("at least one algorithm is required".into()));
    }
    if config.jobs == 0 {
        out.push(error("jobs must be at least 1".into()));
    }
    for a in &config.algorithms {
        match config.grids.get(a) {
            Some(g) if !g.is_empty() => {
                for p in g {
                    if let Err(e) = p.validate() {
                        out.push(error(format!("{a} grid: {e}")));
                    }
                }
            }
            _ => out.push(error(format!("{a} grid is empty"))),
        }
    }
    if config.diseases.is_empty() {
        out.push(error("no disease configured".into()));
    }

    let meta = match load_city_meta(&config.cities, &config.gdp) {
        Ok(m) => Some(m),
        Err(e) => {
            out.push(error(e.to_string()));
            None
        }
    };
    for run in &config.diseases {
        let before = out.len();
        check_disease(&run.config, &mut out);
        let series = match load_case_series(&run.cases, &run.config.disease) {
            Ok(s) => s,
            Err(e) => {
                out.push(error(e.to_string()));
                continue;
            }
        };
        let (Some(meta), true) = (&meta, out.len() == before) else {
            continue;
        };
        match build_cohort(series, meta, &run.config) {
            Ok(cohort) => {
                let max_k = config.k_values.iter().copied().max().unwrap_or(0);
                let augmenting = config.criteria.iter().any(|c| *c != Criterion::None);
                if augmenting && max_k + 1 > cohort.len() {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        message: format!(
                            "{}: insufficient neighbor candidates: k={max_k} with a {}-city cohort",
                            run.config.disease,
                            cohort.len()
                        ),
                    });
                }
            }
            Err(e) => out.push(error(format!("{}: {e}", run.config.disease))),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// running
// ---------------------------------------------------------------------------

/// Seed for one fit, independent of scheduling order.
pub fn task_seed(master: u64, city: &CityId, criterion: Criterion, k: usize, algorithm: Algorithm) -> u64 {
    let digest = Sha256::digest(format!("{master}|{city}|{criterion}|{k}|{algorithm}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Everything produced for one cohort.
#[derive(Debug, Clone)]
pub struct CohortRun {
    pub disease: DiseaseConfig,
    pub reports: Vec<EvalReport>,
    pub summary: Vec<SummaryRow>,
    pub rankings: BTreeMap<Criterion, BTreeMap<CityId, NeighborRanking>>,
    /// Test forecasts for the traced configuration, per algorithm.
    pub traces: BTreeMap<String, Vec<(CityId, Vec<ForecastPoint>)>>,
    pub failures: Vec<(CityId, Criterion, usize, Algorithm, String)>,
    pub max_k: usize,
}

impl CohortRun {
    /// The algorithm whose results go to `plotdata.csv` and `forecasts.csv`.
    pub fn selected_algorithm(&self) -> Option<String> {
        best_baseline_algorithm(&self.summary, &self.disease.disease)
    }

    pub fn plot_rows(&self, include_all: bool) -> Vec<&SummaryRow> {
        let Some(alg) = self.selected_algorithm() else {
            return Vec::new();
        };
        self.summary
            .iter()
            .filter(|r| r.algorithm == alg && (include_all || r.stratum == Stratum::BelowThreshold))
            .collect()
    }
}

struct Task {
    city: CityId,
    criterion: Criterion,
    k: usize,
    algorithm: Algorithm,
}

struct TaskOutput {
    report: EvalReport,
    trace: Option<Vec<ForecastPoint>>,
}

fn run_task(
    task: &Task,
    cohort_splits: &BTreeMap<CityId, SplitSeries>,
    rankings: &BTreeMap<Criterion, BTreeMap<CityId, NeighborRanking>>,
    disease: &DiseaseConfig,
    plan: &RunPlan,
    traced: bool,
) -> Result<TaskOutput> {
    let neighbors = match task.criterion {
        Criterion::None => Vec::new(),
        c => {
            let ranking = rankings
                .get(&c)
                .and_then(|r| r.get(&task.city))
                .ok_or_else(|| Error::UnknownCity(task.city.to_string()))?;
            top_k(ranking, task.k)?
        }
    };
    let (train, test) = augment_dataset(&task.city, cohort_splits, &neighbors, disease)?;
    let grid = plan
        .grids
        .get(&task.algorithm)
        .ok_or_else(|| Error::Config(format!("no grid for {}", task.algorithm)))?;
    let seed = task_seed(plan.seed, &task.city, task.criterion, task.k, task.algorithm);
    let (best, cv_mae) = grid_search(&train, grid, seed)?;
    let model = learn::fit(&train, &best, seed)?;
    let split = &cohort_splits[&task.city];
    let ctx = EvalContext {
        city: &task.city,
        criterion: task.criterion,
        k_neighbors: task.k,
    };
    let report = evaluate_city(ctx, &model, &train, &test, split, disease)?;
    log::debug!(
        "{} {} {} k={} {}: cv mae {cv_mae:.4}, test mase {:?}",
        disease.disease,
        task.city,
        task.criterion,
        task.k,
        best,
        report.test_mase
    );
    let trace = if traced {
        Some(forecast_trace(&model, &test, split, disease)?)
    } else {
        None
    };
    Ok(TaskOutput { report, trace })
}

/// Fits and evaluates every configuration of `plan` for every city of
/// `cohort`. Runs on the current rayon pool; results do not depend on its size.
pub fn run_cohort(cohort: &Cohort, disease: &DiseaseConfig, plan: &RunPlan) -> Result<CohortRun> {
    disease.validate()?;
    let splits: BTreeMap<CityId, SplitSeries> = cohort
        .series
        .iter()
        .map(|(c, s)| Ok((c.clone(), split_and_normalize(s, disease)?)))
        .collect::<Result<_>>()?;

    let mut rankings = BTreeMap::new();
    for criterion in plan.augmented_criteria() {
        rankings.insert(criterion, rank_all(cohort, criterion, &splits, &plan.similarity)?);
    }

    let trace_target = plan.trace_target();
    let mut tasks = Vec::new();
    for city in cohort.cities() {
        for &algorithm in &plan.algorithms {
            for (criterion, k) in plan.configurations() {
                tasks.push(Task {
                    city: city.clone(),
                    criterion,
                    k,
                    algorithm,
                });
            }
        }
    }
    info!("{}: {} cities, {} fits", disease.disease, cohort.len(), tasks.len());

    let results: Vec<Result<TaskOutput>> = tasks
        .par_iter()
        .map(|t| {
            let traced = (t.criterion, t.k) == trace_target;
            run_task(t, &splits, &rankings, disease, plan, traced)
        })
        .collect();

    let mut reports = Vec::new();
    let mut traces: BTreeMap<String, Vec<(CityId, Vec<ForecastPoint>)>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (task, result) in tasks.iter().zip(results) {
        match result {
            Ok(out) => {
                if let Some(trace) = out.trace {
                    traces
                        .entry(out.report.algorithm.clone())
                        .or_default()
                        .push((task.city.clone(), trace));
                }
                reports.push(out.report);
            }
            Err(e) => {
                warn!(
                    "{}: city {} ({} k={} {}) skipped: {e}",
                    disease.disease, task.city, task.criterion, task.k, task.algorithm
                );
                failures.push((task.city.clone(), task.criterion, task.k, task.algorithm, e.to_string()));
            }
        }
    }
    reports.sort_by(|a, b| {
        (&a.city, &a.algorithm, a.criterion, a.k_neighbors).cmp(&(&b.city, &b.algorithm, b.criterion, b.k_neighbors))
    });
    let summary = aggregate(&reports, true);

    Ok(CohortRun {
        disease: disease.clone(),
        reports,
        summary,
        rankings,
        traces,
        failures,
        max_k: plan.k_values.iter().copied().max().unwrap_or(0),
    })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes the report files for one cohort into `dir`.
pub fn write_outputs(run: &CohortRun, dir: &Path, include_anomalous: bool, forecasts: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut path = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    output::write_reports(create(&path("reports.csv"))?, &run.reports)?;
    output::write_summary(create(&path("summary.csv"))?, &run.summary)?;
    output::write_plotdata(create(&path("plotdata.csv"))?, &run.plot_rows(include_anomalous))?;
    let rankings: Vec<(Criterion, Vec<&NeighborRanking>)> =
        run.rankings.iter().map(|(c, r)| (*c, r.values().collect())).collect();
    output::write_neighbors(create(&path("neighbors.csv"))?, &rankings, run.max_k)?;
    if forecasts {
        let empty = Vec::new();
        let traces = run
            .selected_algorithm()
            .and_then(|a| run.traces.get(&a))
            .unwrap_or(&empty);
        output::write_forecasts(create(&path("forecasts.csv"))?, traces)?;
    }
    Ok(written)
}

/// Outcome of a full experiment.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub runs: Vec<CohortRun>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn failed_fits(&self) -> usize {
        self.runs.iter().map(|r| r.failures.len()).sum()
    }
}

fn load_inputs(config: &ExperimentConfig) -> Result<Vec<(DiseaseConfig, Cohort)>> {
    let meta: BTreeMap<CityId, CityMeta> = load_city_meta(&config.cities, &config.gdp)?;
    config
        .diseases
        .iter()
        .map(|run| {
            let series = load_case_series(&run.cases, &run.config.disease)?;
            let cohort = build_cohort(series, &meta, &run.config)
                .map_err(|e| Error::Config(format!("{}: {e}", run.config.disease)))?;
            info!(
                "{}: cohort of {} cities ({} dropped)",
                run.config.disease,
                cohort.len(),
                cohort.dropped.len()
            );
            Ok((run.config.clone(), cohort))
        })
        .collect()
}

fn check(config: &ExperimentConfig) -> Result<()> {
    let problems: Vec<String> = validate(config)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.message)
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems.join("; ")))
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Output directory for one disease.
pub fn disease_dir(out: &Path, disease: &str) -> PathBuf {
    out.join(disease)
}

/// Loads every input, runs each disease, then writes `<out>/<disease>/*.csv`.
/// Nothing is written unless every input loads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    check(config)?;
    let inputs = load_inputs(config)?;
    let pool = pool(config.jobs)?;
    let runs = inputs
        .iter()
        .map(|(disease, cohort)| pool.install(|| run_cohort(cohort, disease, &config.plan_for(disease))))
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    for run in &runs {
        let dir = disease_dir(&config.out, &run.disease.disease);
        files.extend(write_outputs(run, &dir, config.include_anomalous, config.forecasts)?);
    }
    Ok(ExperimentOutcome { runs, files })
}

/// Writes `neighbors.csv` for one criterion per disease, listing `depth`
/// neighbors per target.
pub fn export_neighbors(config: &ExperimentConfig, criterion: Criterion, depth: usize) -> Result<Vec<PathBuf>> {
    if criterion == Criterion::None {
        return Err(Error::NoCriterion);
    }
    check(config)?;
    let inputs = load_inputs(config)?;
    let pool = pool(config.jobs)?;
    let mut files = Vec::new();
    for (disease, cohort) in &inputs {
        let splits: BTreeMap<CityId, SplitSeries> = cohort
            .series
            .iter()
            .map(|(c, s)| Ok((c.clone(), split_and_normalize(s, disease)?)))
            .collect::<Result<_>>()?;
        let plan = config.plan_for(disease);
        let rankings = pool.install(|| rank_all(cohort, criterion, &splits, &plan.similarity))?;
        let dir = disease_dir(&config.out, &disease.disease);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join("neighbors.csv");
        output::write_neighbors(create(&path)?, &[(criterion, rankings.values().collect())], depth)?;
        files.push(path);
    }
    Ok(files)
}
