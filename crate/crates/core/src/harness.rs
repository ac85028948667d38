//! Experiment orchestration: full and subsampled fits, comparison metrics,
//! repetitions and report artifacts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_scores, BaselineKind};
use crate::coreset::{build_coreset_timed, sample_weighted, subsample_for, BuildOptions, Direction, SamplingMethod, WeightedCoreset};
use crate::error::{invalid, IrtError, Result};
use crate::io::{
    read_file, read_responses, write_abilities, write_file, write_item_pairs, write_items, write_json, write_theta_pairs, write_trace,
    LabelFormat,
};
use crate::model::{full_nll, AbilityParameters, ItemParameters, ModelKind, ResponseMatrix, Row2};
use crate::mu::{mu_table, write_mu_csv, MuEstimate, MuMethod};
use crate::numeric::{mean, median, population_sd};
use crate::solver::{alternate_fit_from, initial_parameters, standardize_for, FitConfig, FitResult, Subsample};
use crate::synth::{generate_synthetic, GenConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// How the item step is fed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// All examinees.
    Full,
    Coreset,
    Uniform,
    Distance,
    L1lev,
    Lewis,
}

impl Method {
    pub const ALL: [Method; 6] = [Self::Full, Self::Coreset, Self::Uniform, Self::Distance, Self::L1lev, Self::Lewis];

    pub fn is_subsampling(self) -> bool {
        self != Self::Full
    }

    fn baseline(self) -> Option<BaselineKind> {
        match self {
            Self::Uniform => Some(BaselineKind::Uniform),
            Self::Distance => Some(BaselineKind::DistanceSampling),
            Self::L1lev => Some(BaselineKind::L1Leverage),
            Self::Lewis => Some(BaselineKind::LewisL1),
            Self::Full | Self::Coreset => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Coreset => "coreset",
            Self::Uniform => "uniform",
            Self::Distance => "distance",
            Self::L1lev => "l1lev",
            Self::Lewis => "lewis",
        })
    }
}

impl FromStr for Method {
    type Err = IrtError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| invalid(format!("unknown method {s:?} (expected full, coreset, uniform, distance, l1lev or lewis)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub model: ModelKind,
    /// Response file; synthetic data of size `n x m` is generated when absent.
    pub responses: Option<PathBuf>,
    pub labels: LabelFormat,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub method: Method,
    pub repetitions: usize,
    pub iterations: usize,
    /// Seeds data generation and, through derived seeds, every repetition.
    pub seed: u64,
    pub sketched: bool,
    pub rounds: usize,
    pub sampling: SamplingMethod,
    pub parallel_reps: bool,
    /// Record the full objective after every iteration of subsampled fits.
    pub track_full_objective: bool,
    /// Compute the per-item mu table at the full optimum.
    pub mu_summary: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            model: ModelKind::TwoPL,
            responses: None,
            labels: LabelFormat::default(),
            n: 1000,
            m: 20,
            k: 100,
            method: Method::Coreset,
            repetitions: 1,
            iterations: 50,
            seed: 0,
            sketched: false,
            rounds: 1,
            sampling: SamplingMethod::default(),
            parallel_reps: false,
            track_full_objective: false,
            mu_summary: false,
        }
    }
}

impl ExperimentConfig {
    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported config schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if self.repetitions == 0 || self.iterations == 0 || self.rounds == 0 {
            return Err(invalid("repetitions, iterations and rounds must be at least 1"));
        }
        match &self.responses {
            Some(p) if !p.is_file() => return Err(invalid(format!("response file {} does not exist", p.display()))),
            Some(_) => {}
            None if self.n == 0 || self.m == 0 => return Err(invalid("synthetic data needs n, m >= 1")),
            None => self.check_k(self.n)?,
        }
        Ok(())
    }

    fn check_k(&self, n: usize) -> Result<()> {
        if self.method.is_subsampling() && !(1..n).contains(&self.k) {
            return Err(invalid(format!("k = {} must satisfy 1 <= k < n = {n} for method {}", self.k, self.method)));
        }
        Ok(())
    }

    pub fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            max_main_iterations: self.iterations,
            seed,
            track_full_objective: self.track_full_objective && self.method.is_subsampling(),
            ..FitConfig::default()
        }
    }

    /// Seed of repetition `r`.
    pub fn repetition_seed(&self, r: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1 + r as u64);
        rng.next_u64()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = crate::io::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Responses from the configured file, or synthetic ones.
pub fn load_responses(config: &ExperimentConfig) -> Result<ResponseMatrix> {
    config.validate()?;
    let y = match &config.responses {
        Some(path) => read_file(path, |r| read_responses(r, config.labels))?,
        None => generate_synthetic(&GenConfig::new(config.n, config.m, config.model, config.seed))?.y,
    };
    config.check_k(y.examinees())?;
    Ok(y)
}

/// Wall-clock per phase of one run, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub scores_secs: f64,
    pub sampling_secs: f64,
    pub abilities_secs: f64,
    pub items_secs: f64,
    pub objective_secs: f64,
    pub total_secs: f64,
}

/// A standardized fit with its timings and, for subsampled runs, the sample.
#[derive(Clone, Debug)]
pub struct TimedFit {
    pub fit: FitResult,
    pub timings: RunTimings,
    pub coreset: Option<WeightedCoreset>,
}

/// Runs one fit with `method`. The sample is drawn once, from the starting
/// abilities, and reused by every item step.
pub fn run_method(y: &ResponseMatrix, config: &ExperimentConfig, method: Method, seed: u64) -> Result<TimedFit> {
    let fit_config = config.fit_config(seed);
    let start = Instant::now();
    let (items0, abilities0) = initial_parameters(y, config.model, &fit_config.bounds)?;
    let mut timings = RunTimings::default();
    let coreset = match method {
        Method::Full => None,
        Method::Coreset => {
            let options = BuildOptions {
                direction: Direction::Examinees,
                sketched: config.sketched,
                rounds: config.rounds,
                method: config.sampling,
                seed,
                ..BuildOptions::default()
            };
            let (c, t) = build_coreset_timed(y, &items0, &abilities0, config.model, config.k, &options)?;
            timings.scores_secs = t.scores_secs;
            timings.sampling_secs = t.sampling_secs;
            Some(c)
        }
        other => {
            let kind = other.baseline().expect("baseline method");
            let t = Instant::now();
            let scores = baseline_scores(kind, &abilities0.design_points(), seed)?;
            timings.scores_secs = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let sampling = if kind == BaselineKind::Uniform { config.sampling } else { SamplingMethod::IidAlias };
            let c = sample_weighted(&scores, config.k, seed, sampling)?;
            timings.sampling_secs = t.elapsed().as_secs_f64();
            Some(c)
        }
    };
    let subsample: Option<Subsample> = coreset.as_ref().map(|c| subsample_for(c, Direction::Examinees));
    let fit = alternate_fit_from(y, config.model, &fit_config, subsample.as_ref(), items0, abilities0)?;
    timings.total_secs = start.elapsed().as_secs_f64();
    timings.abilities_secs = fit.trace.timings.abilities_secs;
    timings.items_secs = fit.trace.timings.items_secs;
    timings.objective_secs = fit.trace.timings.objective_secs;
    let (items, abilities) = standardize_for(config.model, &fit.items, &fit.abilities)?;
    Ok(TimedFit { fit: FitResult { items, abilities, trace: fit.trace }, timings, coreset })
}

/// Objective values and parameter distances between a full and a subsampled fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Final objective of the full fit.
    pub f_full: f64,
    /// Final (weighted) objective of the subsampled fit.
    pub f_core: f64,
    /// Full objective at the subsampled fit's parameters.
    pub f_full_at_core: f64,
    /// `|f_core - f_full| / f_full`.
    pub rel_err: f64,
    /// `|f_full_at_core - f_full| / f_full`.
    pub rel_err_reevaluated: f64,
    /// `f_full_at_core / f_full`, to be compared with `1 + 4 eps`.
    pub full_ratio: f64,
    /// `(1/m) sum_i |a| + |b| + |c|` differences.
    pub mad_alpha: f64,
    /// `(1/n) sum_j |theta|` differences.
    pub mad_theta: f64,
}

const STANDARDIZED_TOL: f64 = 1e-6;

fn is_standardized(model: ModelKind, abilities: &AbilityParameters) -> bool {
    let centered = mean(&abilities.theta).abs() <= STANDARDIZED_TOL;
    centered && (model == ModelKind::OnePL || (population_sd(&abilities.theta) - 1.0).abs() <= STANDARDIZED_TOL)
}

/// Comparison metrics. Both fits must be standardized.
pub fn metrics(y: &ResponseMatrix, model: ModelKind, full: &FitResult, core: &FitResult) -> Result<Metrics> {
    for (name, f) in [("full", full), ("subsampled", core)] {
        if !is_standardized(model, &f.abilities) {
            return Err(invalid(format!("{name} fit is not standardized")));
        }
        if f.items.len() != y.items() || f.abilities.len() != y.examinees() {
            return Err(IrtError::DimensionMismatch(format!("{name} fit does not match the response matrix")));
        }
    }
    let last = |f: &FitResult| f.trace.objectives.last().copied().ok_or_else(|| invalid("fit has an empty trace"));
    let f_full = last(full)?;
    let f_core = last(core)?;
    let f_full_at_core = full_nll(y, &core.items, &core.abilities)?;
    let (a, b) = (&full.items, &core.items);
    let mad_alpha =
        (0..a.len()).map(|i| (a.a[i] - b.a[i]).abs() + (a.b[i] - b.b[i]).abs() + (a.c[i] - b.c[i]).abs()).sum::<f64>() / a.len() as f64;
    let mad_theta =
        full.abilities.theta.iter().zip(&core.abilities.theta).map(|(s, t)| (s - t).abs()).sum::<f64>() / full.abilities.len() as f64;
    Ok(Metrics {
        f_full,
        f_core,
        f_full_at_core,
        rel_err: (f_core - f_full).abs() / f_full,
        rel_err_reevaluated: (f_full_at_core - f_full).abs() / f_full,
        full_ratio: f_full_at_core / f_full,
        mad_alpha,
        mad_theta,
    })
}

/// Summary statistics of a per-item mu table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSummary {
    pub method: String,
    pub mean_mu0: f64,
    pub median_mu0: f64,
    pub max_mu0: f64,
    pub mean_mu1: f64,
    pub median_mu1: f64,
    pub max_mu1: f64,
    /// Items with a separable (infinite-mu) design.
    pub infinite_items: usize,
}

/// Mu of every item's conditional design `-y_ij (theta_j, -1)`.
pub fn item_mu_table(y: &ResponseMatrix, items: &ItemParameters, abilities: &AbilityParameters, exact: bool) -> Result<Vec<MuEstimate>> {
    let designs: Vec<Vec<Row2>> = (0..y.items())
        .into_par_iter()
        .map(|i| {
            y.item_row(i)
                .iter()
                .zip(&abilities.theta)
                .map(|(&v, &t)| {
                    let s = -(v as f64);
                    [s * t, -s]
                })
                .collect()
        })
        .collect();
    let optima: Vec<Option<Row2>> = (0..y.items()).map(|i| Some(items.alpha(i))).collect();
    mu_table(&designs, &optima, exact)
}

/// Mean and max over finite values, median over all (infinite sorts last).
pub fn summarize_mu(table: &[MuEstimate]) -> MuSummary {
    let stats = |vals: Vec<f64>| {
        let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
        let mean = if finite.is_empty() { f64::NAN } else { mean(&finite) };
        let max = finite.iter().copied().fold(f64::NAN, f64::max);
        (mean, median(&vals), max)
    };
    let (mean_mu0, median_mu0, max_mu0) = stats(table.iter().map(|e| e.mu0.as_f64()).collect());
    let (mean_mu1, median_mu1, max_mu1) = stats(table.iter().map(|e| e.mu1.as_f64()).collect());
    let method = match table.first().map(|e| e.method) {
        Some(MuMethod::ExactSweep) | None => MuMethod::ExactSweep,
        Some(MuMethod::Heuristic) => MuMethod::Heuristic,
    };
    MuSummary {
        method: method.to_string(),
        mean_mu0,
        median_mu0,
        max_mu0,
        mean_mu1,
        median_mu1,
        max_mu1,
        infinite_items: table.iter().filter(|e| !e.mu().is_finite()).count(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    pub model: ModelKind,
    pub repetition: usize,
    pub seed: u64,
    /// Sample size (0 for full fits).
    pub k: usize,
    pub metrics: Metrics,
    pub iterations: usize,
    pub monotone: bool,
    pub timings: RunTimings,
    pub full_total_secs: f64,
    /// `(1 - total / full_total) * 100`.
    pub gain: f64,
}

/// `(1 - mean_core / mean_full) * 100`.
pub fn gain(mean_core: f64, mean_full: f64) -> f64 {
    (1.0 - mean_core / mean_full) * 100.0
}

#[derive(Clone, Debug)]
pub struct Repetition {
    pub report: FitReport,
    pub run: TimedFit,
}

/// Best-of-R view of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub method: Method,
    pub model: ModelKind,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub repetitions: usize,
    /// Repetition with the smallest final objective.
    pub best_repetition: usize,
    pub best: FitReport,
    pub mean_total_secs: f64,
    pub full_total_secs: f64,
    pub gain: f64,
    pub mu: Option<MuSummary>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub y: ResponseMatrix,
    pub full: TimedFit,
    pub repetitions: Vec<Repetition>,
    pub mu_table: Option<Vec<MuEstimate>>,
    pub summary: ExperimentSummary,
}

/// Full fit, repetitions of the configured method and the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let y = load_responses(config)?;
    let full = run_method(&y, config, Method::Full, config.seed)?;
    run_against(config, y, full)
}

/// [`run_experiment`] with the full fit already computed.
pub fn run_against(config: &ExperimentConfig, y: ResponseMatrix, full: TimedFit) -> Result<ExperimentOutcome> {
    config.validate()?;
    config.check_k(y.examinees())?;
    let one = |r: usize| -> Result<Repetition> {
        let seed = config.repetition_seed(r);
        let run = if config.method == Method::Full { full.clone() } else { run_method(&y, config, config.method, seed)? };
        let metrics = metrics(&y, config.model, &full.fit, &run.fit)?;
        let report = FitReport {
            method: config.method,
            model: config.model,
            repetition: r,
            seed,
            k: run.coreset.as_ref().map_or(0, |c| c.k()),
            metrics,
            iterations: run.fit.trace.iterations,
            monotone: run.fit.trace.is_non_increasing(),
            timings: run.timings,
            full_total_secs: full.timings.total_secs,
            gain: gain(run.timings.total_secs, full.timings.total_secs),
        };
        Ok(Repetition { report, run })
    };
    let repetitions: Vec<Repetition> = if config.parallel_reps {
        (0..config.repetitions).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..config.repetitions).map(one).collect::<Result<_>>()?
    };
    let mu_table =
        if config.mu_summary { Some(item_mu_table(&y, &full.fit.items, &full.fit.abilities, y.examinees() <= 200_000)?) } else { None };
    let summary = summarize(config, &y, &full, &repetitions, mu_table.as_deref());
    Ok(ExperimentOutcome { config: config.clone(), y, full, repetitions, mu_table, summary })
}

fn summarize(
    config: &ExperimentConfig,
    y: &ResponseMatrix,
    full: &TimedFit,
    reps: &[Repetition],
    mu: Option<&[MuEstimate]>,
) -> ExperimentSummary {
    let best_repetition =
        reps.iter().enumerate().min_by(|a, b| a.1.report.metrics.f_core.total_cmp(&b.1.report.metrics.f_core)).map_or(0, |(r, _)| r);
    let mean_total_secs = reps.iter().map(|r| r.report.timings.total_secs).sum::<f64>() / reps.len() as f64;
    ExperimentSummary {
        method: config.method,
        model: config.model,
        n: y.examinees(),
        m: y.items(),
        k: reps[best_repetition].report.k,
        repetitions: reps.len(),
        best_repetition,
        best: reps[best_repetition].report.clone(),
        mean_total_secs,
        full_total_secs: full.timings.total_secs,
        gain: gain(mean_total_secs, full.timings.total_secs),
        mu: mu.map(summarize_mu),
    }
}

const REPORT_HEADER: [&str; 22] = [
    "method",
    "model",
    "repetition",
    "seed",
    "k",
    "f_full",
    "f_core",
    "f_full_at_core",
    "rel_err",
    "rel_err_reevaluated",
    "full_ratio",
    "mad_alpha",
    "mad_theta",
    "iterations",
    "monotone",
    "scores_secs",
    "sampling_secs",
    "abilities_secs",
    "items_secs",
    "total_secs",
    "full_total_secs",
    "gain",
];

/// One CSV row per report.
pub fn write_reports_csv<W: std::io::Write>(out: W, reports: &[FitReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| invalid(format!("csv: {e}"));
    w.write_record(REPORT_HEADER).map_err(err)?;
    for r in reports {
        let x = &r.metrics;
        let t = &r.timings;
        w.write_record([
            r.method.to_string(),
            r.model.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.k.to_string(),
            x.f_full.to_string(),
            x.f_core.to_string(),
            x.f_full_at_core.to_string(),
            x.rel_err.to_string(),
            x.rel_err_reevaluated.to_string(),
            x.full_ratio.to_string(),
            x.mad_alpha.to_string(),
            x.mad_theta.to_string(),
            r.iterations.to_string(),
            r.monotone.to_string(),
            t.scores_secs.to_string(),
            t.sampling_secs.to_string(),
            t.abilities_secs.to_string(),
            t.items_secs.to_string(),
            t.total_secs.to_string(),
            r.full_total_secs.to_string(),
            r.gain.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|source| IrtError::Io { path: "<stream>".into(), source })
}

/// Writes the experiment under `dir`:
///
/// ```text
/// config.json  summary.json  reports.csv  [mu.csv]
/// full/{items,abilities,trace}.csv
/// rep_<r>/{items,abilities,trace,coreset}.csv
/// plots/{item_pairs,theta_pairs}.csv   (best repetition vs full)
/// ```
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    write_json(&dir.join("config.json"), &outcome.config)?;
    write_json(&dir.join("summary.json"), &outcome.summary)?;
    let reports: Vec<FitReport> = outcome.repetitions.iter().map(|r| r.report.clone()).collect();
    write_file(&dir.join("reports.csv"), |w| write_reports_csv(w, &reports))?;
    write_fit(&dir.join("full"), &outcome.full.fit)?;
    for rep in &outcome.repetitions {
        let sub = dir.join(format!("rep_{}", rep.report.repetition));
        write_fit(&sub, &rep.run.fit)?;
        if let Some(c) = &rep.run.coreset {
            write_file(&sub.join("coreset.csv"), |w| c.write_csv(w))?;
        }
    }
    let best = &outcome.repetitions[outcome.summary.best_repetition].run.fit;
    write_file(&dir.join("plots/item_pairs.csv"), |w| write_item_pairs(w, &outcome.full.fit.items, &best.items))?;
    write_file(&dir.join("plots/theta_pairs.csv"), |w| write_theta_pairs(w, &outcome.full.fit.abilities, &best.abilities))?;
    if let Some(table) = &outcome.mu_table {
        write_file(&dir.join("mu.csv"), |w| write_mu_csv(w, table))?;
    }
    Ok(())
}

/// Parameters and trace of one fit.
pub fn write_fit(dir: &Path, fit: &FitResult) -> Result<()> {
    write_file(&dir.join("items.csv"), |w| write_items(w, &fit.items))?;
    write_file(&dir.join("abilities.csv"), |w| write_abilities(w, &fit.abilities))?;
    write_file(&dir.join("trace.csv"), |w| write_trace(w, &fit.trace))
}

/// Plain-text table of experiment summaries, one line per summary.
pub fn render_summaries(summaries: &[ExperimentSummary]) -> String {
    let mut out = format!(
        "{:<9} {:<4} {:>8} {:>5} {:>6} {:>4} {:>10} {:>10} {:>8} {:>11} {:>10} {:>10}\n",
        "method", "mod", "n", "m", "k", "reps", "full(s)", "mean(s)", "gain%", "r.err", "mad(a)", "mad(th)"
    );
    for s in summaries {
        out.push_str(&format!(
            "{:<9} {:<4} {:>8} {:>5} {:>6} {:>4} {:>10.3} {:>10.3} {:>8.2} {:>11.5} {:>10.4} {:>10.4}\n",
            s.method.to_string(),
            s.model.to_string(),
            s.n,
            s.m,
            s.k,
            s.repetitions,
            s.full_total_secs,
            s.mean_total_secs,
            s.gain,
            s.best.metrics.rel_err,
            s.best.metrics.mad_alpha,
            s.best.metrics.mad_theta
        ));
        if let Some(mu) = &s.mu {
            out.push_str(&format!(
                "  mu ({}): median mu0 {:.3}, median mu1 {:.3}, max mu0 {:.3}, max mu1 {:.3}, infinite {}\n",
                mu.method, mu.median_mu0, mu.median_mu1, mu.max_mu0, mu.max_mu1, mu.infinite_items
            ));
        }
    }
    out
}

/// Every `summary.json` directly in `dir` or one level below, sorted by path.
pub fn collect_summaries(dir: &Path) -> Result<Vec<ExperimentSummary>> {
    let io = |source| IrtError::Io { path: dir.to_path_buf(), source };
    let mut paths = vec![dir.join("summary.json")];
    for entry in std::fs::read_dir(dir).map_err(io)? {
        paths.push(entry.map_err(io)?.path().join("summary.json"));
    }
    paths.retain(|p| p.is_file());
    paths.sort();
    if paths.is_empty() {
        return Err(invalid(format!("no summary.json under {}", dir.display())));
    }
    paths.iter().map(|p| crate::io::read_json(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::FitTrace;

    fn fit(a: Vec<f64>, b: Vec<f64>, theta: Vec<f64>, objective: f64) -> FitResult {
        FitResult {
            items: ItemParameters::two_pl(a, b).unwrap(),
            abilities: AbilityParameters::new(theta).unwrap(),
            trace: FitTrace { objectives: vec![objective], ..FitTrace::default() },
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn identical_fits_have_zero_error() {
        let y = ResponseMatrix::from_fn(2, 2, |i, j| if i == j { 1 } else { -1 }).unwrap();
        let f = fit(vec![1.0, 2.0], vec![0.0, 0.5], vec![-1.0, 1.0], 3.0);
        let m = metrics(&y, ModelKind::TwoPL, &f, &f).unwrap();
        assert_eq!((m.rel_err, m.mad_alpha, m.mad_theta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mad_matches_hand_sums() {
        let y = ResponseMatrix::from_fn(2, 2, |i, j| if i == j { 1 } else { -1 }).unwrap();
        let full = fit(vec![1.0, 2.0], vec![0.0, 0.5], vec![-1.0, 1.0], 4.0);
        let core = fit(vec![1.5, 1.0], vec![0.25, 0.5], vec![-1.0, 1.0], 3.0);
        let m = metrics(&y, ModelKind::TwoPL, &full, &core).unwrap();
        // (|1-1.5| + |0-0.25| + |2-1| + 0) / 2
        assert!((m.mad_alpha - 0.875).abs() < 1e-15);
        assert_eq!(m.mad_theta, 0.0);
        assert!((m.rel_err - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unstandardized_fits_are_rejected() {
        let y = ResponseMatrix::from_fn(2, 2, |i, j| if i == j { 1 } else { -1 }).unwrap();
        let f = fit(vec![1.0, 2.0], vec![0.0, 0.5], vec![0.0, 3.0], 3.0);
        assert!(metrics(&y, ModelKind::TwoPL, &f, &f).is_err());
    }

    #[test]
    fn config_checks() {
        let mut c = ExperimentConfig { n: 100, k: 100, ..ExperimentConfig::default() };
        assert!(c.validate().is_err());
        c.k = 99;
        assert!(c.validate().is_ok());
        c.schema = 2;
        assert!(c.validate().is_err());
        let c = ExperimentConfig { responses: Some("/nonexistent.csv".into()), ..ExperimentConfig::default() };
        assert!(c.validate().is_err());
        let json = serde_json::to_string(&ExperimentConfig::default()).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), ExperimentConfig::default());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"schema":1,"bogus":3}"#).is_err());
    }

    #[test]
    fn gain_formula() {
        assert_eq!(gain(3.0, 4.0), 25.0);
    }
}
