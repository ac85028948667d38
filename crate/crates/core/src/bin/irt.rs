use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use irt_coreset::coreset::SamplingMethod;
use irt_coreset::harness::{
    collect_summaries, item_mu_table, load_responses, render_summaries, run_against, run_experiment, run_method, summarize_mu, write_fit,
    write_outcome, ExperimentConfig, Method,
};
use irt_coreset::io::{write_abilities, write_file, write_items, write_json, write_responses, LabelFormat, ResponseLayout};
use irt_coreset::model::ModelKind;
use irt_coreset::mu::write_mu_csv;
use irt_coreset::synth::{generate_synthetic, GenConfig};
use irt_coreset::{IrtError, Result};

/// IRT estimation with coreset subsampling.
#[derive(Parser)]
#[command(name = "irt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic responses and the true parameters.
    Gen {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value = "2pl")]
        model: ModelKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "pm1")]
        labels: LabelFormat,
        #[arg(long, value_enum, default_value_t = LayoutArg::Long)]
        layout: LayoutArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit on all data.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated subsampled fits compared with the full fit.
    CoresetFit {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "coreset")]
        method: Method,
    },
    /// Coreset against another method on the same data, seeds and k.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Method compared with the coreset.
        #[arg(long, default_value = "uniform")]
        method: Method,
    },
    /// Per-item mu table at the full optimum.
    Mu {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        /// Use the direction heuristic instead of the exact sweep.
        #[arg(long)]
        heuristic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summaries written by coreset-fit or compare.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Long,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Iid,
    Chao,
}

#[derive(Args)]
struct DataArgs {
    /// Response CSV (long or dense); synthetic data is generated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "pm1")]
    labels: LabelFormat,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value = "2pl")]
    model: ModelKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON experiment config; replaces all other run options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    /// CountSketch leverage scores.
    #[arg(long)]
    sketched: bool,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, value_enum, default_value_t = SamplingArg::Iid)]
    sampling: SamplingArg,
    #[arg(long)]
    parallel_reps: bool,
    /// Record the full objective after every iteration.
    #[arg(long)]
    track_full: bool,
    /// Add the per-item mu summary.
    #[arg(long)]
    mu: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl DataArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            model: self.model,
            responses: self.data.clone(),
            labels: self.labels,
            n: self.n,
            m: self.m,
            seed: self.seed,
            ..ExperimentConfig::default()
        }
    }
}

impl RunArgs {
    fn config(&self, method: Method) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            return ExperimentConfig::load(path);
        }
        let cfg = ExperimentConfig {
            k: self.k,
            method,
            repetitions: self.reps,
            iterations: self.iters,
            sketched: self.sketched,
            rounds: self.rounds,
            sampling: match self.sampling {
                SamplingArg::Iid => SamplingMethod::IidAlias,
                SamplingArg::Chao => SamplingMethod::ChaoReservoir,
            },
            parallel_reps: self.parallel_reps,
            track_full_objective: self.track_full,
            mu_summary: self.mu,
            ..self.data.config()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("IRT_THREADS") else { return Ok(()) };
    let threads: usize = v.parse().map_err(|_| IrtError::InvalidArgument(format!("IRT_THREADS={v:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| IrtError::InvalidArgument(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen { n, m, model, seed, labels, layout, out } => {
            let data = generate_synthetic(&GenConfig::new(n, m, model, seed))?;
            let layout = match layout {
                LayoutArg::Long => ResponseLayout::Long,
                LayoutArg::Dense => ResponseLayout::Dense,
            };
            write_file(&out.join("responses.csv"), |w| write_responses(w, &data.y, layout, labels))?;
            write_file(&out.join("true_items.csv"), |w| write_items(w, &data.items))?;
            write_file(&out.join("true_abilities.csv"), |w| write_abilities(w, &data.abilities))?;
            println!("wrote {m} items x {n} examinees to {}", out.display());
        }
        Command::Fit { data, iters, out } => {
            let cfg = ExperimentConfig { iterations: iters, method: Method::Full, ..data.config() };
            let y = load_responses(&cfg)?;
            let fit = run_method(&y, &cfg, Method::Full, cfg.seed)?;
            let trace = &fit.fit.trace;
            println!(
                "objective {} after {} iterations in {:.3}s (monotone: {})",
                trace.objectives.last().copied().unwrap_or(f64::NAN),
                trace.iterations,
                fit.timings.total_secs,
                trace.is_non_increasing()
            );
            if let Some(out) = out {
                write_fit(&out, &fit.fit)?;
            }
        }
        Command::CoresetFit { run, method } => {
            let cfg = run.config(method)?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", render_summaries(std::slice::from_ref(&outcome.summary)));
            if let Some(out) = &run.out {
                write_outcome(&outcome, out)?;
            }
        }
        Command::Compare { run, method } => {
            let coreset_cfg = run.config(Method::Coreset)?;
            let other_cfg = ExperimentConfig { method, ..coreset_cfg.clone() };
            let y = load_responses(&coreset_cfg)?;
            let full = run_method(&y, &coreset_cfg, Method::Full, coreset_cfg.seed)?;
            let core = run_against(&coreset_cfg, y.clone(), full.clone())?;
            let other = run_against(&other_cfg, y, full)?;
            print!("{}", render_summaries(&[core.summary.clone(), other.summary.clone()]));
            if let Some(out) = &run.out {
                write_outcome(&core, &out.join("coreset"))?;
                write_outcome(&other, &out.join(method.to_string()))?;
            }
        }
        Command::Mu { data, iters, heuristic, out } => {
            let cfg = ExperimentConfig { iterations: iters, method: Method::Full, ..data.config() };
            let y = load_responses(&cfg)?;
            let fit = run_method(&y, &cfg, Method::Full, cfg.seed)?;
            let table = item_mu_table(&y, &fit.fit.items, &fit.fit.abilities, !heuristic)?;
            let summary = summarize_mu(&table);
            println!(
                "mu ({}): median mu0 {:.4}, median mu1 {:.4}, max mu0 {:.4}, max mu1 {:.4}, infinite {}",
                summary.method, summary.median_mu0, summary.median_mu1, summary.max_mu0, summary.max_mu1, summary.infinite_items
            );
            if let Some(out) = out {
                write_file(&out.join("mu.csv"), |w| write_mu_csv(w, &table))?;
                write_json(&out.join("mu_summary.json"), &summary)?;
            }
        }
        Command::Report { out } => print!("{}", render_summaries(&collect_summaries(Path::new(&out))?)),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
