//! 3PL coresets use mu-dependent sensitivity bounds; this prints the score
//! spread and the fit quality for a few sample sizes.
//!
//! cargo run --release --example coreset_3pl

use irt_coreset::coreset::{build_coreset, subsample_for, BuildOptions, Direction};
use irt_coreset::model::ModelKind;
use irt_coreset::solver::{alternate_fit, alternate_fit_from, initial_parameters, FitConfig};
use irt_coreset::synth::{generate_synthetic, GenConfig};

fn main() -> irt_coreset::Result<()> {
    let model = ModelKind::ThreePL;
    let data = generate_synthetic(&GenConfig::new(4000, 20, model, 2))?;
    let config = FitConfig { max_main_iterations: 15, ..FitConfig::default() };
    let full = alternate_fit(&data.y, model, &config, None)?;
    let f_full = *full.trace.objectives.last().unwrap();
    let (items, abilities) = initial_parameters(&data.y, model, &config.bounds)?;

    for k in [250, 500, 1000, 2000] {
        let options = BuildOptions { seed: 9, ..BuildOptions::default() };
        let c = build_coreset(&data.y, &items, &abilities, model, k, &options)?;
        let fit =
            alternate_fit_from(&data.y, model, &config, Some(&subsample_for(&c, Direction::Examinees)), items.clone(), abilities.clone())?;
        let f_core = *fit.trace.objectives.last().unwrap();
        let (lo, hi) = c.scores.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
        println!(
            "k = {k:>5}: scores in [{lo:.3e}, {hi:.3e}], total {:.3e}, rel err {:.4}, monotone {}",
            c.total_score,
            (f_core - f_full).abs() / f_full,
            fit.trace.is_non_increasing()
        );
    }
    Ok(())
}
