//! A 2PL coreset of examinees: build it once, fit the item steps on it and
//! compare with the full fit.
//!
//! cargo run --release --example coreset_2pl

use irt_coreset::coreset::{build_coreset, subsample_for, BuildOptions, Direction};
use irt_coreset::model::{full_nll, ModelKind};
use irt_coreset::solver::{alternate_fit, alternate_fit_from, initial_parameters, FitConfig};
use irt_coreset::synth::{generate_synthetic, GenConfig};

fn main() -> irt_coreset::Result<()> {
    let model = ModelKind::TwoPL;
    let data = generate_synthetic(&GenConfig::new(20_000, 30, model, 11))?;
    let config = FitConfig { max_main_iterations: 30, ..FitConfig::default() };

    let full = alternate_fit(&data.y, model, &config, None)?;

    let (items, abilities) = initial_parameters(&data.y, model, &config.bounds)?;
    let options = BuildOptions { seed: 5, ..BuildOptions::default() };
    let coreset = build_coreset(&data.y, &items, &abilities, model, 500, &options)?;
    println!("coreset: {} draws, {} distinct examinees, total weight {:.0}", coreset.k(), coreset.folded().len(), coreset.total_weight());

    let sub = subsample_for(&coreset, Direction::Examinees);
    let core = alternate_fit_from(&data.y, model, &config, Some(&sub), items, abilities)?;

    let f_full = *full.trace.objectives.last().unwrap();
    let f_core = *core.trace.objectives.last().unwrap();
    let f_at_core = full_nll(&data.y, &core.items, &core.abilities)?;
    println!("f_full {f_full:.2}  f_core {f_core:.2}  full objective at coreset fit {f_at_core:.2}");
    println!("relative error {:.4}", (f_core - f_full).abs() / f_full);
    println!("item-step time: full {:.2}s, coreset {:.2}s", full.trace.timings.items_secs, core.trace.timings.items_secs);
    Ok(())
}
