//! Generate a small 2PL population and fit it on all examinees.
//!
//! cargo run --release --example fit_synthetic

use irt_coreset::model::ModelKind;
use irt_coreset::solver::{alternate_fit, standardize, FitConfig};
use irt_coreset::synth::{generate_synthetic, GenConfig};

fn main() -> irt_coreset::Result<()> {
    let data = generate_synthetic(&GenConfig::new(2000, 15, ModelKind::TwoPL, 3))?;
    let fit = alternate_fit(&data.y, ModelKind::TwoPL, &FitConfig::default(), None)?;
    let (items, abilities) = standardize(&fit.items, &fit.abilities)?;

    println!("{} iterations, objective {:.3}", fit.trace.iterations, fit.trace.objectives.last().unwrap());
    println!("item      a_true  a_fit   b_true  b_fit");
    for i in 0..items.len() {
        println!("{i:>4}  {:>7.3} {:>7.3} {:>7.3} {:>7.3}", data.items.a[i], items.a[i], data.items.b[i], items.b[i]);
    }
    let err: f64 = abilities.theta.iter().zip(&data.abilities.theta).map(|(s, t)| (s - t).abs()).sum::<f64>() / abilities.len() as f64;
    println!("mean |theta_fit - theta_true| = {err:.3}");
    Ok(())
}
