//! A repeated coreset experiment with report artifacts written to a
//! temporary directory, the same as `irt coreset-fit --out DIR`.

use irt_coreset::harness::{render_summaries, run_experiment, write_outcome, ExperimentConfig, Method};
use irt_coreset::model::ModelKind;

fn main() -> irt_coreset::Result<()> {
    let config = ExperimentConfig {
        model: ModelKind::TwoPL,
        n: 5000,
        m: 20,
        k: 200,
        method: Method::Coreset,
        repetitions: 3,
        iterations: 20,
        seed: 4,
        mu_summary: true,
        ..ExperimentConfig::default()
    };
    let outcome = run_experiment(&config)?;
    print!("{}", render_summaries(std::slice::from_ref(&outcome.summary)));
    for rep in &outcome.repetitions {
        let r = &rep.report;
        println!(
            "rep {}: f_core {:.2}, rel err {:.4}, full ratio {:.4}",
            r.repetition, r.metrics.f_core, r.metrics.rel_err, r.metrics.full_ratio
        );
    }
    let dir = std::env::temp_dir().join("irt-experiment-example");
    write_outcome(&outcome, &dir)?;
    println!("artifacts in {}", dir.display());
    Ok(())
}
