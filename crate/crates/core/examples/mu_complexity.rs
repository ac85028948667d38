//! Exact and heuristic mu, including a separable design where mu is infinite.

use irt_coreset::model::Row2;
use irt_coreset::mu::{mu_exact_2d, mu_heuristic, sigma1_min_2d};

fn main() -> irt_coreset::Result<()> {
    let overlapping: Vec<Row2> = (0..40)
        .map(|j| {
            let t = (j as f64 * 0.61).sin() * 2.0;
            let s = if (j * 7) % 3 == 0 { 1.0 } else { -1.0 };
            [s * t, -s]
        })
        .collect();
    let separable: Vec<Row2> = (0..10).map(|j| [1.0 + j as f64, 0.5]).collect();

    for (name, x) in [("overlapping", &overlapping), ("separable", &separable)] {
        let exact = mu_exact_2d(x)?;
        let heur = mu_heuristic(x, None, &[])?;
        println!("{name}: exact mu0 {} mu1 {}, heuristic mu0 {} mu1 {}", exact.mu0, exact.mu1, heur.mu0, heur.mu1);
    }
    println!("sigma1_min of the overlapping rows: {:.4}", sigma1_min_2d(&overlapping));
    Ok(())
}
