//! The comparison samplers on one set of examinee rows: how spread out are
//! their weights, and how well does each estimate a fixed objective?

use irt_coreset::baselines::{baseline_coreset, BaselineKind};
use irt_coreset::coreset::{sample_weighted, scores_2pl, SamplingMethod};
use irt_coreset::model::{conditional_nll, Row2, SignedDesign};

fn main() -> irt_coreset::Result<()> {
    let n = 5000;
    let rows: Vec<Row2> = (0..n).map(|j| [((j as f64) * 1.37).sin() * 2.5, -1.0]).collect();
    let signed: Vec<Row2> = rows.iter().enumerate().map(|(j, r)| if j % 3 == 0 { [-r[0], -r[1]] } else { *r }).collect();
    let design = SignedDesign::logistic(signed, vec![1.0; n])?;
    let eta = [2.0, 0.3];
    let exact = conditional_nll(&design, &eta);

    println!("{:<18} {:>12} {:>12}", "sampler", "max weight", "rel err");
    let report = |name: &str, sample: irt_coreset::coreset::WeightedCoreset| -> irt_coreset::Result<()> {
        let est = conditional_nll(&sample.apply(&design)?, &eta);
        let wmax = sample.weights.iter().copied().fold(0.0, f64::max);
        println!("{name:<18} {wmax:>12.2} {:>12.5}", (est - exact).abs() / exact);
        Ok(())
    };
    report("coreset", sample_weighted(&scores_2pl(&rows), 200, 1, SamplingMethod::IidAlias)?)?;
    for (name, kind) in [
        ("uniform", BaselineKind::Uniform),
        ("distance sampling", BaselineKind::DistanceSampling),
        ("l1 leverage", BaselineKind::L1Leverage),
        ("lewis weights", BaselineKind::LewisL1),
    ] {
        report(name, baseline_coreset(kind, &rows, 200, 1)?)?;
    }
    Ok(())
}
