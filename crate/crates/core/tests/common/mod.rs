//! Property checks shared by the property tests and the acceptance report.
//! Every check returns a measured value and a verdict instead of panicking.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irt_coreset::baselines::{baseline_coreset, BaselineKind};
use irt_coreset::coreset::{build_coreset, sample_weighted, scores_2pl, subsample_for, BuildOptions, Direction, SamplingMethod};
use irt_coreset::leverage::{leverage_l2, lewis_step, lewis_weights_l1};
use irt_coreset::model::{
    conditional_nll, conditional_nll_with_guessing, pointwise_loss, LossKind, ModelKind, ResponseMatrix, Row2, SignedDesign,
};
use irt_coreset::mu::{mu_exact_2d, sigma1_min_2d, MuValue};
use irt_coreset::solver::{
    alternate_fit, alternate_fit_from, conditional_gradient, conditional_gradient_with_guessing, fit_conditional, initial_parameters,
    FitConfig,
};
use irt_coreset::synth::{generate_synthetic, GenConfig};

pub struct Check {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, detail, pass }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the oracle independent of the library's samplers.
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Rows `-y_j (theta_j, -1)` of one item answered by `n` examinees.
pub fn item_rows(rng: &mut ChaCha8Rng, n: usize, a: f64, b: f64) -> Vec<Row2> {
    (0..n)
        .map(|_| {
            let t = gaussian(rng);
            let p = 1.0 / (1.0 + (-(a * t - b)).exp());
            let y = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
            [-y * t, y]
        })
        .collect()
}

pub fn max_rel_dev(full: &SignedDesign, core: &SignedDesign, grid: &[Row2]) -> f64 {
    grid.iter()
        .map(|e| {
            let f = conditional_nll(full, e);
            (conditional_nll(core, e) - f).abs() / f
        })
        .fold(0.0, f64::max)
}

fn eta_grid() -> Vec<Row2> {
    let mut g = Vec::new();
    for i in 0..7 {
        for j in 0..14 {
            g.push([0.25 + 0.6 * i as f64, -2.6 + 0.4 * j as f64]);
        }
    }
    g
}

/// Central differences of the conditional objective against the analytic
/// gradient, with and without a shared guessing value.
pub fn gradient_check() -> Check {
    let mut rng = rng(101);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(5..40);
        let rows: Vec<Row2> = (0..n).map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let kinds: Vec<LossKind> = (0..n).map(|_| if rng.random::<bool>() { LossKind::Pass } else { LossKind::Fail }).collect();
        let c: f64 = if case % 4 == 0 { 0.0 } else { rng.random_range(0.01..0.45) };
        let design = SignedDesign::new(rows, weights, kinds, vec![c; n]).unwrap();
        let eta: Row2 = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let h = 1e-5;
        let f = |e: Row2, cc: f64| conditional_nll_with_guessing(&design, &e, cc);
        let fd = [
            (f([eta[0] + h, eta[1]], c) - f([eta[0] - h, eta[1]], c)) / (2.0 * h),
            (f([eta[0], eta[1] + h], c) - f([eta[0], eta[1] - h], c)) / (2.0 * h),
            if c > 0.0 { (f(eta, c + h) - f(eta, c - h)) / (2.0 * h) } else { f64::NAN },
        ];
        let g3 = conditional_gradient_with_guessing(&design, &eta, c);
        let g2 = conditional_gradient(&design, &eta);
        let scale = g3.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for d in 0..3 {
            if fd[d].is_finite() {
                worst = worst.max((g3[d] - fd[d]).abs() / scale);
            }
        }
        for d in 0..2 {
            worst = worst.max((g2[d] - fd[d]).abs() / scale);
        }
    }
    Check::new("gradient vs central differences", worst <= 1e-6, format!("max relative error {worst:.2e} (limit 1e-6)"))
}

/// Sum of l2 leverage equals the rank; flipping row signs changes nothing.
pub fn leverage_check() -> Check {
    let mut rng = rng(202);
    let mut sum_err: f64 = 0.0;
    let mut flip_err: f64 = 0.0;
    for case in 0..20 {
        let n = rng.random_range(3..300);
        let mut rows: Vec<Row2> = (0..n).map(|_| [gaussian(&mut rng), gaussian(&mut rng)]).collect();
        let rank = if case % 5 == 4 {
            let d = [gaussian(&mut rng), gaussian(&mut rng)];
            rows.iter_mut().for_each(|r| {
                let s = r[0];
                *r = [s * d[0], s * d[1]];
            });
            1.0
        } else {
            2.0
        };
        let l = leverage_l2(&rows).values;
        sum_err = sum_err.max((l.iter().sum::<f64>() - rank).abs());
        for _ in 0..10 {
            let flipped: Vec<Row2> = rows.iter().map(|r| if rng.random::<bool>() { [-r[0], -r[1]] } else { *r }).collect();
            let lf = leverage_l2(&flipped).values;
            flip_err = flip_err.max(l.iter().zip(&lf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    Check::new(
        "l2 leverage sum and sign-flip invariance",
        sum_err <= 1e-8 && flip_err <= 1e-10,
        format!("|sum - rank| {sum_err:.2e} (limit 1e-8), flip deviation {flip_err:.2e} over 200 diagonals (limit 1e-10)"),
    )
}

pub fn lewis_check() -> Check {
    let mut rng = rng(303);
    let (mut sum_err, mut residual): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let n = rng.random_range(3..400);
        let rows: Vec<Row2> = (0..n).map(|_| [gaussian(&mut rng) * 3.0, gaussian(&mut rng)]).collect();
        let w = lewis_weights_l1(&rows, 500, 1e-13).unwrap().values;
        sum_err = sum_err.max((w.iter().sum::<f64>() - 2.0).abs());
        let next = lewis_step(&rows, &w).unwrap();
        residual = residual.max(next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Check::new(
        "Lewis weights sum and fixed point",
        sum_err <= 1e-6 && residual <= 1e-10,
        format!("|sum - 2| {sum_err:.2e} (limit 1e-6), residual {residual:.2e} (limit 1e-10)"),
    )
}

/// `z <= g(z)` on z >= 0, `g(z) <= 2z` past ln(1 + sqrt 3), `0 < h < ln(1/c)`.
pub fn loss_bounds_check() -> Check {
    let mut violations = 0usize;
    let mut points = 0usize;
    let z0 = (1.0 + 3f64.sqrt()).ln();
    for ci in 0..50 {
        let c = ci as f64 * 0.01;
        for zi in 0..=50_000 {
            let z = zi as f64 * 1e-3;
            let g = pointwise_loss(LossKind::Fail, c, z).unwrap();
            points += 1;
            if g < z || (z >= z0 && g > 2.0 * z) {
                violations += 1;
            }
        }
        if c > 0.0 {
            for zi in -30_000..=30_000 {
                let z = zi as f64 * 1e-3;
                let h = pointwise_loss(LossKind::Pass, c, z).unwrap();
                points += 1;
                if !(h > 0.0 && h < (1.0 / c).ln()) {
                    violations += 1;
                }
            }
            for z in [-700.0, -100.0, 100.0, 700.0] {
                let h = pointwise_loss(LossKind::Pass, c, z).unwrap();
                points += 1;
                // Saturated: h is exactly -ln c, which 1/c would round away from.
                if !(h >= 0.0 && h <= -c.ln()) {
                    violations += 1;
                }
            }
        }
    }
    Check::new("g/h bounds on z grids", violations == 0, format!("{violations} violations over {points} grid points"))
}

fn grid_mu(x: &[Row2], steps: usize) -> (f64, f64) {
    let (mut m0, mut m1): (f64, f64) = (0.0, 0.0);
    for s in 0..steps {
        let t = std::f64::consts::TAU * s as f64 / steps as f64;
        let e = [t.cos(), t.sin()];
        let (mut pc, mut nc, mut pm, mut nm) = (0.0, 0.0, 0.0, 0.0);
        for r in x {
            let v = r[0] * e[0] + r[1] * e[1];
            if v > 0.0 {
                pc += 1.0;
                pm += v;
            } else if v < 0.0 {
                nc += 1.0;
                nm -= v;
            }
        }
        m0 = m0.max(pc / nc).max(nc / pc);
        m1 = m1.max(pm / nm).max(nm / pm);
    }
    (m0, m1)
}

/// Exact sweep against a 10^6-direction grid.
pub fn mu_grid_check() -> Check {
    let mut rng = rng(404);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut mismatched_infinite = 0;
    while compared < 20 {
        let n = rng.random_range(12..=40);
        let shift = [gaussian(&mut rng) * 0.5, gaussian(&mut rng) * 0.5];
        let x: Vec<Row2> = (0..n).map(|_| [gaussian(&mut rng) + shift[0], gaussian(&mut rng) + shift[1]]).collect();
        let exact = mu_exact_2d(&x).unwrap();
        let (g0, g1) = grid_mu(&x, 1_000_000);
        match (exact.mu0, exact.mu1) {
            (MuValue::Finite(e0), MuValue::Finite(e1)) => {
                worst = worst.max((e0 - g0).abs() / e0).max((e1 - g1).abs() / e1);
                compared += 1;
            }
            _ => {
                if g1.is_finite() && g1 < 1e6 {
                    mismatched_infinite += 1;
                }
            }
        }
    }
    Check::new(
        "exact mu vs 10^6-direction grid",
        worst <= 0.01 && mismatched_infinite == 0,
        format!("max relative gap {worst:.2e} on {compared} instances (limit 1e-2), {mismatched_infinite} infinite mismatches"),
    )
}

/// Monte Carlo mean of the weighted objective at a fixed eta for every sampler.
pub fn unbiasedness_check() -> Check {
    let mut rng = rng(505);
    let n = 2000;
    let points: Vec<Row2> = (0..n).map(|_| [gaussian(&mut rng), -1.0]).collect();
    let signed: Vec<Row2> = points.iter().map(|p| if rng.random::<f64>() < 0.4 { [-p[0], -p[1]] } else { *p }).collect();
    let design = SignedDesign::logistic(signed, vec![1.0; n]).unwrap();
    let eta = [1.7, -0.2];
    let exact = conditional_nll(&design, &eta);
    let mut lines = Vec::new();
    let mut pass = true;
    let samplers: [(&str, Option<BaselineKind>); 5] = [
        ("coreset", None),
        ("uniform", Some(BaselineKind::Uniform)),
        ("distance", Some(BaselineKind::DistanceSampling)),
        ("l1", Some(BaselineKind::L1Leverage)),
        ("lewis", Some(BaselineKind::LewisL1)),
    ];
    let core_scores = scores_2pl(&points);
    for (name, kind) in samplers {
        let est: Vec<f64> = (0..1000u64)
            .map(|s| {
                let sample = match kind {
                    None => sample_weighted(&core_scores, 50, s, SamplingMethod::IidAlias).unwrap(),
                    Some(k) => baseline_coreset(k, &points, 50, s).unwrap(),
                };
                conditional_nll(&sample.apply(&design).unwrap(), &eta)
            })
            .collect();
        let mean = est.iter().sum::<f64>() / est.len() as f64;
        let sd = (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (est.len() - 1) as f64).sqrt();
        let z = (mean - exact).abs() / (sd / (est.len() as f64).sqrt());
        pass &= z <= 3.0;
        lines.push(format!("{name} z={z:.2}"));
    }
    Check::new("sampler unbiasedness at fixed eta", pass, format!("{} (limit 3 sd)", lines.join(", ")))
}

/// Objective traces of random small fits never increase.
pub fn monotone_check() -> Check {
    let mut bad = Vec::new();
    for seed in 0..20u64 {
        let model = [ModelKind::OnePL, ModelKind::TwoPL, ModelKind::ThreePL][seed as usize % 3];
        let n = 60 + 10 * seed as usize;
        let data = generate_synthetic(&GenConfig::new(n, 6 + seed as usize % 5, model, seed)).unwrap();
        let config = FitConfig { max_main_iterations: 15, ..FitConfig::default() };
        let fit = if seed % 2 == 0 {
            alternate_fit(&data.y, model, &config, None).unwrap()
        } else {
            let (items, abilities) = initial_parameters(&data.y, model, &config.bounds).unwrap();
            let opts = BuildOptions { seed, ..BuildOptions::default() };
            let c = build_coreset(&data.y, &items, &abilities, model, n / 2, &opts).unwrap();
            alternate_fit_from(&data.y, model, &config, Some(&subsample_for(&c, Direction::Examinees)), items, abilities).unwrap()
        };
        if !fit.trace.is_non_increasing() {
            bad.push(seed);
        }
    }
    Check::new("alternating loop is monotone", bad.is_empty(), format!("non-monotone seeds {bad:?} of 20"))
}

const WIDE_LO: Row2 = [-50.0, -50.0];
const WIDE_HI: Row2 = [50.0, 50.0];

fn solve(design: &SignedDesign) -> Row2 {
    fit_conditional(design, WIDE_LO, WIDE_HI, [1.0, 0.0], 1e-12, 500).unwrap().x
}

/// `f(eta_core) <= (1 + 4 eps) f(eta_full)` with eps measured on an eta grid
/// that contains both minimizers.
pub fn coreset_optimum_check() -> Check {
    let mut violations = 0;
    let mut worst_eps: f64 = 0.0;
    let mut worst_slack = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = rng(600 + seed);
        let n = 2000;
        let (a, b) = (rng.random_range(1.0..3.0), gaussian(&mut rng) * 0.7);
        let rows = item_rows(&mut rng, n, a, b);
        let full = SignedDesign::logistic(rows.clone(), vec![1.0; n]).unwrap();
        let points: Vec<Row2> = rows.iter().map(|r| if r[1] > 0.0 { [-r[0], -r[1]] } else { *r }).collect();
        let sample = sample_weighted(&scores_2pl(&points), 200, seed, SamplingMethod::IidAlias).unwrap();
        let core = sample.apply(&full).unwrap();
        let (opt_full, opt_core) = (solve(&full), solve(&core));
        let mut grid = eta_grid();
        grid.extend([opt_full, opt_core]);
        let eps = max_rel_dev(&full, &core, &grid);
        worst_eps = worst_eps.max(eps);
        let lhs = conditional_nll(&full, &opt_core);
        let rhs = (1.0 + 4.0 * eps) * conditional_nll(&full, &opt_full);
        worst_slack = worst_slack.min(rhs - lhs);
        if !(eps < 0.5 && lhs <= rhs) {
            violations += 1;
        }
    }
    Check::new(
        "coreset optimum within (1+4eps) of the full optimum",
        violations == 0,
        format!("{violations} violations over 20 seeds, max eps {worst_eps:.3}, min slack {worst_slack:.3e}"),
    )
}

/// `||eta_opt - eta_core||_1 <= (1+mu)(2+3eps) f(X eta_opt) / sigma1_min(X)`
/// on tiny 2PL designs with exact mu and sigma1_min. Instances outside the
/// premise (infinite mu, eps >= 1/3) are counted but not judged.
pub fn parameter_quality_check() -> Check {
    let (mut judged, mut skipped, mut violations) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..40u64 {
        if judged == 20 {
            break;
        }
        let mut rng = rng(700 + seed);
        let n = 30;
        let (a, b) = (rng.random_range(0.5..1.5), gaussian(&mut rng) * 0.3);
        let rows = item_rows(&mut rng, n, a, b);
        let full = SignedDesign::logistic(rows.clone(), vec![1.0; n]).unwrap();
        let MuValue::Finite(mu) = mu_exact_2d(&rows).unwrap().mu1 else {
            skipped += 1;
            continue;
        };
        let points: Vec<Row2> = rows.iter().map(|r| if r[1] > 0.0 { [-r[0], -r[1]] } else { *r }).collect();
        let sample = sample_weighted(&scores_2pl(&points), 24, seed, SamplingMethod::IidAlias).unwrap();
        let core = sample.apply(&full).unwrap();
        let (opt, opt_core) = (solve(&full), solve(&core));
        let mut grid = eta_grid();
        grid.extend([opt, opt_core]);
        let eps = max_rel_dev(&full, &core, &grid);
        if eps >= 1.0 / 3.0 {
            skipped += 1;
            continue;
        }
        judged += 1;
        let dist = (opt[0] - opt_core[0]).abs() + (opt[1] - opt_core[1]).abs();
        let bound = (1.0 + mu) * (2.0 + 3.0 * eps) * conditional_nll(&full, &opt) / sigma1_min_2d(&rows);
        worst_ratio = worst_ratio.max(dist / bound);
        if dist > bound {
            violations += 1;
        }
    }
    Check::new(
        "parameter distance bound with exact mu and sigma1_min",
        violations == 0 && judged >= 10,
        format!("{violations} violations on {judged} instances ({skipped} outside the premise), max distance/bound {worst_ratio:.3}"),
    )
}

pub fn all_a1_checks() -> Vec<Check> {
    vec![
        gradient_check(),
        leverage_check(),
        lewis_check(),
        loss_bounds_check(),
        mu_grid_check(),
        unbiasedness_check(),
        monotone_check(),
        coreset_optimum_check(),
        parameter_quality_check(),
    ]
}

/// Response matrix with item 0 answered correctly by everyone.
pub fn with_all_pass_item(y: &ResponseMatrix) -> ResponseMatrix {
    ResponseMatrix::from_fn(y.items(), y.examinees(), |i, j| if i == 0 { 1 } else { y.get(i, j) }).unwrap()
}
