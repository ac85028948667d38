//! Comparison samplers: uniform, k-means++ distance sampling, l1 leverage
//! and l1 Lewis weights.

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use serde::{Deserialize, Serialize};

use crate::coreset::{sample_weighted, SamplingMethod, WeightedCoreset};
use crate::error::{invalid, Result};
use crate::leverage::{leverage_l1, lewis_weights_l1};
use crate::model::Row2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Uniform,
    DistanceSampling,
    L1Leverage,
    LewisL1,
}

/// Default number of k-means++ centers for distance sampling.
pub const DEFAULT_CENTERS: usize = 25;

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} must lie in [1, {n}]")));
    }
    Ok(())
}

/// `k` rows drawn uniformly; i.i.d. draws carry weight `n / k`.
pub fn uniform_coreset(n: usize, k: usize, seed: u64, method: SamplingMethod) -> Result<WeightedCoreset> {
    check_k(n, k)?;
    sample_weighted(&vec![1.0; n], k, seed, method)
}

fn dist2(a: &Row2, b: &Row2) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means++ seeding: the first center uniformly, each further center with
/// probability proportional to its squared distance to the chosen ones.
/// Stops early once every point coincides with a center.
pub fn kmeans_pp_centers<R: Rng>(points: &[Row2], centers: usize, rng: &mut R) -> Result<Vec<usize>> {
    if centers == 0 || centers > points.len() {
        return Err(invalid(format!("need 1 <= centers <= {}, got {centers}", points.len())));
    }
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]])).collect();
    while chosen.len() < centers {
        let Ok(dist) = WeightedIndex::new(&d2) else { break };
        let next = dist.sample(rng);
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[next]));
        }
    }
    Ok(chosen)
}

/// `dist^2(point, nearest center) / sum dist^2 + 1/n`.
pub fn distance_scores(points: &[Row2], centers: &[usize]) -> Vec<f64> {
    let floor = 1.0 / points.len() as f64;
    let d2: Vec<f64> = points.iter().map(|p| centers.iter().map(|&c| dist2(p, &points[c])).fold(f64::INFINITY, f64::min)).collect();
    let total: f64 = d2.iter().sum();
    d2.iter().map(|d| if total > 0.0 { d / total + floor } else { floor }).collect()
}

pub fn distance_sampling_coreset(points: &[Row2], k: usize, centers: usize, seed: u64) -> Result<WeightedCoreset> {
    check_k(points.len(), k)?;
    sample_weighted(&seeded_distance_scores(points, centers, seed)?, k, seed, SamplingMethod::IidAlias)
}

fn seeded_distance_scores(points: &[Row2], centers: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let c = kmeans_pp_centers(points, centers, &mut rng)?;
    Ok(distance_scores(points, &c))
}

/// Sampling scores of any baseline. Leverage and Lewis scores get the
/// `1/n` floor; `seed` only matters for distance sampling.
pub fn baseline_scores(kind: BaselineKind, x: &[Row2], seed: u64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(invalid("no rows to score"));
    }
    let floor = 1.0 / x.len() as f64;
    let raw = match kind {
        BaselineKind::Uniform => return Ok(vec![1.0; x.len()]),
        BaselineKind::DistanceSampling => return seeded_distance_scores(x, DEFAULT_CENTERS.min(x.len()), seed),
        BaselineKind::L1Leverage => leverage_l1(x).values,
        BaselineKind::LewisL1 => lewis_weights_l1(x, 100, 1e-10)?.values,
    };
    Ok(raw.into_iter().map(|s| s + floor).collect())
}

pub fn score_based_coreset(kind: BaselineKind, x: &[Row2], k: usize, seed: u64) -> Result<WeightedCoreset> {
    if !matches!(kind, BaselineKind::L1Leverage | BaselineKind::LewisL1) {
        return Err(invalid(format!("{kind:?} is not score based")));
    }
    check_k(x.len(), k)?;
    sample_weighted(&baseline_scores(kind, x, seed)?, k, seed, SamplingMethod::IidAlias)
}

/// Any baseline over the rows `points`, drawn i.i.d.
pub fn baseline_coreset(kind: BaselineKind, points: &[Row2], k: usize, seed: u64) -> Result<WeightedCoreset> {
    check_k(points.len(), k)?;
    sample_weighted(&baseline_scores(kind, points, seed)?, k, seed, SamplingMethod::IidAlias)
}
