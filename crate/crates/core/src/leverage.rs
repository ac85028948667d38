//! Leverage scores and Lewis weights of tall two-column matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Row2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreKind {
    L2Leverage,
    L2LeverageSketched,
    L1Leverage,
    LewisL1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub kind: ScoreKind,
    /// False only for a Lewis iteration that ran out of iterations.
    pub converged: bool,
}

impl ScoreVector {
    pub fn sum(&self) -> f64 {
        crate::numeric::pairwise_sum(self.values.len(), |i| self.values[i])
    }
}

/// Relative size below which the second diagonal entry of R counts as zero.
const RANK_TOL: f64 = 1e-12;

/// Upper-triangular factor of a column-pivoted QR of an n x 2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PivotedR {
    pub r: [[f64; 2]; 2],
    /// `perm[k]` is the original column placed at position `k`.
    pub perm: [usize; 2],
    pub rank: usize,
}

impl PivotedR {
    /// Row `x` of the matrix expressed in the orthonormal basis `X P R^-1`
    /// (first `rank` coordinates are meaningful).
    fn coordinates(&self, x: &Row2) -> [f64; 2] {
        let (p, q) = (x[self.perm[0]], x[self.perm[1]]);
        match self.rank {
            0 => [0.0, 0.0],
            1 => [p / self.r[0][0], 0.0],
            _ => {
                let u0 = p / self.r[0][0];
                [u0, (q - u0 * self.r[0][1]) / self.r[1][1]]
            }
        }
    }
}

/// Householder QR with column pivoting; only R is kept.
pub fn pivoted_qr(x: &[Row2]) -> PivotedR {
    let norm2 = |c: usize| x.iter().map(|r| r[c] * r[c]).sum::<f64>();
    let (n0, n1) = (norm2(0), norm2(1));
    let perm = if n1 > n0 { [1, 0] } else { [0, 1] };
    let first: Vec<f64> = x.iter().map(|r| r[perm[0]]).collect();
    let mut second: Vec<f64> = x.iter().map(|r| r[perm[1]]).collect();
    let norm = first.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || x.is_empty() {
        return PivotedR { r: [[0.0; 2]; 2], perm, rank: 0 };
    }
    // H = I - beta v v^T maps `first` onto alpha e_1.
    let alpha = if first[0] >= 0.0 { -norm } else { norm };
    let mut v = first;
    v[0] -= alpha;
    let vv: f64 = v.iter().map(|t| t * t).sum();
    let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
    let proj: f64 = v.iter().zip(&second).map(|(a, b)| a * b).sum::<f64>() * beta;
    for (s, vi) in second.iter_mut().zip(&v) {
        *s -= proj * vi;
    }
    let r12 = second[0];
    let r22 = second[1..].iter().map(|t| t * t).sum::<f64>().sqrt();
    let rank = if r22 > RANK_TOL * norm { 2 } else { 1 };
    PivotedR { r: [[alpha, r12], [0.0, r22]], perm, rank }
}

/// Rows of an orthonormal basis of the column space of `x`, and its rank.
pub fn orthonormal_basis(x: &[Row2]) -> (Vec<Row2>, usize) {
    let qr = pivoted_qr(x);
    (x.iter().map(|row| qr.coordinates(row)).collect(), qr.rank)
}

fn squared_norms(x: &[Row2], qr: &PivotedR) -> Vec<f64> {
    x.iter()
        .map(|row| {
            let u = qr.coordinates(row);
            u[0] * u[0] + u[1] * u[1]
        })
        .collect()
}

/// Exact l2 leverage scores: squared row norms of an orthonormal basis.
pub fn leverage_l2(x: &[Row2]) -> ScoreVector {
    let qr = pivoted_qr(x);
    let values = squared_norms(x, &qr).into_iter().map(|l| l.min(1.0)).collect();
    ScoreVector { values, kind: ScoreKind::L2Leverage, converged: true }
}

/// Leverage scores from the R factor of a CountSketch `S X`.
///
/// A rank-deficient sketch is redrawn with a fresh seed up to three times
/// before falling back to the exact factorization.
pub fn leverage_l2_sketched(x: &[Row2], sketch_rows: usize, seed: u64) -> Result<ScoreVector> {
    if sketch_rows < 16 {
        return Err(invalid(format!("sketch needs at least 16 rows, got {sketch_rows}")));
    }
    let exact_rank = pivoted_qr(x).rank;
    for attempt in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let mut sketch = vec![[0.0; 2]; sketch_rows];
        for row in x {
            let bucket = rng.random_range(0..sketch_rows);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sketch[bucket][0] += sign * row[0];
            sketch[bucket][1] += sign * row[1];
        }
        let qr = pivoted_qr(&sketch);
        if qr.rank == exact_rank {
            return Ok(ScoreVector { values: squared_norms(x, &qr), kind: ScoreKind::L2LeverageSketched, converged: true });
        }
    }
    let mut exact = leverage_l2(x);
    exact.kind = ScoreKind::L2LeverageSketched;
    Ok(exact)
}

/// Nonzero rows reflected into the upper half plane and sorted by angle.
pub(crate) fn folded_by_angle(x: &[Row2]) -> Vec<(Row2, f64)> {
    let mut out: Vec<(Row2, f64)> = x
        .iter()
        .filter(|r| **r != [0.0, 0.0])
        .map(|&r| if r[1] < 0.0 || (r[1] == 0.0 && r[0] < 0.0) { ([-r[0], -r[1]], -1.0) } else { (r, 1.0) })
        .collect();
    out.sort_by(|a, b| a.0[1].atan2(a.0[0]).total_cmp(&b.0[1].atan2(b.0[0])));
    out
}

/// For every nonzero row, the unit direction `eta` orthogonal to it together
/// with `||X eta||_1`, in O(n log n).
pub(crate) fn normal_directions(x: &[Row2]) -> Vec<(Row2, f64)> {
    let sorted = folded_by_angle(x);
    let mut prefix = vec![[0.0; 2]; sorted.len() + 1];
    for (k, (r, _)) in sorted.iter().enumerate() {
        prefix[k + 1] = [prefix[k][0] + r[0], prefix[k][1] + r[1]];
    }
    let total = prefix[sorted.len()];
    sorted
        .iter()
        .enumerate()
        .map(|(k, (r, _))| {
            let len = r[0].hypot(r[1]);
            let eta = [-r[1] / len, r[0] / len];
            let before = prefix[k];
            let after = [total[0] - prefix[k + 1][0], total[1] - prefix[k + 1][1]];
            // Rows sorted after k have positive inner product with eta, rows before negative.
            let norm1 = (after[0] - before[0]) * eta[0] + (after[1] - before[1]) * eta[1];
            (eta, norm1.max(0.0))
        })
        .collect()
}

fn cross(o: &Row2, a: &Row2, b: &Row2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (Andrew's monotone chain).
fn convex_hull(mut pts: Vec<Row2>) -> Vec<Row2> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Row2> = Vec::with_capacity(pts.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Row2>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Exact l1 leverage scores `sup_eta |x_i . eta| / ||X eta||_1`.
///
/// Inside a sector of directions where no row changes sign the ratio is a
/// monotone linear-fractional function, so the supremum is attained at a
/// direction orthogonal to some row. With rows folded into the upper half
/// plane and sorted by angle, `||X eta_k||_1` for every such direction comes
/// from prefix sums, and the maximum over `k` of `|x_i . eta_k| / N_k` is the
/// support function of the symmetric hull of the points `eta_k / N_k`.
pub fn leverage_l1(x: &[Row2]) -> ScoreVector {
    let n = x.len();
    let mut values = vec![0.0; n];
    let nonzero: Vec<usize> = (0..n).filter(|&i| x[i] != [0.0, 0.0]).collect();
    let done = |values| ScoreVector { values, kind: ScoreKind::L1Leverage, converged: true };
    if nonzero.is_empty() {
        return done(values);
    }
    if pivoted_qr(x).rank < 2 {
        // All rows on one line: the ratio is the same for every direction off its normal.
        let norms: Vec<f64> = x.iter().map(|r| r[0].hypot(r[1])).collect();
        let total: f64 = norms.iter().sum();
        for i in nonzero {
            values[i] = norms[i] / total;
        }
        return done(values);
    }
    let mut points = Vec::with_capacity(2 * nonzero.len());
    for (eta, norm1) in normal_directions(x) {
        if norm1 > 0.0 {
            points.push([eta[0] / norm1, eta[1] / norm1]);
            points.push([-eta[0] / norm1, -eta[1] / norm1]);
        }
    }
    let hull = convex_hull(points);
    let h = hull.len();
    let angle = |r: &Row2| r[1].atan2(r[0]);
    let mut queries: Vec<usize> = nonzero.clone();
    queries.sort_by(|&a, &b| angle(&x[a]).total_cmp(&angle(&x[b])));
    let support = |d: &Row2, v: &Row2| d[0] * v[0] + d[1] * v[1];
    let mut p = (0..h).max_by(|&a, &b| support(&x[queries[0]], &hull[a]).total_cmp(&support(&x[queries[0]], &hull[b]))).unwrap_or(0);
    for &i in &queries {
        let d = &x[i];
        // Queries turn counter-clockwise, so the maximizing vertex does too.
        for _ in 0..h {
            let (next, prev) = ((p + 1) % h, (p + h - 1) % h);
            let here = support(d, &hull[p]);
            if support(d, &hull[next]) > here || support(d, &hull[prev]) > here {
                p = next;
            } else {
                break;
            }
        }
        values[i] = support(d, &hull[p]).abs().min(1.0);
    }
    done(values)
}

fn lewis_update(x: &[Row2], w: &[f64]) -> Option<Vec<f64>> {
    let mut m = [[0.0; 2]; 2];
    for (row, &wi) in x.iter().zip(w) {
        if wi > 0.0 {
            m[0][0] += row[0] * row[0] / wi;
            m[0][1] += row[0] * row[1] / wi;
            m[1][1] += row[1] * row[1] / wi;
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
    if !(det > 0.0) || det <= 1e-14 * (m[0][0] * m[1][1]).abs() {
        return None;
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[0][1] / det, m[0][0] / det]];
    Some(
        x.iter()
            .map(|r| {
                let q = r[0] * (inv[0][0] * r[0] + inv[0][1] * r[1]) + r[1] * (inv[1][0] * r[0] + inv[1][1] * r[1]);
                q.max(0.0).sqrt()
            })
            .collect(),
    )
}

/// l1 Lewis weights by the fixed point `w_i = sqrt(x_i (X^T W^-1 X)^-1 x_i^T)`
/// started from the l2 leverage scores.
pub fn lewis_weights_l1(x: &[Row2], max_iters: usize, tol: f64) -> Result<ScoreVector> {
    if pivoted_qr(x).rank < 2 {
        return Err(invalid("Lewis weights need a full-rank matrix"));
    }
    let mut w = leverage_l2(x).values;
    for _ in 0..max_iters {
        let next = lewis_update(x, &w).ok_or_else(|| invalid("Lewis iteration hit a singular matrix"))?;
        let change = next
            .iter()
            .zip(&w)
            .map(|(a, b)| if *a == 0.0 && *b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(*b) })
            .fold(0.0, f64::max);
        w = next;
        if change <= tol {
            return Ok(ScoreVector { values: w, kind: ScoreKind::LewisL1, converged: true });
        }
    }
    Ok(ScoreVector { values: w, kind: ScoreKind::LewisL1, converged: false })
}

/// One fixed-point application; used to check residuals.
pub fn lewis_step(x: &[Row2], w: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.len() {
        return Err(crate::error::IrtError::DimensionMismatch("weights and rows differ in length".into()));
    }
    lewis_update(x, w).ok_or_else(|| invalid("Lewis iteration hit a singular matrix"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn definition_three(x: &[Row2]) -> Vec<f64> {
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for r in x {
            a += r[0] * r[0];
            b += r[0] * r[1];
            d += r[1] * r[1];
        }
        let det = a * d - b * b;
        x.iter().map(|r| (d * r[0] * r[0] - 2.0 * b * r[0] * r[1] + a * r[1] * r[1]) / det).collect()
    }

    #[test]
    fn l1_two_orthogonal_rows_are_both_essential() {
        let x = [[-3.0, 0.0], [0.0, 0.0], [0.0, -2.0]];
        let v = leverage_l1(&x).values;
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1] == 0.0 && (v[2] - 1.0).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn identity_leverage() {
        let s = leverage_l2(&[[1.0, 0.0], [0.0, 1.0]]);
        assert!((s.values[0] - 1.0).abs() < 1e-15 && (s.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicated_row_leverage() {
        let s = leverage_l2(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        for (got, want) in s.values.iter().zip([0.5, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_hat_matrix_diagonal() {
        let x = vec![[0.3, -1.0], [1.7, -1.0], [-0.4, -1.0], [2.2, -1.0], [0.0, -1.0]];
        let s = leverage_l2(&x);
        for (got, want) in s.values.iter().zip(definition_three(&x)) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((s.sum() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_and_zero_inputs() {
        let s = leverage_l2(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!((s.values[0] - 0.2).abs() < 1e-14 && (s.values[1] - 0.8).abs() < 1e-14);
        assert_eq!(leverage_l2(&[[0.0, 0.0]; 3]).values, vec![0.0; 3]);
    }

    #[test]
    fn sketched_single_row_and_determinism() {
        let s = leverage_l2_sketched(&[[0.7, -1.0]], 64, 3).unwrap();
        assert!(s.values[0] > 0.5 && s.values[0] < 2.0);
        let x: Vec<Row2> = (0..500).map(|i| [(i as f64 * 0.37).sin(), -1.0]).collect();
        assert_eq!(leverage_l2_sketched(&x, 64, 9).unwrap(), leverage_l2_sketched(&x, 64, 9).unwrap());
        assert!(leverage_l2_sketched(&x, 8, 9).is_err());
    }

    #[test]
    fn l1_examples() {
        let s = leverage_l1(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(s.values, vec![1.0, 1.0]);
        let s = leverage_l1(&[[1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(s.values, vec![0.5, 0.5]);
        let s = leverage_l1(&[[0.0, 0.0], [3.0, 1.0], [-1.0, 2.0]]);
        assert_eq!(s.values[0], 0.0);
    }

    #[test]
    fn l1_matches_angular_grid() {
        let x = vec![[0.3, -1.2], [1.1, 0.4], [-0.7, 0.9], [2.0, -0.1], [0.05, 0.6], [-1.5, -1.5]];
        let s = leverage_l1(&x);
        let steps = 1_000_000;
        let mut best = vec![0.0f64; x.len()];
        for k in 0..steps {
            let t = std::f64::consts::PI * k as f64 / steps as f64;
            let eta = [t.cos(), t.sin()];
            let norm: f64 = x.iter().map(|r| (r[0] * eta[0] + r[1] * eta[1]).abs()).sum();
            for (i, r) in x.iter().enumerate() {
                best[i] = best[i].max((r[0] * eta[0] + r[1] * eta[1]).abs() / norm);
            }
        }
        for (got, want) in s.values.iter().zip(&best) {
            assert!(*got >= *want - 1e-12 && (got - want) / want < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn lewis_identity_and_mass() {
        let s = lewis_weights_l1(&[[1.0, 0.0], [0.0, 1.0]], 100, 1e-10).unwrap();
        assert!(s.converged);
        assert!((s.values[0] - 1.0).abs() < 1e-12 && (s.values[1] - 1.0).abs() < 1e-12);
        let x: Vec<Row2> = (0..40).map(|i| [(i as f64).cos() * 2.0, (i as f64 * 0.7).sin()]).collect();
        let s = lewis_weights_l1(&x, 100, 1e-10).unwrap();
        assert!(s.converged);
        assert!((s.sum() - 2.0).abs() < 1e-6);
        assert!(lewis_weights_l1(&[[1.0, 1.0], [2.0, 2.0]], 100, 1e-10).is_err());
    }
}
