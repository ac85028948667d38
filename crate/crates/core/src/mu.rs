//! mu-complexity of a signed design and the l1 minimum singular value.
//!
//! For a direction `eta`, `mu_p` compares the positive and negative parts of
//! `X eta`: `mu_p(X) = sup_eta ||(X eta)+||_p / ||(X eta)-||_p` for p in {0, 1}.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IrtError, Result};
use crate::leverage::{folded_by_angle, normal_directions};
use crate::model::{dot, Row2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MuValue {
    Finite(f64),
    Infinite,
}

impl MuValue {
    pub fn is_finite(self) -> bool {
        matches!(self, MuValue::Finite(_))
    }

    /// `f64::INFINITY` for the infinite case.
    pub fn as_f64(self) -> f64 {
        match self {
            MuValue::Finite(v) => v,
            MuValue::Infinite => f64::INFINITY,
        }
    }

    fn from_ratio(pos: f64, neg: f64) -> Option<Self> {
        if neg > 0.0 {
            Some(MuValue::Finite(pos / neg))
        } else if pos > 0.0 {
            Some(MuValue::Infinite)
        } else {
            None
        }
    }
}

impl PartialOrd for MuValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for MuValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuValue::Finite(v) => write!(f, "{v}"),
            MuValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MuMethod {
    ExactSweep,
    Heuristic,
}

impl fmt::Display for MuMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MuMethod::ExactSweep => "exact",
            MuMethod::Heuristic => "heuristic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuEstimate {
    pub mu0: MuValue,
    pub mu1: MuValue,
    pub method: MuMethod,
    /// Directions attaining `mu0` and `mu1`.
    pub witnesses: [Row2; 2],
}

impl MuEstimate {
    /// `max(mu0, mu1)`.
    pub fn mu(&self) -> MuValue {
        if self.mu0 >= self.mu1 {
            self.mu0
        } else {
            self.mu1
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.mu0.is_finite() || !self.mu1.is_finite()
    }
}

/// Positive/negative counts and masses of `X eta`.
pub fn sign_masses(x: &[Row2], eta: &Row2) -> (usize, usize, f64, f64) {
    let (mut pc, mut nc, mut pm, mut nm) = (0, 0, 0.0, 0.0);
    for r in x {
        let v = dot(r, eta);
        if v > 0.0 {
            pc += 1;
            pm += v;
        } else if v < 0.0 {
            nc += 1;
            nm -= v;
        }
    }
    (pc, nc, pm, nm)
}

struct Best {
    value: Option<MuValue>,
    witness: Row2,
}

impl Best {
    fn new() -> Self {
        Self { value: None, witness: [1.0, 0.0] }
    }

    fn offer(&mut self, v: Option<MuValue>, eta: Row2) {
        if let Some(v) = v {
            if self.value.is_none_or(|cur| v > cur) {
                self.value = Some(v);
                self.witness = eta;
            }
        }
    }
}

fn check_nonzero(x: &[Row2]) -> Result<()> {
    if x.iter().all(|r| *r == [0.0, 0.0]) {
        return Err(IrtError::UndefinedComplexity("all rows are zero".into()));
    }
    Ok(())
}

/// Exact mu0 and mu1 for two-column designs by an angular sweep.
///
/// `mu1` is a linear-fractional function of the direction inside each
/// sector where no row changes sign, so it peaks at a sector boundary
/// (a direction orthogonal to some row, approached from either side with
/// that row contributing 0). `mu0` is constant on open sectors and is
/// read off at one point per sector. Both use angle-sorted prefix sums.
pub fn mu_exact_2d(x: &[Row2]) -> Result<MuEstimate> {
    check_nonzero(x)?;
    let sorted = folded_by_angle(x);
    let len = sorted.len();
    // Prefix sums split by the sign each row was folded with.
    let mut plus = vec![[0.0; 2]; len + 1];
    let mut minus = vec![[0.0; 2]; len + 1];
    let mut plus_count = vec![0usize; len + 1];
    let mut minus_count = vec![0usize; len + 1];
    for (k, (r, s)) in sorted.iter().enumerate() {
        let (dp, dm) = if *s > 0.0 { (*r, [0.0; 2]) } else { ([0.0; 2], *r) };
        plus[k + 1] = [plus[k][0] + dp[0], plus[k][1] + dp[1]];
        minus[k + 1] = [minus[k][0] + dm[0], minus[k][1] + dm[1]];
        plus_count[k + 1] = plus_count[k] + usize::from(*s > 0.0);
        minus_count[k + 1] = minus_count[k] + usize::from(*s < 0.0);
    }
    let sub = |a: Row2, b: Row2| [a[0] - b[0], a[1] - b[1]];
    // Prefix-sum cancellation leaves rounding residue where a part is exactly empty.
    let noise = 1e-12 * sorted.iter().map(|(r, _)| r[0].hypot(r[1])).sum::<f64>();
    let clean = |v: f64| if v <= noise { 0.0 } else { v };

    // Masses of the positive and negative parts when folded rows in
    // `[0, before)` point against `eta` and rows in `[after, len)` along it.
    let masses = |before: usize, after: usize, eta: &Row2| {
        let after_plus = sub(plus[len], plus[after]);
        let after_minus = sub(minus[len], minus[after]);
        let pos = dot(&after_plus, eta) - dot(&minus[before], eta);
        let neg = dot(&after_minus, eta) - dot(&plus[before], eta);
        (clean(pos), clean(neg))
    };
    let mut best1 = Best::new();
    let mut offer1 = |pos: f64, neg: f64, eta: Row2| {
        best1.offer(MuValue::from_ratio(pos, neg), eta);
        best1.offer(MuValue::from_ratio(neg, pos), [-eta[0], -eta[1]]);
    };
    for (k, (r, _)) in sorted.iter().enumerate() {
        let l = r[0].hypot(r[1]);
        let eta = [-r[1] / l, r[0] / l];
        let (pos, neg) = masses(k, k + 1, &eta);
        offer1(pos, neg, eta);
    }

    let angle = |r: &Row2| r[1].atan2(r[0]);
    let mut best0 = Best::new();
    // Sector splits sit between consecutive distinct angles, plus the wrap-around split.
    let mut splits = vec![0usize];
    for k in 1..len {
        if angle(&sorted[k].0) != angle(&sorted[k - 1].0) {
            splits.push(k);
        }
    }
    for &s in &splits {
        let pos = (plus_count[len] - plus_count[s]) + minus_count[s];
        let neg = (minus_count[len] - minus_count[s]) + plus_count[s];
        let mid = if s == 0 {
            (angle(&sorted[0].0) + angle(&sorted[len - 1].0) - std::f64::consts::PI) / 2.0
        } else {
            (angle(&sorted[s - 1].0) + angle(&sorted[s].0)) / 2.0
        };
        let eta = [-mid.sin(), mid.cos()];
        best0.offer(MuValue::from_ratio(pos as f64, neg as f64), eta);
        best0.offer(MuValue::from_ratio(neg as f64, pos as f64), [-eta[0], -eta[1]]);
        // Sector interiors matter for mu1 only when every row is parallel,
        // where the boundary ratios degenerate to 0/0.
        let (pm, nm) = masses(s, s, &eta);
        offer1(pm, nm, eta);
    }
    Ok(MuEstimate {
        mu0: best0.value.unwrap_or(MuValue::Finite(1.0)),
        mu1: best1.value.unwrap_or(MuValue::Finite(1.0)),
        method: MuMethod::ExactSweep,
        witnesses: [best0.witness, best1.witness],
    })
}

/// Number of evenly spaced directions probed by [`mu_heuristic`].
pub const HEURISTIC_DIRECTIONS: usize = 64;

/// Lower bound on mu from a finite set of directions: the fitted optimum
/// (if given) and its negation, 64 evenly spaced directions, and `extra`.
pub fn mu_heuristic(x: &[Row2], optimum: Option<Row2>, extra: &[Row2]) -> Result<MuEstimate> {
    check_nonzero(x)?;
    let mut dirs: Vec<Row2> = Vec::with_capacity(HEURISTIC_DIRECTIONS + 2 + extra.len());
    if let Some(o) = optimum {
        dirs.push(o);
    }
    dirs.extend((0..HEURISTIC_DIRECTIONS).map(|k| {
        let t = 2.0 * std::f64::consts::PI * k as f64 / HEURISTIC_DIRECTIONS as f64;
        [t.cos(), t.sin()]
    }));
    dirs.extend_from_slice(extra);
    let mut best0 = Best::new();
    let mut best1 = Best::new();
    for eta in dirs {
        let (pc, nc, pm, nm) = sign_masses(x, &eta);
        let neg_eta = [-eta[0], -eta[1]];
        best0.offer(MuValue::from_ratio(pc as f64, nc as f64), eta);
        best0.offer(MuValue::from_ratio(nc as f64, pc as f64), neg_eta);
        best1.offer(MuValue::from_ratio(pm, nm), eta);
        best1.offer(MuValue::from_ratio(nm, pm), neg_eta);
    }
    Ok(MuEstimate {
        mu0: best0.value.unwrap_or(MuValue::Finite(1.0)),
        mu1: best1.value.unwrap_or(MuValue::Finite(1.0)),
        method: MuMethod::Heuristic,
        witnesses: [best0.witness, best1.witness],
    })
}

/// `inf ||M v||_1 / ||v||_1` for two-column `M`.
///
/// The map is piecewise linear on the l1 unit diamond, so its minimum sits at
/// a vertex of the diamond or where some row's zero line crosses it.
pub fn sigma1_min_2d(m: &[Row2]) -> f64 {
    let l1 = |v: &Row2| m.iter().map(|r| dot(r, v).abs()).sum::<f64>();
    let mut best = l1(&[1.0, 0.0]).min(l1(&[0.0, 1.0]));
    for (eta, norm1) in normal_directions(m) {
        let scale = eta[0].abs() + eta[1].abs();
        best = best.min(norm1 / scale);
    }
    best
}

/// mu estimates for a batch of designs, evaluated in parallel.
pub fn mu_table(designs: &[Vec<Row2>], optima: &[Option<Row2>], exact: bool) -> Result<Vec<MuEstimate>> {
    if designs.len() != optima.len() {
        return Err(IrtError::DimensionMismatch("one optimum per design is required".into()));
    }
    designs.par_iter().zip(optima.par_iter()).map(|(x, o)| if exact { mu_exact_2d(x) } else { mu_heuristic(x, *o, &[]) }).collect()
}

/// Writes `item,mu0,mu1,method` rows.
pub fn write_mu_csv<W: std::io::Write>(out: W, table: &[MuEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| IrtError::Numeric(format!("csv write failed: {e}"));
    w.write_record(["item", "mu0", "mu1", "method"]).map_err(io)?;
    for (i, e) in table.iter().enumerate() {
        w.write_record([i.to_string(), e.mu0.to_string(), e.mu1.to_string(), e.method.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| IrtError::Numeric(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_mu(x: &[Row2], steps: usize) -> (f64, f64) {
        let (mut m0, mut m1) = (0.0f64, 0.0f64);
        for k in 0..steps {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / steps as f64;
            let (pc, nc, pm, nm) = sign_masses(x, &[t.cos(), t.sin()]);
            m0 = m0.max(pc as f64 / nc as f64);
            m1 = m1.max(pm / nm);
        }
        (m0, m1)
    }

    #[test]
    fn symmetric_rows_have_unit_mu() {
        let x = vec![[1.0, 0.5], [-1.0, -0.5], [0.2, -3.0], [-0.2, 3.0]];
        let e = mu_exact_2d(&x).unwrap();
        assert_eq!(e.mu0, MuValue::Finite(1.0));
        assert!((e.mu1.as_f64() - 1.0).abs() < 1e-12);
        let h = mu_heuristic(&x, None, &[]).unwrap();
        assert!((h.mu1.as_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_example() {
        let e = mu_exact_2d(&[[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(e.mu0, MuValue::Finite(2.0));
        assert!((e.mu1.as_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn separable_rows_are_infinite() {
        let e = mu_exact_2d(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(e.mu0, MuValue::Infinite);
        assert_eq!(e.mu1, MuValue::Infinite);
        let w = e.witnesses[1];
        assert!(w[0] > 0.0);
        assert!(mu_exact_2d(&[[0.0, 0.0]; 3]).is_err());
    }

    #[test]
    fn exact_agrees_with_grid() {
        let x: Vec<Row2> = (0..25)
            .map(|i| {
                let t = i as f64;
                [(t * 1.3).sin() + 0.4, (t * 0.7).cos() - 0.2]
            })
            .collect();
        let e = mu_exact_2d(&x).unwrap();
        let (g0, g1) = grid_mu(&x, 200_000);
        assert!((e.mu0.as_f64() - g0).abs() / g0 < 1e-12, "{} vs {g0}", e.mu0);
        assert!(e.mu1.as_f64() >= g1 * (1.0 - 1e-9) && (e.mu1.as_f64() - g1) / g1 < 1e-3);
        let h = mu_heuristic(&x, None, &[]).unwrap();
        assert!(h.mu0 <= e.mu0 && h.mu1.as_f64() <= e.mu1.as_f64() * (1.0 + 1e-12));
    }

    #[test]
    fn sigma1_examples() {
        assert!((sigma1_min_2d(&[[1.0, 0.0], [0.0, 1.0]]) - 1.0).abs() < 1e-15);
        assert!((sigma1_min_2d(&[[2.0, 0.0], [0.0, 3.0]]) - 2.0).abs() < 1e-15);
        assert!(sigma1_min_2d(&[[1.0, 1.0], [2.0, 2.0]]).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let e = mu_exact_2d(&[[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let inf = mu_exact_2d(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_mu_csv(&mut buf, &[e, inf]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "item,mu0,mu1,method\n0,2,2,exact\n1,inf,inf,exact\n");
    }
}
