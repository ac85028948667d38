//! Response data, item/ability parameters, pointwise losses and the
//! negative log-likelihoods built from them.
//!
//! The item characteristic curve is `p = c + (1 - c) / (1 + exp(-a*theta + b))`.
//! Every conditional problem is written over a [`SignedDesign`]: for a fixed
//! block of parameters, each response becomes a 2-vector `x = -y * v` where `v`
//! is the fixed vector (`(theta, -1)` for examinees, `(a, b)` for items), and
//! the free block `eta` enters only through `z = x . eta`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, IrtError, Result};
use crate::numeric::{pairwise_sum, sigmoid, softplus};

pub type Row2 = [f64; 2];

/// Largest |z| the loss kernels are specified for.
pub const MAX_ABS_Z: f64 = 700.0;

/// Binary response matrix `Y` with entries in {-1, +1}, stored row-major by item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseMatrix {
    m: usize,
    n: usize,
    data: Vec<i8>,
}

impl ResponseMatrix {
    pub fn new(m: usize, n: usize, data: Vec<i8>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("response matrix needs at least one item and one examinee"));
        }
        if data.len() != m * n {
            return Err(IrtError::DimensionMismatch(format!("expected {} entries for {m}x{n}, got {}", m * n, data.len())));
        }
        if let Some(pos) = data.iter().position(|&v| v != 1 && v != -1) {
            return Err(invalid(format!("entry ({}, {}) = {} is not -1 or +1", pos / n, pos % n, data[pos])));
        }
        Ok(Self { m, n, data })
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> i8) -> Result<Self> {
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::new(m, n, data)
    }

    /// Builds from {0, 1} labels (0 maps to -1).
    pub fn from_binary(m: usize, n: usize, labels: &[u8]) -> Result<Self> {
        let data = labels
            .iter()
            .map(|&v| match v {
                0 => Ok(-1),
                1 => Ok(1),
                other => Err(invalid(format!("label {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(m, n, data)
    }

    /// Number of items `m`.
    pub fn items(&self) -> usize {
        self.m
    }

    /// Number of examinees `n`.
    pub fn examinees(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, item: usize, examinee: usize) -> i8 {
        self.data[item * self.n + examinee]
    }

    pub fn item_row(&self, item: usize) -> &[i8] {
        &self.data[item * self.n..(item + 1) * self.n]
    }

    /// Examinee-major copy: entry `j * m + i` is the response of examinee `j` to item `i`.
    pub fn examinee_major(&self) -> Vec<i8> {
        let mut out = vec![0; self.data.len()];
        for i in 0..self.m {
            for (j, &v) in self.item_row(i).iter().enumerate() {
                out[j * self.m + i] = v;
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.data
    }

    pub fn item_pass_count(&self, item: usize) -> usize {
        self.item_row(item).iter().filter(|&&y| y == 1).count()
    }

    pub fn examinee_pass_count(&self, examinee: usize) -> usize {
        (0..self.m).filter(|&i| self.get(i, examinee) == 1).count()
    }

    /// One bit per entry (1 = pass), little-endian within each word.
    pub fn pack_bits(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.data.len().div_ceil(64)];
        for (idx, &y) in self.data.iter().enumerate() {
            if y == 1 {
                words[idx / 64] |= 1u64 << (idx % 64);
            }
        }
        words
    }

    pub fn from_packed(m: usize, n: usize, words: &[u64]) -> Result<Self> {
        if words.len() != (m * n).div_ceil(64) {
            return Err(IrtError::DimensionMismatch(format!("{} packed words cannot hold a {m}x{n} matrix", words.len())));
        }
        let data = (0..m * n).map(|idx| if words[idx / 64] >> (idx % 64) & 1 == 1 { 1 } else { -1 }).collect();
        Self::new(m, n, data)
    }
}

/// Item parameters `(a_i, b_i, c_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemParameters {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ItemParameters {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() != c.len() {
            return Err(IrtError::DimensionMismatch(format!("item vectors have lengths a={}, b={}, c={}", a.len(), b.len(), c.len())));
        }
        if a.is_empty() {
            return Err(invalid("at least one item is required"));
        }
        for i in 0..a.len() {
            if !(a[i].is_finite() && a[i] > 0.0) {
                return Err(invalid(format!("discrimination a[{i}] = {} must be positive", a[i])));
            }
            if !b[i].is_finite() {
                return Err(invalid(format!("difficulty b[{i}] = {} is not finite", b[i])));
            }
            if !(0.0..0.5).contains(&c[i]) {
                return Err(invalid(format!("guessing c[{i}] = {} outside [0, 0.5)", c[i])));
            }
        }
        Ok(Self { a, b, c })
    }

    /// 2PL parameters (`c = 0`).
    pub fn two_pl(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let c = vec![0.0; a.len()];
        Self::new(a, b, c)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `alpha_i = (a_i, b_i)`.
    #[inline]
    pub fn alpha(&self, i: usize) -> Row2 {
        [self.a[i], self.b[i]]
    }
}

/// Examinee abilities `theta_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbilityParameters {
    pub theta: Vec<f64>,
}

impl AbilityParameters {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(invalid("at least one examinee is required"));
        }
        if let Some(j) = theta.iter().position(|t| !t.is_finite()) {
            return Err(invalid(format!("theta[{j}] is not finite")));
        }
        Ok(Self { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `beta_j = (theta_j, -1)`.
    #[inline]
    pub fn beta(&self, j: usize) -> Row2 {
        [self.theta[j], -1.0]
    }

    /// Rows `beta_j` stacked as an n x 2 matrix.
    pub fn design_points(&self) -> Vec<Row2> {
        (0..self.len()).map(|j| self.beta(j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "1pl")]
    OnePL,
    #[serde(rename = "2pl")]
    TwoPL,
    #[serde(rename = "3pl")]
    ThreePL,
}

impl ModelKind {
    pub fn has_guessing(self) -> bool {
        matches!(self, ModelKind::ThreePL)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = IrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1pl" | "rasch" => Ok(ModelKind::OnePL),
            "2pl" => Ok(ModelKind::TwoPL),
            "3pl" => Ok(ModelKind::ThreePL),
            other => Err(invalid(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::OnePL => "1pl",
            ModelKind::TwoPL => "2pl",
            ModelKind::ThreePL => "3pl",
        })
    }
}

/// Which pointwise loss a design row carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    /// Label -1, loss `g`.
    Fail,
    /// Label +1, loss `h`.
    Pass,
}

impl LossKind {
    #[inline]
    pub fn from_label(y: i8) -> Self {
        if y == 1 {
            LossKind::Pass
        } else {
            LossKind::Fail
        }
    }
}

/// Rows, weights, loss kinds and guessing values of one conditional problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDesign {
    rows: Vec<Row2>,
    weights: Vec<f64>,
    kinds: Vec<LossKind>,
    guessing: Vec<f64>,
}

impl SignedDesign {
    pub fn new(rows: Vec<Row2>, weights: Vec<f64>, kinds: Vec<LossKind>, guessing: Vec<f64>) -> Result<Self> {
        let len = rows.len();
        if weights.len() != len || kinds.len() != len || guessing.len() != len {
            return Err(IrtError::DimensionMismatch(format!(
                "design columns have lengths rows={len}, weights={}, kinds={}, guessing={}",
                weights.len(),
                kinds.len(),
                guessing.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("design rows must be finite"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("design weights must be finite and non-negative"));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(invalid("design needs at least one positively weighted row"));
        }
        if let Some(r) = guessing.iter().position(|c| !(0.0..0.5).contains(c)) {
            return Err(invalid(format!("guessing value {} on row {r} outside [0, 0.5)", guessing[r])));
        }
        Ok(Self { rows, weights, kinds, guessing })
    }

    /// Unit weights.
    pub fn unweighted(rows: Vec<Row2>, kinds: Vec<LossKind>, guessing: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; rows.len()];
        Self::new(rows, weights, kinds, guessing)
    }

    /// Plain logistic design: every row Fail with `c = 0`, so the objective is
    /// `sum_j w_j ln(1 + exp(x_j . eta))`.
    pub fn logistic(rows: Vec<Row2>, weights: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        Self::new(rows, weights, vec![LossKind::Fail; n], vec![0.0; n])
    }

    pub(crate) fn from_parts_unchecked(rows: Vec<Row2>, weights: Vec<f64>, kinds: Vec<LossKind>, guessing: Vec<f64>) -> Self {
        debug_assert!(rows.len() == weights.len() && rows.len() == kinds.len() && rows.len() == guessing.len());
        Self { rows, weights, kinds, guessing }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Row2] {
        &self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kinds(&self) -> &[LossKind] {
        &self.kinds
    }

    pub fn guessing(&self) -> &[f64] {
        &self.guessing
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(self.len(), |r| self.weights[r])
    }

    /// Replaces the weight vector.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(IrtError::DimensionMismatch("weight vector length differs from row count".into()));
        }
        self.weights = weights;
        Self::new(self.rows, self.weights, self.kinds, self.guessing)
    }

    /// Keeps the listed rows (with repetition allowed) under new weights.
    pub fn select(&self, rows: &[usize], weights: &[f64]) -> Result<Self> {
        if rows.len() != weights.len() {
            return Err(IrtError::DimensionMismatch("row and weight lists differ in length".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(IrtError::IndexOutOfRange { index: bad, len: self.len() });
        }
        Self::new(
            rows.iter().map(|&r| self.rows[r]).collect(),
            weights.to_vec(),
            rows.iter().map(|&r| self.kinds[r]).collect(),
            rows.iter().map(|&r| self.guessing[r]).collect(),
        )
    }

    pub fn count_kind(&self, kind: LossKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }
}

/// Probability of passing an item, `c + (1 - c) / (1 + exp(-a*theta + b))`.
pub fn icc_probability(a: f64, b: f64, c: f64, theta: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && theta.is_finite()) {
        return Err(invalid("icc inputs must be finite"));
    }
    if a <= 0.0 {
        return Err(invalid(format!("discrimination {a} must be positive")));
    }
    if !(0.0..0.5).contains(&c) {
        return Err(invalid(format!("guessing {c} outside [0, 0.5)")));
    }
    Ok(c + (1.0 - c) * sigmoid(a * theta - b))
}

/// Loss of a failed response, `g(z) = ln(1 + e^z) - ln(1 - c)`.
#[inline]
pub(crate) fn fail_loss(c: f64, z: f64) -> f64 {
    softplus(z) - (-c).ln_1p()
}

/// Loss of a passed response, `h(z) = -ln(c + (1 - c) / (1 + e^z))`.
///
/// With `x = -y * beta` a pass row has `z = -(a*theta - b)`, so this is the
/// negative log of the item characteristic curve; at `c = 0` it coincides
/// with `g`.
#[inline]
pub(crate) fn pass_loss(c: f64, z: f64) -> f64 {
    if c == 0.0 {
        softplus(z)
    } else if z > 0.0 {
        let e = (-z).exp();
        e.ln_1p() - (c + e).ln()
    } else {
        let e = z.exp();
        e.ln_1p() - (c * e).ln_1p()
    }
}

#[inline]
pub(crate) fn loss_unchecked(kind: LossKind, c: f64, z: f64) -> f64 {
    match kind {
        LossKind::Fail => fail_loss(c, z),
        LossKind::Pass => pass_loss(c, z),
    }
}

/// Pointwise loss `g` (Fail) or `h` (Pass) at `z`.
pub fn pointwise_loss(kind: LossKind, c: f64, z: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&c) {
        return Err(invalid(format!("guessing {c} outside [0, 0.5)")));
    }
    if !z.is_finite() {
        return Err(invalid("z must be finite"));
    }
    Ok(loss_unchecked(kind, c, z))
}

/// First and second derivatives of a pointwise loss.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct LossDerivatives {
    pub dz: f64,
    pub dzz: f64,
    pub dc: f64,
    pub dcc: f64,
    pub dzc: f64,
}

#[inline]
pub(crate) fn loss_derivatives(kind: LossKind, c: f64, z: f64) -> LossDerivatives {
    let s = sigmoid(z);
    let q = sigmoid(-z);
    match kind {
        LossKind::Fail => {
            let inv = 1.0 / (1.0 - c);
            LossDerivatives { dz: s, dzz: s * q, dc: inv, dcc: inv * inv, dzc: 0.0 }
        }
        LossKind::Pass => {
            let p = c + (1.0 - c) * q;
            // r = (1 - c) q / p, written so that q -> 0 has the right limit.
            let r = if c == 0.0 { 1.0 } else { (1.0 - c) * q / p };
            LossDerivatives {
                dz: s * r,
                dzz: s * r * ((1.0 - 2.0 * s) + s * r),
                dc: -s / p,
                dcc: (s / p) * (s / p),
                dzc: -(s / p) * (q / p),
            }
        }
    }
}

#[inline]
pub(crate) fn dot(x: &Row2, eta: &Row2) -> f64 {
    x[0] * eta[0] + x[1] * eta[1]
}

/// Weighted objective `sum_r w_r * loss_r(x_r . eta)` with a fixed pairwise
/// summation order.
pub fn conditional_nll(design: &SignedDesign, eta: &Row2) -> f64 {
    pairwise_sum(design.len(), |r| {
        let w = design.weights[r];
        if w == 0.0 {
            0.0
        } else {
            w * loss_unchecked(design.kinds[r], design.guessing[r], dot(&design.rows[r], eta))
        }
    })
}

/// Like [`conditional_nll`] but with every row's guessing value replaced by `c`.
pub fn conditional_nll_with_guessing(design: &SignedDesign, eta: &Row2, c: f64) -> f64 {
    pairwise_sum(design.len(), |r| {
        let w = design.weights[r];
        if w == 0.0 {
            0.0
        } else {
            w * loss_unchecked(design.kinds[r], c, dot(&design.rows[r], eta))
        }
    })
}

/// Loss of one response given item and examinee parameters.
#[inline]
pub(crate) fn cell_loss(y: i8, a: f64, b: f64, c: f64, theta: f64) -> f64 {
    let z = -(y as f64) * (a * theta - b);
    loss_unchecked(LossKind::from_label(y), c, z)
}

fn check_dims(y: &ResponseMatrix, items: &ItemParameters, abilities: &AbilityParameters) -> Result<()> {
    if items.len() != y.items() || abilities.len() != y.examinees() {
        return Err(IrtError::DimensionMismatch(format!(
            "response matrix is {}x{}, parameters are {} items x {} examinees",
            y.items(),
            y.examinees(),
            items.len(),
            abilities.len()
        )));
    }
    Ok(())
}

/// Joint negative log-likelihood of `Y`.
pub fn full_nll(y: &ResponseMatrix, items: &ItemParameters, abilities: &AbilityParameters) -> Result<f64> {
    check_dims(y, items, abilities)?;
    let n = y.examinees();
    Ok(pairwise_sum(y.items() * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        cell_loss(y.get(i, j), items.a[i], items.b[i], items.c[i], abilities.theta[j])
    }))
}

/// `sum_i item_w[i] * sum_j examinee_w[j] * loss_ij`; `None` means unit weights.
pub fn weighted_nll(
    y: &ResponseMatrix,
    items: &ItemParameters,
    abilities: &AbilityParameters,
    item_weights: Option<&[f64]>,
    examinee_weights: Option<&[f64]>,
) -> Result<f64> {
    check_dims(y, items, abilities)?;
    if item_weights.is_some_and(|w| w.len() != y.items()) || examinee_weights.is_some_and(|w| w.len() != y.examinees()) {
        return Err(IrtError::DimensionMismatch("weight vector length".into()));
    }
    let n = y.examinees();
    Ok(pairwise_sum(y.items() * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let w = item_weights.map_or(1.0, |w| w[i]) * examinee_weights.map_or(1.0, |w| w[j]);
        if w == 0.0 {
            0.0
        } else {
            w * cell_loss(y.get(i, j), items.a[i], items.b[i], items.c[i], abilities.theta[j])
        }
    }))
}

/// The fixed parameter block a design is built from.
#[derive(Clone, Copy, Debug)]
pub enum FixedBlock<'a> {
    /// Abilities fixed: design for one item, rows `-Y_ij * (theta_j, -1)`,
    /// every row carrying the item's guessing value.
    Abilities { abilities: &'a AbilityParameters, guessing: f64 },
    /// Items fixed: design for one examinee, rows `-Y_ij * (a_i, b_i)`,
    /// each row carrying its own item's guessing value.
    Items(&'a ItemParameters),
}

/// Signed design for item `index` (abilities fixed) or examinee `index`
/// (items fixed).
pub fn build_signed_design(y: &ResponseMatrix, fixed: FixedBlock<'_>, index: usize) -> Result<SignedDesign> {
    match fixed {
        FixedBlock::Abilities { abilities, guessing } => {
            if abilities.len() != y.examinees() {
                return Err(IrtError::DimensionMismatch("ability count differs from examinee count".into()));
            }
            if index >= y.items() {
                return Err(IrtError::IndexOutOfRange { index, len: y.items() });
            }
            if !(0.0..0.5).contains(&guessing) {
                return Err(invalid(format!("guessing {guessing} outside [0, 0.5)")));
            }
            Ok(item_design(y, abilities, index, guessing, None))
        }
        FixedBlock::Items(items) => {
            if items.len() != y.items() {
                return Err(IrtError::DimensionMismatch("item count differs".into()));
            }
            if index >= y.examinees() {
                return Err(IrtError::IndexOutOfRange { index, len: y.examinees() });
            }
            let column: Vec<i8> = (0..y.items()).map(|i| y.get(i, index)).collect();
            Ok(examinee_design(&column, items, None))
        }
    }
}

/// Design of item `i` over the examinees in `subset` (`(index, weight)`
/// pairs), or over all examinees with unit weight.
pub(crate) fn item_design(
    y: &ResponseMatrix,
    abilities: &AbilityParameters,
    i: usize,
    guessing: f64,
    subset: Option<&[(usize, f64)]>,
) -> SignedDesign {
    let row = y.item_row(i);
    let build = |j: usize| {
        let s = -(row[j] as f64);
        [s * abilities.theta[j], -s]
    };
    match subset {
        None => {
            let n = row.len();
            SignedDesign::from_parts_unchecked(
                (0..n).map(build).collect(),
                vec![1.0; n],
                row.iter().map(|&v| LossKind::from_label(v)).collect(),
                vec![guessing; n],
            )
        }
        Some(sub) => SignedDesign::from_parts_unchecked(
            sub.iter().map(|&(j, _)| build(j)).collect(),
            sub.iter().map(|&(_, w)| w).collect(),
            sub.iter().map(|&(j, _)| LossKind::from_label(row[j])).collect(),
            vec![guessing; sub.len()],
        ),
    }
}

/// Design of one examinee, whose responses are `column`, over the items in
/// `subset` or over all items.
pub(crate) fn examinee_design(column: &[i8], items: &ItemParameters, subset: Option<&[(usize, f64)]>) -> SignedDesign {
    let build = |i: usize| {
        let s = -(column[i] as f64);
        [s * items.a[i], s * items.b[i]]
    };
    match subset {
        None => SignedDesign::from_parts_unchecked(
            (0..column.len()).map(build).collect(),
            vec![1.0; column.len()],
            column.iter().map(|&v| LossKind::from_label(v)).collect(),
            items.c.clone(),
        ),
        Some(sub) => SignedDesign::from_parts_unchecked(
            sub.iter().map(|&(i, _)| build(i)).collect(),
            sub.iter().map(|&(_, w)| w).collect(),
            sub.iter().map(|&(i, _)| LossKind::from_label(column[i])).collect(),
            sub.iter().map(|&(i, _)| items.c[i]).collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn icc_examples() {
        assert_eq!(icc_probability(1.0, 0.0, 0.0, 0.0).unwrap(), 0.5);
        let p = icc_probability(2.75, 0.0, 0.2, -1e6).unwrap();
        assert!((p - 0.2).abs() < 1e-12);
        let p = icc_probability(1.0, 0.0, 0.0, 3f64.ln()).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn icc_rejects_bad_inputs() {
        assert!(icc_probability(f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(icc_probability(1.0, 0.0, 0.0, f64::INFINITY).is_err());
        assert!(icc_probability(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(icc_probability(1.0, 0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn icc_complement_matches_failure_form() {
        for &(a, b, c, t) in &[(1.3, 0.4, 0.1, -0.7), (4.0, -2.0, 0.3, 1.5), (0.5, 5.0, 0.0, -6.0)] {
            let p = icc_probability(a, b, c, t).unwrap();
            let fail = (1.0 - c) / (1.0 + (a * t - b).exp());
            assert!(((1.0 - p) - fail).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_examples() {
        assert!((pointwise_loss(LossKind::Fail, 0.0, 0.0).unwrap() - LN2).abs() < 1e-15);
        assert!((pointwise_loss(LossKind::Pass, 0.0, 0.0).unwrap() - LN2).abs() < 1e-15);
        let g = pointwise_loss(LossKind::Fail, 0.25, 0.0).unwrap();
        assert!((g - (8.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((g - 0.980829).abs() < 1e-6);
        let h = pointwise_loss(LossKind::Pass, 1.0 / 3.0, 0.0).unwrap();
        assert!((h - 1.5f64.ln()).abs() < 1e-15);
        assert!((h - 0.405465).abs() < 1e-6);
    }

    #[test]
    fn loss_rejects_bad_guessing() {
        assert!(pointwise_loss(LossKind::Fail, 0.5, 0.0).is_err());
        assert!(pointwise_loss(LossKind::Pass, -0.1, 0.0).is_err());
        assert!(pointwise_loss(LossKind::Pass, 0.1, f64::NAN).is_err());
    }

    #[test]
    fn losses_are_stable_at_the_range_limits() {
        for &c in &[0.0, 0.1, 0.49] {
            for &z in &[-MAX_ABS_Z, MAX_ABS_Z] {
                for kind in [LossKind::Fail, LossKind::Pass] {
                    let v = pointwise_loss(kind, c, z).unwrap();
                    assert!(v.is_finite() && v >= 0.0, "{kind:?} c={c} z={z} -> {v}");
                }
            }
            let g = pointwise_loss(LossKind::Fail, c, MAX_ABS_Z).unwrap();
            assert!((g - (MAX_ABS_Z - (1.0 - c).ln())).abs() < 1e-9);
        }
        let h = pointwise_loss(LossKind::Pass, 0.2, MAX_ABS_Z).unwrap();
        assert!((h - (1.0f64 / 0.2).ln()).abs() < 1e-12);
    }

    #[test]
    fn pass_loss_is_negative_log_icc() {
        let (a, b, c, t) = (1.7, -0.3, 0.15, 0.4);
        let p = icc_probability(a, b, c, t).unwrap();
        let z = -(a * t - b);
        assert!((pass_loss(c, z) + p.ln()).abs() < 1e-15);
        assert!((fail_loss(c, -z) + (1.0 - p).ln()).abs() < 1e-15);
    }

    #[test]
    fn design_rows_follow_sign_convention() {
        let y = ResponseMatrix::new(1, 1, vec![1]).unwrap();
        let ab = AbilityParameters::new(vec![0.5]).unwrap();
        let d = build_signed_design(&y, FixedBlock::Abilities { abilities: &ab, guessing: 0.0 }, 0).unwrap();
        assert_eq!(d.rows()[0], [-0.5, 1.0]);
        assert_eq!(d.kinds()[0], LossKind::Pass);

        let y = ResponseMatrix::new(1, 1, vec![-1]).unwrap();
        let items = ItemParameters::two_pl(vec![2.0], vec![1.0]).unwrap();
        let d = build_signed_design(&y, FixedBlock::Items(&items), 0).unwrap();
        assert_eq!(d.rows()[0], [2.0, 1.0]);
        assert_eq!(d.kinds()[0], LossKind::Fail);
    }

    #[test]
    fn checkerboard_design_matches_enumeration() {
        let y = ResponseMatrix::from_fn(3, 3, |i, j| if (i + j) % 2 == 0 { 1 } else { -1 }).unwrap();
        let ab = AbilityParameters::new(vec![-1.0, 0.0, 2.0]).unwrap();
        let items = ItemParameters::new(vec![1.0, 2.0, 3.0], vec![0.5, -0.5, 1.5], vec![0.1, 0.2, 0.3]).unwrap();
        for i in 0..3 {
            let d = build_signed_design(&y, FixedBlock::Abilities { abilities: &ab, guessing: items.c[i] }, i).unwrap();
            for j in 0..3 {
                let s = if (i + j) % 2 == 0 { -1.0 } else { 1.0 };
                assert_eq!(d.rows()[j], [s * ab.theta[j], -s]);
                assert_eq!(d.kinds()[j] == LossKind::Pass, (i + j) % 2 == 0);
                assert_eq!(d.guessing()[j], items.c[i]);
            }
        }
        for j in 0..3 {
            let d = build_signed_design(&y, FixedBlock::Items(&items), j).unwrap();
            for i in 0..3 {
                let s = if (i + j) % 2 == 0 { -1.0 } else { 1.0 };
                assert_eq!(d.rows()[i], [s * items.a[i], s * items.b[i]]);
                assert_eq!(d.guessing()[i], items.c[i]);
            }
        }
    }

    #[test]
    fn design_index_out_of_range() {
        let y = ResponseMatrix::new(2, 3, vec![1; 6]).unwrap();
        let ab = AbilityParameters::new(vec![0.0; 3]).unwrap();
        let err = build_signed_design(&y, FixedBlock::Abilities { abilities: &ab, guessing: 0.0 }, 2);
        assert!(matches!(err, Err(IrtError::IndexOutOfRange { index: 2, len: 2 })));
        let items = ItemParameters::two_pl(vec![1.0; 2], vec![0.0; 2]).unwrap();
        assert!(build_signed_design(&y, FixedBlock::Items(&items), 3).is_err());
    }

    #[test]
    fn conditional_nll_trivial_cases() {
        let d = SignedDesign::logistic(vec![[0.0, 0.0]; 7], vec![1.0; 7]).unwrap();
        assert!((conditional_nll(&d, &[0.3, -2.0]) - 7.0 * LN2).abs() < 1e-14);

        let d = SignedDesign::unweighted(vec![[0.4, -1.2]], vec![LossKind::Pass], vec![0.2]).unwrap();
        let eta = [1.5, 0.25];
        let z = 0.4 * 1.5 - 1.2 * 0.25;
        assert_eq!(conditional_nll(&d, &eta), pointwise_loss(LossKind::Pass, 0.2, z).unwrap());
    }

    #[test]
    fn full_nll_at_neutral_parameters() {
        let y = ResponseMatrix::from_fn(4, 6, |i, j| if (i * 7 + j) % 3 == 0 { 1 } else { -1 }).unwrap();
        let items = ItemParameters::two_pl(vec![1.0; 4], vec![0.0; 4]).unwrap();
        let ab = AbilityParameters::new(vec![0.0; 6]).unwrap();
        assert!((full_nll(&y, &items, &ab).unwrap() - 24.0 * LN2).abs() < 1e-13);
    }

    #[test]
    fn full_nll_matches_product_formula_on_2x2() {
        let y = ResponseMatrix::new(2, 2, vec![1, -1, -1, 1]).unwrap();
        let items = ItemParameters::two_pl(vec![1.5, 0.7], vec![0.2, -0.4]).unwrap();
        let ab = AbilityParameters::new(vec![-0.3, 1.1]).unwrap();
        let mut prod = 1.0;
        for i in 0..2 {
            for j in 0..2 {
                let ab_dot = items.a[i] * ab.theta[j] - items.b[i];
                prod *= 1.0 / (1.0 + (-(y.get(i, j) as f64) * ab_dot).exp());
            }
        }
        let nll = full_nll(&y, &items, &ab).unwrap();
        assert!(((-nll).exp() - prod).abs() < 1e-15);
    }

    #[test]
    fn full_nll_dimension_mismatch() {
        let y = ResponseMatrix::new(2, 2, vec![1; 4]).unwrap();
        let items = ItemParameters::two_pl(vec![1.0; 3], vec![0.0; 3]).unwrap();
        let ab = AbilityParameters::new(vec![0.0; 2]).unwrap();
        assert!(matches!(full_nll(&y, &items, &ab), Err(IrtError::DimensionMismatch(_))));
    }

    #[test]
    fn response_matrix_validation() {
        assert!(ResponseMatrix::new(1, 2, vec![1, 0]).is_err());
        assert!(ResponseMatrix::new(0, 2, vec![]).is_err());
        assert!(ResponseMatrix::new(2, 2, vec![1, 1, 1]).is_err());
        let y = ResponseMatrix::from_binary(1, 3, &[0, 1, 1]).unwrap();
        assert_eq!(y.as_slice(), &[-1, 1, 1]);
        assert_eq!(y.item_pass_count(0), 2);
    }

    #[test]
    fn design_invariants_enforced() {
        assert!(SignedDesign::logistic(vec![[1.0, 0.0]], vec![0.0]).is_err());
        assert!(SignedDesign::logistic(vec![[1.0, 0.0]], vec![-1.0]).is_err());
        assert!(SignedDesign::new(vec![[1.0, 0.0]], vec![1.0], vec![LossKind::Fail], vec![0.5]).is_err());
        assert!(SignedDesign::new(vec![[1.0, 0.0]], vec![1.0, 1.0], vec![LossKind::Fail], vec![0.0]).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(ItemParameters::new(vec![0.0], vec![0.0], vec![0.0]).is_err());
        assert!(ItemParameters::new(vec![1.0], vec![0.0], vec![0.5]).is_err());
        assert!(ItemParameters::new(vec![1.0, 1.0], vec![0.0], vec![0.0]).is_err());
        assert!(AbilityParameters::new(vec![f64::NAN]).is_err());
        assert_eq!("3PL".parse::<ModelKind>().unwrap(), ModelKind::ThreePL);
        assert!("4pl".parse::<ModelKind>().is_err());
    }
}
