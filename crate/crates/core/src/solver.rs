//! Box-constrained conditional solves and the alternating main loop.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, IrtError, Result};
use crate::model::{
    conditional_nll, dot, examinee_design, item_design, loss_derivatives, loss_unchecked, AbilityParameters, ItemParameters, LossKind,
    ModelKind, ResponseMatrix, Row2, SignedDesign,
};
use crate::numeric::{mean, pairwise_sum, population_sd};

/// Parameter boxes. Each pair is `(lower, upper)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub theta: (f64, f64),
    pub c: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self { a: (0.01, 5.0), b: (-6.0, 6.0), theta: (-6.0, 6.0), c: (0.0, 0.49) }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ok(self.a) && ok(self.b) && ok(self.theta) && ok(self.c)) {
            return Err(invalid("every bound must be a finite interval with lower <= upper"));
        }
        if self.a.0 <= 0.0 {
            return Err(invalid("lower bound on a must be positive"));
        }
        if self.c.0 < 0.0 || self.c.1 >= 0.5 {
            return Err(invalid("bounds on c must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_main_iterations: usize,
    /// Projected-gradient norm at which an inner solve stops.
    pub inner_tolerance: f64,
    pub inner_max_steps: usize,
    pub bounds: Bounds,
    pub seed: u64,
    /// Reject any conditional update that would raise its objective.
    pub monotone_guard: bool,
    /// Stop once the relative objective improvement of a main iteration drops below this.
    pub relative_stop: f64,
    /// Also record the full-data objective after every iteration of a subsampled fit.
    pub track_full_objective: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_main_iterations: 50,
            inner_tolerance: 1e-8,
            inner_max_steps: 200,
            bounds: Bounds::default(),
            seed: 0,
            monotone_guard: true,
            relative_stop: 1e-10,
            track_full_objective: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_main_iterations == 0 {
            return Err(invalid("max_main_iterations must be at least 1"));
        }
        if !(self.inner_tolerance.is_finite() && self.inner_tolerance > 0.0) {
            return Err(invalid("inner_tolerance must be positive"));
        }
        if self.inner_max_steps == 0 {
            return Err(invalid("inner_max_steps must be at least 1"));
        }
        self.bounds.validate()
    }
}

/// Weighted subsets used in place of the full data in one of the two steps.
///
/// `examinees` replaces the sum over examinees in the item step; `items`
/// replaces the sum over items in the ability step. Entries are
/// `(index, weight)` with distinct indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Subsample {
    pub examinees: Option<Vec<(usize, f64)>>,
    pub items: Option<Vec<(usize, f64)>>,
}

impl Subsample {
    pub fn examinees(sel: Vec<(usize, f64)>) -> Self {
        Self { examinees: Some(sel), items: None }
    }

    fn validate(&self, y: &ResponseMatrix) -> Result<()> {
        for (sel, len, what) in [(&self.examinees, y.examinees(), "examinee"), (&self.items, y.items(), "item")] {
            let Some(sel) = sel else { continue };
            if sel.is_empty() {
                return Err(IrtError::EmptyCoreset);
            }
            let mut seen = vec![false; len];
            for &(idx, w) in sel {
                if idx >= len {
                    return Err(IrtError::IndexOutOfRange { index: idx, len });
                }
                if seen[idx] {
                    return Err(invalid(format!("{what} {idx} appears twice in the subsample")));
                }
                seen[idx] = true;
                if !(w.is_finite() && w > 0.0) {
                    return Err(invalid(format!("{what} {idx} has non-positive weight {w}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub abilities_secs: f64,
    pub items_secs: f64,
    pub objective_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Objective after every main iteration: the full objective, or the
    /// subsample-weighted objective when a subsample is in use. Entry 0 is
    /// the objective at the starting point.
    pub objectives: Vec<f64>,
    /// Full-data objective per iteration when tracked.
    pub full_objectives: Vec<f64>,
    pub iterations: usize,
    pub timings: PhaseTimings,
    /// Inner solves that hit `inner_max_steps` or stalled before the tolerance.
    pub unconverged_solves: usize,
    /// Conditional updates rejected by the monotone guard.
    pub rejected_updates: usize,
}

impl FitTrace {
    pub fn is_non_increasing(&self) -> bool {
        self.objectives.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub items: ItemParameters,
    pub abilities: AbilityParameters,
    pub trace: FitTrace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOutcome<const D: usize> {
    pub x: [f64; D],
    pub objective: f64,
    pub steps: usize,
    pub converged: bool,
}

struct Eval<const D: usize> {
    f: f64,
    g: [f64; D],
    h: [[f64; D]; D],
}

fn clamp<const D: usize>(x: [f64; D], lo: &[f64; D], hi: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| x[i].clamp(lo[i], hi[i]))
}

/// Solves `H d = -g` restricted to `free` by Cholesky; `None` when the
/// reduced Hessian is not positive definite.
fn newton_direction<const D: usize>(e: &Eval<D>, free: &[bool; D]) -> Option<[f64; D]> {
    let idx: Vec<usize> = (0..D).filter(|&i| free[i]).collect();
    let k = idx.len();
    if k == 0 {
        return None;
    }
    let mut l = [[0.0; 3]; 3];
    for r in 0..k {
        for c in 0..=r {
            let mut s = e.h[idx[r]][idx[c]];
            for p in 0..c {
                s -= l[r][p] * l[c][p];
            }
            if r == c {
                if !(s > 1e-300) || !s.is_finite() {
                    return None;
                }
                l[r][r] = s.sqrt();
            } else {
                l[r][c] = s / l[c][c];
            }
        }
    }
    let mut v = [0.0; 3];
    for r in 0..k {
        let mut s = -e.g[idx[r]];
        for p in 0..r {
            s -= l[r][p] * v[p];
        }
        v[r] = s / l[r][r];
    }
    for r in (0..k).rev() {
        let mut s = v[r];
        for p in r + 1..k {
            s -= l[p][r] * v[p];
        }
        v[r] = s / l[r][r];
    }
    let mut d = [0.0; D];
    for (r, &i) in idx.iter().enumerate() {
        d[i] = v[r];
    }
    d.iter().all(|x| x.is_finite()).then_some(d)
}

/// Projected Newton with Armijo backtracking on a box. Coordinates with
/// `lo == hi` are held fixed. Falls back to a scaled projected-gradient step
/// when the free block of the Hessian is not positive definite.
fn projected_newton<const D: usize>(
    x0: [f64; D],
    lo: [f64; D],
    hi: [f64; D],
    tol: f64,
    max_steps: usize,
    value: impl Fn(&[f64; D]) -> f64,
    eval: impl Fn(&[f64; D]) -> Eval<D>,
) -> SolveOutcome<D> {
    let mut x = clamp(x0, &lo, &hi);
    let mut f = value(&x);
    let mut converged = false;
    let mut steps = 0;
    while steps < max_steps {
        let e = eval(&x);
        f = e.f;
        let pg: [f64; D] = std::array::from_fn(|i| x[i] - (x[i] - e.g[i]).clamp(lo[i], hi[i]));
        if pg.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol {
            converged = true;
            break;
        }
        let free: [bool; D] =
            std::array::from_fn(|i| lo[i] < hi[i] && !(x[i] <= lo[i] && e.g[i] > 0.0) && !(x[i] >= hi[i] && e.g[i] < 0.0));
        let gradient_step = || {
            let scale = (0..D).filter(|&i| free[i]).map(|i| e.h[i][i].abs()).fold(0.0, f64::max).max(1e-12);
            std::array::from_fn(|i| if free[i] { -e.g[i] / scale } else { 0.0 })
        };
        let noise = 64.0 * f64::EPSILON * f.abs().max(1.0);
        let mut accepted = None;
        let newton = newton_direction(&e, &free).filter(|d| (0..D).map(|i| d[i] * e.g[i]).sum::<f64>() < 0.0);
        if let Some(d) = &newton {
            // Predicted decrease below the rounding level of f: nothing left to gain.
            let pred = -(0..D).map(|i| d[i] * e.g[i]).sum::<f64>();
            if pred <= noise {
                converged = true;
                break;
            }
        }
        let candidates: [Option<[f64; D]>; 2] = [newton, Some(gradient_step())];
        for d in candidates.into_iter().flatten() {
            let mut t = 1.0;
            for _ in 0..60 {
                let xn = clamp(std::array::from_fn(|i| x[i] + t * d[i]), &lo, &hi);
                let dec: f64 = (0..D).map(|i| e.g[i] * (xn[i] - x[i])).sum();
                if dec >= 0.0 {
                    t *= 0.5;
                    continue;
                }
                if -dec <= noise {
                    break;
                }
                let fnew = value(&xn);
                if fnew <= f + 1e-4 * dec {
                    accepted = Some((xn, fnew));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        steps += 1;
        match accepted {
            Some((xn, fnew)) => {
                let moved = (0..D).any(|i| xn[i] != x[i]);
                x = xn;
                f = fnew;
                if !moved {
                    converged = true;
                    break;
                }
            }
            // No representable descent left: the point is stationary up to rounding.
            None => {
                converged = pg.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol.max(1e-6 * f.abs().max(1.0));
                break;
            }
        }
    }
    SolveOutcome { x, objective: f, steps, converged }
}

#[inline]
fn row_terms(kind: LossKind, c: f64, z: f64) -> (f64, f64, f64) {
    if c == 0.0 {
        let e = (-z.abs()).exp();
        let loss = z.max(0.0) + e.ln_1p();
        let s = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
        (loss, s, e / ((1.0 + e) * (1.0 + e)))
    } else {
        let d = loss_derivatives(kind, c, z);
        (loss_unchecked(kind, c, z), d.dz, d.dzz)
    }
}

fn eval_linear(design: &SignedDesign, eta: &Row2) -> Eval<2> {
    let (rows, w, kinds, cs) = (design.rows(), design.weights(), design.kinds(), design.guessing());
    let mut out = Eval { f: 0.0, g: [0.0; 2], h: [[0.0; 2]; 2] };
    for r in 0..rows.len() {
        if w[r] == 0.0 {
            continue;
        }
        let x = &rows[r];
        let (l, d1, d2) = row_terms(kinds[r], cs[r], dot(x, eta));
        out.f += w[r] * l;
        let (g1, h1) = (w[r] * d1, w[r] * d2);
        out.g[0] += g1 * x[0];
        out.g[1] += g1 * x[1];
        out.h[0][0] += h1 * x[0] * x[0];
        out.h[0][1] += h1 * x[0] * x[1];
        out.h[1][1] += h1 * x[1] * x[1];
    }
    out.h[1][0] = out.h[0][1];
    out
}

fn value_linear(design: &SignedDesign, eta: &Row2) -> f64 {
    let (rows, w, kinds, cs) = (design.rows(), design.weights(), design.kinds(), design.guessing());
    let mut f = 0.0;
    for r in 0..rows.len() {
        if w[r] != 0.0 {
            f += w[r] * loss_unchecked(kinds[r], cs[r], dot(&rows[r], eta));
        }
    }
    f
}

fn eval_with_guessing(design: &SignedDesign, p: &[f64; 3]) -> Eval<3> {
    let (rows, w, kinds) = (design.rows(), design.weights(), design.kinds());
    let eta = [p[0], p[1]];
    let c = p[2];
    let mut out = Eval { f: 0.0, g: [0.0; 3], h: [[0.0; 3]; 3] };
    for r in 0..rows.len() {
        if w[r] == 0.0 {
            continue;
        }
        let x = &rows[r];
        let z = dot(x, &eta);
        let d = loss_derivatives(kinds[r], c, z);
        let wr = w[r];
        out.f += wr * loss_unchecked(kinds[r], c, z);
        out.g[0] += wr * d.dz * x[0];
        out.g[1] += wr * d.dz * x[1];
        out.g[2] += wr * d.dc;
        out.h[0][0] += wr * d.dzz * x[0] * x[0];
        out.h[0][1] += wr * d.dzz * x[0] * x[1];
        out.h[1][1] += wr * d.dzz * x[1] * x[1];
        out.h[0][2] += wr * d.dzc * x[0];
        out.h[1][2] += wr * d.dzc * x[1];
        out.h[2][2] += wr * d.dcc;
    }
    out.h[1][0] = out.h[0][1];
    out.h[2][0] = out.h[0][2];
    out.h[2][1] = out.h[1][2];
    out
}

fn value_with_guessing(design: &SignedDesign, p: &[f64; 3]) -> f64 {
    let (rows, w, kinds) = (design.rows(), design.weights(), design.kinds());
    let eta = [p[0], p[1]];
    let mut f = 0.0;
    for r in 0..rows.len() {
        if w[r] != 0.0 {
            f += w[r] * loss_unchecked(kinds[r], p[2], dot(&rows[r], &eta));
        }
    }
    f
}

/// Gradient of [`conditional_nll`] with respect to `eta`.
pub fn conditional_gradient(design: &SignedDesign, eta: &Row2) -> [f64; 2] {
    eval_linear(design, eta).g
}

/// Gradient with respect to `(eta_0, eta_1, c)` when every row uses the
/// shared guessing value `c` (the 3PL item step).
pub fn conditional_gradient_with_guessing(design: &SignedDesign, eta: &Row2, c: f64) -> [f64; 3] {
    eval_with_guessing(design, &[eta[0], eta[1], c]).g
}

/// Minimizes [`conditional_nll`] over the box `[lo, hi]` starting at `init`.
/// Setting `lo[i] == hi[i]` fixes coordinate `i`.
pub fn fit_conditional(design: &SignedDesign, lo: Row2, hi: Row2, init: Row2, tol: f64, max_steps: usize) -> Result<SolveOutcome<2>> {
    check_box(&lo, &hi)?;
    Ok(projected_newton(init, lo, hi, tol, max_steps, |e| value_linear(design, e), |e| eval_linear(design, e)))
}

/// Joint minimization over `(eta_0, eta_1, c)` with the guessing value shared
/// by all rows.
pub fn fit_conditional_with_guessing(
    design: &SignedDesign,
    lo: [f64; 3],
    hi: [f64; 3],
    init: [f64; 3],
    tol: f64,
    max_steps: usize,
) -> Result<SolveOutcome<3>> {
    check_box(&lo, &hi)?;
    if lo[2] < 0.0 || hi[2] >= 0.5 {
        return Err(invalid("guessing bounds must lie in [0, 0.5)"));
    }
    Ok(projected_newton(init, lo, hi, tol, max_steps, |p| value_with_guessing(design, p), |p| eval_with_guessing(design, p)))
}

fn check_box<const D: usize>(lo: &[f64; D], hi: &[f64; D]) -> Result<()> {
    if (0..D).any(|i| !(lo[i].is_finite() && hi[i].is_finite() && lo[i] <= hi[i])) {
        return Err(invalid("solver box must be finite with lower <= upper"));
    }
    Ok(())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Deterministic starting point: standardized raw scores for abilities,
/// `a = 1`, `b` = logit of the failure rate, `c = max(c_min, 0.1)` for 3PL.
pub fn initial_parameters(y: &ResponseMatrix, model: ModelKind, bounds: &Bounds) -> Result<(ItemParameters, AbilityParameters)> {
    bounds.validate()?;
    let (m, n) = (y.items(), y.examinees());
    let scores: Vec<f64> = (0..n).map(|j| y.examinee_pass_count(j) as f64).collect();
    let (mu, sd) = (mean(&scores), population_sd(&scores));
    let theta =
        scores.iter().map(|s| if sd > 0.0 { (s - mu) / sd } else { 0.0 }).map(|t| t.clamp(bounds.theta.0, bounds.theta.1)).collect();
    let a = vec![1.0f64.clamp(bounds.a.0, bounds.a.1); m];
    let b = (0..m)
        .map(|i| {
            let fail = (n - y.item_pass_count(i)) as f64;
            // Half-count correction keeps the logit finite for all-pass/all-fail items.
            logit((fail + 0.5) / (n as f64 + 1.0)).clamp(bounds.b.0, bounds.b.1)
        })
        .collect();
    let c0 = if model.has_guessing() { bounds.c.0.max(0.1).min(bounds.c.1) } else { 0.0 };
    Ok((ItemParameters::new(a, b, vec![c0; m])?, AbilityParameters::new(theta)?))
}

/// Runs the alternating fit from [`initial_parameters`].
pub fn alternate_fit(y: &ResponseMatrix, model: ModelKind, config: &FitConfig, subsample: Option<&Subsample>) -> Result<FitResult> {
    let (items, abilities) = initial_parameters(y, model, &config.bounds)?;
    alternate_fit_from(y, model, config, subsample, items, abilities)
}

/// Objective over the item and examinee subsets (full sums where `None`).
fn subsample_objective(
    y: &ResponseMatrix,
    items: &ItemParameters,
    abilities: &AbilityParameters,
    item_sel: Option<&[(usize, f64)]>,
    examinee_sel: Option<&[(usize, f64)]>,
) -> f64 {
    let per_item = |i: usize| -> f64 {
        let row = y.item_row(i);
        let cell = |j: usize| {
            let yv = row[j];
            let z = -(yv as f64) * (items.a[i] * abilities.theta[j] - items.b[i]);
            loss_unchecked(LossKind::from_label(yv), items.c[i], z)
        };
        match examinee_sel {
            None => pairwise_sum(row.len(), cell),
            Some(sel) => pairwise_sum(sel.len(), |r| sel[r].1 * cell(sel[r].0)),
        }
    };
    let totals: Vec<f64> = match item_sel {
        None => (0..y.items()).into_par_iter().map(per_item).collect(),
        Some(sel) => sel.par_iter().map(|&(i, w)| w * per_item(i)).collect(),
    };
    pairwise_sum(totals.len(), |r| totals[r])
}

/// Alternating fit from a given starting point.
///
/// Every main iteration first re-solves all abilities with items fixed, then
/// all items with abilities fixed. With a subsample, the item step sums only
/// over the selected examinees (and the ability step over the selected
/// items) with their weights, and the recorded objective is the matching
/// weighted objective.
pub fn alternate_fit_from(
    y: &ResponseMatrix,
    model: ModelKind,
    config: &FitConfig,
    subsample: Option<&Subsample>,
    mut items: ItemParameters,
    mut abilities: AbilityParameters,
) -> Result<FitResult> {
    config.validate()?;
    if items.len() != y.items() || abilities.len() != y.examinees() {
        return Err(IrtError::DimensionMismatch(format!(
            "response matrix is {}x{}, starting point has {} items and {} examinees",
            y.items(),
            y.examinees(),
            items.len(),
            abilities.len()
        )));
    }
    if let Some(s) = subsample {
        s.validate(y)?;
    }
    let examinee_sel = subsample.and_then(|s| s.examinees.as_deref());
    let item_sel = subsample.and_then(|s| s.items.as_deref());
    let bounds = &config.bounds;
    for i in 0..items.len() {
        items.a[i] = items.a[i].clamp(bounds.a.0, bounds.a.1);
        items.b[i] = items.b[i].clamp(bounds.b.0, bounds.b.1);
        items.c[i] = items.c[i].clamp(bounds.c.0, bounds.c.1);
    }
    abilities.theta.iter_mut().for_each(|t| *t = t.clamp(bounds.theta.0, bounds.theta.1));
    if model == ModelKind::OnePL {
        items.a.iter_mut().for_each(|a| *a = 1.0);
    }
    if !model.has_guessing() {
        items.c.iter_mut().for_each(|c| *c = 0.0);
    }

    let columns = y.examinee_major();
    let mut trace = FitTrace::default();
    let t0 = Instant::now();
    let mut current = subsample_objective(y, &items, &abilities, item_sel, examinee_sel);
    trace.objectives.push(current);
    if config.track_full_objective {
        trace.full_objectives.push(subsample_objective(y, &items, &abilities, None, None));
    }
    trace.timings.objective_secs += t0.elapsed().as_secs_f64();

    for _ in 0..config.max_main_iterations {
        let t = Instant::now();
        let (theta, unconv, rejected) = ability_step(y, &columns, &items, &abilities, item_sel, config);
        abilities.theta = theta;
        trace.unconverged_solves += unconv;
        trace.rejected_updates += rejected;
        trace.timings.abilities_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (updated, unconv, rejected) = item_step(y, model, &items, &abilities, examinee_sel, config);
        items = updated;
        trace.unconverged_solves += unconv;
        trace.rejected_updates += rejected;
        trace.timings.items_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let next = subsample_objective(y, &items, &abilities, item_sel, examinee_sel);
        if config.track_full_objective {
            trace.full_objectives.push(subsample_objective(y, &items, &abilities, None, None));
        }
        trace.timings.objective_secs += t.elapsed().as_secs_f64();
        if !next.is_finite() {
            return Err(IrtError::Numeric("objective became non-finite".into()));
        }
        trace.objectives.push(next);
        trace.iterations += 1;
        let improvement = (current - next) / current.abs().max(f64::MIN_POSITIVE);
        current = next;
        if improvement < config.relative_stop {
            break;
        }
    }
    Ok(FitResult { items: ItemParameters::new(items.a, items.b, items.c)?, abilities: AbilityParameters::new(abilities.theta)?, trace })
}

type StepOutput<T> = (T, usize, usize);

fn ability_step(
    y: &ResponseMatrix,
    columns: &[i8],
    items: &ItemParameters,
    abilities: &AbilityParameters,
    item_sel: Option<&[(usize, f64)]>,
    config: &FitConfig,
) -> StepOutput<Vec<f64>> {
    let (tlo, thi) = config.bounds.theta;
    let results: Vec<(f64, bool, bool)> = (0..y.examinees())
        .into_par_iter()
        .map(|j| {
            let m = y.items();
            let design = examinee_design(&columns[j * m..(j + 1) * m], items, item_sel);
            let incumbent = abilities.theta[j];
            let out = projected_newton(
                [incumbent, -1.0],
                [tlo, -1.0],
                [thi, -1.0],
                config.inner_tolerance,
                config.inner_max_steps,
                |e| value_linear(&design, e),
                |e| eval_linear(&design, e),
            );
            let candidate = out.x[0];
            if config.monotone_guard && candidate != incumbent {
                let old = conditional_nll(&design, &[incumbent, -1.0]);
                let new = conditional_nll(&design, &[candidate, -1.0]);
                if !(new < old) {
                    return (incumbent, out.converged, new > old);
                }
            }
            (candidate, out.converged, false)
        })
        .collect();
    let unconv = results.iter().filter(|r| !r.1).count();
    let rejected = results.iter().filter(|r| r.2).count();
    (results.into_iter().map(|r| r.0).collect(), unconv, rejected)
}

fn item_step(
    y: &ResponseMatrix,
    model: ModelKind,
    items: &ItemParameters,
    abilities: &AbilityParameters,
    examinee_sel: Option<&[(usize, f64)]>,
    config: &FitConfig,
) -> StepOutput<ItemParameters> {
    let b = &config.bounds;
    let a_box = if model == ModelKind::OnePL { (1.0, 1.0) } else { b.a };
    let results: Vec<([f64; 3], bool, bool)> = (0..y.items())
        .into_par_iter()
        .map(|i| {
            let design = item_design(y, abilities, i, items.c[i], examinee_sel);
            let incumbent = [items.a[i], items.b[i], items.c[i]];
            if model.has_guessing() {
                let lo = [a_box.0, b.b.0, b.c.0];
                let hi = [a_box.1, b.b.1, b.c.1];
                let starts = [incumbent, [1.0, 0.0, b.c.0 + 0.05]];
                let mut best: Option<SolveOutcome<3>> = None;
                for s in starts {
                    let out = projected_newton(
                        s,
                        lo,
                        hi,
                        config.inner_tolerance,
                        config.inner_max_steps,
                        |p| value_with_guessing(&design, p),
                        |p| eval_with_guessing(&design, p),
                    );
                    if best.as_ref().is_none_or(|bst| out.objective < bst.objective) {
                        best = Some(out);
                    }
                }
                let out = best.expect("at least one start");
                let cand = out.x;
                if config.monotone_guard && cand != incumbent {
                    let old = value_with_guessing(&design, &incumbent);
                    let new = value_with_guessing(&design, &cand);
                    if !(new < old) {
                        return (incumbent, out.converged, new > old);
                    }
                }
                (cand, out.converged, false)
            } else {
                let out = projected_newton(
                    [incumbent[0], incumbent[1]],
                    [a_box.0, b.b.0],
                    [a_box.1, b.b.1],
                    config.inner_tolerance,
                    config.inner_max_steps,
                    |e| value_linear(&design, e),
                    |e| eval_linear(&design, e),
                );
                let cand = [out.x[0], out.x[1], 0.0];
                if config.monotone_guard && cand != incumbent {
                    let old = conditional_nll(&design, &[incumbent[0], incumbent[1]]);
                    let new = conditional_nll(&design, &out.x);
                    if !(new < old) {
                        return (incumbent, out.converged, new > old);
                    }
                }
                (cand, out.converged, false)
            }
        })
        .collect();
    let unconv = results.iter().filter(|r| !r.1).count();
    let rejected = results.iter().filter(|r| r.2).count();
    let params = ItemParameters {
        a: results.iter().map(|r| r.0[0]).collect(),
        b: results.iter().map(|r| r.0[1]).collect(),
        c: results.iter().map(|r| r.0[2]).collect(),
    };
    (params, unconv, rejected)
}

/// Rescales abilities to zero mean and unit population variance and adjusts
/// items so that every `a*theta - b` is unchanged: `a' = a*sd`, `b' = b - a*mean`.
pub fn standardize(items: &ItemParameters, abilities: &AbilityParameters) -> Result<(ItemParameters, AbilityParameters)> {
    if abilities.len() < 2 {
        return Err(IrtError::DegenerateScale("standardization needs at least two examinees".into()));
    }
    let mu = mean(&abilities.theta);
    let sd = population_sd(&abilities.theta);
    if !(sd > 0.0) {
        return Err(IrtError::DegenerateScale("abilities have zero spread".into()));
    }
    let theta = abilities.theta.iter().map(|t| (t - mu) / sd).collect();
    let a: Vec<f64> = items.a.iter().map(|a| a * sd).collect();
    let b = items.b.iter().zip(&items.a).map(|(b, a)| b - a * mu).collect();
    Ok((ItemParameters::new(a, b, items.c.clone())?, AbilityParameters::new(theta)?))
}

/// Location-only standardization for 1PL fits, which keeps `a = 1`.
pub fn center(items: &ItemParameters, abilities: &AbilityParameters) -> Result<(ItemParameters, AbilityParameters)> {
    let mu = mean(&abilities.theta);
    let theta = abilities.theta.iter().map(|t| t - mu).collect();
    let b = items.b.iter().zip(&items.a).map(|(b, a)| b - a * mu).collect();
    Ok((ItemParameters::new(items.a.clone(), b, items.c.clone())?, AbilityParameters::new(theta)?))
}

/// [`standardize`] for 2PL/3PL, [`center`] for 1PL.
pub fn standardize_for(
    model: ModelKind,
    items: &ItemParameters,
    abilities: &AbilityParameters,
) -> Result<(ItemParameters, AbilityParameters)> {
    match model {
        ModelKind::OnePL => center(items, abilities),
        _ => standardize(items, abilities),
    }
}
