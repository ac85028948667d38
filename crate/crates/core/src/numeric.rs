//! Scalar kernels and deterministic reductions shared by the objective code.

/// Rows summed sequentially at the leaves of the pairwise tree.
const PAIRWISE_BLOCK: usize = 64;

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^-z)`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Pairwise (tree) sum of `f(0) + ... + f(len - 1)`.
///
/// The reduction tree depends only on `len`, so the result is bit-identical
/// no matter which thread evaluates it.
pub fn pairwise_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    pairwise_sum_array::<1, _>(len, |i| [f(i)])[0]
}

/// Component-wise pairwise sum of fixed-size vectors.
pub fn pairwise_sum_array<const K: usize, F>(len: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K],
{
    fn rec<const K: usize, F: Fn(usize) -> [f64; K]>(lo: usize, hi: usize, f: &F) -> [f64; K] {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut acc = [0.0; K];
            for i in lo..hi {
                let v = f(i);
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            let mut left = rec(lo, mid, f);
            let right = rec(mid, hi, f);
            for (a, x) in left.iter_mut().zip(right) {
                *a += x;
            }
            left
        }
    }
    rec(0, len, &f)
}

/// Smallest power of two that is `>= x` (for `x > 0`).
pub fn next_power_of_two(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut p = 2f64.powi(x.log2().ceil() as i32);
    // log2 rounding can land one step off in either direction.
    while p < x {
        p *= 2.0;
    }
    while p / 2.0 >= x {
        p /= 2.0;
    }
    p
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs.len(), |i| xs[i]) / xs.len() as f64
}

/// Population standard deviation (divisor `n`).
pub fn population_sd(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    (pairwise_sum(xs.len(), |i| (xs[i] - mu).powi(2)) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn sigmoid_symmetry() {
        for &z in &[-30.0, -1.0, 0.0, 0.5, 12.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let s = pairwise_sum(1000, |i| i as f64);
        assert_eq!(s, 499_500.0);
        let v = pairwise_sum_array::<2, _>(129, |i| [1.0, i as f64]);
        assert_eq!(v, [129.0, 8256.0]);
    }

    #[test]
    fn power_of_two_rounding() {
        assert_eq!(next_power_of_two(21.25), 32.0);
        assert_eq!(next_power_of_two(2f64.ln()), 1.0);
        assert_eq!(next_power_of_two(1.0), 1.0);
        assert_eq!(next_power_of_two(0.25), 0.25);
        assert_eq!(next_power_of_two(0.2500001), 0.5);
        assert_eq!(next_power_of_two(1e-9), 2f64.powi(-29));
    }

    #[test]
    fn population_sd_uses_divisor_n() {
        assert_eq!(population_sd(&[1.0, 3.0]), 1.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
