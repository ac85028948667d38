//! Seeded synthetic populations and responses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{icc_probability, AbilityParameters, ItemParameters, ModelKind, ResponseMatrix};

/// A normal distribution truncated to `(lower, upper)` (either side may be infinite).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, sd: f64, lower: f64, upper: f64) -> Self {
        Self { mean, sd, lower, upper }
    }

    pub fn untruncated(mean: f64, sd: f64) -> Self {
        Self::new(mean, sd, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.mean.is_finite() && self.sd.is_finite() && self.sd > 0.0 && self.lower < self.upper) {
            return Err(invalid(format!("{name}: needs finite mean, positive sd and lower < upper")));
        }
        Ok(())
    }

    /// Rejection sampling.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        let normal = Normal::new(self.mean, self.sd).map_err(|e| invalid(e.to_string()))?;
        for _ in 0..100_000 {
            let v = normal.sample(rng);
            if v > self.lower && v < self.upper {
                return Ok(v);
            }
        }
        Err(invalid("truncation interval has negligible probability"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub model: ModelKind,
    pub seed: u64,
    /// Discrimination, truncated to be positive.
    pub a: TruncatedNormal,
    pub b: TruncatedNormal,
    pub theta: TruncatedNormal,
    /// Guessing (3PL only); the spread is a standard deviation.
    pub c: TruncatedNormal,
}

impl GenConfig {
    pub fn new(n: usize, m: usize, model: ModelKind, seed: u64) -> Self {
        Self {
            n,
            m,
            model,
            seed,
            a: TruncatedNormal::new(2.75, 0.3, 0.0, f64::INFINITY),
            b: TruncatedNormal::untruncated(0.0, 1.0),
            theta: TruncatedNormal::untruncated(0.0, 1.0),
            c: TruncatedNormal::new(0.1, 0.1, 0.0, 0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid("n and m must be at least 1"));
        }
        self.a.validate("a")?;
        self.b.validate("b")?;
        self.theta.validate("theta")?;
        self.c.validate("c")?;
        if self.a.lower < 0.0 {
            return Err(invalid("discrimination must be truncated at or above 0"));
        }
        if self.c.lower < 0.0 || self.c.upper > 0.5 {
            return Err(invalid("guessing must be truncated within [0, 0.5)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub y: ResponseMatrix,
    pub items: ItemParameters,
    pub abilities: AbilityParameters,
}

const STREAM_ITEMS: u64 = 0;
const STREAM_ABILITIES: u64 = 1;
const STREAM_RESPONSES: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws parameters and responses. Every item's responses come from their
/// own ChaCha stream, so the output does not depend on the thread count.
pub fn generate_synthetic(config: &GenConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = stream(config.seed, STREAM_ITEMS);
    let (mut a, mut b, mut c) = (Vec::with_capacity(config.m), Vec::with_capacity(config.m), Vec::with_capacity(config.m));
    for _ in 0..config.m {
        a.push(if config.model == ModelKind::OnePL { 1.0 } else { config.a.sample(&mut rng)? });
        b.push(config.b.sample(&mut rng)?);
        c.push(if config.model.has_guessing() { config.c.sample(&mut rng)? } else { 0.0 });
    }
    let items = ItemParameters::new(a, b, c)?;
    let mut rng = stream(config.seed, STREAM_ABILITIES);
    let theta = (0..config.n).map(|_| config.theta.sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    let abilities = AbilityParameters::new(theta)?;
    let rows: Vec<Vec<i8>> = (0..config.m)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, STREAM_RESPONSES + i as u64);
            abilities
                .theta
                .iter()
                .map(|&t| {
                    let p = icc_probability(items.a[i], items.b[i], items.c[i], t)?;
                    Ok(if rng.random::<f64>() < p { 1 } else { -1 })
                })
                .collect::<Result<Vec<i8>>>()
        })
        .collect::<Result<_>>()?;
    let y = ResponseMatrix::new(config.m, config.n, rows.concat())?;
    Ok(SyntheticData { y, items, abilities })
}
