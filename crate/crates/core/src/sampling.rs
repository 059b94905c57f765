//! Seeded, shard-parallel sampling of `S_N(c, Z)` and smooth-function
//! distances between driving laws.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::SourceDistribution;
use crate::error::{Error, Result};
use crate::kernel::ChaosCoefficients;

/// Generator for one shard: the base seed selects the key, the shard index
/// selects an independent ChaCha stream.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Contiguous replication ranges `[start, end)` for each shard.
pub fn shard_ranges(n: usize, shards: usize) -> Vec<(usize, usize)> {
    let shards = shards.max(1);
    (0..shards)
        .map(|s| (s * n / shards, (s + 1) * n / shards))
        .collect()
}

/// Runs `work(rng, count)` on every shard in parallel and concatenates the
/// outputs in shard order.
pub fn sharded<T, F>(seed: u64, n: usize, shards: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let parts: Vec<Vec<T>> = shard_ranges(n, shards)
        .into_par_iter()
        .enumerate()
        .map(|(s, (lo, hi))| work(&mut shard_rng(seed, s as u64), hi - lo))
        .collect();
    parts.into_iter().flatten().collect()
}

/// Replications of a scalar statistic together with the seed discipline
/// that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub shards: usize,
}

/// Per-index assignment of laws; indices without an override use `default`.
#[derive(Clone, Debug)]
pub struct LawAssignment {
    pub default: SourceDistribution,
    pub overrides: BTreeMap<u32, SourceDistribution>,
}

impl LawAssignment {
    pub fn iid(dist: SourceDistribution) -> Self {
        LawAssignment {
            default: dist,
            overrides: BTreeMap::new(),
        }
    }

    fn law(&self, k: u32) -> &SourceDistribution {
        self.overrides.get(&k).unwrap_or(&self.default)
    }

    /// Draws `z_1..z_J` in index order.
    pub fn fill(&self, rng: &mut ChaCha8Rng, z: &mut [f64]) {
        if self.overrides.is_empty() {
            self.default.fill(rng, z);
        } else {
            for (i, x) in z.iter_mut().enumerate() {
                *x = self.law(i as u32 + 1).sample(rng);
            }
        }
    }
}

/// `n` independent replications of `S_N(c, Z)` with i.i.d. `Z ~ dist`.
pub fn sample_series(
    c: &ChaosCoefficients,
    dist: &SourceDistribution,
    seed: u64,
    n: usize,
    shards: usize,
) -> Result<SampleBatch> {
    sample_series_with(c, &LawAssignment::iid(dist.clone()), seed, n, shards)
}

/// As [`sample_series`] with possibly different laws per index.
pub fn sample_series_with(
    c: &ChaosCoefficients,
    laws: &LawAssignment,
    seed: u64,
    n: usize,
    shards: usize,
) -> Result<SampleBatch> {
    sample_statistic(c.support_bound(), laws, seed, n, shards, |z| {
        c.evaluate_unchecked(z)
    })
}

/// `n` replications of `stat(z)` with `z_1..z_J` drawn per replication.
pub fn sample_statistic<F>(
    j: usize,
    laws: &LawAssignment,
    seed: u64,
    n: usize,
    shards: usize,
    stat: F,
) -> Result<SampleBatch>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    let values = sharded(seed, n, shards, |rng, count| {
        let mut z = vec![0.0; j];
        (0..count)
            .map(|_| {
                laws.fill(rng, &mut z);
                stat(&z)
            })
            .collect()
    });
    Ok(SampleBatch {
        values,
        seed,
        shards: shards.max(1),
    })
}

/// A bounded test function with known sup-norms of its third and fourth
/// derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    Sin,
    Cos,
    /// `x ↦ e^{-x²/2}`.
    Gauss,
    Constant(f64),
}

impl TestFunction {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sin" => Ok(TestFunction::Sin),
            "cos" => Ok(TestFunction::Cos),
            "gauss" => Ok(TestFunction::Gauss),
            "const" | "constant" => Ok(TestFunction::Constant(1.0)),
            other => Err(Error::InvalidArgument(format!(
                "unknown test function `{other}` (sin, cos, gauss, const)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Sin => "sin",
            TestFunction::Cos => "cos",
            TestFunction::Gauss => "gauss",
            TestFunction::Constant(_) => "const",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Sin => x.sin(),
            TestFunction::Cos => x.cos(),
            TestFunction::Gauss => (-0.5 * x * x).exp(),
            TestFunction::Constant(c) => c,
        }
    }

    /// `‖f‴‖_∞`.
    pub fn third_derivative_sup(&self) -> f64 {
        match self {
            TestFunction::Sin | TestFunction::Cos => 1.0,
            // |x³ - 3x| e^{-x²/2} peaks at x² = 3 - √6
            TestFunction::Gauss => {
                let x2 = 3.0 - 6f64.sqrt();
                let x = x2.sqrt();
                (x * x2 - 3.0 * x).abs() * (-0.5 * x2).exp()
            }
            TestFunction::Constant(_) => 0.0,
        }
    }

    /// `‖f⁗‖_∞`.
    pub fn fourth_derivative_sup(&self) -> f64 {
        match self {
            TestFunction::Sin | TestFunction::Cos => 1.0,
            // |x⁴ - 6x² + 3| e^{-x²/2} peaks at 0
            TestFunction::Gauss => 3.0,
            TestFunction::Constant(_) => 0.0,
        }
    }
}

/// `|Ê f(S_A) - Ê f(S_B)|` with a 3-sigma half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothDistance {
    pub estimate: f64,
    pub half_width: f64,
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    (mean, var, n)
}

/// Independent samples of `S_N(c, ·)` under each law, no common random
/// numbers between the two sides.
#[allow(clippy::too_many_arguments)]
pub fn smooth_distance(
    c: &ChaosCoefficients,
    dist_a: &SourceDistribution,
    dist_b: &SourceDistribution,
    f: TestFunction,
    seed_a: u64,
    seed_b: u64,
    n: usize,
    shards: usize,
) -> Result<SmoothDistance> {
    let a = sample_series(c, dist_a, seed_a, n, shards)?;
    let b = sample_series(c, dist_b, seed_b, n, shards)?;
    let (ma, va, na) = mean_var(a.values.iter().map(|&x| f.eval(x)));
    let (mb, vb, nb) = mean_var(b.values.iter().map(|&x| f.eval(x)));
    Ok(SmoothDistance {
        estimate: (ma - mb).abs(),
        half_width: 3.0 * (va / na as f64 + vb / nb as f64).sqrt(),
    })
}
