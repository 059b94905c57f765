//! Laws for the driving variables `Z_k`: samplers, exact moments, densities
//! and optional Doeblin lower-bound triples.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::oracle::MomentTable;

/// `(z, r, ε)`: the law dominates `ε ψ_r(|ξ - z|²) dξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Doeblin {
    pub z: f64,
    pub r: f64,
    pub eps: f64,
}

type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>;
type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A centred unit-variance law for one `Z_k`.
#[derive(Clone)]
pub struct SourceDistribution {
    name: String,
    moments: MomentTable,
    // E|Z|^p for p = 0..abs_moments.len()
    abs_moments: Vec<f64>,
    sampler: Sampler,
    density: Option<Density>,
    doeblin: Option<Doeblin>,
}

impl fmt::Debug for SourceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceDistribution")
            .field("name", &self.name)
            .field("has_density", &self.density.is_some())
            .field("doeblin", &self.doeblin)
            .finish()
    }
}

/// Samples used by [`SourceDistribution::validated`].
pub const VALIDATION_SAMPLES: usize = 1_000_000;

impl SourceDistribution {
    /// A user-defined law. `abs_moments[p] = E|Z|^p` must cover `p <= 4`.
    pub fn new(
        name: impl Into<String>,
        moments: MomentTable,
        abs_moments: Vec<f64>,
        sampler: impl Fn(&mut ChaCha8Rng) -> f64 + Send + Sync + 'static,
        density: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
        doeblin: Option<Doeblin>,
    ) -> Result<Self> {
        let name = name.into();
        if abs_moments.len() < 5 {
            return Err(Error::InvalidMoments(format!(
                "{name}: absolute moments up to order 4 are required"
            )));
        }
        if doeblin.is_some() && density.is_none() {
            return Err(Error::InvalidDoeblin(format!("{name} has no density")));
        }
        Ok(SourceDistribution {
            name,
            moments,
            abs_moments,
            sampler: Arc::new(sampler),
            density: density.map(Arc::from),
            doeblin,
        })
    }

    /// Checks the empirical mean and variance against 0 and 1
    /// (`|mean| <= 0.01`, `|var - 1| <= 0.02`) on [`VALIDATION_SAMPLES`] draws.
    pub fn validated(self, seed: u64) -> Result<Self> {
        let mut rng = crate::sampling::shard_rng(seed, 0);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..VALIDATION_SAMPLES {
            let x = self.sample(&mut rng);
            s1 += x;
            s2 += x * x;
        }
        let n = VALIDATION_SAMPLES as f64;
        let mean = s1 / n;
        let var = s2 / n - mean * mean;
        if mean.abs() > 0.01 || (var - 1.0).abs() > 0.02 {
            return Err(Error::InvalidMoments(format!(
                "{}: sampled mean {mean:.4}, variance {var:.4}",
                self.name
            )));
        }
        Ok(self)
    }

    pub fn gaussian() -> Self {
        let abs = (0..=8)
            .map(|p| 2f64.powf(p as f64 / 2.0) * gamma((p as f64 + 1.0) / 2.0) / PI.sqrt())
            .collect();
        SourceDistribution {
            name: "gaussian".into(),
            moments: MomentTable::gaussian(),
            abs_moments: abs,
            sampler: Arc::new(|rng: &mut ChaCha8Rng| rng.sample(StandardNormal)),
            density: Some(Arc::new(|x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt())),
            doeblin: Some(Doeblin {
                z: 0.0,
                r: 0.5,
                eps: 0.24,
            }),
        }
    }

    pub fn rademacher() -> Self {
        SourceDistribution {
            name: "rademacher".into(),
            moments: MomentTable::rademacher(),
            abs_moments: vec![1.0; 9],
            sampler: Arc::new(|rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 }),
            density: None,
            doeblin: None,
        }
    }

    /// Uniform on `[-√3, √3]`.
    pub fn uniform() -> Self {
        let h = 3f64.sqrt();
        SourceDistribution {
            name: "uniform".into(),
            moments: MomentTable::uniform(),
            abs_moments: (0..=8).map(|p| h.powi(p) / (p as f64 + 1.0)).collect(),
            sampler: Arc::new(move |rng: &mut ChaCha8Rng| rng.random_range(-h..h)),
            density: Some(Arc::new(
                move |x: f64| {
                    if x.abs() <= h {
                        0.5 / h
                    } else {
                        0.0
                    }
                },
            )),
            doeblin: Some(Doeblin {
                z: 0.0,
                r: 0.5,
                eps: 0.28,
            }),
        }
    }

    /// Laplace with scale `1/√2`, sampled by inverting the CDF.
    pub fn laplace() -> Self {
        let b = 0.5f64.sqrt();
        SourceDistribution {
            name: "laplace".into(),
            moments: MomentTable::laplace(),
            abs_moments: (0..=8).map(|p| factorial(p) * b.powi(p as i32)).collect(),
            sampler: Arc::new(move |rng: &mut ChaCha8Rng| {
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }),
            density: Some(Arc::new(move |x: f64| (-x.abs() / b).exp() / (2.0 * b))),
            doeblin: Some(Doeblin {
                z: 0.0,
                r: 0.5,
                eps: 0.17,
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn moments(&self) -> &MomentTable {
        &self.moments
    }

    /// `E|Z|^p`.
    pub fn abs_moment(&self, p: usize) -> Option<f64> {
        self.abs_moments.get(p).copied()
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        self.density.as_ref().map(|d| d(x))
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn doeblin(&self) -> Option<Doeblin> {
        self.doeblin
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        (self.sampler)(rng)
    }

    pub fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for x in out {
            *x = self.sample(rng);
        }
    }
}

/// The built-in laws.
pub fn registry() -> Vec<SourceDistribution> {
    vec![
        SourceDistribution::gaussian(),
        SourceDistribution::rademacher(),
        SourceDistribution::uniform(),
        SourceDistribution::laplace(),
    ]
}

/// Looks up a built-in law by name.
pub fn by_name(name: &str) -> Result<SourceDistribution> {
    registry()
        .into_iter()
        .find(|d| d.name() == name)
        .ok_or_else(|| Error::UnknownDistribution(name.to_string()))
}
