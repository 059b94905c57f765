//! Summary statistics over sampled replications.

use libm::erfc;
use serde::Serialize;

use crate::error::{Error, Result};

/// Below this many replications moment estimates are refused.
pub const MIN_KAPPA_SAMPLES: usize = 1000;
/// Batches used for the batch-means standard error.
pub const BATCHES: usize = 100;

/// An estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Number of standard errors separating the estimate from `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.std_error
    }
}

fn fourth_cumulant(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in values {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    m4 - 3.0 * m2 * m2
}

/// `μ̂₄ - 3μ̂₂²` about the sample mean, with a batch-means standard error over
/// [`BATCHES`] contiguous batches.
pub fn empirical_kappa4(values: &[f64]) -> Result<Estimate> {
    if values.len() < MIN_KAPPA_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_KAPPA_SAMPLES,
            got: values.len(),
        });
    }
    let value = fourth_cumulant(values);
    let size = values.len() / BATCHES;
    let batch: Vec<f64> = values
        .chunks_exact(size)
        .take(BATCHES)
        .map(fourth_cumulant)
        .collect();
    Ok(Estimate {
        value,
        std_error: batch_error(&batch),
    })
}

fn batch_error(batch: &[f64]) -> f64 {
    let b = batch.len() as f64;
    let mean = batch.iter().sum::<f64>() / b;
    let var = batch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Sample mean of `f(x)` with the plain standard error.
pub fn mean_estimate(values: &[f64], f: impl Fn(f64) -> f64) -> Result<Estimate> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&x| f(x)).sum::<f64>() / n;
    let var = values.iter().map(|&x| (f(x) - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
    })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("sample contains NaN".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F̂_n(x) - F(x)|` for a continuous target `F`.
pub fn kolmogorov_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(values)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// CDF of `N(0, var)`; a point mass at 0 when `var == 0`.
pub fn normal_cdf_var(var: f64) -> impl Fn(f64) -> f64 {
    let sd = var.max(0.0).sqrt();
    move |x| {
        if sd == 0.0 {
            if x < 0.0 {
                0.0
            } else {
                1.0
            }
        } else {
            normal_cdf(x / sd)
        }
    }
}

/// Distance to the standard normal.
pub fn kolmogorov_to_normal(values: &[f64]) -> Result<f64> {
    kolmogorov_distance(values, normal_cdf)
}

/// `sup_x |F̂_a(x) - F̂_b(x)|`.
pub fn kolmogorov_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step past every copy of the smaller value so ties move both sides
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One histogram cell `[lo, hi)`; the last cell is closed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins spanning the sample range.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<Bin>> {
    let v = sorted(values)?;
    let bins = bins.max(1);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &v {
        let k = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            lo: lo + k as f64 * width,
            hi: if k + 1 == bins {
                hi
            } else {
                lo + (k + 1) as f64 * width
            },
            count,
        })
        .collect())
}

/// Asymptotic two-sample critical value `c(α) √((n+m)/(nm))` at level 1%.
pub fn ks_two_sample_critical_99(n: usize, m: usize) -> f64 {
    let c = (-(0.005f64).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SourceDistribution;
    use crate::sampling::shard_rng;

    fn draws(d: &SourceDistribution, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = shard_rng(seed, 0);
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn kappa4_of_known_laws() {
        let g = empirical_kappa4(&draws(&SourceDistribution::gaussian(), 1, 200_000)).unwrap();
        assert!(g.z_score(0.0).abs() < 5.0, "{g:?}");
        let r = empirical_kappa4(&draws(&SourceDistribution::rademacher(), 1, 200_000)).unwrap();
        assert!(r.z_score(-2.0).abs() < 5.0, "{r:?}");
        let l = empirical_kappa4(&draws(&SourceDistribution::laplace(), 1, 400_000)).unwrap();
        assert!(l.z_score(3.0).abs() < 5.0, "{l:?}");
    }

    #[test]
    fn kappa4_needs_samples() {
        assert!(matches!(
            empirical_kappa4(&[0.0; 999]),
            Err(Error::TooFewSamples {
                needed: 1000,
                got: 999
            })
        ));
    }

    #[test]
    fn ks_basics() {
        assert!(matches!(kolmogorov_to_normal(&[]), Err(Error::EmptySample)));
        assert!(kolmogorov_two_sample(&[1.0], &[]).is_err());
        assert_eq!(
            kolmogorov_two_sample(&[1.0, 2.0], &[2.0, 1.0]).unwrap(),
            0.0
        );
        assert_eq!(kolmogorov_two_sample(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(
            kolmogorov_distance(&[0.25], |x: f64| x.clamp(0.0, 1.0)).unwrap(),
            0.75
        );
        let d = kolmogorov_to_normal(&draws(&SourceDistribution::gaussian(), 5, 100_000)).unwrap();
        assert!(d < 0.0052, "{d}");
        assert_eq!(kolmogorov_to_normal(&[0.0; 10]).unwrap(), 0.5);
        let q = normal_cdf(1.959963984540054);
        assert!((q - 0.975).abs() < 1e-12, "{q:.17}");
    }

    #[test]
    fn critical_value_at_1e5() {
        let c = ks_two_sample_critical_99(100_000, 100_000);
        assert!((c - 0.00728).abs() < 1e-4, "{c}");
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0], 2).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(h[1].hi, 1.0);
        assert_eq!(histogram(&[2.0; 5], 4).unwrap()[0].count, 5);
        assert!(histogram(&[], 3).is_err());
    }

    #[test]
    fn mean_estimate_basics() {
        let e = mean_estimate(&[1.0, 2.0, 3.0], |x| x * x).unwrap();
        assert!((e.value - 14.0 / 3.0).abs() < 1e-15);
        assert!(mean_estimate(&[], |x| x).is_err());
    }
}
