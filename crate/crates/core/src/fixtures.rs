//! Reference kernels and seeded random kernel generators.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::for_each_increasing;
use crate::kernel::{ChaosCoefficients, SymmetricKernel};

/// Level-`m` kernel with value `a` on every increasing `m`-tuple in `1..=n`.
pub fn complete(m: usize, n: usize, a: f64) -> ChaosCoefficients {
    let mut entries = Vec::new();
    for_each_increasing(n, m, |key| entries.push((key.to_vec(), a)));
    ChaosCoefficients::single(SymmetricKernel::new(m, entries).expect("increasing keys"))
}

/// Level-`m` kernel with value `a` on each run `(i, i+1, …, i+m-1)` in `1..=n`.
pub fn path(m: usize, n: usize, a: f64) -> ChaosCoefficients {
    let entries = (1..=(n + 1).saturating_sub(m)).map(|i| {
        let key: Vec<u32> = (i..i + m).map(|x| x as u32).collect();
        (key, a)
    });
    ChaosCoefficients::single(SymmetricKernel::new(m, entries).expect("increasing keys"))
}

/// The complete level-2 kernel on `{1, 2, 3}` with `a = 1/√12`, so `i_N = 1`.
pub fn complete23() -> ChaosCoefficients {
    complete(2, 3, 1.0 / 12f64.sqrt())
}

/// Shape of a random coefficient family.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomShape {
    pub levels: Vec<usize>,
    pub support: usize,
    /// Probability that a given increasing key is stored.
    pub density: f64,
}

/// Random coefficients with values uniform in `[-1, 1]`. Each listed level
/// receives at least one entry when `support >= level`.
pub fn random_coefficients<R: Rng>(rng: &mut R, shape: &RandomShape) -> ChaosCoefficients {
    let max_level = shape.levels.iter().copied().max().unwrap_or(0);
    let mut kernels = Vec::new();
    for &m in &shape.levels {
        if m == 0 || m > shape.support {
            continue;
        }
        let mut entries = Vec::new();
        for_each_increasing(shape.support, m, |key| {
            if rng.random::<f64>() < shape.density {
                entries.push((key.to_vec(), rng.random_range(-1.0..=1.0)));
            }
        });
        if entries.is_empty() {
            let mut key: Vec<u32> = sample(rng, shape.support, m)
                .into_iter()
                .map(|i| i as u32 + 1)
                .collect();
            key.sort_unstable();
            entries.push((key, rng.random_range(-1.0..=1.0)));
        }
        kernels.push(SymmetricKernel::new(m, entries).expect("increasing keys"));
    }
    ChaosCoefficients::new(max_level, kernels).expect("distinct levels")
}

/// A single random level.
pub fn random_level<R: Rng>(
    rng: &mut R,
    m: usize,
    support: usize,
    density: f64,
) -> ChaosCoefficients {
    random_coefficients(
        rng,
        &RandomShape {
            levels: vec![m],
            support,
            density,
        },
    )
}

/// Random family with a random nonempty subset of levels `1..=max_level`.
pub fn random_mixed<R: Rng>(rng: &mut R, max_level: usize, support: usize) -> ChaosCoefficients {
    let mut levels: Vec<usize> = (1..=max_level).filter(|_| rng.random::<bool>()).collect();
    if levels.is_empty() {
        levels.push(rng.random_range(1..=max_level));
    }
    let density = rng.random_range(0.3..=1.0);
    let c = random_coefficients(
        rng,
        &RandomShape {
            levels,
            support,
            density,
        },
    );
    ChaosCoefficients::new(max_level, c.levels().cloned().collect()).expect("levels <= max")
}

/// Twenty normalized kernels of mixed shape: the standing fixtures plus
/// seeded random families with support at most 8 and at most 3 levels.
pub fn corpus() -> Vec<(String, ChaosCoefficients)> {
    let mut out = vec![
        ("complete-2-3".to_string(), complete23()),
        (
            "path-2-6".to_string(),
            path(2, 6, 1.0).normalize().expect("nonzero"),
        ),
        (
            "complete-3-5".to_string(),
            complete(3, 5, 1.0).normalize().expect("nonzero"),
        ),
        ("level1-4".to_string(), complete(1, 4, 0.5)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    while out.len() < 20 {
        let i = out.len();
        let max_level = 1 + i % 3;
        let support = 4 + i % 5;
        let c = random_mixed(&mut rng, max_level, support);
        if let Ok(c) = c.normalize() {
            out.push((format!("random-{i}"), c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_fixture_is_normalized() {
        assert!((complete23().second_moment() - 1.0).abs() < 1e-15);
        let p = path(2, 3, 1.0);
        assert_eq!(p.level(2).unwrap().nnz(), 2);
    }

    #[test]
    fn corpus_is_normalized_and_stable() {
        let a = corpus();
        assert_eq!(a.len(), 20);
        for (_, c) in &a {
            assert!((c.second_moment() - 1.0).abs() < 1e-12);
            assert!(c.support_bound() <= 8);
        }
        assert_eq!(a, corpus());
    }

    #[test]
    fn random_levels_are_nonempty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = random_level(&mut rng, 3, 6, 0.05);
            assert!(c.level(3).unwrap().nnz() >= 1);
        }
    }
}
