//! Exact expectations of the gradient functionals by enumeration.

use chaos_lab::expansion::{gradient_functionals, Realization};
use chaos_lab::fixtures;
use chaos_lab::kernel::ChaosCoefficients;
use chaos_lab::oracle::{discrete_expectation, RADEMACHER_ATOMS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const P: f64 = 0.3;

fn corpus() -> Vec<ChaosCoefficients> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut out = vec![
        fixtures::complete23(),
        fixtures::path(2, 6, 0.3),
        fixtures::complete(3, 5, 0.2),
    ];
    for i in 0..12 {
        out.push(fixtures::random_mixed(&mut rng, 1 + i % 3, 4 + i % 3));
    }
    out
}

#[test]
fn mean_of_i_is_the_gradient_second_moment() {
    for c in corpus() {
        let j = c.support_bound();
        let mean = discrete_expectation(&RADEMACHER_ATOMS, j, |z| {
            gradient_functionals(&c, &Realization::from_z(z.to_vec()))
                .unwrap()
                .i
        })
        .unwrap();
        let expected = c.gradient_second_moment();
        assert!(
            (mean - expected).abs() <= 1e-12 * (1.0 + expected),
            "{mean} vs {expected}"
        );
        let higher = c.levels().any(|k| k.level() >= 2 && !k.is_empty());
        // the two means differ by the factor m on each level
        assert_eq!(higher, (expected - c.second_moment()).abs() > 1e-12);
    }
}

#[test]
fn centered_splitting_functional_has_mean_zero() {
    // one atom per (z, χ) pair, encoded as z + 10 χ
    let atoms = [
        (-1.0, 0.5 * (1.0 - P)),
        (1.0, 0.5 * (1.0 - P)),
        (9.0, 0.5 * P),
        (11.0, 0.5 * P),
    ];
    for c in corpus() {
        let j = c.support_bound();
        assert!(j <= 8);
        // unweighted sum over outcomes; only a magnitude for the tolerance
        let mut scale = 0.0;
        let mean = discrete_expectation(&atoms, j, |code| {
            let chi: Vec<f64> = code
                .iter()
                .map(|&v| if v > 5.0 { 1.0 } else { 0.0 })
                .collect();
            let z: Vec<f64> = code.iter().zip(&chi).map(|(v, x)| v - 10.0 * x).collect();
            let g = gradient_functionals(&c, &Realization::with_chi(z, chi, P).unwrap()).unwrap();
            scale += g.i.abs();
            g.i_tilde
        })
        .unwrap();
        assert!(mean.abs() <= 1e-12 * (1.0 + scale), "E Ĩ = {mean}");
    }
}
