//! Seeded verification suites comparing closed forms against independent
//! oracles: cumulants, isometry, expansion identities and contraction
//! inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contraction::{check_contraction_inequalities, kappa4, kernel_kappa4};
use crate::error::Result;
use crate::expansion::{
    gradient_expansion, gradient_functionals, square_identity_check, square_identity_check_y,
    CoefficientConvention, Realization,
};
use crate::fixtures;
use crate::kernel::{AffineChaos, ChaosCoefficients};
use crate::oracle::{
    exact_power_moment, level2_eigen_kappa4, moment_kappa4, rademacher_expect, MomentTable,
};

/// One family of comparisons within a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteCase {
    pub name: String,
    pub count: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteCase {
    fn new(name: &str, errors: &[f64], tolerance: f64) -> Self {
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        SuiteCase {
            name: name.to_string(),
            count: errors.len(),
            max_error,
            tolerance,
            // NaN errors fail
            passed: errors.iter().all(|e| *e <= tolerance),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub cases: Vec<SuiteCase>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, cases: Vec<SuiteCase>) -> Self {
        let passed = cases.iter().all(|c| c.passed);
        SuiteReport {
            suite: suite.to_string(),
            seed,
            cases,
            passed,
        }
    }

    pub fn case(&self, name: &str) -> Option<&SuiteCase> {
        self.cases.iter().find(|c| c.name == name)
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Sizes of the verification corpora.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteSizes {
    pub cumulant_kernels: usize,
    pub level1_kernels: usize,
    pub identity_cases: usize,
    pub inequality_instances: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            cumulant_kernels: 200,
            level1_kernels: 100,
            identity_cases: 100,
            inequality_instances: 1000,
        }
    }
}

fn case_rng(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(stream);
    rng
}

/// Random kernel of level 2 or 3 with support at most 6.
pub fn cumulant_kernel(seed: u64, i: usize) -> ChaosCoefficients {
    let mut rng = case_rng(seed, 1, i);
    let m = rng.random_range(2..=3);
    let support = rng.random_range(m + 1..=6);
    let density = rng.random_range(0.3..=1.0);
    fixtures::random_level(&mut rng, m, support, density)
}

/// Contraction cumulant, Gaussian moment oracle and (level 2) eigenvalue
/// identity; largest pairwise relative disagreement.
pub fn cumulant_disagreement(c: &ChaosCoefficients) -> Result<f64> {
    let k = c.levels().next().expect("one level");
    let contraction = kernel_kappa4(k);
    let moments = moment_kappa4(k, &MomentTable::gaussian())?;
    let mut err = relative_error(contraction, moments);
    if k.level() == 2 {
        let eigen = level2_eigen_kappa4(k)?;
        err = err
            .max(relative_error(contraction, eigen))
            .max(relative_error(moments, eigen));
    }
    Ok(err)
}

/// Oracle-versus-formula equivalence suite.
pub fn oracle_suite(seed: u64, sizes: SuiteSizes) -> Result<SuiteReport> {
    let cumulant: Vec<f64> = (0..sizes.cumulant_kernels)
        .into_par_iter()
        .map(|i| cumulant_disagreement(&cumulant_kernel(seed, i)))
        .collect::<Result<_>>()?;
    let level1: Vec<f64> = (0..sizes.level1_kernels)
        .map(|i| {
            let mut rng = case_rng(seed, 2, i);
            let support = rng.random_range(1..=12);
            kappa4(&fixtures::random_level(&mut rng, 1, support, 0.7), 1).abs()
        })
        .collect();
    let corpus = fixtures::corpus();
    let mut isometry = Vec::new();
    let mut fourth = Vec::new();
    let rademacher = MomentTable::rademacher();
    for (_, c) in corpus.iter().filter(|(_, c)| c.support_bound() <= 12) {
        let j = c.support_bound();
        let brute2 = rademacher_expect(c, j, |s| s * s)?;
        isometry.push((c.second_moment() - brute2).abs());
        let brute4 = rademacher_expect(c, j, |s| s.powi(4))?;
        fourth.push(relative_error(
            exact_power_moment(c, &rademacher, 4)?,
            brute4,
        ));
    }
    Ok(SuiteReport::new(
        "oracle-check",
        seed,
        vec![
            SuiteCase::new("cumulant-triple", &cumulant, 1e-9),
            SuiteCase::new("level-1-cumulant", &level1, 0.0),
            SuiteCase::new("isometry-rademacher", &isometry, 1e-12),
            SuiteCase::new("fourth-moment-rademacher", &fourth, 1e-10),
        ],
    ))
}

/// Random affine chaos (support ≤ 5, levels ≤ 3) and a realization with
/// splitting labels.
pub fn identity_case(seed: u64, i: usize) -> (AffineChaos, Realization) {
    let mut rng = case_rng(seed, 3, i);
    let max_level = rng.random_range(1..=3);
    let support = rng.random_range(max_level.max(2)..=5);
    let c = fixtures::random_mixed(&mut rng, max_level, support);
    let constant = if rng.random_bool(0.5) {
        rng.random_range(-1.0..=1.0)
    } else {
        0.0
    };
    let z: Vec<f64> = (0..support).map(|_| rng.random_range(-2.0..=2.0)).collect();
    let chi: Vec<f64> = (0..support)
        .map(|_| f64::from(u8::from(rng.random_bool(0.4))))
        .collect();
    let real = Realization::with_chi(z, chi, 0.4).expect("equal lengths");
    (
        AffineChaos {
            constant,
            coefficients: c,
        },
        real,
    )
}

/// Expansion identities and the contraction inequality suite.
pub fn verify_suite(seed: u64, sizes: SuiteSizes) -> Result<SuiteReport> {
    let per_case: Vec<[f64; 4]> = (0..sizes.identity_cases)
        .into_par_iter()
        .map(|i| {
            let (f, real) = identity_case(seed, i);
            let (l, r) = square_identity_check(&f, &real.z)?;
            let (ly, ry) = square_identity_check_y(&f, &real)?;
            let direct = gradient_functionals(&f.coefficients, &real)?;
            let (gi, gt) =
                gradient_expansion(&f.coefficients, &real, CoefficientConvention::Consistent)?;
            Ok([
                relative_error(l, r),
                relative_error(ly, ry),
                relative_error(direct.i, gi),
                relative_error(direct.i_tilde, gt),
            ])
        })
        .collect::<Result<_>>()?;
    let column = |k: usize| per_case.iter().map(|e| e[k]).collect::<Vec<_>>();
    let violations: Vec<f64> = (0..sizes.inequality_instances)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = case_rng(seed, 4, i);
            let max_level = rng.random_range(1..=3);
            let support = rng.random_range(max_level.max(2)..=6);
            let c = fixtures::random_mixed(&mut rng, max_level, support);
            check_contraction_inequalities(&c)
                .checks
                .iter()
                .map(|ch| ch.violation().max(0.0))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SuiteReport::new(
        "verify",
        seed,
        vec![
            SuiteCase::new("square-expansion", &column(0), 1e-10),
            SuiteCase::new("square-expansion-y", &column(1), 1e-10),
            SuiteCase::new("gradient-expansion", &column(2), 1e-10),
            SuiteCase::new("gradient-expansion-tilde", &column(3), 1e-10),
            SuiteCase::new("contraction-inequalities", &violations, 1e-12),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteSizes {
        SuiteSizes {
            cumulant_kernels: 20,
            level1_kernels: 10,
            identity_cases: 10,
            inequality_instances: 50,
        }
    }

    #[test]
    fn suites_pass_on_small_corpora() {
        let o = oracle_suite(1, small()).unwrap();
        assert!(o.passed, "{o:#?}");
        let v = verify_suite(1, small()).unwrap();
        assert!(v.passed, "{v:#?}");
        assert!(v.case("contraction-inequalities").unwrap().count > 50);
    }

    #[test]
    fn suites_are_deterministic() {
        assert_eq!(
            verify_suite(5, small()).unwrap(),
            verify_suite(5, small()).unwrap()
        );
    }

    #[test]
    fn relative_error_basics() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1.0, 0.0), 1.0);
        assert!(!SuiteCase::new("x", &[f64::NAN], 1.0).passed);
    }
}
