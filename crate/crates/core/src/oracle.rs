//! Exact reference computations: moments of `S_N(c, Z)` by monomial
//! expansion, brute-force enumeration over discrete laws, and the spectral
//! fourth cumulant of a Gaussian quadratic form.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::kernel::{ChaosCoefficients, SymmetricKernel};

/// Raw moments `μ(k) = E[Z^k]` of one driving variable, for `k = 0..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    name: String,
    moments: Vec<f64>,
}

/// Highest moment order stored in the built-in tables.
pub const MOMENT_ORDER: usize = 12;

impl MomentTable {
    /// Requires `μ(0) = 1`, `μ(1) = 0`, `μ(2) = 1`.
    pub fn new(name: impl Into<String>, moments: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let close = |k: usize, want: f64| moments.get(k).is_some_and(|v| (v - want).abs() <= 1e-12);
        if !(close(0, 1.0) && close(1, 0.0) && close(2, 1.0)) {
            return Err(Error::InvalidMoments(format!(
                "{name}: need mu(0) = 1, mu(1) = 0, mu(2) = 1"
            )));
        }
        Ok(MomentTable { name, moments })
    }

    fn from_fn(name: &str, f: impl Fn(usize) -> f64) -> Self {
        MomentTable::new(name, (0..=MOMENT_ORDER).map(f).collect()).expect("built-in table")
    }

    pub fn gaussian() -> Self {
        Self::from_fn("gaussian", gaussian_moment)
    }

    pub fn rademacher() -> Self {
        Self::from_fn("rademacher", |k| if k % 2 == 0 { 1.0 } else { 0.0 })
    }

    /// Uniform on `[-√3, √3]`.
    pub fn uniform() -> Self {
        Self::from_fn("uniform", |k| {
            if k % 2 == 0 {
                3f64.powf(k as f64 / 2.0) / (k as f64 + 1.0)
            } else {
                0.0
            }
        })
    }

    /// Laplace with scale `1/√2`.
    pub fn laplace() -> Self {
        Self::from_fn("laplace", |k| {
            if k % 2 == 0 {
                factorial(k) * 0.5f64.powi(k as i32 / 2)
            } else {
                0.0
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Highest available order.
    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.moments.get(k).copied()
    }

    /// `μ(k)`; panics past [`order`](Self::order).
    pub fn mu(&self, k: usize) -> f64 {
        self.moments[k]
    }
}

/// `E[G^k]` for a standard normal `G`: `(k-1)!!` for even `k`, else 0.
pub fn gaussian_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|v| v as f64).product()
}

/// `E[S_N(c, Z)^p]` for i.i.d. `Z` with the given moments, by expanding the
/// power over stored entries and factoring each monomial's expectation.
pub fn exact_power_moment(c: &ChaosCoefficients, moments: &MomentTable, p: usize) -> Result<f64> {
    if !(1..=4).contains(&p) {
        return Err(Error::InvalidArgument(format!("power {p} outside 1..=4")));
    }
    let terms: Vec<(&[u32], f64)> = c
        .levels()
        .flat_map(|k| {
            let w = factorial(k.level());
            k.iter().map(move |(key, v)| (key, w * v))
        })
        .collect();
    let s = terms.len() as f64;
    if s.powi(p as i32) > 1e7 {
        return Err(Error::TooLarge(format!(
            "{} stored entries to the power {p} exceeds 1e7",
            terms.len()
        )));
    }
    if moments.order() < p {
        return Err(Error::InvalidMoments(format!(
            "{} has moments only up to order {}",
            moments.name(),
            moments.order()
        )));
    }
    let width = c.support_bound();
    // exponent vector -> accumulated weight
    let mut current: HashMap<Vec<u8>, f64> = HashMap::from([(vec![0u8; width], 1.0)]);
    for step in 0..p {
        let last = step + 1 == p;
        let mut next: HashMap<Vec<u8>, f64> = HashMap::with_capacity(current.len() * terms.len());
        for (exps, w) in &current {
            for &(key, v) in &terms {
                let mut e = exps.clone();
                for &k in key {
                    e[k as usize - 1] += 1;
                }
                // any exponent 1 left at the end has zero mean
                if last && e.contains(&1) {
                    continue;
                }
                *next.entry(e).or_insert(0.0) += w * v;
            }
        }
        current = next;
    }
    let mut keyed: Vec<(Vec<u8>, f64)> = current.into_iter().collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed
        .iter()
        .map(|(e, w)| w * e.iter().map(|&x| moments.mu(x as usize)).product::<f64>())
        .sum())
}

/// `E[f(z)]` for `z_1..z_J` i.i.d. with the finite law `atoms = [(value, prob)]`,
/// by enumerating all `|atoms|^J` outcomes.
pub fn discrete_expectation<F>(atoms: &[(f64, f64)], j: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let outcomes = (atoms.len() as f64).powi(j as i32);
    if outcomes > (1u64 << 20) as f64 {
        return Err(Error::TooLarge(format!("{outcomes} outcomes exceed 2^20")));
    }
    let mut digits = vec![0usize; j];
    let mut z: Vec<f64> = vec![atoms[0].0; j];
    let mut total = 0.0;
    loop {
        let prob: f64 = digits.iter().map(|&d| atoms[d].1).product();
        total += prob * f(&z);
        let mut pos = 0;
        loop {
            if pos == j {
                return Ok(total);
            }
            digits[pos] += 1;
            if digits[pos] < atoms.len() {
                z[pos] = atoms[digits[pos]].0;
                break;
            }
            digits[pos] = 0;
            z[pos] = atoms[0].0;
            pos += 1;
        }
    }
}

pub const RADEMACHER_ATOMS: [(f64, f64); 2] = [(-1.0, 0.5), (1.0, 0.5)];

/// `2^{-J} Σ_σ f(S(c, σ))` over all sign vectors of length `J`.
pub fn rademacher_expect<F>(c: &ChaosCoefficients, j: usize, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if j > 20 {
        return Err(Error::TooLarge(format!("2^{j} sign vectors")));
    }
    if j < c.support_bound() {
        return Err(Error::SupportMismatch {
            needed: c.support_bound(),
            got: j,
        });
    }
    discrete_expectation(&RADEMACHER_ATOMS, j, |z| f(c.evaluate_unchecked(z)))
}

/// The symmetric matrix `A(i, j) = c(i, j)` of a level-2 kernel.
pub fn level2_matrix(k: &SymmetricKernel) -> Result<DMatrix<f64>> {
    if k.level() != 2 {
        return Err(Error::BadLevel {
            expected: 2,
            got: k.level(),
        });
    }
    let n = k.support_bound();
    if n > 500 {
        return Err(Error::TooLarge(format!("support {n} exceeds 500")));
    }
    let mut a = DMatrix::zeros(n, n);
    for (key, v) in k.iter() {
        let (i, j) = (key[0] as usize - 1, key[1] as usize - 1);
        a[(i, j)] = v;
        a[(j, i)] = v;
    }
    Ok(a)
}

/// Eigenvalues of [`level2_matrix`], ascending.
pub fn level2_eigenvalues(k: &SymmetricKernel) -> Result<Vec<f64>> {
    let a = level2_matrix(k)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `48 Σ λ⁴` over the eigenvalues of the coefficient matrix: the fourth
/// cumulant of `Σ_{i≠j} c(i,j) G_i G_j` for standard normal `G`.
pub fn level2_eigen_kappa4(k: &SymmetricKernel) -> Result<f64> {
    Ok(48.0
        * level2_eigenvalues(k)?
            .iter()
            .map(|l| l.powi(4))
            .sum::<f64>())
}

/// `E[Φ⁴] - 3 E[Φ²]²` of one level under the given law.
pub fn moment_kappa4(k: &SymmetricKernel, moments: &MomentTable) -> Result<f64> {
    let c = ChaosCoefficients::single(k.clone());
    let m2 = exact_power_moment(&c, moments, 2)?;
    Ok(exact_power_moment(&c, moments, 4)? - 3.0 * m2 * m2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn level1(vals: &[f64]) -> ChaosCoefficients {
        ChaosCoefficients::single(
            SymmetricKernel::new(
                1,
                vals.iter()
                    .enumerate()
                    .map(|(i, &v)| (vec![i as u32 + 1], v)),
            )
            .unwrap(),
        )
    }

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_moment(0), 1.0);
        assert_eq!(gaussian_moment(2), 1.0);
        assert_eq!(gaussian_moment(4), 3.0);
        assert_eq!(gaussian_moment(8), 105.0);
        assert_eq!(gaussian_moment(5), 0.0);
    }

    #[test]
    fn tables_validate() {
        assert!(MomentTable::new("bad", vec![1.0, 0.1, 1.0]).is_err());
        assert!(MomentTable::new("short", vec![1.0, 0.0]).is_err());
        assert!((MomentTable::uniform().mu(4) - 9.0 / 5.0).abs() < 1e-15);
        assert_eq!(MomentTable::laplace().mu(4), 6.0);
        assert_eq!(MomentTable::rademacher().mu(7), 0.0);
    }

    #[test]
    fn power_moment_examples() {
        let g = MomentTable::gaussian();
        assert_eq!(exact_power_moment(&level1(&[1.0]), &g, 4).unwrap(), 3.0);
        let pair = ChaosCoefficients::single(SymmetricKernel::new(2, [(vec![1, 2], 1.0)]).unwrap());
        assert_eq!(exact_power_moment(&pair, &g, 4).unwrap(), 144.0);
        let r = MomentTable::rademacher();
        let m4 = exact_power_moment(&level1(&[1.0]), &r, 4).unwrap();
        assert_eq!(m4 - 3.0, -2.0);
        assert!(matches!(
            exact_power_moment(&fixtures::complete(2, 20, 0.1), &g, 4),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn rademacher_examples() {
        let c = fixtures::complete23();
        let sq = rademacher_expect(&c, 3, |s| s * s).unwrap();
        assert!((sq - 1.0).abs() < 1e-15);
        assert!(rademacher_expect(&c, 5, |s| s).unwrap().abs() < 1e-15);
        let h = 0.5f64.sqrt();
        let m4 = rademacher_expect(&level1(&[h, h]), 2, |s| s.powi(4)).unwrap();
        // S ∈ {±√2, 0, 0}: E S⁴ = 2, so κ₄ = 2 - 3 = -1
        assert!((m4 - 2.0).abs() < 1e-15);
        assert!(matches!(
            rademacher_expect(&c, 21, |s| s),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn eigen_examples() {
        let a = 0.7;
        let pair = SymmetricKernel::new(2, [(vec![1, 2], a)]).unwrap();
        assert!((level2_eigen_kappa4(&pair).unwrap() - 96.0 * a.powi(4)).abs() < 1e-12);
        let c = fixtures::complete(2, 3, a);
        let k = c.level(2).unwrap();
        assert!((level2_eigen_kappa4(k).unwrap() - 864.0 * a.powi(4)).abs() < 1e-12);
        assert_eq!(
            level2_eigen_kappa4(&SymmetricKernel::empty(2)).unwrap(),
            0.0
        );
    }
}
