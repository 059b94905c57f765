//! Chaos coefficients and the scalar diagnostics read directly off them.
//!
//! A level-`m` kernel is stored once per strictly increasing multi-index and
//! the stored number is `c(α)` itself. Sums over the full index set `Γ_m`
//! (all orderings) pick up the `m!` multiplicity analytically, so
//! `|c|_m² = m! · Σ_stored c²`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::combinatorics::{factorial, monomial};
use crate::error::{Error, Result};

/// A strictly increasing tuple of positive indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    /// Canonicalizes an arbitrary ordering. Repeated entries are rejected
    /// because coefficients vanish on diagonals.
    pub fn new(mut entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::BadLevel {
                expected: 1,
                got: 0,
            });
        }
        if entries.contains(&0) {
            return Err(Error::ZeroIndex(entries));
        }
        let original = entries.clone();
        entries.sort_unstable();
        if entries.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::RepeatedIndex(original));
        }
        Ok(MultiIndex(entries))
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn max_index(&self) -> u32 {
        *self.0.last().expect("multi-index is never empty")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// One chaos level: a sparse symmetric coefficient, zero on diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricKernel {
    level: usize,
    // flat keys, stride `level`, sorted lexicographically
    indices: Vec<u32>,
    values: Vec<f64>,
    // index k -> positions of the keys containing k
    postings: BTreeMap<u32, Vec<usize>>,
}

impl SymmetricKernel {
    /// Builds a kernel from `(tuple, value)` pairs. Tuples may come in any
    /// order; they are canonicalized, and two tuples with the same sorted
    /// form are rejected.
    pub fn new<I>(level: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if level == 0 {
            return Err(Error::InvalidArgument(
                "kernel level must be at least 1".into(),
            ));
        }
        let mut keyed = Vec::new();
        for (tuple, value) in entries {
            if tuple.len() != level {
                return Err(Error::BadLevel {
                    expected: level,
                    got: tuple.len(),
                });
            }
            keyed.push((MultiIndex::new(tuple)?, value));
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateKey(w[0].0.as_slice().to_vec()));
        }
        Ok(Self::from_sorted(level, keyed))
    }

    /// An empty kernel at the given level.
    pub fn empty(level: usize) -> Self {
        Self::from_sorted(level, Vec::new())
    }

    fn from_sorted(level: usize, keyed: Vec<(MultiIndex, f64)>) -> Self {
        let mut indices = Vec::with_capacity(keyed.len() * level);
        let mut values = Vec::with_capacity(keyed.len());
        let mut postings: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (pos, (key, value)) in keyed.into_iter().enumerate() {
            for &k in key.as_slice() {
                postings.entry(k).or_default().push(pos);
            }
            indices.extend_from_slice(key.as_slice());
            values.push(value);
        }
        SymmetricKernel {
            level,
            indices,
            values,
            postings,
        }
    }

    /// Builds from already-canonical keys, accumulating duplicates.
    pub(crate) fn accumulate<I>(level: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (k, v) in entries {
            debug_assert_eq!(k.len(), level);
            *map.entry(k).or_insert(0.0) += v;
        }
        Self::from_sorted(
            level,
            map.into_iter().map(|(k, v)| (MultiIndex(k), v)).collect(),
        )
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of stored (increasing) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest index appearing in any stored key; 0 for an empty kernel.
    pub fn support_bound(&self) -> usize {
        self.postings.keys().next_back().map_or(0, |&k| k as usize)
    }

    pub fn key(&self, pos: usize) -> &[u32] {
        &self.indices[pos * self.level..(pos + 1) * self.level]
    }

    pub fn value_at(&self, pos: usize) -> f64 {
        self.values[pos]
    }

    /// Iterates stored `(increasing key, value)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.indices
            .chunks_exact(self.level)
            .zip(self.values.iter().copied())
    }

    /// Positions of the stored keys that contain index `k`.
    pub fn postings(&self, k: u32) -> &[usize] {
        self.postings.get(&k).map_or(&[], |v| v.as_slice())
    }

    /// Indices that appear in at least one stored key.
    pub fn active_indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.postings.keys().copied()
    }

    /// Stored value of a canonical (strictly increasing) key; 0 if absent.
    pub fn get_sorted(&self, key: &[u32]) -> f64 {
        if key.len() != self.level || self.values.is_empty() {
            return 0.0;
        }
        let (mut lo, mut hi) = (0usize, self.values.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.key(mid).cmp(key) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.values[mid],
            }
        }
        0.0
    }

    /// `c(α)` for an arbitrary ordering of the tuple, using symmetry and the
    /// zero-diagonal convention.
    pub fn symmetric_value(&self, tuple: &[u32]) -> Result<f64> {
        if tuple.len() != self.level {
            return Err(Error::BadLevel {
                expected: self.level,
                got: tuple.len(),
            });
        }
        Ok(self.value_any_order(tuple))
    }

    /// Same as [`symmetric_value`](Self::symmetric_value) without the length
    /// check; a wrong length reads as 0.
    pub(crate) fn value_any_order(&self, tuple: &[u32]) -> f64 {
        if tuple.len() != self.level {
            return 0.0;
        }
        let mut sorted = tuple.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return 0.0;
        }
        self.get_sorted(&sorted)
    }

    /// Σ over stored entries of `c²`.
    pub fn stored_sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `|c|_m² = m! Σ_stored c²`.
    pub fn norm_sq(&self) -> f64 {
        factorial(self.level) * self.stored_sum_sq()
    }

    /// `|c|_m`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Σ over stored keys containing `k` of `c²`.
    pub fn row_mass(&self, k: u32) -> f64 {
        self.postings(k)
            .iter()
            .map(|&p| self.values[p] * self.values[p])
            .sum()
    }

    /// Largest row mass over all indices.
    pub fn max_row_mass(&self) -> f64 {
        self.postings
            .keys()
            .map(|&k| self.row_mass(k))
            .fold(0.0, f64::max)
    }

    /// Σ_{α ∈ Γ_m} c(α) z^α.
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        let stored: f64 = self.iter().map(|(key, v)| v * monomial(z, key)).sum();
        factorial(self.level) * stored
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= t);
        out
    }

    /// Keeps the entries whose indices are all `<= bound`.
    pub fn restricted(&self, bound: u32) -> Self {
        let kept = self
            .iter()
            .filter(|(key, _)| *key.last().unwrap() <= bound)
            .map(|(key, v)| (MultiIndex(key.to_vec()), v))
            .collect();
        Self::from_sorted(self.level, kept)
    }
}

/// The coefficient family `c = (c_(1), …, c_(N))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosCoefficients {
    max_level: usize,
    levels: BTreeMap<usize, SymmetricKernel>,
}

/// `ε₀(c, M)` together with the coarser bound Σ_m M^{2m} m! δ_{m+1}(c).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eps0 {
    pub value: f64,
    pub upper_bound: f64,
}

impl ChaosCoefficients {
    pub fn new(max_level: usize, kernels: Vec<SymmetricKernel>) -> Result<Self> {
        let mut levels = BTreeMap::new();
        for k in kernels {
            let m = k.level();
            if m > max_level {
                return Err(Error::LevelOutOfRange {
                    level: m,
                    max_level,
                });
            }
            if levels.insert(m, k).is_some() {
                return Err(Error::InvalidArgument(format!("level {m} given twice")));
            }
        }
        Ok(ChaosCoefficients { max_level, levels })
    }

    /// Coefficients with a single active level.
    pub fn single(kernel: SymmetricKernel) -> Self {
        let m = kernel.level();
        ChaosCoefficients {
            max_level: m,
            levels: BTreeMap::from([(m, kernel)]),
        }
    }

    pub fn zero(max_level: usize) -> Self {
        ChaosCoefficients {
            max_level,
            levels: BTreeMap::new(),
        }
    }

    /// Declared truncation level `N`.
    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn level(&self, m: usize) -> Option<&SymmetricKernel> {
        self.levels.get(&m)
    }

    /// Stored levels in increasing order.
    pub fn levels(&self) -> impl Iterator<Item = &SymmetricKernel> + '_ {
        self.levels.values()
    }

    pub fn nnz(&self) -> usize {
        self.levels.values().map(|k| k.nnz()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.levels
            .values()
            .all(|k| k.values.iter().all(|&v| v == 0.0))
    }

    pub fn support_bound(&self) -> usize {
        self.levels
            .values()
            .map(|k| k.support_bound())
            .max()
            .unwrap_or(0)
    }

    /// Sorted list of all indices touched by some level.
    pub fn active_indices(&self) -> Vec<u32> {
        let mut idx: Vec<u32> = self
            .levels
            .values()
            .flat_map(|k| k.active_indices())
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// `|c|_m`; 0 for an absent level.
    pub fn level_norm(&self, m: usize) -> f64 {
        self.level(m).map_or(0.0, |k| k.norm())
    }

    /// `i_N(c) = Σ_m m! |c|_m²`, the second moment of `S_N(c, Z)` for any
    /// independent centred unit-variance `Z`.
    pub fn second_moment(&self) -> f64 {
        self.levels
            .iter()
            .map(|(&m, k)| factorial(m) * k.norm_sq())
            .sum()
    }

    /// Rescales so that `i_N = 1`.
    pub fn normalize(&self) -> Result<Self> {
        let i = self.second_moment();
        // also rejects NaN
        if i.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::ZeroKernel);
        }
        Ok(self.scaled(1.0 / i.sqrt()))
    }

    pub fn scaled(&self, t: f64) -> Self {
        ChaosCoefficients {
            max_level: self.max_level,
            levels: self.levels.iter().map(|(&m, k)| (m, k.scaled(t))).collect(),
        }
    }

    /// `N_q(c, M)`. Levels below `max(q, 1)` contribute nothing.
    pub fn weighted_norm(&self, q: usize, big_m: f64) -> f64 {
        self.levels
            .iter()
            .filter(|(&m, _)| m >= q.max(1))
            .map(|(&m, k)| {
                big_m.powi((m - q) as i32)
                    * (factorial(m) / factorial(m - q))
                    * factorial(m)
                    * k.norm_sq()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Influence factor `δ_m(c) = max_k (Σ_{α ∈ Γ_{m-1}} c²(k, α))^{1/2}`.
    pub fn influence(&self, m: usize) -> f64 {
        match self.level(m) {
            Some(k) if m >= 1 => (factorial(m - 1) * k.max_row_mass()).sqrt(),
            _ => 0.0,
        }
    }

    /// `δ̄_N(c)`: Σ_m δ_m, or Σ_m m!·δ_m when `weighted`.
    pub fn influence_profile(&self, weighted: bool) -> f64 {
        (1..=self.max_level)
            .map(|m| {
                let d = self.influence(m);
                if weighted {
                    factorial(m) * d
                } else {
                    d
                }
            })
            .sum()
    }

    /// `ε₀(c, M) = sup_k (Σ_{m ≥ 0} M^{2m} m! Σ_{α ∈ Γ_m} c²(k, α))^{1/2}`.
    ///
    /// The `m = 0` term is `c(k)²`. The returned upper bound
    /// Σ_{m ≥ 0} M^{2m} m! δ_{m+1}(c) dominates the value only for `M >= 1`.
    pub fn eps0(&self, big_m: f64) -> Eps0 {
        let mut best = 0.0f64;
        for k in self.active_indices() {
            let mut acc = 0.0;
            for (&level, kern) in &self.levels {
                let m = level - 1;
                acc += big_m.powi(2 * m as i32) * factorial(m) * factorial(m) * kern.row_mass(k);
            }
            best = best.max(acc);
        }
        let upper_bound = self
            .levels
            .keys()
            .map(|&level| {
                let m = level - 1;
                big_m.powi(2 * m as i32) * factorial(m) * self.influence(level)
            })
            .sum();
        Eps0 {
            value: best.sqrt(),
            upper_bound,
        }
    }

    /// `α_N(c)`: the smallest nonzero `|c|_m`, or `+∞` when all vanish.
    pub fn min_active_level_norm(&self) -> f64 {
        self.levels
            .values()
            .map(|k| k.norm())
            .filter(|&n| n > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Restriction of `c` to multi-indices with entries `<= bound`.
    pub fn truncate(&self, bound: u32) -> Self {
        ChaosCoefficients {
            max_level: self.max_level,
            levels: self
                .levels
                .iter()
                .map(|(&m, k)| (m, k.restricted(bound)))
                .collect(),
        }
    }

    /// `∂_j S(c, ·)` as an affine chaos: constant `c(j)` plus the levels
    /// `ĉ^j_(m)(α) = (1 + m) c(α, j)`.
    pub fn derivative(&self, j: u32) -> AffineChaos {
        let constant = self.level(1).map_or(0.0, |k| k.get_sorted(&[j]));
        let mut kernels = Vec::new();
        for (&level, kern) in &self.levels {
            if level < 2 {
                continue;
            }
            let entries: Vec<(Vec<u32>, f64)> = kern
                .postings(j)
                .iter()
                .map(|&p| {
                    let rest: Vec<u32> = kern.key(p).iter().copied().filter(|&x| x != j).collect();
                    (rest, level as f64 * kern.value_at(p))
                })
                .collect();
            kernels.push(SymmetricKernel::accumulate(level - 1, entries));
        }
        AffineChaos {
            constant,
            coefficients: ChaosCoefficients {
                max_level: self.max_level.saturating_sub(1),
                levels: kernels.into_iter().map(|k| (k.level(), k)).collect(),
            },
        }
    }

    /// `E Σ_j |∂_j S|² = Σ_m m · m! |c|_m²`.
    pub fn gradient_second_moment(&self) -> f64 {
        self.levels
            .iter()
            .map(|(&m, k)| m as f64 * factorial(m) * k.norm_sq())
            .sum()
    }

    /// `S_N(c, z)` with `z[k-1] = z_k`.
    pub fn evaluate(&self, z: &[f64]) -> Result<f64> {
        let needed = self.support_bound();
        if z.len() < needed {
            return Err(Error::SupportMismatch {
                needed,
                got: z.len(),
            });
        }
        Ok(self.evaluate_unchecked(z))
    }

    pub(crate) fn evaluate_unchecked(&self, z: &[f64]) -> f64 {
        self.levels.values().map(|k| k.evaluate(z)).sum()
    }
}

/// `x ↦ constant + S(coefficients, x)`; the shape of a partial derivative
/// of a chaos series.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineChaos {
    pub constant: f64,
    pub coefficients: ChaosCoefficients,
}

impl AffineChaos {
    pub fn evaluate(&self, z: &[f64]) -> Result<f64> {
        Ok(self.constant + self.coefficients.evaluate(z)?)
    }

    /// `f_(k)` read at an arbitrary tuple; level 0 is the constant.
    pub fn value(&self, tuple: &[u32]) -> f64 {
        if tuple.is_empty() {
            return self.constant;
        }
        self.coefficients
            .level(tuple.len())
            .map_or(0.0, |k| k.value_any_order(tuple))
    }

    /// Highest level that may be nonzero (0 for a pure constant).
    pub fn max_level(&self) -> usize {
        self.coefficients.max_level()
    }

    pub fn support_bound(&self) -> usize {
        self.coefficients.support_bound()
    }
}

impl From<ChaosCoefficients> for AffineChaos {
    fn from(coefficients: ChaosCoefficients) -> Self {
        AffineChaos {
            constant: 0.0,
            coefficients,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const A: f64 = 0.5;

    fn pair(a: f64) -> ChaosCoefficients {
        ChaosCoefficients::single(SymmetricKernel::new(2, [(vec![1, 2], a)]).unwrap())
    }

    fn level1(vals: &[f64]) -> ChaosCoefficients {
        let entries = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| (vec![i as u32 + 1], v));
        ChaosCoefficients::single(SymmetricKernel::new(1, entries).unwrap())
    }

    #[test]
    fn make_kernel_canonicalizes_and_rejects() {
        let k = SymmetricKernel::new(2, [(vec![1, 2], 0.5)]).unwrap();
        assert_eq!(k.nnz(), 1);
        let swapped = SymmetricKernel::new(2, [(vec![2, 1], 0.5)]).unwrap();
        assert_eq!(k, swapped);
        assert_eq!(
            SymmetricKernel::new(2, [(vec![1, 1], 0.5)]),
            Err(Error::RepeatedIndex(vec![1, 1]))
        );
        assert_eq!(
            SymmetricKernel::new(2, [(vec![1, 2], 0.5), (vec![2, 1], 0.1)]),
            Err(Error::DuplicateKey(vec![1, 2]))
        );
        assert_eq!(
            SymmetricKernel::new(2, [(vec![1, 2, 3], 0.5)]),
            Err(Error::BadLevel {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn symmetric_value_reads() {
        let k = SymmetricKernel::new(2, [(vec![1, 2], A)]).unwrap();
        assert_eq!(k.symmetric_value(&[2, 1]).unwrap(), A);
        assert_eq!(k.symmetric_value(&[1, 1]).unwrap(), 0.0);
        assert_eq!(k.symmetric_value(&[1, 3]).unwrap(), 0.0);
        assert!(matches!(
            k.symmetric_value(&[1]),
            Err(Error::BadLevel { .. })
        ));
    }

    #[test]
    fn level_norm_examples() {
        let half = 1.0 / 2f64.sqrt();
        assert!((level1(&[half, half]).level_norm(1) - 1.0).abs() < 1e-15);
        let c = fixtures::complete(2, 3, A);
        assert!((c.level_norm(2) - (6.0 * A * A).sqrt()).abs() < 1e-15);
        assert_eq!(c.level_norm(1), 0.0);
    }

    #[test]
    fn second_moment_and_normalize() {
        let c = fixtures::complete23();
        assert!((c.second_moment() - 1.0).abs() < 1e-14);
        let again = c.normalize().unwrap();
        for (a, b) in again
            .level(2)
            .unwrap()
            .iter()
            .zip(c.level(2).unwrap().iter())
        {
            assert!((a.1 - b.1).abs() < 1e-12);
        }
        let n = pair(1.0).normalize().unwrap();
        // i = 2! |c|_2² = 2! · 2! · 1 = 4
        assert_eq!(pair(1.0).second_moment(), 4.0);
        assert_eq!(n.level(2).unwrap().get_sorted(&[1, 2]), 0.5);
        assert_eq!(
            ChaosCoefficients::zero(2).normalize(),
            Err(Error::ZeroKernel)
        );
    }

    #[test]
    fn weighted_norm_examples() {
        let c = fixtures::complete23();
        assert!((c.weighted_norm(0, 1.0).powi(2) - c.second_moment()).abs() < 1e-14);
        let unit = level1(&[1.0]);
        for m in [0.3, 1.0, 7.0] {
            assert!((unit.weighted_norm(1, m) - 1.0).abs() < 1e-15);
        }
        assert_eq!(c.weighted_norm(3, 2.0), 0.0);
    }

    #[test]
    fn influence_examples() {
        let c = fixtures::complete23();
        assert!((c.influence(2) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((pair(A).influence(2) - A).abs() < 1e-15);
        assert_eq!(level1(&[0.3, -0.9]).influence(1), 0.9);
        assert!((c.influence_profile(false) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((c.influence_profile(true) - 2.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(ChaosCoefficients::zero(3).influence_profile(false), 0.0);
    }

    #[test]
    fn eps0_examples() {
        for m in [0.5, 1.0, 3.0] {
            let e = pair(A).eps0(m);
            assert!((e.value - m * A).abs() < 1e-15);
        }
        assert_eq!(ChaosCoefficients::zero(2).eps0(2.0).value, 0.0);
        // level-1 coefficients enter through the m = 0 term
        assert!((level1(&[0.3, -0.9]).eps0(5.0).value - 0.9).abs() < 1e-15);
    }

    #[test]
    fn min_active_level_norm_skips_zero_levels() {
        let k1 = SymmetricKernel::new(1, [(vec![1], 0.5)]).unwrap();
        let k2 = SymmetricKernel::new(2, [(vec![1, 2], 0.8 / 2f64.sqrt())]).unwrap();
        let c = ChaosCoefficients::new(2, vec![k1, k2.clone()]).unwrap();
        assert!((c.min_active_level_norm() - 0.5).abs() < 1e-15);
        let c = ChaosCoefficients::new(2, vec![SymmetricKernel::empty(1), k2]).unwrap();
        assert!((c.min_active_level_norm() - 0.8).abs() < 1e-15);
        assert_eq!(
            ChaosCoefficients::zero(2).min_active_level_norm(),
            f64::INFINITY
        );
    }

    #[test]
    fn truncate_examples() {
        let c = fixtures::complete23();
        let t = c.truncate(2);
        let keys: Vec<_> = t
            .level(2)
            .unwrap()
            .iter()
            .map(|(k, _)| k.to_vec())
            .collect();
        assert_eq!(keys, vec![vec![1, 2]]);
        assert_eq!(c.truncate(3), c);
        assert_eq!(c.truncate(10), c);
        assert!(c.second_moment() - t.second_moment() >= 0.0);
        assert_eq!(t.truncate(2), t);
    }

    #[test]
    fn derivative_examples() {
        let d = level1(&[0.3, -0.7]).derivative(1);
        assert_eq!(d.constant, 0.3);
        assert!(d.coefficients.is_zero());
        let d = pair(A).derivative(1);
        assert_eq!(d.constant, 0.0);
        let k = d.coefficients.level(1).unwrap();
        assert_eq!(k.nnz(), 1);
        assert_eq!(k.get_sorted(&[2]), 2.0 * A);
    }

    #[test]
    fn gradient_second_moment_examples() {
        assert_eq!(level1(&[1.0]).gradient_second_moment(), 1.0);
        assert!((pair(A).gradient_second_moment() - 8.0 * A * A).abs() < 1e-15);
    }

    #[test]
    fn evaluate_examples() {
        let c = level1(&[0.3, 0.4]);
        assert!((c.evaluate(&[1.0, 1.0]).unwrap() - 0.7).abs() < 1e-15);
        assert!((pair(A).evaluate(&[2.0, 3.0]).unwrap() - 12.0 * A).abs() < 1e-15);
        assert!(matches!(
            pair(A).evaluate(&[1.0]),
            Err(Error::SupportMismatch { needed: 2, got: 1 })
        ));
    }
}
