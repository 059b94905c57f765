//! Contractions `f ⊗_r g`, their symmetrizations, fourth cumulants of the
//! chaos levels, and the inequalities that tie them together.

use std::collections::{BTreeMap, HashMap};

use crate::combinatorics::{
    binomial, factorial, for_each_split, merge_sorted, multiset_choose, orderings,
    sorted_difference,
};
use crate::error::{Error, Result};
use crate::kernel::{ChaosCoefficients, SymmetricKernel};

/// A kernel on `Γ_p × Γ_q`, symmetric within each block and possibly
/// nonzero on diagonals. Keys are pairs of sorted multisets.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BlockKernel {
    p: usize,
    q: usize,
    entries: BTreeMap<(Vec<u32>, Vec<u32>), f64>,
}

impl BlockKernel {
    /// Builds a block kernel from arbitrary orderings; entries whose blocks
    /// sort to the same key are summed.
    pub fn from_entries<I>(p: usize, q: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<u32>, f64)>,
    {
        let mut out = BlockKernel {
            p,
            q,
            entries: BTreeMap::new(),
        };
        for (mut a, mut b, v) in entries {
            if a.len() != p {
                return Err(Error::BadLevel {
                    expected: p,
                    got: a.len(),
                });
            }
            if b.len() != q {
                return Err(Error::BadLevel {
                    expected: q,
                    got: b.len(),
                });
            }
            a.sort_unstable();
            b.sort_unstable();
            *out.entries.entry((a, b)).or_insert(0.0) += v;
        }
        Ok(out)
    }

    pub fn block_sizes(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Value at `(α, β)` given in any order within each block.
    pub fn get(&self, a: &[u32], b: &[u32]) -> f64 {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        self.get_sorted(a, b)
    }

    pub(crate) fn get_sorted(&self, a: Vec<u32>, b: Vec<u32>) -> f64 {
        self.entries.get(&(a, b)).copied().unwrap_or(0.0)
    }

    /// Canonical entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &[u32], f64)> + '_ {
        self.entries
            .iter()
            .map(|((a, b), &v)| (a.as_slice(), b.as_slice(), v))
    }

    /// Σ over `Γ_p × Γ_q` of the squared value.
    pub fn frobenius_sq(&self) -> f64 {
        self.iter()
            .map(|(a, b, v)| orderings(a) * orderings(b) * v * v)
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }
}

/// A kernel of order `k` invariant under every permutation of its slots.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FullSymmetricKernel {
    order: usize,
    entries: BTreeMap<Vec<u32>, f64>,
}

impl FullSymmetricKernel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, tuple: &[u32]) -> f64 {
        let mut key = tuple.to_vec();
        key.sort_unstable();
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Σ over all ordered tuples of the squared value.
    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|(k, v)| orderings(k) * v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// `(f ⊗_r g)(α, β) = Σ_{γ ∈ Γ_r} f(α, γ) g(β, γ)`.
///
/// Joins stored keys on shared `r`-subsets; the `r!` orderings of `γ` are
/// applied analytically.
pub fn contract(f: &SymmetricKernel, g: &SymmetricKernel, r: usize) -> Result<BlockKernel> {
    let (m, n) = (f.level(), g.level());
    if r > m.min(n) {
        return Err(Error::BadContractionOrder { r, max: m.min(n) });
    }
    let mut index: HashMap<Vec<u32>, Vec<(Vec<u32>, f64)>> = HashMap::new();
    for (key, v) in g.iter() {
        for_each_split(key, r, |shared, rest| {
            index
                .entry(shared.to_vec())
                .or_default()
                .push((rest.to_vec(), v));
        });
    }
    let weight = factorial(r);
    let mut entries: BTreeMap<(Vec<u32>, Vec<u32>), f64> = BTreeMap::new();
    for (key, fv) in f.iter() {
        for_each_split(key, r, |shared, rest| {
            if let Some(matches) = index.get(shared) {
                for (g_rest, gv) in matches {
                    *entries
                        .entry((rest.to_vec(), g_rest.clone()))
                        .or_insert(0.0) += weight * fv * gv;
                }
            }
        });
    }
    Ok(BlockKernel {
        p: m - r,
        q: n - r,
        entries,
    })
}

/// `(f ⊗_s g)(α, β)` at one point, without materializing the contraction.
/// `α` and `β` may be given in any order; a repeat inside either block gives 0.
pub fn contraction_value(
    f: &SymmetricKernel,
    g: &SymmetricKernel,
    s: usize,
    alpha: &[u32],
    beta: &[u32],
) -> f64 {
    if alpha.len() + s != f.level() || beta.len() + s != g.level() {
        return 0.0;
    }
    if s == 0 {
        return f.value_any_order(alpha) * g.value_any_order(beta);
    }
    let mut a = alpha.to_vec();
    a.sort_unstable();
    let mut b = beta.to_vec();
    b.sort_unstable();
    if a.windows(2).any(|w| w[0] == w[1]) || b.windows(2).any(|w| w[0] == w[1]) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut visit = |pos: usize| {
        let key = f.key(pos);
        let Some(shared) = sorted_difference(key, &a) else {
            return;
        };
        if shared.iter().any(|x| b.binary_search(x).is_ok()) {
            return;
        }
        total += f.value_at(pos) * g.get_sorted(&merge_sorted(&b, &shared));
    };
    match a.iter().min_by_key(|&&k| f.postings(k).len()) {
        Some(&k) => f.postings(k).iter().for_each(|&p| visit(p)),
        None => (0..f.nnz()).for_each(&mut visit),
    }
    factorial(s) * total
}

/// Average of a block kernel over all `(p+q)!` slot permutations.
///
/// For a sorted multiset `η`, the permutations that put the sub-multiset `A`
/// in the first block number `p! q! Π_v C(μ_v(η), μ_v(A))`.
pub fn symmetrize(k: &BlockKernel) -> FullSymmetricKernel {
    let (p, q) = k.block_sizes();
    let scale = factorial(p) * factorial(q) / factorial(p + q);
    let mut entries: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (a, b, v) in k.iter() {
        let eta = merge_sorted(a, b);
        let weight = scale * multiset_choose(&eta, a);
        *entries.entry(eta).or_insert(0.0) += weight * v;
    }
    FullSymmetricKernel {
        order: p + q,
        entries,
    }
}

/// `f ⊗̃_r g`.
pub fn symmetrized_contraction(
    f: &SymmetricKernel,
    g: &SymmetricKernel,
    r: usize,
) -> Result<FullSymmetricKernel> {
    Ok(symmetrize(&contract(f, g, r)?))
}

/// Fourth cumulant of the level-`m` chaos `Φ_m(c, Z)` for standard normal
/// `Z`, from the contraction identity. Zero for `m = 1` and for empty levels.
pub fn kappa4(c: &ChaosCoefficients, m: usize) -> f64 {
    match c.level(m) {
        Some(k) if m >= 2 => kernel_kappa4(k),
        _ => 0.0,
    }
}

/// Fourth cumulant of a single homogeneous chaos.
pub fn kernel_kappa4(k: &SymmetricKernel) -> f64 {
    let m = k.level();
    if m < 2 || k.is_empty() {
        return 0.0;
    }
    let mf = factorial(m);
    (1..m)
        .map(|r| {
            let raw = contract(k, k, r).expect("r < level");
            let sym = symmetrize(&raw);
            mf * mf
                * binomial(m, r).powi(2)
                * (raw.frobenius_sq() + binomial(2 * m - 2 * r, m - r) * sym.norm_sq())
        })
        .sum()
}

/// `κ̄_N(c) = Σ_m κ_{4,m}(c)^{1/4}`.
pub fn kappa_bar(c: &ChaosCoefficients) -> f64 {
    c.levels().map(|k| kernel_kappa4(k).powf(0.25)).sum()
}

/// `κ_{4,m}` for `m = 1..=N`, in level order.
pub fn kappa4_profile(c: &ChaosCoefficients) -> Vec<f64> {
    (1..=c.max_level()).map(|m| kappa4(c, m)).collect()
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalityCheck {
    /// Excess of the left side, relative to `max(1, |rhs|)`.
    pub fn violation(&self) -> f64 {
        (self.lhs - self.rhs) / self.rhs.abs().max(1.0)
    }
}

/// All inequalities evaluated for one coefficient family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
    /// Levels where the influence bound divides by `|c|_m = 0`.
    pub vacuous_levels: Vec<usize>,
}

impl InequalityReport {
    /// Largest relative violation; `-∞` when there is nothing to check.
    pub fn max_violation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.violation())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violations(&self, slack: f64) -> Vec<&InequalityCheck> {
        self.checks
            .iter()
            .filter(|c| c.violation() > slack)
            .collect()
    }
}

/// Evaluates, for every pair of levels `m <= n` and every admissible `r`:
///
/// * `‖f ⊗̃_r g‖² <= ½(‖f ⊗_{m-r} f‖² + ‖g ⊗_{n-r} g‖²)`
/// * `‖f ⊗_r g‖² <= ‖f ⊗_{m-r} f‖ ‖g ⊗_{n-r} g‖`
/// * both contraction norms `<= max_l √κ_{4,l} / (l! C(l, r))` for `0 < r < m ∧ n`
/// * `‖f ⊗_m g‖ <= |f|_m (√κ_{4,n} / (n! C(n, n-m)))^{1/2}` for `m < n`
/// * `δ_m <= ‖c ⊗_{m-1} c‖ / |c|_m <= √κ_{4,m} / (m! m |c|_m)`
///
/// with `f = c_(m)`, `g = c_(n)`.
pub fn check_contraction_inequalities(c: &ChaosCoefficients) -> InequalityReport {
    let levels: Vec<&SymmetricKernel> = c.levels().filter(|k| !k.is_empty()).collect();
    let kappas: BTreeMap<usize, f64> = levels
        .iter()
        .map(|k| (k.level(), kernel_kappa4(k)))
        .collect();
    // self_norms[m][s] = ‖c_(m) ⊗_s c_(m)‖
    let self_norms: BTreeMap<usize, Vec<f64>> = levels
        .iter()
        .map(|k| {
            let norms = (0..=k.level())
                .map(|s| contract(k, k, s).expect("s <= level").frobenius())
                .collect();
            (k.level(), norms)
        })
        .collect();
    let cumulant_scale = |l: usize, r: usize| kappas[&l].sqrt() / (factorial(l) * binomial(l, r));

    let mut report = InequalityReport::default();
    for (i, f) in levels.iter().enumerate() {
        for g in &levels[i..] {
            let (m, n) = (f.level(), g.level());
            let fs = &self_norms[&m];
            let gs = &self_norms[&n];
            for r in 0..=m.min(n) {
                let raw = contract(f, g, r).expect("r <= min level");
                let raw_sq = raw.frobenius_sq();
                let sym_sq = symmetrize(&raw).norm_sq();
                report.checks.push(InequalityCheck {
                    name: "symmetrized_contraction_mean",
                    m,
                    n,
                    r,
                    lhs: sym_sq,
                    rhs: 0.5 * (fs[m - r].powi(2) + gs[n - r].powi(2)),
                });
                report.checks.push(InequalityCheck {
                    name: "contraction_cauchy_schwarz",
                    m,
                    n,
                    r,
                    lhs: raw_sq,
                    rhs: fs[m - r] * gs[n - r],
                });
                if 0 < r && r < m.min(n) {
                    let bound = cumulant_scale(m, r).max(cumulant_scale(n, r));
                    report.checks.push(InequalityCheck {
                        name: "symmetrized_contraction_cumulant",
                        m,
                        n,
                        r,
                        lhs: sym_sq.sqrt(),
                        rhs: bound,
                    });
                    report.checks.push(InequalityCheck {
                        name: "contraction_cumulant",
                        m,
                        n,
                        r,
                        lhs: raw_sq.sqrt(),
                        rhs: bound,
                    });
                }
                if r == m && m < n {
                    report.checks.push(InequalityCheck {
                        name: "full_contraction_cauchy_schwarz",
                        m,
                        n,
                        r,
                        lhs: raw_sq.sqrt(),
                        rhs: f.norm() * gs[n - m].sqrt(),
                    });
                    report.checks.push(InequalityCheck {
                        name: "full_contraction_cumulant",
                        m,
                        n,
                        r,
                        lhs: raw_sq.sqrt(),
                        rhs: f.norm() * cumulant_scale(n, n - m).sqrt(),
                    });
                }
            }
        }
    }
    for m in 1..=c.max_level() {
        let norm = c.level_norm(m);
        if norm == 0.0 {
            report.vacuous_levels.push(m);
            continue;
        }
        // the row masses sit on the diagonal of c ⊗_{m-1} c, so δ_m² ≤ ‖c ⊗_{m-1} c‖
        let delta = c.influence(m);
        report.checks.push(InequalityCheck {
            name: "influence_contraction",
            m,
            n: m,
            r: m - 1,
            lhs: delta * delta,
            rhs: self_norms[&m][m - 1],
        });
        if m >= 2 {
            report.checks.push(InequalityCheck {
                name: "influence_cumulant",
                m,
                n: m,
                r: m - 1,
                lhs: delta,
                rhs: kappas[&m].sqrt() / (factorial(m) * m as f64 * norm),
            });
        }
    }
    report
}
