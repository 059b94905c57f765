//! Quadratic expansion calculus: the product-formula surrogate for
//! `|S(f, Z)|²`, the double series `t_{m,n}` and `T_{m,n}` in `(Z, Y, χ̃)`,
//! gradient coefficients `e` and `ẽ`, and explicit right-hand sides of the
//! `L^p` estimates built on them.

use std::collections::BTreeMap;

use crate::combinatorics::{
    all_distinct, binomial, factorial, for_each_increasing, for_each_split, monomial,
};
use crate::contraction::{contraction_value, kappa_bar};
use crate::error::{Error, Result};
use crate::kernel::{AffineChaos, ChaosCoefficients};
use crate::oracle::MomentTable;

/// A realization of `(Z_k, Y_k, χ_k, χ̃_k)` for `k = 1..=J`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi_tilde: Vec<f64>,
}

impl Realization {
    /// `y_k = z_k² - 1`, no splitting variables (`χ = χ̃ = 0`).
    pub fn from_z(z: Vec<f64>) -> Self {
        let y = z.iter().map(|v| v * v - 1.0).collect();
        let zeros = vec![0.0; z.len()];
        Realization {
            z,
            y,
            chi: zeros.clone(),
            chi_tilde: zeros,
        }
    }

    /// `y_k = z_k² - 1` and `χ̃_k = χ_k - E χ_k`.
    pub fn with_chi(z: Vec<f64>, chi: Vec<f64>, chi_mean: f64) -> Result<Self> {
        if chi.len() != z.len() {
            return Err(Error::InvalidArgument(format!(
                "z has length {} but chi has length {}",
                z.len(),
                chi.len()
            )));
        }
        let mut r = Self::from_z(z);
        r.chi_tilde = chi.iter().map(|c| c - chi_mean).collect();
        r.chi = chi;
        Ok(r)
    }

    /// Support bound `J` covered by the realization.
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::SupportMismatch {
                needed,
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Which normalization of the gradient coefficients to use.
///
/// `Consistent` carries the factor `C(m, r)` contributed by the square
/// expansion and no `1/(m-r+1)`, which makes the pointwise gradient
/// identities hold. `AsDisplayed` reproduces the coefficients exactly as
/// commonly written, without `C(m, r)` and with `1/(m-r+1)` on `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CoefficientConvention {
    #[default]
    Consistent,
    AsDisplayed,
}

/// `a: Γ_m × Γ_n → ℝ`, symmetric in each argument, null on the diagonals
/// of the concatenated index.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleSeriesCoefficient {
    m: usize,
    n: usize,
    values: BTreeMap<(Vec<u32>, Vec<u32>), f64>,
}

impl DoubleSeriesCoefficient {
    /// Entries are canonicalized per argument; a shared component anywhere
    /// in `(α, β)` is rejected.
    pub fn new<I>(m: usize, n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<u32>, f64)>,
    {
        let mut values = BTreeMap::new();
        for (mut a, mut b, v) in entries {
            if a.len() != m || b.len() != n {
                return Err(Error::BadLevel {
                    expected: m + n,
                    got: a.len() + b.len(),
                });
            }
            let joined: Vec<u32> = a.iter().chain(&b).copied().collect();
            if joined.contains(&0) {
                return Err(Error::ZeroIndex(joined));
            }
            if !all_distinct(&joined) {
                return Err(Error::RepeatedIndex(joined));
            }
            a.sort_unstable();
            b.sort_unstable();
            if values.insert((a.clone(), b.clone()), v).is_some() {
                return Err(Error::DuplicateKey(joined));
            }
        }
        Ok(DoubleSeriesCoefficient { m, n, values })
    }

    /// Tabulates `a(α, β)` on every disjoint pair of increasing tuples
    /// drawn from `1..=j`; zero values are dropped.
    pub fn from_fn<F>(m: usize, n: usize, j: usize, mut f: F) -> Self
    where
        F: FnMut(&[u32], &[u32]) -> f64,
    {
        let mut values = BTreeMap::new();
        for_each_disjoint_pair(j, m, n, |a, b| {
            let v = f(a, b);
            if v != 0.0 {
                values.insert((a.to_vec(), b.to_vec()), v);
            }
        });
        DoubleSeriesCoefficient { m, n, values }
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// `a(α, β)` for arguments in any order.
    pub fn get(&self, a: &[u32], b: &[u32]) -> f64 {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        self.values.get(&(a, b)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &[u32], f64)> + '_ {
        self.values
            .iter()
            .map(|((a, b), &v)| (a.as_slice(), b.as_slice(), v))
    }

    fn within(a: &[u32], b: &[u32], j: usize) -> bool {
        a.iter().chain(b).all(|&k| k as usize <= j)
    }

    /// `|a|_{m,n,J}`: the `ℓ²` norm over `Γ_m(J) × Γ_n(J)`.
    pub fn norm(&self, j: usize) -> f64 {
        let w = factorial(self.m) * factorial(self.n);
        (w * self
            .iter()
            .filter(|(a, b, _)| Self::within(a, b, j))
            .map(|(_, _, v)| v * v)
            .sum::<f64>())
        .sqrt()
    }
}

/// The family `ā = (a_j)`, with `a_j(γ) = 0` whenever `j ∈ γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedDoubleSeries {
    m: usize,
    n: usize,
    members: BTreeMap<u32, DoubleSeriesCoefficient>,
}

impl IndexedDoubleSeries {
    pub fn new(
        m: usize,
        n: usize,
        members: BTreeMap<u32, DoubleSeriesCoefficient>,
    ) -> Result<Self> {
        for (&j, a) in &members {
            if a.sizes() != (m, n) {
                return Err(Error::InvalidArgument(format!(
                    "member {j} has the wrong sizes"
                )));
            }
            if a.iter().any(|(x, y, _)| x.contains(&j) || y.contains(&j)) {
                return Err(Error::InvalidArgument(format!(
                    "member {j} is nonzero on an index containing {j}"
                )));
            }
        }
        Ok(IndexedDoubleSeries { m, n, members })
    }

    /// Tabulates `a_j(α, β)` for `j` and all indices in `1..=j_max`.
    pub fn from_fn<F>(m: usize, n: usize, j_max: usize, mut f: F) -> Self
    where
        F: FnMut(u32, &[u32], &[u32]) -> f64,
    {
        let members = (1..=j_max as u32)
            .map(|j| {
                let a = DoubleSeriesCoefficient::from_fn(m, n, j_max, |x, y| {
                    if x.contains(&j) || y.contains(&j) {
                        0.0
                    } else {
                        f(j, x, y)
                    }
                });
                (j, a)
            })
            .collect();
        IndexedDoubleSeries { m, n, members }
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn members(&self) -> impl Iterator<Item = (u32, &DoubleSeriesCoefficient)> + '_ {
        self.members.iter().map(|(&j, a)| (j, a))
    }

    /// `|ā|_{m,n,J}`.
    pub fn norm(&self, j: usize) -> f64 {
        self.members
            .values()
            .map(|a| a.norm(j).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Calls `f(α, β)` for every pair of disjoint increasing tuples of sizes
/// `m` and `n` drawn from `1..=j`.
pub fn for_each_disjoint_pair<F: FnMut(&[u32], &[u32])>(j: usize, m: usize, n: usize, mut f: F) {
    for_each_increasing(j, m + n, |u| for_each_split(u, m, |a, b| f(a, b)));
}

/// `Σ_{α ∈ Γ_m(J)} Σ_{β ∈ Γ_n(J)} z^α y^β a(α, β)` for a coefficient given as
/// a function that is symmetric in each argument and null on diagonals.
pub fn t_series_fn<F>(m: usize, n: usize, real: &Realization, j: usize, mut a: F) -> f64
where
    F: FnMut(&[u32], &[u32]) -> f64,
{
    let j = j.min(real.len());
    let mut total = 0.0;
    for_each_disjoint_pair(j, m, n, |alpha, beta| {
        let v = a(alpha, beta);
        if v != 0.0 {
            total += monomial(&real.z, alpha) * monomial(&real.y, beta) * v;
        }
    });
    factorial(m) * factorial(n) * total
}

/// `t_{m,n}(J, a)`.
pub fn t_series(a: &DoubleSeriesCoefficient, real: &Realization, j: usize) -> f64 {
    let (m, n) = a.sizes();
    let j = j.min(real.len());
    let stored: f64 = a
        .iter()
        .filter(|(x, y, _)| DoubleSeriesCoefficient::within(x, y, j))
        .map(|(x, y, v)| monomial(&real.z, x) * monomial(&real.y, y) * v)
        .sum();
    factorial(m) * factorial(n) * stored
}

/// `T_{m,n}(J, ā) = Σ_α Σ_β z^α y^β Σ_j a_j(α, β) χ̃_j`.
pub fn big_t_series(a: &IndexedDoubleSeries, real: &Realization, j: usize) -> f64 {
    a.members()
        .filter(|(k, _)| (*k as usize) <= real.len())
        .map(|(k, member)| real.chi_tilde[k as usize - 1] * t_series(member, real, j))
        .sum()
}

fn concat(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn sorted(a: &[u32]) -> Vec<u32> {
    let mut v = a.to_vec();
    v.sort_unstable();
    v
}

/// `(f_(p) ⊗_s f_(q))(α, β)` with `f_(0)` the constant of `f`.
fn affine_contraction(f: &AffineChaos, s: usize, alpha: &[u32], beta: &[u32]) -> f64 {
    if s == 0 {
        return f.value(alpha) * f.value(beta);
    }
    let c = &f.coefficients;
    match (c.level(alpha.len() + s), c.level(beta.len() + s)) {
        (Some(a), Some(b)) => contraction_value(a, b, s, alpha, beta),
        _ => 0.0,
    }
}

/// `Σ_{a=0}^{n} C(a+m, m) C(n-a+m, m) a! (n-a)! Σ_{S ⊂ η, |S| = a} term(S, η∖S)`:
/// the `Π_n` permutation sum grouped by the first-block subset.
fn grouped_split_sum<F>(eta: &[u32], m: usize, top: usize, mut term: F) -> f64
where
    F: FnMut(&[u32], &[u32]) -> f64,
{
    let n = eta.len();
    let mut total = 0.0;
    for a in 0..=n {
        if a + m > top || n - a + m > top {
            continue;
        }
        let w = binomial(a + m, m) * binomial(n - a + m, m) * factorial(a) * factorial(n - a);
        let mut inner = 0.0;
        for_each_split(eta, a, |s, rest| inner += term(s, rest));
        total += w * inner;
    }
    total
}

fn check_len(tuple: &[u32], want: usize) -> Result<()> {
    if tuple.len() != want {
        return Err(Error::BadLevel {
            expected: want,
            got: tuple.len(),
        });
    }
    Ok(())
}

/// `A_{n,m}[f](η, γ)`. Zero as soon as `(η, γ)` has a repeated component.
pub fn product_coeff_a(
    f: &AffineChaos,
    n: usize,
    m: usize,
    eta: &[u32],
    gamma: &[u32],
) -> Result<f64> {
    check_len(eta, n)?;
    check_len(gamma, m)?;
    if !all_distinct(&concat(eta, gamma)) {
        return Ok(0.0);
    }
    let eta = sorted(eta);
    let sum = grouped_split_sum(&eta, m, f.max_level(), |s, rest| {
        f.value(&concat(s, gamma)) * f.value(&concat(rest, gamma))
    });
    Ok(factorial(m) / factorial(n) * sum)
}

/// `B_{n,r,m}[f](η, ρ) = Σ_{β ∈ Γ_{m-r}} A_{n,m}[f](η, (ρ, β))`, through
/// contractions of order `m - r`.
pub fn product_coeff_b(
    f: &AffineChaos,
    n: usize,
    r: usize,
    m: usize,
    eta: &[u32],
    rho: &[u32],
) -> Result<f64> {
    if m < r {
        return Err(Error::InvalidArgument(format!("m = {m} < r = {r}")));
    }
    check_len(eta, n)?;
    check_len(rho, r)?;
    if !all_distinct(&concat(eta, rho)) {
        return Ok(0.0);
    }
    let eta = sorted(eta);
    let sum = grouped_split_sum(&eta, m, f.max_level(), |s, rest| {
        affine_contraction(f, m - r, &concat(s, rho), &concat(rest, rho))
    });
    Ok(factorial(m) / factorial(n) * sum)
}

fn gradient_prefactor(
    n: usize,
    r: usize,
    m: usize,
    conv: CoefficientConvention,
    full: bool,
) -> f64 {
    let base = (m + 1) as f64 * factorial(m + 1) / factorial(n);
    match conv {
        CoefficientConvention::Consistent => binomial(m, r) * base,
        CoefficientConvention::AsDisplayed if full => base / (m - r + 1) as f64,
        CoefficientConvention::AsDisplayed => base,
    }
}

/// `e_{n,r,m}[c](η, ρ)`: coefficient of `t_{n,r}` in the expansion of
/// `Σ_j |∂_j S(c, Z)|²`. Contraction order `m - r + 1`.
pub fn grad_coeff_e(
    c: &ChaosCoefficients,
    n: usize,
    r: usize,
    m: usize,
    eta: &[u32],
    rho: &[u32],
    conv: CoefficientConvention,
) -> Result<f64> {
    if m < r {
        return Err(Error::InvalidArgument(format!("m = {m} < r = {r}")));
    }
    check_len(eta, n)?;
    check_len(rho, r)?;
    if m + 1 > c.max_level() || !all_distinct(&concat(eta, rho)) {
        return Ok(0.0);
    }
    let eta = sorted(eta);
    let sum = grouped_split_sum(&eta, m + 1, c.max_level(), |s, rest| {
        let (p, q) = (s.len() + m + 1, rest.len() + m + 1);
        match (c.level(p), c.level(q)) {
            (Some(f), Some(g)) => {
                contraction_value(f, g, m - r + 1, &concat(s, rho), &concat(rest, rho))
            }
            _ => 0.0,
        }
    });
    Ok(gradient_prefactor(n, r, m, conv, true) * sum)
}

/// `ẽ^j_{n,r,m}[c](η, ρ)`: coefficient of `t_{n,r}` multiplying `χ̃_j` in
/// the expansion of `Σ_j χ̃_j |∂_j S(c, Z)|²`. Contraction order `m - r`
/// with `j` appended to both arguments.
#[allow(clippy::too_many_arguments)]
pub fn grad_coeff_e_tilde(
    c: &ChaosCoefficients,
    j: u32,
    n: usize,
    r: usize,
    m: usize,
    eta: &[u32],
    rho: &[u32],
    conv: CoefficientConvention,
) -> Result<f64> {
    if m < r {
        return Err(Error::InvalidArgument(format!("m = {m} < r = {r}")));
    }
    check_len(eta, n)?;
    check_len(rho, r)?;
    let mut joined = concat(eta, rho);
    joined.push(j);
    if m + 1 > c.max_level() || !all_distinct(&joined) {
        return Ok(0.0);
    }
    let eta = sorted(eta);
    let mut tail = rho.to_vec();
    tail.push(j);
    let sum = grouped_split_sum(&eta, m + 1, c.max_level(), |s, rest| {
        let (p, q) = (s.len() + m + 1, rest.len() + m + 1);
        match (c.level(p), c.level(q)) {
            (Some(f), Some(g)) => {
                contraction_value(f, g, m - r, &concat(s, &tail), &concat(rest, &tail))
            }
            _ => 0.0,
        }
    });
    Ok(gradient_prefactor(n, r, m, conv, false) * sum)
}

/// `e_{n,r,m}[c]` tabulated over indices `1..=j`.
pub fn e_coefficient(
    c: &ChaosCoefficients,
    n: usize,
    r: usize,
    m: usize,
    j: usize,
    conv: CoefficientConvention,
) -> DoubleSeriesCoefficient {
    DoubleSeriesCoefficient::from_fn(n, r, j, |eta, rho| {
        grad_coeff_e(c, n, r, m, eta, rho, conv).expect("sizes match")
    })
}

/// `ẽ_{n,r,m}[c] = (ẽ^j)_j` tabulated over indices `1..=j_max`.
pub fn e_tilde_coefficient(
    c: &ChaosCoefficients,
    n: usize,
    r: usize,
    m: usize,
    j_max: usize,
    conv: CoefficientConvention,
) -> IndexedDoubleSeries {
    IndexedDoubleSeries::from_fn(n, r, j_max, |j, eta, rho| {
        grad_coeff_e_tilde(c, j, n, r, m, eta, rho, conv).expect("sizes match")
    })
}

/// `|S(f, z)|²` together with `Σ_{m,n} Σ_γ Σ_η (z^γ)² z^η A_{n,m}[f](η, γ)`.
pub fn square_identity_check(f: &AffineChaos, z: &[f64]) -> Result<(f64, f64)> {
    let support = f.support_bound();
    if support > 8 || f.max_level() > 4 {
        return Err(Error::TooLarge(format!(
            "support {support}, level {}: identity check is limited to support 8, level 4",
            f.max_level()
        )));
    }
    let lhs = f.evaluate(z)?.powi(2);
    let big_n = f.max_level();
    let mut rhs = 0.0;
    for m in 0..=big_n {
        for n in 0..=2 * (big_n - m) {
            let mut level = 0.0;
            for_each_disjoint_pair(support, m, n, |gamma, eta| {
                let a = product_coeff_a(f, n, m, eta, gamma).expect("sizes match");
                if a != 0.0 {
                    level += monomial(z, gamma).powi(2) * monomial(z, eta) * a;
                }
            });
            rhs += factorial(m) * factorial(n) * level;
        }
    }
    Ok((lhs, rhs))
}

/// `|S(f, z)|²` together with `Σ_r Σ_{m ≥ r} Σ_n C(m, r) t_{n,r}(B_{n,r,m}[f])`,
/// the rewriting of the square in `(Z, Y = Z² - 1)`.
pub fn square_identity_check_y(f: &AffineChaos, real: &Realization) -> Result<(f64, f64)> {
    let support = f.support_bound();
    if support > 8 || f.max_level() > 4 {
        return Err(Error::TooLarge(format!(
            "support {support}, level {}: identity check is limited to support 8, level 4",
            f.max_level()
        )));
    }
    let lhs = f.evaluate(&real.z)?.powi(2);
    let big_n = f.max_level();
    let mut rhs = 0.0;
    for m in 0..=big_n {
        for r in 0..=m {
            for n in 0..=2 * (big_n - m) {
                let t = t_series_fn(n, r, real, support, |eta, rho| {
                    product_coeff_b(f, n, r, m, eta, rho).expect("sizes match")
                });
                rhs += binomial(m, r) * t;
            }
        }
    }
    Ok((lhs, rhs))
}

/// `I_N = Σ_j |∂_j S|²`, `Ĩ_N = Σ_j χ̃_j |∂_j S|²` and `σ = Σ_j χ_j |∂_j S|²`
/// at one realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientFunctionals {
    pub i: f64,
    pub i_tilde: f64,
    pub sigma: f64,
}

/// Direct evaluation through the partial derivatives.
pub fn gradient_functionals(
    c: &ChaosCoefficients,
    real: &Realization,
) -> Result<GradientFunctionals> {
    real.require(c.support_bound())?;
    let mut out = GradientFunctionals {
        i: 0.0,
        i_tilde: 0.0,
        sigma: 0.0,
    };
    for j in c.active_indices() {
        let d = c.derivative(j).evaluate(&real.z)?;
        let d2 = d * d;
        let k = j as usize - 1;
        out.i += d2;
        out.i_tilde += real.chi_tilde[k] * d2;
        out.sigma += real.chi[k] * d2;
    }
    Ok(out)
}

/// The same two functionals `(I_N, Ĩ_N)` rebuilt from the coefficient
/// expansions `Σ_{r,m,n} t_{n,r}(e_{n,r,m})` and `Σ_{r,m,n} T_{n,r}(ẽ_{n,r,m})`.
pub fn gradient_expansion(
    c: &ChaosCoefficients,
    real: &Realization,
    conv: CoefficientConvention,
) -> Result<(f64, f64)> {
    let support = c.support_bound();
    real.require(support)?;
    if support > 8 || c.max_level() > 4 {
        return Err(Error::TooLarge(format!(
            "support {support}, level {}: expansion is limited to support 8, level 4",
            c.max_level()
        )));
    }
    let big_n = c.max_level();
    let mut i = 0.0;
    let mut i_tilde = 0.0;
    for m in 0..big_n {
        for r in 0..=m {
            for n in 0..=2 * (big_n - 1 - m) {
                i += t_series_fn(n, r, real, support, |eta, rho| {
                    grad_coeff_e(c, n, r, m, eta, rho, conv).expect("sizes match")
                });
                for j in 1..=support as u32 {
                    let chi = real.chi_tilde[j as usize - 1];
                    if chi == 0.0 {
                        continue;
                    }
                    i_tilde += chi
                        * t_series_fn(n, r, real, support, |eta, rho| {
                            grad_coeff_e_tilde(c, j, n, r, m, eta, rho, conv).expect("sizes match")
                        });
                }
            }
        }
    }
    Ok((i, i_tilde))
}

/// Right side of the moment bound for `t_{m,n}`:
/// `((m+n)!)^{1/2} (√2 b_p M_p)^{m+n} |a|`.
pub fn burkholder_rhs(norm: f64, m: usize, n: usize, b_p: f64, m_p: f64) -> f64 {
    let k = m + n;
    factorial(k).sqrt() * (2f64.sqrt() * b_p * m_p).powi(k as i32) * norm
}

/// Right side of the moment bound for `T_{m,n}`:
/// `(8 b_p² (4^{m+n} - 1) (m+n)! / 3)^{1/2} (√2 b_p M_p)^{m+n} |ā|`.
/// The leading factor vanishes at `m = n = 0`.
pub fn burkholder_rhs_indexed(norm: f64, m: usize, n: usize, b_p: f64, m_p: f64) -> f64 {
    let k = m + n;
    let lead = (8.0 * b_p * b_p * (4f64.powi(k as i32) - 1.0) * factorial(k) / 3.0).sqrt();
    lead * (2f64.sqrt() * b_p * m_p).powi(k as i32) * norm
}

/// `M_p(Z, Y) = max(‖Z‖_p, ‖Z² - 1‖_p)` for even `p`, from raw moments.
pub fn zy_moment_norm(moments: &MomentTable, p: usize) -> Result<f64> {
    if p < 2 || p % 2 == 1 || 2 * p > moments.order() {
        return Err(Error::InvalidMoments(format!(
            "need an even p >= 2 with moments up to {}; have {} up to {}",
            2 * p,
            moments.name(),
            moments.order()
        )));
    }
    let z = moments.mu(p).powf(1.0 / p as f64);
    let y_p: f64 = (0..=p)
        .map(|k| {
            let sign = if (p - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(p, k) * moments.mu(2 * k)
        })
        .sum();
    Ok(z.max(y_p.powf(1.0 / p as f64)))
}

/// `(N!)³ 2^N N^{-5/4}`, the combinatorial factor shared by the small-ball
/// and gradient estimates.
pub fn level_growth_factor(big_n: usize) -> f64 {
    let n = big_n as f64;
    factorial(big_n).powi(3) * 2f64.powi(big_n as i32) * n.powf(-1.25)
}

/// `(C_p (1+i)/(m_r i) · (N!)³ 2^N N^{-5/4} (κ̄ + δ̄))^p` from raw inputs.
pub fn small_ball_rhs_from(
    i: f64,
    kappa_bar: f64,
    delta_bar: f64,
    big_n: usize,
    p: f64,
    m_r: f64,
    c_p: f64,
) -> f64 {
    let spread = kappa_bar + delta_bar;
    if spread == 0.0 {
        return 0.0;
    }
    (c_p * (1.0 + i) / (m_r * i) * level_growth_factor(big_n) * spread).powf(p)
}

/// Small-ball bound for `σ_{S_N}` with the unweighted influence profile.
pub fn small_ball_rhs(c: &ChaosCoefficients, p: f64, m_r: f64, c_p: f64) -> Result<f64> {
    let i = c.second_moment();
    if i == 0.0 {
        return Err(Error::ZeroKernel);
    }
    Ok(small_ball_rhs_from(
        i,
        kappa_bar(c),
        c.influence_profile(false),
        c.max_level(),
        p,
        m_r,
        c_p,
    ))
}

/// `C_p (1+i)^{1/2} (N!)³ 2^N N^{-5/4} (κ̄ + δ̄)` from raw inputs.
pub fn nl0_rhs_from(i: f64, kappa_bar: f64, delta_bar: f64, big_n: usize, c_p: f64) -> f64 {
    c_p * (1.0 + i).sqrt() * level_growth_factor(big_n) * (kappa_bar + delta_bar)
}

/// `L^p` bound on `Ĩ_N` with the unweighted influence profile.
pub fn nl0_rhs(c: &ChaosCoefficients, c_p: f64) -> f64 {
    nl0_rhs_from(
        c.second_moment(),
        kappa_bar(c),
        c.influence_profile(false),
        c.max_level(),
        c_p,
    )
}

/// `(((2N-2)!)^{1/2}, 2^N N^{-5/4} N!)`: the Stirling-type comparison used
/// to collapse the double factorial growth.
pub fn stirling_guard(big_n: usize) -> (f64, f64) {
    let lhs = factorial(2 * big_n - 2).sqrt();
    let rhs = 2f64.powi(big_n as i32) * (big_n as f64).powf(-1.25) * factorial(big_n);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::for_each_permutation;
    use crate::fixtures;
    use crate::kernel::SymmetricKernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn affine(c: &ChaosCoefficients) -> AffineChaos {
        AffineChaos::from(c.clone())
    }

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

    /// Literal `Π_n` sum for `A`.
    fn a_literal(f: &AffineChaos, n: usize, m: usize, eta: &[u32], gamma: &[u32]) -> f64 {
        if !all_distinct(&concat(eta, gamma)) {
            return 0.0;
        }
        let mut total = 0.0;
        for a in 0..=n {
            let w = binomial(a + m, m) * binomial(n - a + m, m);
            let mut inner = 0.0;
            for_each_permutation(eta, |p| {
                inner += f.value(&concat(&p[..a], gamma)) * f.value(&concat(&p[a..], gamma));
            });
            total += w * inner;
        }
        factorial(m) / factorial(n) * total
    }

    #[test]
    fn a_examples() {
        let b = 0.7;
        let f = affine(&level1(&[b]));
        assert!((product_coeff_a(&f, 0, 1, &[], &[1]).unwrap() - b * b).abs() < 1e-15);
        let c = fixtures::complete(2, 4, 0.3);
        let f = affine(&c);
        assert_eq!(product_coeff_a(&f, 2, 1, &[1, 2], &[2]).unwrap(), 0.0);
        assert_eq!(product_coeff_a(&f, 2, 0, &[1, 1], &[]).unwrap(), 0.0);
        assert!(product_coeff_a(&f, 2, 0, &[1], &[]).is_err());
    }

    #[test]
    fn a_matches_literal_permutation_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = fixtures::random_mixed(&mut rng, 3, 6);
            let f = AffineChaos {
                constant: rng.random_range(-1.0..1.0),
                coefficients: c,
            };
            for m in 0..=2 {
                for n in 0..=3 {
                    for_each_disjoint_pair(6, m, n, |gamma, eta| {
                        let got = product_coeff_a(&f, n, m, eta, gamma).unwrap();
                        let want = a_literal(&f, n, m, eta, gamma);
                        assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
                        let mut rev = eta.to_vec();
                        rev.reverse();
                        assert_eq!(product_coeff_a(&f, n, m, &rev, gamma).unwrap(), got);
                    });
                }
            }
        }
    }

    #[test]
    fn b_examples() {
        let c = fixtures::complete(2, 4, 0.3);
        let f = affine(&c);
        let b = product_coeff_b(&f, 0, 0, 2, &[], &[]).unwrap();
        assert!((b - 2.0 * c.level_norm(2).powi(2)).abs() < 1e-14);
        assert_eq!(product_coeff_b(&f, 1, 1, 2, &[1], &[1]).unwrap(), 0.0);
        // B sums A over the trailing block
        for (eta, rho) in [(vec![1u32], vec![2u32]), (vec![3, 4], vec![])] {
            let (n, r, m) = (eta.len(), rho.len(), 2);
            let mut direct = 0.0;
            for_each_disjoint_pair(4, 0, m - r, |_, beta| {
                direct += factorial(m - r)
                    * product_coeff_a(&f, n, m, &eta, &concat(&rho, beta)).unwrap();
            });
            let b = product_coeff_b(&f, n, r, m, &eta, &rho).unwrap();
            assert!((b - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn square_identity_examples() {
        let f = affine(&level1(&[1.0]));
        let (l, r) = square_identity_check(&f, &[2.0]).unwrap();
        assert_eq!((l, r), (4.0, 4.0));
        let zero = affine(&ChaosCoefficients::zero(2));
        assert_eq!(square_identity_check(&zero, &[]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn square_identity_in_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let c = fixtures::random_mixed(&mut rng, 3, 5);
            let f = AffineChaos {
                constant: rng.random_range(-1.0..1.0),
                coefficients: c,
            };
            let z: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (l, r) = square_identity_check_y(&f, &Realization::from_z(z)).unwrap();
            assert!((l - r).abs() <= 1e-10 * (1.0 + l.abs()), "{l} vs {r}");
        }
    }

    #[test]
    fn e_examples() {
        let c = fixtures::complete(2, 4, 0.3);
        let norm2 = c.level_norm(2).powi(2);
        let shown =
            grad_coeff_e(&c, 0, 0, 1, &[], &[], CoefficientConvention::AsDisplayed).unwrap();
        assert!((shown - 2.0 * norm2).abs() < 1e-14);
        let used = grad_coeff_e(&c, 0, 0, 1, &[], &[], CoefficientConvention::Consistent).unwrap();
        assert!((used - 2.0 * 2.0 * norm2).abs() < 1e-14);
        for conv in [
            CoefficientConvention::Consistent,
            CoefficientConvention::AsDisplayed,
        ] {
            assert_eq!(
                grad_coeff_e_tilde(&c, 9, 0, 0, 1, &[], &[], conv).unwrap(),
                0.0
            );
            let zero = ChaosCoefficients::zero(3);
            assert_eq!(grad_coeff_e(&zero, 1, 0, 1, &[1], &[], conv).unwrap(), 0.0);
            assert_eq!(
                grad_coeff_e_tilde(&c, 1, 1, 0, 0, &[1], &[], conv).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn gradient_examples() {
        let f = level1(&[0.6, 0.8]);
        let g = gradient_functionals(&f, &Realization::from_z(vec![3.0, -1.0])).unwrap();
        assert!((g.i - 1.0).abs() < 1e-15);
        let a = 0.4;
        let pair = ChaosCoefficients::single(SymmetricKernel::new(2, [(vec![1, 2], a)]).unwrap());
        let g = gradient_functionals(&pair, &Realization::from_z(vec![1.0, 1.0])).unwrap();
        assert!((g.i - 8.0 * a * a).abs() < 1e-15);
        assert!(matches!(
            gradient_functionals(&pair, &Realization::from_z(vec![1.0])),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn gradient_expansion_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let c = fixtures::random_mixed(&mut rng, 3, 5);
            let z: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let chi: Vec<f64> = (0..5)
                .map(|_| f64::from(rng.random_bool(0.4) as u8))
                .collect();
            let real = Realization::with_chi(z, chi, 0.4).unwrap();
            let g = gradient_functionals(&c, &real).unwrap();
            let (i, it) = gradient_expansion(&c, &real, CoefficientConvention::Consistent).unwrap();
            assert!(
                (g.i - i).abs() <= 1e-10 * (1.0 + g.i.abs()),
                "{} vs {i}",
                g.i
            );
            assert!((g.i_tilde - it).abs() <= 1e-10 * (1.0 + g.i_tilde.abs()));
        }
    }

    #[test]
    fn t_series_examples() {
        let a = DoubleSeriesCoefficient::new(1, 1, [(vec![2], vec![1], 0.5)]).unwrap();
        let real = Realization::from_z(vec![2.0, 3.0]);
        assert!((t_series(&a, &real, 2) - 3.0 * 3.0 * 0.5).abs() < 1e-15);
        assert_eq!(t_series(&a, &real, 1), 0.0);
        assert!(DoubleSeriesCoefficient::new(1, 1, [(vec![1], vec![1], 0.5)]).is_err());
        let bar = IndexedDoubleSeries::from_fn(1, 0, 3, |_, _, _| 1.0);
        assert_eq!(big_t_series(&bar, &real, 2), 0.0);
        assert!((a.norm(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn burkholder_examples() {
        assert_eq!(burkholder_rhs(0.0, 2, 1, 3.0, 2.0), 0.0);
        assert_eq!(burkholder_rhs(0.7, 0, 0, 3.0, 2.0), 0.7);
        assert_eq!(burkholder_rhs_indexed(0.7, 0, 0, 3.0, 2.0), 0.0);
        let want = (8.0 * 9.0 * 3.0 * 1.0 / 3.0f64).sqrt() * (2f64.sqrt() * 6.0) * 0.7;
        assert!((burkholder_rhs_indexed(0.7, 1, 0, 3.0, 2.0) - want).abs() < 1e-12);
        let g = zy_moment_norm(&MomentTable::gaussian(), 4).unwrap();
        assert!((g - 60f64.powf(0.25)).abs() < 1e-12);
        assert!(zy_moment_norm(&MomentTable::gaussian(), 3).is_err());
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(small_ball_rhs_from(1.0, 0.0, 0.0, 2, 1.0, 1.0, 1.0), 0.0);
        assert_eq!(nl0_rhs(&ChaosCoefficients::zero(2), 3.0), 0.0);
        let c = fixtures::complete23();
        let base =
            (2.0 / 1.0) * 8.0 * 4.0 * 2f64.powf(-1.25) * (6f64.powf(0.25) + 1.0 / 6f64.sqrt());
        assert!((small_ball_rhs(&c, 1.0, 1.0, 1.0).unwrap() - base).abs() < 1e-9);
        assert!((nl0_rhs(&c, 2.0) - 2.0 * nl0_rhs(&c, 1.0)).abs() < 1e-12);
        for n in 1..=30 {
            let (l, r) = stirling_guard(n);
            assert!(l <= r, "N = {n}");
        }
    }
}
