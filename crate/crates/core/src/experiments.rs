//! Bound evaluators and convergence experiments: smooth-function invariance
//! bounds, fourth-moment bounds, total-variation bound factors, kernel
//! families and CLT tables.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::factorial;
use crate::contraction::{kappa4, kappa_bar};
use crate::distributions::SourceDistribution;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::kernel::ChaosCoefficients;
use crate::oracle::level2_eigen_kappa4;
use crate::sampling::sample_series;
use crate::stats::{empirical_kappa4, kolmogorov_distance, normal_cdf_var};

/// Tolerance on `i_N(c) = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// User-configurable constants. Missing Burkholder entries default to
/// `b_p = p - 1`, every other constant to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConstants {
    #[serde(default)]
    pub b_p: BTreeMap<u32, f64>,
    #[serde(rename = "C_p", default = "one")]
    pub c_p: f64,
    #[serde(rename = "C_star", default = "one")]
    pub big_c_star: f64,
    #[serde(rename = "d_star", default = "one")]
    pub d_star: f64,
    #[serde(rename = "c_star", default = "one")]
    pub c_star: f64,
    #[serde(rename = "M_star", default = "one")]
    pub m_star: f64,
    #[serde(rename = "p_star", default = "one")]
    pub p_star: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            b_p: BTreeMap::new(),
            c_p: 1.0,
            big_c_star: 1.0,
            d_star: 1.0,
            c_star: 1.0,
            m_star: 1.0,
            p_star: 1.0,
        }
    }
}

impl BoundConstants {
    /// Burkholder constant of order `p`.
    pub fn b(&self, p: u32) -> f64 {
        self.b_p.get(&p).copied().unwrap_or(p as f64 - 1.0)
    }

    /// Every constant must be finite and positive; returns the JSON pointer of
    /// the first offender.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("/C_p", self.c_p),
            ("/C_star", self.big_c_star),
            ("/d_star", self.d_star),
            ("/c_star", self.c_star),
            ("/M_star", self.m_star),
            ("/p_star", self.p_star),
        ];
        for (pointer, v) in named {
            check_positive(pointer, v)?;
        }
        for (&p, &v) in &self.b_p {
            if p < 2 {
                return Err(Error::Schema {
                    pointer: format!("/b_p/{p}"),
                    message: "Burkholder constants are indexed by p >= 2".into(),
                });
            }
            check_positive(&format!("/b_p/{p}"), v)?;
        }
        Ok(())
    }
}

fn check_positive(pointer: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Schema {
            pointer: pointer.to_string(),
            message: format!("must be a finite positive number, got {v}"),
        })
    }
}

/// `max over both laws of (√2 b_p E|Z|^p)²`.
pub fn moment_scale(
    dist_a: &SourceDistribution,
    dist_b: &SourceDistribution,
    p: u32,
    constants: &BoundConstants,
) -> Result<f64> {
    let one_law = |d: &SourceDistribution| -> Result<f64> {
        let m = d.abs_moment(p as usize).ok_or_else(|| {
            Error::InvalidMoments(format!(
                "`{}` has no absolute moment of order {p}",
                d.name()
            ))
        })?;
        Ok((2f64.sqrt() * constants.b(p) * m).powi(2))
    };
    Ok(one_law(dist_a)?.max(one_law(dist_b)?))
}

/// Third-order smooth invariance bound
/// `(1/3) ‖f‴‖ M₃³ N₀(c, M₃)² ε₀(c, M₃)`.
pub fn smooth_bound_rhs(
    c: &ChaosCoefficients,
    dist_a: &SourceDistribution,
    dist_b: &SourceDistribution,
    f3_norm: f64,
    constants: &BoundConstants,
) -> Result<f64> {
    let m3 = moment_scale(dist_a, dist_b, 3, constants)?;
    let n0 = c.weighted_norm(0, m3);
    Ok(f3_norm / 3.0 * m3.powi(3) * n0 * n0 * c.eps0(m3).value)
}

/// Fourth-order bound `(1/12) ‖f⁗‖ M₄⁴ N₀(c, M₄)² ε₀(c, M₄)²`, valid when
/// both laws have vanishing third moment.
pub fn smooth_bound4_rhs(
    c: &ChaosCoefficients,
    dist_a: &SourceDistribution,
    dist_b: &SourceDistribution,
    f4_norm: f64,
    constants: &BoundConstants,
) -> Result<f64> {
    for d in [dist_a, dist_b] {
        if d.moments().mu(3).abs() > 1e-12 {
            return Err(Error::ThirdMomentNonzero(d.name().to_string()));
        }
    }
    let m4 = moment_scale(dist_a, dist_b, 4, constants)?;
    let n0 = c.weighted_norm(0, m4);
    let e0 = c.eps0(m4).value;
    Ok(f4_norm / 12.0 * m4.powi(4) * n0 * n0 * e0 * e0)
}

/// Gaussian-to-normal bounds for normalized `c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourthMomentBound {
    /// `3 ‖f‖ N³ (2N)! (N!)³ Σ_l κ_{4,l}^{1/4}`.
    pub g1: f64,
    /// The `κ^{1/2}` variant, present only when level 1 is empty.
    pub g2: Option<f64>,
}

impl FourthMomentBound {
    /// The smaller applicable bound.
    pub fn value(&self) -> f64 {
        self.g2.map_or(self.g1, |g2| g2.min(self.g1))
    }
}

fn check_normalized(c: &ChaosCoefficients) -> Result<f64> {
    let i = c.second_moment();
    if (i - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(i));
    }
    Ok(i)
}

fn nourdin_peccati_factor(n: usize) -> f64 {
    let nf = n as f64;
    nf.powi(3) * factorial(2 * n) * factorial(n).powi(3)
}

pub fn fourth_moment_bound_rhs(c: &ChaosCoefficients, f_norm: f64) -> Result<FourthMomentBound> {
    check_normalized(c)?;
    let n = c.max_level();
    let lead = 3.0 * f_norm * nourdin_peccati_factor(n);
    let kappas: Vec<f64> = (0..=n).map(|l| kappa4(c, l)).collect();
    let g1 = lead * kappas.iter().map(|k| k.powf(0.25)).sum::<f64>();
    let level1_empty = c.level(1).is_none_or(|k| k.is_empty());
    let g2 = level1_empty.then(|| lead * kappas.iter().map(|k| k.sqrt()).sum::<f64>());
    Ok(FourthMomentBound { g1, g2 })
}

/// Raw inputs of the total-variation bound assembly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvInputs {
    pub max_level: usize,
    pub kappa_bar: f64,
    /// `δ̄_N = Σ_l l! δ_l`.
    pub delta_bar: f64,
    /// `1/α_N`, 0 when every level vanishes.
    pub alpha_inv: f64,
    pub m_r: f64,
    pub r: f64,
}

/// Every computable factor of the total-variation bounds plus their
/// assembled products (with `‖f‖_∞ = 1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvBoundReport {
    pub inputs: TvInputs,
    /// `(m_r r)^{-d_*}`.
    pub geometry: f64,
    /// `M_*^N`.
    pub growth: f64,
    /// `N^{c_*}`.
    pub polynomial: f64,
    /// `(N!)^{3 p_*}`.
    pub factorial: f64,
    /// `κ̄^{p_*}`.
    pub kappa_term: f64,
    /// `(1 + α_N^{-1}) κ̄`.
    pub alpha_kappa: f64,
    /// `C_* geometry growth polynomial factorial (κ̄^{p_*} + δ̄)`.
    pub invariance_bound: f64,
    /// Same factors with `(κ̄ + δ̄)^{p_*}`, the form the proof's final step
    /// produces; equal to `invariance_bound` only when `p_* = 1`.
    pub invariance_bound_proof_form: f64,
    /// `C_* geometry N³ (2N)! (N!)³ (κ̄ + δ̄)`.
    pub normal_bound: f64,
    /// As `normal_bound` with `δ̄` replaced through `α_N`.
    pub normal_bound_alpha: f64,
    /// `i_N(c) = 1` within tolerance, when computed from coefficients.
    pub normalized: Option<bool>,
    /// `Σ_l l! l δ_l²` against `i_N/4`.
    pub a9_lhs: Option<f64>,
    pub a9_rhs: Option<f64>,
    pub a9_holds: Option<bool>,
}

/// Assembles the factors from raw inputs.
pub fn tv_bound_from(inputs: TvInputs, constants: &BoundConstants) -> TvBoundReport {
    let n = inputs.max_level;
    let geometry = (inputs.m_r * inputs.r).powf(-constants.d_star);
    let growth = constants.m_star.powi(n as i32);
    let polynomial = (n as f64).powf(constants.c_star);
    let fact = factorial(n).powf(3.0 * constants.p_star);
    let kappa_term = inputs.kappa_bar.powf(constants.p_star);
    let alpha_kappa = (1.0 + inputs.alpha_inv) * inputs.kappa_bar;
    let np = nourdin_peccati_factor(n);
    TvBoundReport {
        inputs,
        geometry,
        growth,
        polynomial,
        factorial: fact,
        kappa_term,
        alpha_kappa,
        invariance_bound: constants.big_c_star
            * geometry
            * growth
            * polynomial
            * fact
            * (kappa_term + inputs.delta_bar),
        invariance_bound_proof_form: constants.big_c_star
            * geometry
            * growth
            * polynomial
            * fact
            * (inputs.kappa_bar + inputs.delta_bar).powf(constants.p_star),
        normal_bound: constants.big_c_star * geometry * np * (inputs.kappa_bar + inputs.delta_bar),
        normal_bound_alpha: constants.big_c_star * geometry * np * alpha_kappa,
        normalized: None,
        a9_lhs: None,
        a9_rhs: None,
        a9_holds: None,
    }
}

/// `Σ_l l! l δ_l(c)²`.
pub fn a9_lhs(c: &ChaosCoefficients) -> f64 {
    (1..=c.max_level())
        .map(|l| factorial(l) * l as f64 * c.influence(l).powi(2))
        .sum()
}

/// Factors for coefficients `c`; hypothesis failures are flagged, not fatal.
pub fn tv_bound_factors(
    c: &ChaosCoefficients,
    constants: &BoundConstants,
    m_r: f64,
    r: f64,
) -> TvBoundReport {
    let alpha = c.min_active_level_norm();
    let inputs = TvInputs {
        max_level: c.max_level(),
        kappa_bar: kappa_bar(c),
        delta_bar: c.influence_profile(true),
        alpha_inv: if alpha.is_finite() { 1.0 / alpha } else { 0.0 },
        m_r,
        r,
    };
    let mut report = tv_bound_from(inputs, constants);
    let i = c.second_moment();
    let lhs = a9_lhs(c);
    report.normalized = Some((i - 1.0).abs() <= NORMALIZATION_TOLERANCE);
    report.a9_lhs = Some(lhs);
    report.a9_rhs = Some(i / 4.0);
    report.a9_holds = Some(lhs <= i / 4.0);
    report
}

/// Shape of a generated kernel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// Constant on all increasing tuples; chi-squared-type limit.
    Complete,
    /// Constant on consecutive runs; Gaussian limit.
    Path,
    /// Seeded sparse values.
    Random,
}

impl FamilyKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "complete" => Ok(FamilyKind::Complete),
            "path" => Ok(FamilyKind::Path),
            "random" => Ok(FamilyKind::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown family `{other}` (complete, path, random)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KernelFamily {
    pub kind: FamilyKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

/// Normalized member of a family; needs `m >= 1` and `n >= m + 1`.
pub fn generate_family(family: KernelFamily) -> Result<ChaosCoefficients> {
    let KernelFamily { kind, m, n, seed } = family;
    if m == 0 || n < m + 1 {
        return Err(Error::InvalidArgument(format!(
            "family needs level >= 1 and size >= level + 1, got m={m}, n={n}"
        )));
    }
    let raw = match kind {
        FamilyKind::Complete => fixtures::complete(m, n, 1.0),
        FamilyKind::Path => fixtures::path(m, n, 1.0),
        FamilyKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            fixtures::random_level(&mut rng, m, n, (4.0 / n as f64).min(1.0))
        }
    };
    raw.normalize()
}

/// `Σ_{k >= n_cut} k k! |c|_k²`: the truncation functional of the uniformity
/// condition.
pub fn tail_uniformity(c: &ChaosCoefficients, n_cut: usize) -> f64 {
    c.levels()
        .filter(|k| k.level() >= n_cut)
        .map(|k| {
            let l = k.level();
            l as f64 * factorial(l) * k.norm_sq()
        })
        .sum()
}

/// One `(family, n)` cell of a CLT table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltRow {
    pub n: usize,
    pub kappa4: f64,
    /// Eigenvalue cross-check for level-2 families.
    pub kappa4_eigen: Option<f64>,
    pub delta: f64,
    /// `σ_k² = k! |c|_k²` for `k = 1..=m`.
    pub level_variances: Vec<f64>,
    /// `Σ_{k=0}^{3} N_k(c, M²)` with `M = ‖Z‖_4`.
    pub norm_budget: f64,
    pub kolmogorov: f64,
    pub kappa_hat: f64,
    pub kappa_hat_se: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Settings shared by every cell of a CLT table.
#[derive(Clone, Debug)]
pub struct CltSettings {
    pub kind: FamilyKind,
    pub m: usize,
    pub dist: SourceDistribution,
    pub seed: u64,
    pub samples: usize,
    pub shards: usize,
}

/// Diagnostics and simulation per size `n`; every cell uses the same seed.
pub fn clt_experiment(settings: &CltSettings, n_values: &[usize]) -> Result<Vec<CltRow>> {
    n_values
        .par_iter()
        .map(|&n| clt_cell(settings, n))
        .collect()
}

fn clt_cell(s: &CltSettings, n: usize) -> Result<CltRow> {
    let c = generate_family(KernelFamily {
        kind: s.kind,
        m: s.m,
        n,
        seed: s.seed,
    })?;
    let kernel = c.level(s.m).expect("generated level");
    let kappa4_eigen = if s.m == 2 && n <= 500 {
        Some(level2_eigen_kappa4(kernel)?)
    } else {
        None
    };
    let m2 = s.dist.moments().mu(4).sqrt();
    let batch = sample_series(&c, &s.dist, s.seed, s.samples, s.shards)?;
    let k_hat = empirical_kappa4(&batch.values)?;
    Ok(CltRow {
        n,
        kappa4: kappa4(&c, s.m),
        kappa4_eigen,
        delta: c.influence(s.m),
        level_variances: (1..=s.m)
            .map(|k| c.level(k).map_or(0.0, |l| factorial(k) * l.norm_sq()))
            .collect(),
        norm_budget: (0..=3).map(|q| c.weighted_norm(q, m2)).sum(),
        kolmogorov: kolmogorov_distance(&batch.values, normal_cdf_var(c.second_moment()))?,
        kappa_hat: k_hat.value,
        kappa_hat_se: k_hat.std_error,
        samples: s.samples,
        seed: s.seed,
    })
}
