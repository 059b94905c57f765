//! Doeblin splitting `Z = χV + (1 - χ)U`: the bump profile `ψ_r`, its mass
//! `m_r`, admissibility of a lower-bound triple and the split sampler.

use rand::Rng;
use serde::Serialize;

use crate::distributions::{Doeblin, SourceDistribution};
use crate::error::{Error, Result};
use crate::sampling::sharded;
use crate::stats::{kolmogorov_two_sample, ks_two_sample_critical_99};

/// `θ_r` and `ψ_r` for one radius, with the mass `m_r = ∫ ψ_r(|ξ|²) dξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpProfile {
    r: f64,
    mass: f64,
}

/// Relative tolerance for `m_r`.
pub const MASS_TOLERANCE: f64 = 1e-10;

impl BumpProfile {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bump radius must be positive, got {r}"
            )));
        }
        // plateau |ξ| <= √r contributes 2√r exactly
        let (a, b) = (r.sqrt(), (2.0 * r).sqrt());
        let profile = BumpProfile { r, mass: 0.0 };
        let tail = adaptive_simpson(&|x| profile.psi(x * x), a, b, MASS_TOLERANCE * a, 50);
        Ok(BumpProfile {
            r,
            mass: 2.0 * (a + tail),
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `m_r`; lies in `[2√r, 2√(2r)]`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `θ_r(t) = 1 - 1/(1 - (t/r - 1)²)`, finite on `r <= t < 2r`.
    pub fn theta(&self, t: f64) -> f64 {
        let s = t / self.r - 1.0;
        1.0 - 1.0 / (1.0 - s * s)
    }

    /// `1` on `|t| <= r`, `exp θ_r(|t|)` on `r < |t| < 2r`, `0` beyond.
    pub fn psi(&self, t: f64) -> f64 {
        let t = t.abs();
        if t <= self.r {
            1.0
        } else if t >= 2.0 * self.r {
            0.0
        } else {
            self.theta(t).exp()
        }
    }

    /// `sup_t ψ_r(t) |θ_r^{(l)}(t)|^p r^{lp}` over a grid of the transition
    /// region `(r, 2r)`, derivatives by central differences.
    pub fn scaled_derivative_sup(&self, l: u32, p: i32, grid: usize) -> f64 {
        let r = self.r;
        let h = match l {
            1 => 1e-6 * r,
            _ => 1e-5 * r,
        };
        let mut best: f64 = 0.0;
        for i in 0..grid {
            let t = r * (1.0 + (i as f64 + 0.5) / grid as f64);
            let psi = self.psi(t);
            if psi == 0.0 || t + h >= 2.0 * r {
                continue;
            }
            let d = match l {
                1 => (self.theta(t + h) - self.theta(t - h)) / (2.0 * h),
                2 => (self.theta(t + h) - 2.0 * self.theta(t) + self.theta(t - h)) / (h * h),
                _ => panic!("derivative order {l} is not supported"),
            };
            best = best.max(psi * d.abs().powi(p) * r.powi(l as i32 * p));
        }
        best
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    simpson_step(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

/// Radii used by [`n5_check`].
pub const N5_RADII: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
/// Grid size used by [`n5_check`].
pub const N5_GRID: usize = 10_000;
/// Maximum relative spread across radii accepted as r-independent.
pub const N5_SPREAD: f64 = 1e-3;

/// One `(l, p)` row of the scaling check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct N5Row {
    pub l: u32,
    pub p: i32,
    /// `(r, sup)` per radius.
    pub sups: Vec<(f64, f64)>,
    /// `(max - min) / max` over radii.
    pub spread: f64,
}

impl N5Row {
    pub fn passed(&self) -> bool {
        self.sups.iter().all(|(_, s)| s.is_finite()) && self.spread <= N5_SPREAD
    }
}

/// The scaled derivative sups for `l, p ∈ {1, 2}` across [`N5_RADII`].
pub fn n5_check() -> Result<Vec<N5Row>> {
    let mut rows = Vec::new();
    for l in 1..=2 {
        for p in 1..=2 {
            let sups = N5_RADII
                .iter()
                .map(|&r| Ok((r, BumpProfile::new(r)?.scaled_derivative_sup(l, p, N5_GRID))))
                .collect::<Result<Vec<_>>>()?;
            let max = sups.iter().map(|s| s.1).fold(f64::MIN, f64::max);
            let min = sups.iter().map(|s| s.1).fold(f64::MAX, f64::min);
            rows.push(N5Row {
                l,
                p,
                sups,
                spread: (max - min) / max,
            });
        }
    }
    Ok(rows)
}

/// Grid size for the residual nonnegativity check.
pub const RESIDUAL_GRID: usize = 10_001;

/// A validated splitting of one law.
#[derive(Clone, Debug)]
pub struct SplitPlan {
    pub triple: Doeblin,
    pub bump: BumpProfile,
    /// `P(χ = 1) = ε m_r`.
    pub chi_prob: f64,
    /// Smallest residual density seen on the grid.
    pub min_residual: f64,
}

/// Checks that `p(ξ) - ε ψ_r(|ξ - z|²)` is nonnegative and `ε m_r <= 1`.
pub fn plan_split(dist: &SourceDistribution, triple: Doeblin) -> Result<SplitPlan> {
    if !dist.has_density() {
        return Err(Error::InvalidDoeblin(format!(
            "`{}` has no density",
            dist.name()
        )));
    }
    let Doeblin { z, r, eps } = triple;
    if !(eps > 0.0 && eps.is_finite() && z.is_finite()) {
        return Err(Error::InvalidDoeblin(format!(
            "need finite z and ε > 0, got z={z}, ε={eps}"
        )));
    }
    let bump = BumpProfile::new(r).map_err(|e| Error::InvalidDoeblin(e.to_string()))?;
    let chi_prob = eps * bump.mass();
    if chi_prob > 1.0 {
        return Err(Error::InvalidDoeblin(format!(
            "ε m_r = {chi_prob} exceeds 1"
        )));
    }
    let w = (2.0 * r).sqrt();
    let mut min_residual = f64::INFINITY;
    for i in 0..RESIDUAL_GRID {
        let xi = z - w + 2.0 * w * i as f64 / (RESIDUAL_GRID - 1) as f64;
        let d = xi - z;
        let res = dist.density(xi).unwrap_or(0.0) - eps * bump.psi(d * d);
        if res < -1e-12 {
            return Err(Error::InvalidDoeblin(format!(
                "residual density {res:.3e} is negative at ξ = {xi:.6}"
            )));
        }
        min_residual = min_residual.min(res);
    }
    Ok(SplitPlan {
        triple,
        bump,
        chi_prob,
        min_residual,
    })
}

/// Split-constructed draws together with their `χ` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitBatch {
    pub values: Vec<f64>,
    pub chi: Vec<bool>,
    pub seed: u64,
    pub shards: usize,
}

impl SplitBatch {
    pub fn chi_rate(&self) -> f64 {
        self.chi.iter().filter(|&&c| c).count() as f64 / self.chi.len() as f64
    }
}

/// Draws `χ ~ Bernoulli(ε m_r)`, then `V` from `ψ_r(|ξ - z|²)/m_r` by box
/// rejection or `U` from the residual by rejection against the density.
pub fn split_sampler(
    dist: &SourceDistribution,
    triple: Doeblin,
    seed: u64,
    n: usize,
    shards: usize,
) -> Result<SplitBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    let plan = plan_split(dist, triple)?;
    let Doeblin { z, r, eps } = triple;
    let w = (2.0 * r).sqrt();
    let bump = plan.bump;
    let pairs = sharded(seed, n, shards, |rng, count| {
        (0..count)
            .map(|_| {
                if rng.random::<f64>() < plan.chi_prob {
                    loop {
                        let d = rng.random_range(-w..w);
                        if rng.random::<f64>() < bump.psi(d * d) {
                            return (z + d, true);
                        }
                    }
                }
                loop {
                    let xi = dist.sample(rng);
                    let d = xi - z;
                    let p = dist.density(xi).unwrap_or(0.0);
                    let keep = if p > 0.0 {
                        1.0 - eps * bump.psi(d * d) / p
                    } else {
                        1.0
                    };
                    if rng.random::<f64>() < keep {
                        return (xi, false);
                    }
                }
            })
            .collect()
    });
    let (values, chi) = pairs.into_iter().unzip();
    Ok(SplitBatch {
        values,
        chi,
        seed,
        shards: shards.max(1),
    })
}

/// Outcome of comparing direct draws against split-constructed draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitCheck {
    pub statistic: f64,
    pub critical_99: f64,
    pub chi_rate: f64,
    pub chi_prob: f64,
    pub mass: f64,
    pub n: usize,
}

impl SplitCheck {
    pub fn passed(&self) -> bool {
        self.statistic <= self.critical_99
    }
}

/// Two-sample Kolmogorov statistic between `n` direct draws (`seed_a`) and
/// `n` split draws (`seed_b`) using the law's own triple.
pub fn verify_split(
    dist: &SourceDistribution,
    n: usize,
    seed_a: u64,
    seed_b: u64,
    shards: usize,
) -> Result<SplitCheck> {
    let triple = dist
        .doeblin()
        .ok_or_else(|| Error::InvalidDoeblin(format!("`{}` has no Doeblin triple", dist.name())))?;
    verify_split_with(dist, triple, n, seed_a, seed_b, shards)
}

/// As [`verify_split`] with an explicit triple.
pub fn verify_split_with(
    dist: &SourceDistribution,
    triple: Doeblin,
    n: usize,
    seed_a: u64,
    seed_b: u64,
    shards: usize,
) -> Result<SplitCheck> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    let split = split_sampler(dist, triple, seed_b, n, shards)?;
    let direct = direct_draws(dist, seed_a, n, shards);
    let bump = BumpProfile::new(triple.r)?;
    Ok(SplitCheck {
        statistic: kolmogorov_two_sample(&direct, &split.values)?,
        critical_99: ks_two_sample_critical_99(n, n),
        chi_rate: split.chi_rate(),
        chi_prob: triple.eps * bump.mass(),
        mass: bump.mass(),
        n,
    })
}

/// `n` i.i.d. draws of the law itself.
pub fn direct_draws(dist: &SourceDistribution, seed: u64, n: usize, shards: usize) -> Vec<f64> {
    sharded(seed, n, shards, |rng, count| {
        (0..count).map(|_| dist.sample(rng)).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_seam_and_support() {
        let b = BumpProfile::new(0.5).unwrap();
        assert_eq!(b.theta(0.5), 0.0);
        assert_eq!(b.psi(0.5), 1.0);
        assert!((b.psi(0.5 + 1e-9) - 1.0).abs() < 1e-12);
        assert_eq!(b.psi(1.0), 0.0);
        assert_eq!(b.psi(-3.0), 0.0);
        assert!(b.psi(0.999_999) < 1e-100);
        assert!(BumpProfile::new(0.0).is_err());
    }

    #[test]
    fn mass_bracket_and_accuracy() {
        for r in [0.1, 0.5, 1.0, 2.0] {
            let m = BumpProfile::new(r).unwrap().mass();
            assert!(m > 2.0 * r.sqrt() && m < 2.0 * (2.0 * r).sqrt(), "{r} {m}");
            // m_r scales as √r
            let m1 = BumpProfile::new(1.0).unwrap().mass();
            assert!((m / r.sqrt() - m1).abs() < 1e-8 * m1);
        }
        // brute-force midpoint rule
        let b = BumpProfile::new(0.5).unwrap();
        let k = 2_000_000;
        let h = 2.0 / k as f64;
        let brute: f64 = (0..k)
            .map(|i| b.psi((-1.0 + (i as f64 + 0.5) * h).powi(2)) * h)
            .sum();
        assert!((brute - b.mass()).abs() < 1e-8, "{brute} {}", b.mass());
    }

    #[test]
    fn n5_sups_do_not_depend_on_r() {
        for row in n5_check().unwrap() {
            assert!(row.passed(), "{row:?}");
            assert!(row.sups[0].1 > 0.0);
        }
    }

    #[test]
    fn admissibility() {
        let g = SourceDistribution::gaussian();
        let plan = plan_split(&g, g.doeblin().unwrap()).unwrap();
        assert!(
            plan.chi_prob > 0.339 && plan.chi_prob < 0.48,
            "{}",
            plan.chi_prob
        );
        assert!(plan.min_residual > 0.0);
        // ψ_r vanishes at |ξ| = 1, so the binding point sits inside the plateau
        let too_big = Doeblin {
            z: 0.0,
            r: 0.5,
            eps: 0.35,
        };
        assert!(matches!(
            plan_split(&g, too_big),
            Err(Error::InvalidDoeblin(_))
        ));
        let r = SourceDistribution::rademacher();
        assert!(matches!(
            split_sampler(&r, g.doeblin().unwrap(), 1, 10, 1),
            Err(Error::InvalidDoeblin(_))
        ));
        assert!(matches!(
            verify_split(&r, 10, 1, 2, 1),
            Err(Error::InvalidDoeblin(_))
        ));
        for d in crate::distributions::registry() {
            if let Some(t) = d.doeblin() {
                assert!(plan_split(&d, t).is_ok(), "{}", d.name());
            }
        }
    }

    #[test]
    fn split_matches_direct() {
        let g = SourceDistribution::gaussian();
        let c = verify_split(&g, 20_000, 11, 12, 4).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!((c.chi_rate - c.chi_prob).abs() < 0.02);
        assert!(verify_split(&g, 0, 1, 2, 1).is_err());
        let a = split_sampler(&g, g.doeblin().unwrap(), 5, 100, 3).unwrap();
        let b = split_sampler(&g, g.doeblin().unwrap(), 5, 100, 3).unwrap();
        assert_eq!(a, b);
        // χ = 1 draws stay inside the bump support
        assert!(a
            .values
            .iter()
            .zip(&a.chi)
            .all(|(v, &c)| !c || v.abs() < 1.0));
    }
}
