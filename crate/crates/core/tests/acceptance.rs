//! End-to-end acceptance run: one check per criterion, one PASS/FAIL line
//! each, then a single assertion over all of them.

use std::time::{Duration, Instant};

use chaos_lab::contraction::{check_contraction_inequalities, kappa4, kappa_bar};
use chaos_lab::distributions::SourceDistribution;
use chaos_lab::error::Error;
use chaos_lab::experiments::{
    clt_experiment, smooth_bound_rhs, BoundConstants, CltSettings, FamilyKind,
};
use chaos_lab::fixtures;
use chaos_lab::oracle::rademacher_expect;
use chaos_lab::report::{clt_table, histogram_table, simulate, Report, ReportHeader};
use chaos_lab::sampling::{smooth_distance, TestFunction};
use chaos_lab::splitting::{n5_check, verify_split, BumpProfile};
use chaos_lab::suite::{cumulant_disagreement, cumulant_kernel, verify_suite, SuiteSizes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn shards() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<String, String> {
    let took = start.elapsed();
    if took <= limit {
        Ok(format!("{:.2}s", took.as_secs_f64()))
    } else {
        Err(format!(
            "took {:.2}s, limit {}s",
            took.as_secs_f64(),
            limit.as_secs()
        ))
    }
}

fn cumulant_triple() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..200 {
        worst =
            worst.max(cumulant_disagreement(&cumulant_kernel(SEED, i)).map_err(|e| e.to_string())?);
    }
    let time = within(Duration::from_secs(30), start)?;
    ensure(
        worst <= 1e-9,
        format!("200 kernels, max relative disagreement {worst:.2e}, {time}"),
    )
}

fn level_one_cumulant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut nonzero = 0;
    for _ in 0..100 {
        let support = rng.random_range(1..=12);
        let c = fixtures::random_level(&mut rng, 1, support, 0.7);
        if kappa4(&c, 1) != 0.0 {
            nonzero += 1;
        }
    }
    ensure(nonzero == 0, format!("100 kernels, {nonzero} nonzero"))
}

fn isometry() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (_, c) in fixtures::corpus()
        .iter()
        .filter(|(_, c)| c.support_bound() <= 12)
    {
        let brute =
            rademacher_expect(c, c.support_bound(), |s| s * s).map_err(|e| e.to_string())?;
        worst = worst.max((brute - c.second_moment()).abs());
        count += 1;
    }
    ensure(
        count > 0 && worst <= 1e-12,
        format!("{count} fixtures, max error {worst:.2e}"),
    )
}

fn fixture_arithmetic() -> Outcome {
    let c = fixtures::complete23();
    let i = c.second_moment();
    let d = c.influence(2);
    let k = kappa4(&c, 2);
    let kb = kappa_bar(&c);
    let ok = (i - 1.0).abs() <= 1e-12
        && (d - 1.0 / 6f64.sqrt()).abs() <= 1e-12
        && (k - 6.0).abs() <= 1e-9
        && (kb - 6f64.powf(0.25)).abs() <= 1e-9;
    ensure(
        ok,
        format!("i_N = {i}, delta_2 = {d}, kappa_4,2 = {k}, kappa_bar = {kb}"),
    )
}

fn expansion_identities() -> Outcome {
    let start = Instant::now();
    let sizes = SuiteSizes {
        identity_cases: 100,
        inequality_instances: 0,
        ..SuiteSizes::default()
    };
    let report = verify_suite(SEED, sizes).map_err(|e| e.to_string())?;
    let time = within(Duration::from_secs(60), start)?;
    let names = [
        "square-expansion",
        "gradient-expansion",
        "gradient-expansion-tilde",
    ];
    let mut worst = 0.0f64;
    let mut ok = true;
    for name in names {
        let case = report.case(name).ok_or(format!("missing case {name}"))?;
        worst = worst.max(case.max_error);
        ok &= case.count == 100 && case.max_error <= 1e-10;
    }
    ensure(
        ok,
        format!("100 cases, max relative error {worst:.2e}, {time}"),
    )
}

fn inequality_suite() -> Outcome {
    let sizes = SuiteSizes {
        identity_cases: 0,
        inequality_instances: 1000,
        ..SuiteSizes::default()
    };
    let report = verify_suite(SEED, sizes).map_err(|e| e.to_string())?;
    let case = report
        .case("contraction-inequalities")
        .ok_or("missing case")?;
    // every instance produces at least one check
    let ok = case.count >= 1000 && case.max_error <= 1e-12;
    let vacuous = check_contraction_inequalities(&fixtures::complete23()).vacuous_levels;
    ensure(
        ok,
        format!("{} checks over 1000 instances, max violation {:.2e}, fixture vacuous levels {vacuous:?}", case.count, case.max_error),
    )
}

fn smooth_bound() -> Outcome {
    let start = Instant::now();
    let a = SourceDistribution::rademacher();
    let b = SourceDistribution::gaussian();
    let f = TestFunction::Sin;
    let consts = BoundConstants::default();
    let corpus = fixtures::corpus();
    let mut failures = Vec::new();
    let mut tightest = f64::INFINITY;
    for (i, (name, c)) in corpus.iter().enumerate() {
        let seed = SEED + 2 * i as u64;
        let d = smooth_distance(c, &a, &b, f, seed, seed + 1, 100_000, shards())
            .map_err(|e| e.to_string())?;
        let rhs = smooth_bound_rhs(c, &a, &b, f.third_derivative_sup(), &consts)
            .map_err(|e| e.to_string())?;
        tightest = tightest.min(rhs - (d.estimate - d.half_width));
        if d.estimate - d.half_width > rhs {
            failures.push(name.clone());
        }
    }
    let time = within(Duration::from_secs(120), start)?;
    ensure(
        failures.is_empty() && corpus.len() == 20,
        format!(
            "{} fixtures, smallest margin {tightest:.3e}, violations {failures:?}, {time}",
            corpus.len()
        ),
    )
}

fn clt() -> Outcome {
    let gauss = SourceDistribution::gaussian();
    let settings = CltSettings {
        kind: FamilyKind::Path,
        m: 2,
        dist: gauss.clone(),
        seed: SEED,
        samples: 100_000,
        shards: shards(),
    };
    let rows = clt_experiment(&settings, &[10, 20, 50, 100, 200]).map_err(|e| e.to_string())?;
    let decreasing = rows.windows(2).all(|w| w[1].kappa4 < w[0].kappa4);
    let eigen_ok = rows.iter().all(|r| {
        r.kappa4_eigen
            .is_some_and(|e| (e - r.kappa4).abs() <= 1e-9 * r.kappa4.abs().max(1.0))
    });
    let (k20, k200) = (rows[1].kolmogorov, rows[4].kolmogorov);
    let ks_ok = k200 < k20 && k200 < 0.05;

    let control = CltSettings {
        kind: FamilyKind::Complete,
        samples: 2_000_000,
        ..settings
    };
    let row = &clt_experiment(&control, &[100]).map_err(|e| e.to_string())?[0];
    let control_ok = row.kappa_hat - 5.0 * row.kappa_hat_se > 10.0;
    ensure(
        decreasing && eigen_ok && ks_ok && control_ok,
        format!(
            "path kappa decreasing {decreasing}, eigen match {eigen_ok}, KS n=20 {k20:.4} n=200 {k200:.4}; complete n=100 kappa_hat {:.3} se {:.3} (exact {:.3})",
            row.kappa_hat, row.kappa_hat_se, row.kappa4
        ),
    )
}

fn splitting() -> Outcome {
    let g = SourceDistribution::gaussian();
    let check = verify_split(&g, 100_000, SEED, SEED + 1, shards()).map_err(|e| e.to_string())?;
    let triple = g.doeblin().ok_or("gaussian has no triple")?;
    let triple_ok = triple.z == 0.0 && triple.r == 0.5 && triple.eps == 0.24;
    let bracket = |p: f64| p > 0.339 && p < 0.48;
    let rejected = matches!(
        verify_split(&SourceDistribution::rademacher(), 1000, SEED, SEED + 1, 1),
        Err(Error::InvalidDoeblin(_))
    );
    ensure(
        triple_ok && check.statistic <= 0.012 && bracket(check.chi_prob) && bracket(check.chi_rate) && rejected,
        format!(
            "KS {:.5} (99% critical {:.5}), P(chi=1) {:.4}, empirical {:.4}, rademacher rejected {rejected}",
            check.statistic, check.critical_99, check.chi_prob, check.chi_rate
        ),
    )
}

// 1.41421 is the stated bracket end, deliberately just below √2
#[allow(clippy::approx_constant)]
fn bump_profile() -> Outcome {
    let mut ok = true;
    for r in [0.1, 0.5, 1.0, 2.0] {
        let b = BumpProfile::new(r).map_err(|e| e.to_string())?;
        ok &= (b.psi(r) - 1.0).abs() <= 1e-12 && (b.psi(r * (1.0 + 1e-9)) - 1.0).abs() <= 1e-12;
        ok &= (0..=1000).all(|i| b.psi(2.0 * r + i as f64 * r / 100.0) == 0.0);
        ok &= (0..=1000).all(|i| b.psi(i as f64 * r / 1000.0) == 1.0);
    }
    let m = BumpProfile::new(0.5).map_err(|e| e.to_string())?.mass();
    let rows = n5_check().map_err(|e| e.to_string())?;
    let spread = rows.iter().map(|r| r.spread).fold(0.0, f64::max);
    let n5_ok = rows.len() == 4 && rows.iter().all(|r| r.passed());
    ensure(
        ok && m > 1.41421 && m < 2.0 && n5_ok,
        format!("continuity and support {ok}, m_0.5 = {m:.6}, scaling spread {spread:.2e}"),
    )
}

fn reproducibility() -> Outcome {
    let c = fixtures::path(2, 30, 1.0)
        .normalize()
        .map_err(|e| e.to_string())?;
    let u = SourceDistribution::uniform();
    let n = shards();
    let run = || -> Result<[String; 4], Error> {
        let header = ReportHeader::new("simulate").seeded(SEED, n).kernel(&c)?;
        let sim = simulate(&c, &u, SEED, 50_000, n)?;
        let sim_csv = histogram_table(&sim).to_csv(&header)?;
        let sim_json = Report::new(header, sim).to_json()?;
        let settings = CltSettings {
            kind: FamilyKind::Random,
            m: 2,
            dist: u.clone(),
            seed: SEED,
            samples: 20_000,
            shards: n,
        };
        let rows = clt_experiment(&settings, &[10, 40])?;
        let header = ReportHeader::new("experiment clt").seeded(SEED, n);
        let clt_csv = clt_table(&rows).to_csv(&header)?;
        Ok([
            sim_json,
            sim_csv,
            Report::new(header, rows).to_json()?,
            clt_csv,
        ])
    };
    let a = run().map_err(|e| e.to_string())?;
    let b = run().map_err(|e| e.to_string())?;
    let same = a.iter().zip(&b).all(|(x, y)| x.as_bytes() == y.as_bytes());
    ensure(
        same,
        format!("simulate and clt reports (json, csv) identical across runs with {n} shards"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("cumulant triple agreement", cumulant_triple),
        ("level-1 cumulant vanishes", level_one_cumulant),
        ("isometry oracle", isometry),
        ("fixture arithmetic", fixture_arithmetic),
        ("expansion identities", expansion_identities),
        ("contraction inequality suite", inequality_suite),
        ("smooth bound validity", smooth_bound),
        ("CLT experiment and negative control", clt),
        ("splitting sampler", splitting),
        ("bump profile", bump_profile),
        ("reproducibility", reproducibility),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
