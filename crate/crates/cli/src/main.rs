//! `chaos-lab`: diagnostics, bounds, simulations and verification suites for
//! chaos series, from the command line.
//!
//! Exit codes: 0 success, 1 invalid input or invocation, 2 a verification
//! suite or check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chaos_lab::contraction::{kappa4, kappa_bar};
use chaos_lab::distributions::{self, Doeblin, SourceDistribution};
use chaos_lab::error::Error;
use chaos_lab::experiments::{
    clt_experiment, fourth_moment_bound_rhs, generate_family, smooth_bound4_rhs, smooth_bound_rhs,
    tv_bound_factors, BoundConstants, CltSettings, FamilyKind, FourthMomentBound, KernelFamily,
    TvBoundReport,
};
use chaos_lab::io::{load_constants, load_kernel, save_kernel, LoadedKernel};
use chaos_lab::kernel::{ChaosCoefficients, Eps0};
use chaos_lab::oracle::{level2_eigen_kappa4, moment_kappa4, MomentTable};
use chaos_lab::report::{clt_table, histogram_table, simulate, Report, ReportHeader, Table};
use chaos_lab::sampling::{smooth_distance, SmoothDistance, TestFunction};
use chaos_lab::splitting::{verify_split_with, BumpProfile, SplitCheck};
use chaos_lab::suite::{oracle_suite, verify_suite, SuiteReport, SuiteSizes};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map};

#[derive(Parser, Debug)]
#[command(
    name = "chaos-lab",
    version,
    about = "Diagnostics and experiments for chaos series"
)]
struct Cli {
    /// Worker threads and sampling shards; defaults to available parallelism.
    #[arg(long, global = true)]
    shards: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a normalized kernel family member as a kernel file.
    Gen(GenArgs),
    /// Per-level norms, influences and cumulants plus aggregate diagnostics.
    Diag(DiagArgs),
    /// Fourth cumulants per level, optionally cross-checked.
    Kappa(KappaArgs),
    /// Simulate the series under a source law.
    Simulate(SimulateArgs),
    /// Influence factors and ε₀.
    Delta(DiagArgs),
    /// Smooth-function, fourth-moment and total-variation bounds.
    Bounds(BoundsArgs),
    /// Expansion identities and contraction inequality suites.
    Verify(SuiteArgs),
    /// Closed forms against independent oracles.
    OracleCheck(SuiteArgs),
    /// Compare direct draws with the Doeblin splitting construction.
    SplitCheck(SplitArgs),
    /// Convergence experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Kernel family sweep: cumulants, influence and Kolmogorov distance per size.
    Clt(CltArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct SeedArg {
    #[arg(long, env = "CHAOS_LAB_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct DiagArgs {
    #[arg(long)]
    kernel: PathBuf,
    /// Comma-separated M values for ε₀(c, M).
    #[arg(long = "M", value_delimiter = ',', default_value = "1")]
    big_m: Vec<f64>,
}

#[derive(Args, Debug)]
struct KappaArgs {
    #[arg(long)]
    kernel: PathBuf,
    /// Also evaluate the Gaussian moment oracle (exponential in the support).
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[command(flatten)]
    seed: SeedArg,
    /// Number of replications.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, value_enum, default_value_t)]
    report: Format,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long = "distA", alias = "dist-a", default_value = "rademacher")]
    dist_a: String,
    #[arg(long = "distB", alias = "dist-b", default_value = "gaussian")]
    dist_b: String,
    /// Test function: sin, cos, gauss.
    #[arg(long, default_value = "sin")]
    f: String,
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Bump radius entering the total-variation geometry factor.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Replications per law for an empirical distance estimate; 0 skips it.
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value_t)]
    report: Format,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[command(flatten)]
    seed: SeedArg,
    /// Shrink every corpus by this factor (1 = full size).
    #[arg(long, default_value_t = 1)]
    scale_down: usize,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long, default_value = "gaussian")]
    dist: String,
    /// Doeblin centre; with --r and --eps overrides the law's own triple.
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct CltArgs {
    #[arg(long, default_value = "path")]
    family: String,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(
        long = "n-list",
        value_delimiter = ',',
        default_value = "10,20,50,100,200"
    )]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value_t)]
    report: Format,
}

/// Why a run did not succeed; maps onto the exit code.
enum Failure {
    Invalid(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            // help and version go to stdout
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let shards = match cli.shards {
        Some(0) => return Err(Failure::Invalid("--shards must be at least 1".into())),
        Some(s) => s,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // the global pool may already exist when embedded; sizing is best effort
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(shards)
        .build_global();
    let out = Output { path: cli.out };
    match cli.command {
        Command::Gen(a) => gen(a, &out),
        Command::Diag(a) => diag(a, &out),
        Command::Kappa(a) => kappa(a, &out),
        Command::Simulate(a) => simulate_cmd(a, shards, &out),
        Command::Delta(a) => delta(a, &out),
        Command::Bounds(a) => bounds(a, shards, &out),
        Command::Verify(a) => suite("verify", a, &out),
        Command::OracleCheck(a) => suite("oracle-check", a, &out),
        Command::SplitCheck(a) => split_check(a, shards, &out),
        Command::Experiment(Experiment::Clt(a)) => clt(a, shards, &out),
    }
}

struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Outcome {
        match &self.path {
            Some(p) => std::fs::write(p, text)
                .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn json<T: Serialize>(&self, header: ReportHeader, body: T) -> Outcome {
        self.write(&Report::new(header, body).to_json()?)
    }

    fn emit<T: Serialize>(
        &self,
        format: Format,
        header: ReportHeader,
        body: T,
        table: impl FnOnce(&T) -> Table,
    ) -> Outcome {
        match format {
            Format::Json => self.json(header, body),
            Format::Csv => self.write(&table(&body).to_csv(&header)?),
        }
    }
}

fn read_kernel(path: &Path) -> Outcome<ChaosCoefficients> {
    let LoadedKernel {
        coefficients,
        warnings,
        ..
    } = load_kernel(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(coefficients)
}

fn dist(name: &str) -> Outcome<SourceDistribution> {
    Ok(distributions::by_name(name)?)
}

fn gen(a: GenArgs, out: &Output) -> Outcome {
    let kind = FamilyKind::parse(&a.family)?;
    let c = generate_family(KernelFamily {
        kind,
        m: a.m,
        n: a.n,
        seed: a.seed.seed,
    })?;
    let mut meta = Map::new();
    meta.insert("family".into(), json!(a.family));
    meta.insert("m".into(), json!(a.m));
    meta.insert("n".into(), json!(a.n));
    meta.insert("seed".into(), json!(a.seed.seed));
    match &out.path {
        Some(p) => Ok(save_kernel(p, &c, &meta)?),
        None => out.write(&chaos_lab::io::kernel_to_json(&c, &meta)?),
    }
}

#[derive(Serialize)]
struct LevelDiag {
    m: usize,
    norm: f64,
    influence: f64,
    kappa4: f64,
}

#[derive(Serialize)]
struct Eps0Row {
    #[serde(rename = "M")]
    big_m: f64,
    #[serde(flatten)]
    eps0: Eps0,
}

#[derive(Serialize)]
struct DiagReport {
    max_level: usize,
    second_moment: f64,
    levels: Vec<LevelDiag>,
    delta_bar: f64,
    delta_bar_weighted: f64,
    kappa_bar: f64,
    /// Smallest nonzero |c|_m; null when every level vanishes.
    alpha: Option<f64>,
    eps0: Vec<Eps0Row>,
}

fn eps0_rows(c: &ChaosCoefficients, ms: &[f64]) -> Outcome<Vec<Eps0Row>> {
    ms.iter()
        .map(|&m| {
            if m.is_finite() && m > 0.0 {
                Ok(Eps0Row {
                    big_m: m,
                    eps0: c.eps0(m),
                })
            } else {
                Err(Failure::Invalid(format!(
                    "--M values must be positive, got {m}"
                )))
            }
        })
        .collect()
}

fn diag(a: DiagArgs, out: &Output) -> Outcome {
    let c = read_kernel(&a.kernel)?;
    let alpha = c.min_active_level_norm();
    let body = DiagReport {
        max_level: c.max_level(),
        second_moment: c.second_moment(),
        levels: (1..=c.max_level())
            .map(|m| LevelDiag {
                m,
                norm: c.level_norm(m),
                influence: c.influence(m),
                kappa4: kappa4(&c, m),
            })
            .collect(),
        delta_bar: c.influence_profile(false),
        delta_bar_weighted: c.influence_profile(true),
        kappa_bar: kappa_bar(&c),
        alpha: alpha.is_finite().then_some(alpha),
        eps0: eps0_rows(&c, &a.big_m)?,
    };
    out.json(ReportHeader::new("diag").kernel(&c)?, body)
}

#[derive(Serialize)]
struct LevelKappa {
    m: usize,
    kappa4: f64,
    kappa4_eigen: Option<f64>,
    kappa4_oracle: Option<f64>,
}

#[derive(Serialize)]
struct KappaReport {
    levels: Vec<LevelKappa>,
    kappa_bar: f64,
}

fn kappa(a: KappaArgs, out: &Output) -> Outcome {
    let c = read_kernel(&a.kernel)?;
    let mut levels = Vec::new();
    for m in 1..=c.max_level() {
        let k = c.level(m).filter(|k| !k.is_empty());
        let eigen = match k {
            Some(k) if m == 2 => Some(level2_eigen_kappa4(k)?),
            _ => None,
        };
        let oracle = match k {
            Some(k) if a.oracle => Some(moment_kappa4(k, &MomentTable::gaussian())?),
            _ => None,
        };
        levels.push(LevelKappa {
            m,
            kappa4: kappa4(&c, m),
            kappa4_eigen: eigen,
            kappa4_oracle: oracle,
        });
    }
    let body = KappaReport {
        levels,
        kappa_bar: kappa_bar(&c),
    };
    out.json(ReportHeader::new("kappa").kernel(&c)?, body)
}

#[derive(Serialize)]
struct LevelDelta {
    m: usize,
    norm: f64,
    influence: f64,
}

#[derive(Serialize)]
struct DeltaReport {
    levels: Vec<LevelDelta>,
    delta_bar: f64,
    delta_bar_weighted: f64,
    eps0: Vec<Eps0Row>,
}

fn delta(a: DiagArgs, out: &Output) -> Outcome {
    let c = read_kernel(&a.kernel)?;
    let body = DeltaReport {
        levels: (1..=c.max_level())
            .map(|m| LevelDelta {
                m,
                norm: c.level_norm(m),
                influence: c.influence(m),
            })
            .collect(),
        delta_bar: c.influence_profile(false),
        delta_bar_weighted: c.influence_profile(true),
        eps0: eps0_rows(&c, &a.big_m)?,
    };
    out.json(ReportHeader::new("delta").kernel(&c)?, body)
}

fn simulate_cmd(a: SimulateArgs, shards: usize, out: &Output) -> Outcome {
    let c = read_kernel(&a.kernel)?;
    let d = dist(&a.dist)?;
    let header = ReportHeader::new("simulate")
        .seeded(a.seed.seed, shards)
        .kernel(&c)?;
    let body = simulate(&c, &d, a.seed.seed, a.n, shards)?;
    out.emit(a.report, header, body, histogram_table)
}

#[derive(Serialize)]
struct BoundsReport {
    distributions: [String; 2],
    test_function: &'static str,
    constants: BoundConstants,
    /// Third-order smooth bound.
    smooth_bound: f64,
    /// Fourth-order smooth bound; absent when a law is skewed.
    smooth_bound4: Option<f64>,
    /// Normal-approximation bounds; absent unless i_N(c) = 1.
    fourth_moment: Option<FourthMomentBound>,
    total_variation: TvBoundReport,
    estimate: Option<SmoothDistance>,
    /// `estimate - half_width <= smooth_bound`, when estimated.
    consistent: Option<bool>,
}

fn bounds_table(b: &BoundsReport) -> Table {
    let tv = &b.total_variation;
    let mut rows: Vec<(&str, Option<f64>)> = vec![
        ("smooth_bound", Some(b.smooth_bound)),
        ("smooth_bound4", b.smooth_bound4),
        ("fourth_moment_g1", b.fourth_moment.as_ref().map(|f| f.g1)),
        (
            "fourth_moment_g2",
            b.fourth_moment.as_ref().and_then(|f| f.g2),
        ),
        ("tv_geometry", Some(tv.geometry)),
        ("tv_growth", Some(tv.growth)),
        ("tv_polynomial", Some(tv.polynomial)),
        ("tv_factorial", Some(tv.factorial)),
        ("tv_kappa_term", Some(tv.kappa_term)),
        ("tv_alpha_kappa", Some(tv.alpha_kappa)),
        ("tv_invariance_bound", Some(tv.invariance_bound)),
        ("tv_normal_bound", Some(tv.normal_bound)),
        ("tv_normal_bound_alpha", Some(tv.normal_bound_alpha)),
        ("tv_a9_lhs", tv.a9_lhs),
        ("tv_a9_rhs", tv.a9_rhs),
    ];
    if let Some(e) = b.estimate {
        rows.push(("estimate", Some(e.estimate)));
        rows.push(("estimate_half_width", Some(e.half_width)));
    }
    Table {
        columns: vec!["quantity".into(), "value".into()],
        rows: rows
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v.map_or_else(String::new, |v| v.to_string())])
            .collect(),
    }
}

fn bounds(a: BoundsArgs, shards: usize, out: &Output) -> Outcome {
    let c = read_kernel(&a.kernel)?;
    let (da, db) = (dist(&a.dist_a)?, dist(&a.dist_b)?);
    let f = TestFunction::parse(&a.f)?;
    let constants = match &a.constants {
        Some(p) => {
            load_constants(p).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?
        }
        None => BoundConstants::default(),
    };
    let smooth = smooth_bound_rhs(&c, &da, &db, f.third_derivative_sup(), &constants)?;
    let smooth4 = match smooth_bound4_rhs(&c, &da, &db, f.fourth_derivative_sup(), &constants) {
        Ok(v) => Some(v),
        Err(Error::ThirdMomentNonzero(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let fourth = match fourth_moment_bound_rhs(&c, 1.0) {
        Ok(v) => Some(v),
        Err(Error::NotNormalized(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let bump = BumpProfile::new(a.r)?;
    let tv = tv_bound_factors(&c, &constants, bump.mass(), a.r);
    let estimate = if a.n > 0 {
        let seed = a.seed.seed;
        Some(smooth_distance(
            &c,
            &da,
            &db,
            f,
            seed,
            seed.wrapping_add(1),
            a.n,
            shards,
        )?)
    } else {
        None
    };
    let mut header = ReportHeader::new("bounds").kernel(&c)?;
    if a.n > 0 {
        header = header.seeded(a.seed.seed, shards);
    }
    let body = BoundsReport {
        distributions: [da.name().to_string(), db.name().to_string()],
        test_function: f.name(),
        constants,
        smooth_bound: smooth,
        smooth_bound4: smooth4,
        fourth_moment: fourth,
        total_variation: tv,
        estimate,
        consistent: estimate.map(|e| e.estimate - e.half_width <= smooth),
    };
    let consistent = body.consistent;
    out.emit(a.report, header, body, bounds_table)?;
    match consistent {
        Some(false) => Err(Failure::Check(
            "estimated distance exceeds the smooth bound".into(),
        )),
        _ => Ok(()),
    }
}

fn suite(name: &str, a: SuiteArgs, out: &Output) -> Outcome {
    if a.scale_down == 0 {
        return Err(Failure::Invalid("--scale-down must be at least 1".into()));
    }
    let full = SuiteSizes::default();
    let sizes = SuiteSizes {
        cumulant_kernels: full.cumulant_kernels / a.scale_down,
        level1_kernels: full.level1_kernels / a.scale_down,
        identity_cases: full.identity_cases / a.scale_down,
        inequality_instances: full.inequality_instances / a.scale_down,
    };
    let seed = a.seed.seed;
    let report: SuiteReport = if name == "verify" {
        verify_suite(seed, sizes)?
    } else {
        oracle_suite(seed, sizes)?
    };
    for case in &report.cases {
        eprintln!(
            "{:<28} {:>6} cases  max error {:.3e}  tolerance {:.0e}  {}",
            case.name,
            case.count,
            case.max_error,
            case.tolerance,
            if case.passed { "ok" } else { "FAILED" }
        );
    }
    let passed = report.passed;
    out.json(ReportHeader::new(name).seeded(seed, 1), report)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("{name} suite has failing cases")))
    }
}

#[derive(Serialize)]
struct SplitReport {
    distribution: String,
    triple: Doeblin,
    #[serde(flatten)]
    check: SplitCheck,
    passed: bool,
}

fn split_check(a: SplitArgs, shards: usize, out: &Output) -> Outcome {
    let d = dist(&a.dist)?;
    let triple = match (a.z, a.r, a.eps, d.doeblin()) {
        (Some(z), Some(r), Some(eps), _) => Doeblin { z, r, eps },
        (None, None, None, Some(t)) => t,
        (None, None, None, None) => {
            return Err(Error::InvalidDoeblin(format!(
                "`{}` has no Doeblin triple; pass --z, --r and --eps",
                d.name()
            ))
            .into())
        }
        _ => {
            return Err(Failure::Invalid(
                "--z, --r and --eps must be given together".into(),
            ))
        }
    };
    let seed = a.seed.seed;
    let check = verify_split_with(&d, triple, a.n, seed, seed.wrapping_add(1), shards)?;
    let passed = check.passed();
    let body = SplitReport {
        distribution: d.name().to_string(),
        triple,
        check,
        passed,
    };
    out.json(ReportHeader::new("split-check").seeded(seed, shards), body)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(
            "split draws differ from direct draws at the 99% level".into(),
        ))
    }
}

fn clt(a: CltArgs, shards: usize, out: &Output) -> Outcome {
    if a.n_list.is_empty() {
        return Err(Failure::Invalid(
            "--n-list must name at least one size".into(),
        ));
    }
    let settings = CltSettings {
        kind: FamilyKind::parse(&a.family)?,
        m: a.m,
        dist: dist(&a.dist)?,
        seed: a.seed.seed,
        samples: a.samples,
        shards,
    };
    let rows = clt_experiment(&settings, &a.n_list)?;
    let header = ReportHeader::new("experiment").seeded(a.seed.seed, shards);
    let body = json!({
        "family": a.family,
        "m": a.m,
        "distribution": settings.dist.name(),
        "rows": rows,
    });
    match a.report {
        Format::Json => out.json(header, body),
        Format::Csv => out.write(&clt_table(&rows).to_csv(&header)?),
    }
}
