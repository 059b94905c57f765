//! Deterministic JSON and CSV reports carrying a reproducibility header.

use serde::Serialize;
use serde_json::Map;
use sha2::{Digest, Sha256};

use crate::distributions::SourceDistribution;
use crate::error::{Error, Result};
use crate::experiments::CltRow;
use crate::io::kernel_to_json;
use crate::kernel::ChaosCoefficients;
use crate::sampling::sample_series;
use crate::stats::{empirical_kappa4, histogram, kolmogorov_distance, normal_cdf_var, Bin};

pub const TOOL: &str = "chaos-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the inputs of a run; identical headers imply identical bodies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub shards: Option<usize>,
    pub kernel_hash: Option<String>,
}

impl ReportHeader {
    pub fn new(command: impl Into<String>) -> Self {
        ReportHeader {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            seed: None,
            shards: None,
            kernel_hash: None,
        }
    }

    pub fn seeded(mut self, seed: u64, shards: usize) -> Self {
        self.seed = Some(seed);
        self.shards = Some(shards);
        self
    }

    pub fn kernel(mut self, c: &ChaosCoefficients) -> Result<Self> {
        self.kernel_hash = Some(kernel_hash(c)?);
        Ok(self)
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        vec![
            ("tool", self.tool.into()),
            ("version", self.version.into()),
            ("command", self.command.clone()),
            ("seed", opt(self.seed.map(|s| s.to_string()))),
            ("shards", opt(self.shards.map(|s| s.to_string()))),
            ("kernel_hash", opt(self.kernel_hash.clone())),
        ]
    }
}

/// SHA-256 of the canonical kernel file text without metadata.
pub fn kernel_hash(c: &ChaosCoefficients) -> Result<String> {
    let text = kernel_to_json(c, &Map::new())?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report<T> {
    pub header: ReportHeader,
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(header: ReportHeader, body: T) -> Self {
        Report { header, body }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// A rectangular table for the CSV mirror of a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// CSV text preceded by `# key=value` header lines.
    pub fn to_csv(&self, header: &ReportHeader) -> Result<String> {
        let mut out = String::new();
        for (k, v) in header.pairs() {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))?);
        Ok(out)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

/// CSV mirror of a CLT table.
pub fn clt_table(rows: &[CltRow]) -> Table {
    let columns = [
        "n",
        "kappa4",
        "kappa4_eigen",
        "delta",
        "norm_budget",
        "kolmogorov",
        "kappa_hat",
        "kappa_hat_se",
        "samples",
        "seed",
    ];
    Table {
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    num(r.kappa4),
                    opt_num(r.kappa4_eigen),
                    num(r.delta),
                    num(r.norm_budget),
                    num(r.kolmogorov),
                    num(r.kappa_hat),
                    num(r.kappa_hat_se),
                    r.samples.to_string(),
                    r.seed.to_string(),
                ]
            })
            .collect(),
    }
}

/// Summary statistics of simulated `S_N(c, Z)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub distribution: String,
    pub samples: usize,
    pub second_moment: f64,
    pub mean: f64,
    pub variance: f64,
    pub kappa_hat: Option<f64>,
    pub kappa_hat_se: Option<f64>,
    /// Kolmogorov distance to `N(0, i_N(c))`.
    pub kolmogorov: f64,
    pub histogram: Vec<Bin>,
}

pub const HISTOGRAM_BINS: usize = 20;

pub fn simulate(
    c: &ChaosCoefficients,
    dist: &SourceDistribution,
    seed: u64,
    n: usize,
    shards: usize,
) -> Result<SimulationSummary> {
    let batch = sample_series(c, dist, seed, n, shards)?;
    let v = &batch.values;
    let len = v.len() as f64;
    let mean = v.iter().sum::<f64>() / len;
    let variance = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0).max(1.0);
    // κ̂₄ is only reported when enough samples exist
    let k = empirical_kappa4(v).ok();
    let i = c.second_moment();
    Ok(SimulationSummary {
        distribution: dist.name().to_string(),
        samples: n,
        second_moment: i,
        mean,
        variance,
        kappa_hat: k.map(|e| e.value),
        kappa_hat_se: k.map(|e| e.std_error),
        kolmogorov: kolmogorov_distance(v, normal_cdf_var(i))?,
        histogram: histogram(v, HISTOGRAM_BINS)?,
    })
}

/// CSV mirror of a simulation: one row per histogram bin.
pub fn histogram_table(s: &SimulationSummary) -> Table {
    Table {
        columns: vec!["lo".into(), "hi".into(), "count".into()],
        rows: s
            .histogram
            .iter()
            .map(|b| vec![num(b.lo), num(b.hi), b.count.to_string()])
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn reports_are_reproducible() {
        let c = fixtures::complete23();
        let g = SourceDistribution::gaussian();
        let run = || {
            let header = ReportHeader::new("simulate")
                .seeded(9, 3)
                .kernel(&c)
                .unwrap();
            let body = simulate(&c, &g, 9, 5000, 3).unwrap();
            let csv = histogram_table(&body).to_csv(&header).unwrap();
            (Report::new(header, body).to_json().unwrap(), csv)
        };
        assert_eq!(run(), run());
        let (json, csv) = run();
        assert!(json.contains("\"kernel_hash\""));
        assert!(csv.starts_with("# tool=chaos-lab\n"));
    }

    #[test]
    fn hash_ignores_meta_and_tracks_values() {
        let a = kernel_hash(&fixtures::complete23()).unwrap();
        assert_eq!(a.len(), 64);
        assert_ne!(a, kernel_hash(&fixtures::complete(2, 3, 0.5)).unwrap());
    }

    #[test]
    fn csv_quotes_fields() {
        let t = Table {
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec!["x,y".into(), "1".into()]],
        };
        let s = t.to_csv(&ReportHeader::new("t")).unwrap();
        assert!(s.ends_with("a,b\n\"x,y\",1\n"));
    }
}
