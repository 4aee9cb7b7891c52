//! Configuration, validation, persistence and the `specinfo` command line.
//!
//! Every run is described by an [`ExperimentConfig`]. Its canonical JSON,
//! minus the output directory and thread count, is hashed; the hash and the
//! master seed are written into every artifact so outputs can be traced to
//! the exact configuration that produced them.

mod cli;
mod run;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stabilizer::{alpha_max, MIN_N};
use crate::types::Caps;

pub use cli::{main_with_args, parse_config, run_with_args};
pub use run::execute;

/// Exit codes of the `specinfo` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PRECONDITION: i32 = 2;
    pub const VERIFICATION: i32 = 3;
    pub const RESOURCE_CAP: i32 = 4;
}

/// Watermark written into every artifact of a run with `--unsafe`.
pub const UNSAFE_WATERMARK: &str = "UNSAFE: preconditions were not enforced; guarantees do not apply";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    Lemmas,
    Constructions,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Weak,
    Variational,
}

/// One subcommand with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    Spectrum {
        pmf: PathBuf,
        lambda: f64,
        t: Option<u32>,
        /// Slice the iid source `p^n` instead of `p`.
        n: Option<usize>,
        eta: Option<f64>,
    },
    Stabilize {
        channel: PathBuf,
        /// Input pmf file; uniform when absent.
        input: Option<PathBuf>,
        n: usize,
        alpha: f64,
        zeta: Option<usize>,
    },
    Net {
        eps: f64,
        nx: usize,
        ny: usize,
        samples: usize,
    },
    Verify {
        suite: SuiteKind,
        /// Per-suite instance count; the acceptance sizes when absent.
        instances: Option<usize>,
    },
    DmcConverse {
        channel: PathBuf,
        /// Pmf file, or `None` for the counterexample message.
        message: Option<PathBuf>,
        n: usize,
        zeta: f64,
        delta: f64,
    },
    Wiretap {
        main: PathBuf,
        eve: PathBuf,
        delta: f64,
        ell: f64,
        metric: MetricArg,
        restarts: usize,
        tol: f64,
        n: Option<usize>,
        sweep: Option<Vec<f64>>,
    },
    Auth {
        ws: PathBuf,
        wi: PathBuf,
        scenario: PathBuf,
        n: usize,
        brute_force: bool,
    },
    Capacity {
        channel: PathBuf,
        tol: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Stabilize { .. } => "stabilize",
            Command::Net { .. } => "net",
            Command::Verify { .. } => "verify",
            Command::DmcConverse { .. } => "dmc-converse",
            Command::Wiretap { .. } => "wiretap",
            Command::Auth { .. } => "auth",
            Command::Capacity { .. } => "capacity",
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        match self {
            Command::Spectrum { pmf, .. } => vec![pmf],
            Command::Stabilize { channel, input, .. } => std::iter::once(channel).chain(input).map(|p| p.as_path()).collect(),
            Command::DmcConverse { channel, message, .. } => std::iter::once(channel).chain(message).map(|p| p.as_path()).collect(),
            Command::Wiretap { main, eve, .. } => vec![main, eve],
            Command::Auth { ws, wi, scenario, .. } => vec![ws, wi, scenario],
            Command::Capacity { channel, .. } => vec![channel],
            Command::Net { .. } | Command::Verify { .. } => vec![],
        }
    }
}

/// A validated run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub unsafe_ok: bool,
    pub caps: Caps,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Every violated precondition, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        match &self.command {
            Command::Spectrum { lambda, t, n, eta, .. } => {
                need(*lambda > 0.0 && lambda.is_finite(), format!("slice width lambda must be positive, got {lambda}"));
                need(t.map_or(true, |t| t >= 1), "catch-all index t must be at least 1".into());
                need(n.map_or(true, |n| n >= 1), "blocklength n must be at least 1".into());
                need(eta.map_or(true, |e| e > 0.0 && e <= 1.0), format!("quasi-image mass eta must lie in (0, 1], got {eta:?}"));
            }
            Command::Stabilize { n, alpha, zeta, .. } => {
                if !self.unsafe_ok {
                    let nf = *n as f64;
                    need(*n >= MIN_N, format!("stable subset construction requires n >= {MIN_N}, got n = {n}"));
                    let lo = nf.log2() / nf;
                    need(
                        *alpha > lo,
                        format!("stable subset construction requires alpha > log2(n)/n = {lo:.4}, got alpha = {alpha}"),
                    );
                    need(
                        *alpha < alpha_max(),
                        format!("stable subset construction requires alpha < 1/(8 ln 2) = {:.4}, got alpha = {alpha}", alpha_max()),
                    );
                }
                need(*alpha > 0.0, format!("alpha must be positive, got {alpha}"));
                need(*n >= 2, format!("blocklength must be at least 2, got {n}"));
                need(zeta.map_or(true, |z| z >= 2), "partition parameter zeta must be at least 2".into());
            }
            Command::Net { eps, nx, ny, .. } => {
                need(*eps > 0.0 && *eps < 1.0, format!("net resolution eps must lie in (0, 1), got {eps}"));
                need(*nx >= 2 && *ny >= 2, "net alphabets need at least two letters".into());
            }
            Command::Verify { instances, .. } => {
                need(instances.map_or(true, |k| k >= 1), "instance count must be at least 1".into());
            }
            Command::DmcConverse { n, zeta, delta, .. } => {
                need(*n >= 1, "blocklength n must be at least 1".into());
                need(*zeta > 0.0, format!("threshold zeta must be positive, got {zeta}"));
                need(*delta >= 0.0 && *delta < 1.0, format!("error probability delta must lie in [0, 1), got {delta}"));
            }
            Command::Wiretap { delta, ell, metric, restarts, tol, sweep, .. } => {
                need(*delta > 0.0 && *delta < 1.0, format!("delta must lie in (0, 1), got {delta}"));
                match metric {
                    MetricArg::Weak => need(*ell >= 0.0, format!("weak leakage ell must be non-negative, got {ell}")),
                    MetricArg::Variational => {
                        need(*ell > 0.0 && *ell <= 1.0, format!("variational leakage ell must lie in (0, 1], got {ell}"))
                    }
                }
                need(*restarts >= 1, "at least one restart is needed".into());
                need(*tol > 0.0, format!("tolerance must be positive, got {tol}"));
                if let Some(s) = sweep {
                    need(s.iter().all(|l| *l >= 0.0), "sweep leakage values must be non-negative".into());
                }
            }
            Command::Auth { n, .. } => need(*n >= 1, "blocklength n must be at least 1".into()),
            Command::Capacity { tol, .. } => need(*tol > 0.0, format!("tolerance must be positive, got {tol}")),
        }
        need(self.threads >= 1, "thread count must be at least 1".into());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Precondition(v.join("; ")))
        }
    }

    /// Canonical JSON of the fields that determine the outputs.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&canonical(serde_json::to_value(self).expect("config serializes"))).expect("value serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// 17 significant digits; `inf`, `-inf` and `NaN` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Floats become decimal strings; integers and everything else are kept.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(fmt_f64(n.as_f64().expect("f64"))),
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

/// A rectangular table emitted as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Output of one subcommand.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub name: String,
    /// The JSON document; `Null` for a report with no document.
    pub body: Value,
    pub tables: Vec<Table>,
    /// A checked inequality failed outside any vacuous case.
    pub verification_failed: bool,
}

/// Provenance stamped into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub watermark: Option<String>,
    pub config: Value,
    /// `(path, sha256)` of each input file.
    pub inputs: Vec<(String, String)>,
}

impl RunRecord {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let inputs = config
            .command
            .inputs()
            .into_iter()
            .map(|p| Ok((p.display().to_string(), sha256_hex(&fs::read(p)?))))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunRecord {
            tool: "specinfo".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            seed: config.seed,
            watermark: config.unsafe_ok.then(|| UNSAFE_WATERMARK.to_string()),
            config: canonical(serde_json::to_value(config)?),
            inputs,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub watermark: Option<String>,
    pub artifacts: Vec<ManifestEntry>,
}

/// The JSON document of a report with the run record attached.
pub fn render_json(report: &Report, record: &RunRecord) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("run".into(), serde_json::to_value(record)?);
    doc.insert("report".into(), canonical(report.body.clone()));
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

/// CSV with `#` comment lines carrying the config hash, seed and watermark.
pub fn emit_plot_data(table: &Table, record: &RunRecord) -> Result<String> {
    let mut out = format!("# config_hash={}\n# seed={}\n", record.config_hash, record.seed);
    if let Some(w) = &record.watermark {
        out.push_str(&format!("# {w}\n"));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    wtr.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        wtr.write_record(row).map_err(csv_err)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Parse(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Writes `<name>.json`, one `<name>-<table>.csv` per table and
/// `manifest.json` into `dir`.
pub fn persist_report(report: &Report, dir: &Path, record: &RunRecord) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    let mut write = |file: String, text: String| -> Result<()> {
        fs::write(dir.join(&file), &text)?;
        artifacts.push(ManifestEntry { sha256: sha256_hex(text.as_bytes()), bytes: text.len(), file });
        Ok(())
    };
    if !report.body.is_null() {
        write(format!("{}.json", report.name), render_json(report, record)?)?;
    }
    for t in &report.tables {
        write(format!("{}-{}.csv", report.name, t.name), emit_plot_data(t, record)?)?;
    }
    let manifest = Manifest {
        config_hash: record.config_hash.clone(),
        seed: record.seed,
        watermark: record.watermark.clone(),
        artifacts,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command) -> ExperimentConfig {
        ExperimentConfig { command, seed: 1, unsafe_ok: false, caps: Caps::default(), threads: 1, out: None }
    }

    fn stabilize(n: usize, alpha: f64) -> ExperimentConfig {
        config(Command::Stabilize { channel: "w.json".into(), input: None, n, alpha, zeta: None })
    }

    #[test]
    fn small_n_is_rejected() {
        let e = stabilize(20, 0.17).validate().unwrap_err().to_string();
        assert!(e.contains("n >= 27"), "{e}");
    }

    #[test]
    fn large_alpha_is_rejected() {
        let e = stabilize(50, 0.5).validate().unwrap_err().to_string();
        assert!(e.contains("0.1803"), "{e}");
    }

    #[test]
    fn every_violation_is_listed() {
        let v = stabilize(20, 0.5).violations();
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn unsafe_skips_range_checks() {
        let mut c = stabilize(20, 0.5);
        c.unsafe_ok = true;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn hash_ignores_threads_and_out() {
        let a = stabilize(50, 0.15);
        let mut b = a.clone();
        b.threads = 8;
        b.out = Some("x".into());
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.seed = 2;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let v = canonical(serde_json::json!({"a": 0.1, "b": 3}));
        assert_eq!(v, serde_json::json!({"a": "1.0000000000000001e-1", "b": 3}));
    }

    #[test]
    fn empty_report_has_no_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(Command::Net { eps: 0.2, nx: 2, ny: 2, samples: 1 });
        let record = RunRecord::new(&c).unwrap();
        let m = persist_report(&Report::default(), dir.path(), &record).unwrap();
        assert!(m.artifacts.is_empty());
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn csv_carries_provenance() {
        let c = config(Command::Net { eps: 0.2, nx: 2, ny: 2, samples: 1 });
        let record = RunRecord::new(&c).unwrap();
        let mut t = Table::new("x", &["s", "mass"]);
        t.push(vec!["0".into(), fmt_f64(0.5)]);
        let text = emit_plot_data(&t, &record).unwrap();
        assert!(text.starts_with(&format!("# config_hash={}\n# seed=1\n", record.config_hash)));
        assert!(text.ends_with("s,mass\n0,5.0000000000000000e-1\n"));
    }
}
