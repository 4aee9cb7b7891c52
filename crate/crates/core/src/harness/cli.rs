use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{exit, execute, persist_report, render_json, Command, ExperimentConfig, MetricArg, Report, RunRecord, SuiteKind};
use crate::error::{Error, Result};
use crate::types::Caps;

#[derive(Parser, Debug)]
#[command(name = "specinfo", version, about = "Spectrum slicing, stabilizing partitions and their applications")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for JSON, CSV and manifest output; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run outside the guaranteed parameter ranges; outputs are watermarked.
    #[arg(long = "unsafe", global = true)]
    unsafe_ok: bool,
    /// Cap on enumerated sequences.
    #[arg(long, global = true)]
    cap_sequences: Option<u64>,
    /// Cap on enumerated types.
    #[arg(long, global = true)]
    cap_types: Option<u64>,
    /// Read the run description from a JSON config instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Slice the entropy spectrum of a pmf or of its iid extension.
    Spectrum(SpectrumArgs),
    /// Build the stable subset, and optionally the carved partition, for an iid input.
    Stabilize(StabilizeArgs),
    /// Build the channel net and measure nearest-point gaps on random channels.
    Net(NetArgs),
    /// Run the lemma and construction suites.
    Verify(VerifyArgs),
    /// Check the message-spectrum necessary condition for a DMC.
    DmcConverse(DmcArgs),
    /// Rate bounds for the wiretap channel.
    Wiretap(WiretapArgs),
    /// Exponent bounds for keyed authentication.
    Auth(AuthArgs),
    /// Channel capacity by alternating maximization.
    Capacity(CapacityArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    pmf: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    t: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct StabilizeArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    zeta: Option<usize>,
}

#[derive(Args, Debug)]
struct NetArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    nx: usize,
    #[arg(long, default_value_t = 2)]
    ny: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Lemmas,
    Constructions,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    #[arg(long)]
    instances: Option<usize>,
}

#[derive(Args, Debug)]
struct DmcArgs {
    #[arg(long)]
    channel: PathBuf,
    /// A pmf file, or `counterexample`.
    #[arg(long)]
    message: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    zeta: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricFlag {
    Weak,
    Variational,
}

#[derive(Args, Debug)]
struct WiretapArgs {
    #[arg(long)]
    main: PathBuf,
    #[arg(long)]
    eve: PathBuf,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    ell: f64,
    #[arg(long, value_enum)]
    metric: MetricFlag,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Blocklength for the order-term column.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated leakage values for a c(ell) table.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct AuthArgs {
    #[arg(long)]
    ws: PathBuf,
    #[arg(long)]
    wi: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    n: usize,
    /// Also list every explicit attack strategy.
    #[arg(long)]
    brute_force: bool,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn command_of(cmd: Cmd) -> Command {
    match cmd {
        Cmd::Spectrum(a) => Command::Spectrum { pmf: a.pmf, lambda: a.lambda, t: a.t, n: a.n, eta: a.eta },
        Cmd::Stabilize(a) => Command::Stabilize { channel: a.channel, input: a.input, n: a.n, alpha: a.alpha, zeta: a.zeta },
        Cmd::Net(a) => Command::Net { eps: a.eps, nx: a.nx, ny: a.ny, samples: a.samples },
        Cmd::Verify(a) => Command::Verify {
            suite: match a.suite {
                SuiteArg::Lemmas => SuiteKind::Lemmas,
                SuiteArg::Constructions => SuiteKind::Constructions,
                SuiteArg::All => SuiteKind::All,
            },
            instances: a.instances,
        },
        Cmd::DmcConverse(a) => Command::DmcConverse {
            channel: a.channel,
            message: (a.message != "counterexample").then(|| PathBuf::from(a.message)),
            n: a.n,
            zeta: a.zeta,
            delta: a.delta,
        },
        Cmd::Wiretap(a) => Command::Wiretap {
            main: a.main,
            eve: a.eve,
            delta: a.delta,
            ell: a.ell,
            metric: match a.metric {
                MetricFlag::Weak => MetricArg::Weak,
                MetricFlag::Variational => MetricArg::Variational,
            },
            restarts: a.restarts,
            tol: a.tol,
            n: a.n,
            sweep: a.sweep,
        },
        Cmd::Auth(a) => Command::Auth { ws: a.ws, wi: a.wi, scenario: a.scenario, n: a.n, brute_force: a.brute_force },
        Cmd::Capacity(a) => Command::Capacity { channel: a.channel, tol: a.tol },
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn config_of(cli: Cli) -> Result<ExperimentConfig> {
    let threads = cli.threads.unwrap_or_else(default_threads);
    let mut cfg = match (cli.config, cli.cmd) {
        (Some(_), Some(_)) => return Err(Error::Parse("--config cannot be combined with a subcommand".into())),
        (Some(path), None) => {
            let mut c: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(&path)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            c.unsafe_ok |= cli.unsafe_ok;
            c
        }
        (None, Some(cmd)) => {
            ExperimentConfig { command: command_of(cmd), seed: cli.seed, unsafe_ok: cli.unsafe_ok, caps: Caps::default(), threads, out: None }
        }
        (None, None) => return Err(Error::Parse("a subcommand or --config is required".into())),
    };
    cfg.threads = threads;
    cfg.out = cli.out;
    if let Some(c) = cli.cap_sequences {
        cfg.caps.max_sequences = c;
    }
    if let Some(c) = cli.cap_types {
        cfg.caps.max_types = c;
    }
    Ok(cfg)
}

/// Parses command-line arguments (program name first) into a validated config.
pub fn parse_config<I, T>(args: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Parse(e.to_string()))?;
    let cfg = config_of(cli)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the binary and returns its exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_args(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`main_with_args`] with explicit output streams.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return exit::USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return exit::OK;
        }
    };
    match config_of(cli).and_then(|c| c.validate().map(|_| c)).and_then(|c| run_config(&c, out, err)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn run_config(cfg: &ExperimentConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let start = Instant::now();
    let record = RunRecord::new(cfg)?;
    let report = execute(cfg)?;
    match &cfg.out {
        Some(dir) => {
            let manifest = persist_report(&report, dir, &record)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&manifest)?)?;
        }
        None => write!(out, "{}", render_json(&report, &record)?)?,
    }
    writeln!(err, "{}: {:.3} s", cfg.command.name(), start.elapsed().as_secs_f64())?;
    Ok(report_code(&report))
}

fn report_code(report: &Report) -> i32 {
    if report.verification_failed {
        exit::VERIFICATION
    } else {
        exit::OK
    }
}
