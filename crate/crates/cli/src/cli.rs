//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gmplab::boxes::{chsh_value, conditional_outcome_probs, isotropic_box, lambda_bound, signalling_witness};
use gmplab::gentle::{gentle_lemma_check, gmp_sweep, lemma_sweep, EtaFunction};
use gmplab::info::{jn_lower_bound, lemma35_sweep, tau_bound_solver, TauBound};
use gmplab::linalg::MatrixJson;
use gmplab::sqt::{min_state_overlap, qubit_effect_membership, state_membership, SqtParams};
use gmplab::vandam::{
    exact_success_probability, jn_exact, simulate, violation_threshold, ProtocolConfig, Targets,
};
use gmplab::{Execution, HermitianOperator};
use serde::Serialize;
use serde_json::Value;

use crate::acceptance::run_suite;
use crate::emit::{csv_string, fmt_real, json_string, write_text};
use crate::error::{CliError, CliResult, EXIT_USAGE};
use crate::manifest::{manifest_path, RunManifest};

pub const THREADS_ENV: &str = "GMPLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gmplab", version, about = "Gentle-measurement numerical laboratory")]
pub struct Cli {
    /// Seed for every random draw (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to GMPLAB_THREADS, then to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON object of flag overrides, e.g. {"tau": 0.5, "n": "1..8"}.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gentle measurement lemma and disturbance sweeps.
    #[command(subcommand)]
    Gentle(GentleCmd),
    /// Membership in the stretched qubit state set or effect cone.
    #[command(subcommand)]
    Cone(ConeCmd),
    /// CHSH value and conditionals of an isotropic box.
    Chsh(ChshArgs),
    /// Bounds derived from an eta function.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Randomised check of the averaging lemma.
    Lemma35(Lemma35Args),
    /// Lower bound on the chain-inequality quantity.
    #[command(name = "jn-lb")]
    JnLb(JnLbArgs),
    /// The nested van Dam protocol.
    #[command(subcommand)]
    Vandam(VandamCmd),
    /// Experiment suites.
    #[command(subcommand)]
    Suite(SuiteCmd),
}

#[derive(Debug, Subcommand)]
pub enum GentleCmd {
    /// Random (rho, X) pairs against the gentle measurement lemma.
    Verify(GentleVerifyArgs),
    /// Random POVM/ensemble pairs against the disturbance bound.
    Gmp(GmpArgs),
    /// The lemma for one state and one effect given as matrix JSON.
    Lemma(GentleLemmaArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GentleVerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GmpArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GentleLemmaArgs {
    #[arg(long, value_name = "FILE")]
    pub rho: PathBuf,
    #[arg(long = "x", value_name = "FILE")]
    pub x_op: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ConeCmd {
    State(ConeArgs),
    Effect(ConeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Matrix JSON: {"dim", "subsystem_dims", "entries": [[re, im], ...]}.
    #[arg(long, value_name = "FILE")]
    pub file: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChshArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BoundCmd {
    /// Largest isotropic-box weight compatible with the principle.
    Lambda(EtaArgs),
    /// Largest stretch compatible with the principle.
    Tau(EtaArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EtaArgs {
    /// `quantum`, or `file:PATH` for a two-column `eps,eta` CSV table.
    #[arg(long, default_value = "quantum")]
    pub eta: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Lemma35Args {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct JnLbArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Inclusive range `A..B`, or a single `N`.
    #[arg(long = "n-range", value_parser = parse_range)]
    pub n_range: NRange,
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VandamCmd {
    /// Exact success probability and chain quantity over a range of n.
    Exact(VandamExactArgs),
    /// Monte Carlo estimate of the success probability.
    Mc(VandamMcArgs),
    /// Smallest n whose exact chain quantity exceeds 1.
    Threshold(ThresholdArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct VandamExactArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Inclusive range `A..B`, or a single `N`.
    #[arg(long, value_parser = parse_range)]
    pub n: NRange,
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VandamMcArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// `all` or a comma-separated list of indices in `[0, 2^n)`.
    #[arg(long, default_value = "all")]
    pub targets: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SuiteCmd {
    /// Every acceptance criterion; exit 0 iff all pass.
    Acceptance(SuiteArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SuiteArgs {
    /// Directory for acceptance.json, acceptance.csv and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NRange {
    pub start: u32,
    pub end: u32,
}

impl NRange {
    pub fn iter(self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

pub fn parse_range(s: &str) -> Result<NRange, String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let p = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("`{t}`: {e}"));
    let (start, end) = (p(a)?, p(b)?);
    if start > end {
        return Err(format!("empty range {start}..{end}"));
    }
    Ok(NRange { start, end })
}

fn parse_targets(s: &str) -> CliResult<Targets> {
    if s.trim() == "all" {
        return Ok(Targets::All);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Validation(format!("target `{t}`: {e}")))
        })
        .collect::<CliResult<Vec<_>>>()
        .map(Targets::List)
}

fn parse_eta(spec: &str) -> CliResult<EtaFunction> {
    if spec == "quantum" {
        return Ok(EtaFunction::quantum());
    }
    let Some(path) = spec.strip_prefix("file:") else {
        return Err(CliError::Validation(format!(
            "--eta must be `quantum` or `file:PATH`, got `{spec}`"
        )));
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read eta table {path}: {e}")))?;
    Ok(EtaFunction::from_csv(path, &text)?)
}

fn read_operator(path: &Path) -> CliResult<HermitianOperator> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let j: MatrixJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(HermitianOperator::try_from(j)?)
}

/// Appends each `--params` entry as a flag unless the flag is already present.
fn merge_params(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let a = a.to_string_lossy();
        if a == "--params" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--params=") {
            path = Some(PathBuf::from(p));
        }
    }
    match path {
        Some(p) => merge_from(argv, &p),
        None => Ok(argv),
    }
}

fn merge_from(mut argv: Vec<OsString>, path: &Path) -> CliResult<Vec<OsString>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read params {}: {e}", path.display())))?;
    let obj: serde_json::Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("params {} is not a JSON object: {e}", path.display())))?;
    let present = |flag: &str, argv: &[OsString]| {
        argv.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&format!("{flag}="))
        })
    };
    for (key, value) in obj {
        let flag = format!("--{key}");
        if key == "params" || present(&flag, &argv) {
            continue;
        }
        let rendered = match value {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => None,
            Value::String(s) => Some(s),
            Value::Number(n) => Some(n.to_string()),
            Value::Array(items) => Some(
                items
                    .iter()
                    .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            Value::Object(_) => {
                return Err(CliError::Validation(format!("params key `{key}` holds an object")))
            }
        };
        match rendered {
            Some(v) => argv.push(format!("{flag}={v}").into()),
            None => argv.push(flag.into()),
        }
    }
    Ok(argv)
}

fn configure_threads(flag: Option<usize>) -> CliResult<usize> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|e| {
                CliError::Validation(format!("{THREADS_ENV}=`{v}`: {e}"))
            })?),
            _ => None,
        },
    };
    if requested == Some(0) {
        return Err(CliError::Validation("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = requested {
            // A second call in the same process keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        Ok(1)
    }
}

struct Ctx {
    argv: Vec<String>,
    seed: u64,
    threads: usize,
    exec: Execution,
    start: Instant,
}

impl Ctx {
    fn manifest(&self, seed: Option<u64>, params: &impl Serialize, outputs: &[PathBuf], at: &Path) -> CliResult<()> {
        let params = serde_json::to_value(params).map_err(|e| CliError::Io(e.to_string()))?;
        RunManifest::new(
            self.argv.clone(),
            seed,
            params,
            outputs,
            self.threads,
            self.start.elapsed().as_secs_f64(),
        )?
        .write(at)
    }

    /// JSON to `out` plus its manifest, or to stdout.
    fn emit_json(&self, value: &impl Serialize, out: Option<&Path>, seed: Option<u64>, params: &impl Serialize) -> CliResult<()> {
        let text = json_string(value)?;
        match out {
            Some(p) => {
                write_text(p, &text)?;
                self.manifest(seed, params, &[p.to_path_buf()], &manifest_path(p))
            }
            None => print_stdout(&text),
        }
    }

    fn emit_csv(&self, header: &[&str], rows: &[Vec<String>], out: Option<&Path>, params: &impl Serialize) -> CliResult<()> {
        let text = csv_string(header, rows)?;
        match out {
            Some(p) => {
                write_text(p, &text)?;
                self.manifest(None, params, &[p.to_path_buf()], &manifest_path(p))
            }
            None => print_stdout(&text),
        }
    }
}

fn print_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Seeded<'a, T: Serialize> {
    seed: u64,
    #[serde(flatten)]
    args: &'a T,
}

fn run(cli: Cli, ctx: &Ctx) -> CliResult<()> {
    let exec = ctx.exec;
    let seed = ctx.seed;
    match cli.command {
        Command::Gentle(GentleCmd::Verify(a)) => {
            if !(2..=64).contains(&a.dim) {
                return Err(CliError::Validation(format!("--dim {} outside 2..=64", a.dim)));
            }
            let trials = lemma_sweep(a.dim, a.trials, seed, exec)?;
            let violations = trials.iter().filter(|t| t.margin < -gmplab::gentle::BOUND_SLACK).count();
            let min_margin = trials.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
            #[derive(Serialize)]
            struct Report<'a> {
                dim: usize,
                trials: usize,
                seed: u64,
                all_hold: bool,
                violations: usize,
                min_margin: f64,
                results: &'a [gmplab::gentle::LemmaTrial],
            }
            let report = Report {
                dim: a.dim,
                trials: a.trials,
                seed,
                all_hold: violations == 0,
                violations,
                min_margin,
                results: &trials,
            };
            ctx.emit_json(&report, a.out.as_deref(), Some(seed), &Seeded { seed, args: &a })?;
            bound_verdict(violations, "gentle measurement lemma")
        }
        Command::Gentle(GentleCmd::Gmp(a)) => {
            let trials = gmp_sweep(a.trials, seed, exec)?;
            let violations = trials.iter().filter(|t| !t.holds()).count();
            #[derive(Serialize)]
            struct Report<'a> {
                trials: usize,
                seed: u64,
                all_hold: bool,
                violations: usize,
                results: &'a [gmplab::gentle::GmpTrial],
            }
            let report = Report {
                trials: a.trials,
                seed,
                all_hold: violations == 0,
                violations,
                results: &trials,
            };
            ctx.emit_json(&report, a.out.as_deref(), Some(seed), &Seeded { seed, args: &a })?;
            bound_verdict(violations, "disturbance bound")
        }
        Command::Gentle(GentleCmd::Lemma(a)) => {
            let r = gentle_lemma_check(&read_operator(&a.rho)?, &read_operator(&a.x_op)?)?;
            ctx.emit_json(&r, a.out.as_deref(), None, &a)?;
            bound_verdict(usize::from(!r.holds), "gentle measurement lemma")
        }
        Command::Cone(ConeCmd::State(a)) => {
            let params = SqtParams::new(a.tau)?;
            let r = state_membership(&read_operator(&a.file)?, &params)?;
            ctx.emit_json(&r, a.out.as_deref(), None, &a)
        }
        Command::Cone(ConeCmd::Effect(a)) => {
            let params = SqtParams::new(a.tau)?;
            let m = read_operator(&a.file)?;
            #[derive(Serialize)]
            struct Report {
                member: bool,
                min_state_overlap: f64,
                min_eigenvalue: f64,
            }
            let r = Report {
                member: qubit_effect_membership(&m, &params)?,
                min_state_overlap: min_state_overlap(&m, &params)?,
                min_eigenvalue: m.min_eigenvalue()?,
            };
            ctx.emit_json(&r, a.out.as_deref(), None, &a)
        }
        Command::Chsh(a) => {
            let b = isotropic_box(a.lambda)?;
            #[derive(Serialize)]
            struct Conditional {
                i: usize,
                r: usize,
                /// `[j][s]`: Bob's outcome `s` given his input `j`.
                probs: [[f64; 2]; 2],
            }
            #[derive(Serialize)]
            struct Report {
                lambda: f64,
                #[serde(rename = "S")]
                s: f64,
                is_ns: bool,
                conditionals: Vec<Conditional>,
            }
            let mut conditionals = Vec::new();
            for i in 0..2 {
                for r in 0..2 {
                    conditionals.push(Conditional {
                        i,
                        r,
                        probs: conditional_outcome_probs(&b, i, r)?,
                    });
                }
            }
            let report = Report {
                lambda: a.lambda,
                s: chsh_value(&b),
                is_ns: signalling_witness(b.table())?.is_ns,
                conditionals,
            };
            ctx.emit_json(&report, a.out.as_deref(), None, &a)
        }
        Command::Bound(BoundCmd::Lambda(a)) => {
            let eta = parse_eta(&a.eta)?;
            #[derive(Serialize)]
            struct Report {
                eta_name: String,
                eta_inv_quarter: f64,
                lambda_bound: f64,
            }
            let r = Report {
                eta_name: eta.name().to_string(),
                eta_inv_quarter: eta.inverse(0.25)?,
                lambda_bound: lambda_bound(&eta)?,
            };
            ctx.emit_json(&r, a.out.as_deref(), None, &a)
        }
        Command::Bound(BoundCmd::Tau(a)) => {
            let eta = parse_eta(&a.eta)?;
            #[derive(Serialize)]
            struct Report {
                eta_name: String,
                #[serde(flatten)]
                bound: TauBound,
            }
            let r = Report {
                eta_name: eta.name().to_string(),
                bound: tau_bound_solver(&eta),
            };
            ctx.emit_json(&r, a.out.as_deref(), None, &a)
        }
        Command::Lemma35(a) => {
            let trials = lemma35_sweep(a.trials, seed, exec)?;
            let violations = trials.iter().filter(|t| !t.holds).count();
            #[derive(Serialize)]
            struct Report<'a> {
                trials: usize,
                seed: u64,
                all_hold: bool,
                violations: usize,
                results: &'a [gmplab::info::Lemma35Trial],
            }
            let report = Report {
                trials: a.trials,
                seed,
                all_hold: violations == 0,
                violations,
                results: &trials,
            };
            ctx.emit_json(&report, a.out.as_deref(), Some(seed), &Seeded { seed, args: &a })?;
            bound_verdict(violations, "averaging lemma")
        }
        Command::JnLb(a) => {
            SqtParams::new(a.tau)?;
            let rows: Vec<Vec<String>> = a
                .n_range
                .iter()
                .map(|n| vec![n.to_string(), fmt_real(jn_lower_bound(a.tau, n))])
                .collect();
            ctx.emit_csv(&["n", "jn_lower_bound"], &rows, a.csv.as_deref(), &a)
        }
        Command::Vandam(VandamCmd::Exact(a)) => {
            let rows = a
                .n
                .iter()
                .map(|n| {
                    Ok(vec![
                        n.to_string(),
                        fmt_real(exact_success_probability(n, a.tau)?),
                        fmt_real(jn_exact(n, a.tau)),
                        fmt_real(jn_lower_bound(a.tau, n)),
                    ])
                })
                .collect::<CliResult<Vec<_>>>()?;
            ctx.emit_csv(&["n", "p_exact", "jn_exact", "jn_lb"], &rows, a.csv.as_deref(), &a)
        }
        Command::Vandam(VandamCmd::Mc(a)) => {
            let targets = parse_targets(&a.targets)?;
            let cfg = ProtocolConfig::new(a.n, a.tau, a.trials, seed)?;
            let report = simulate(&cfg, &targets, exec)?;
            ctx.emit_json(&report, a.out.as_deref(), Some(seed), &Seeded { seed, args: &a })
        }
        Command::Vandam(VandamCmd::Threshold(a)) => {
            let t = violation_threshold(a.tau)?;
            ctx.emit_json(&t, a.out.as_deref(), None, &a)
        }
        Command::Suite(SuiteCmd::Acceptance(a)) => {
            let suite = run_suite(seed, exec)?;
            let mut lines = suite.summary_lines().join("\n");
            lines.push('\n');
            print_stdout(&lines)?;
            if let Some(dir) = &a.out {
                fs::create_dir_all(dir)?;
                let json = dir.join("acceptance.json");
                let csv = dir.join("acceptance.csv");
                write_text(&json, &suite.json()?)?;
                write_text(&csv, &suite.csv()?)?;
                #[derive(Serialize)]
                struct Params<'a> {
                    seed: u64,
                    out: &'a Path,
                    elapsed_seconds: Vec<(u8, f64)>,
                }
                let params = Params {
                    seed,
                    out: dir,
                    elapsed_seconds: suite
                        .results
                        .iter()
                        .zip(&suite.elapsed)
                        .map(|(r, d)| (r.id, d.as_secs_f64()))
                        .collect(),
                };
                ctx.manifest(Some(seed), &params, &[json, csv], &dir.join("manifest.json"))?;
            }
            let failed = suite.results.iter().filter(|r| !r.passed).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Numeric(format!("{failed} acceptance criteria failed")))
            }
        }
    }
}

fn bound_verdict(violations: usize, what: &str) -> CliResult<()> {
    if violations == 0 {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("{what} violated in {violations} cases")))
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code: 0 success, 2 validation error, 3 numeric or i/o failure, 64 usage.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let start = Instant::now();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_params(argv) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let threads = match configure_threads(cli.threads) {
        Ok(t) => t,
        Err(e) => return report(e),
    };
    let ctx = Ctx {
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: cli.seed.unwrap_or(0),
        threads,
        exec: if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        },
        start,
    };
    match run(cli, &ctx) {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    eprintln!("gmplab: {e}");
    e.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..4").unwrap(), NRange { start: 1, end: 4 });
        assert_eq!(parse_range("2..=3").unwrap(), NRange { start: 2, end: 3 });
        assert_eq!(parse_range("7").unwrap(), NRange { start: 7, end: 7 });
        assert!(parse_range("4..1").is_err());
        assert!(parse_range("a..3").is_err());
        assert_eq!(parse_range("1..4").unwrap().iter().count(), 4);
    }

    #[test]
    fn targets() {
        assert_eq!(parse_targets("all").unwrap(), Targets::All);
        assert_eq!(parse_targets("0, 3,5").unwrap(), Targets::List(vec![0, 3, 5]));
        assert!(matches!(parse_targets("1,x"), Err(CliError::Validation(_))));
    }

    #[test]
    fn eta_specs() {
        assert_eq!(parse_eta("quantum").unwrap().name(), "quantum");
        assert!(matches!(parse_eta("linear"), Err(CliError::Validation(_))));
        assert!(matches!(parse_eta("file:/nonexistent/eta.csv"), Err(CliError::Validation(_))));
    }

    #[test]
    fn params_fill_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.json");
        fs::write(&p, r#"{"tau": 0.5, "n": "1..3", "targets": [0, 1]}"#).unwrap();
        let argv: Vec<OsString> = ["gmplab", "vandam", "exact", "--tau", "0", "--params"]
            .iter()
            .map(OsString::from)
            .chain([p.clone().into_os_string()])
            .collect();
        let merged: Vec<String> = merge_params(argv)
            .unwrap()
            .into_iter()
            .map(|a| a.into_string().unwrap())
            .collect();
        assert!(merged.contains(&"--n=1..3".to_string()));
        assert!(merged.contains(&"--targets=0,1".to_string()));
        assert!(!merged.iter().any(|a| a.starts_with("--tau=")));
    }
}
