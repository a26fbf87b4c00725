//! Command-line front end: instance files, solve, check, perturb, gen, bench.

pub mod format;

use std::fmt::Write as _;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use chorefair::check::{check_po_bruteforce, check_wef1, check_wpef1, DEFAULT_ORACLE_BUDGET};
use chorefair::fpo::check_fpo;
use chorefair::instance::preprocess_zero_costs;
use chorefair::market::{dual_prices, shrink};
use chorefair::perturb::{certify_perturbation, thresholds, EpsBound, DEFAULT_CYCLE_BUDGET, DEFAULT_SUBSET_BUDGET};
use chorefair::rat::{fmt_rat, int, parse_rat};
use chorefair::search::{solve, Method, SolveOptions};
use chorefair::{par, CheckReport, Instance, Rat};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use format::{bundles_json, certificate_json, instance_json, InstanceFile, ResultFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] chorefair::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Core(e) if e.is_budget() => 2,
            CliError::Core(chorefair::Error::CertificationFailed(_)) => 3,
            CliError::Core(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::Io(_) => "io",
            CliError::Core(e) if e.is_budget() => "budget",
            CliError::Core(chorefair::Error::CertificationFailed(_)) => "certification",
            CliError::Core(_) => "invalid",
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}}).to_string()
    }
}

impl From<chorefair::rat::ParseRatError> for CliError {
    fn from(e: chorefair::rat::ParseRatError) -> Self {
        CliError::Parse(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "chorefair", version, about = "EF1 and Pareto-optimal chore division in exact arithmetic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a random integer-cost instance.
    Gen(GenArgs),
    /// Solve an instance and print the allocation with its certificate.
    Solve(SolveArgs),
    /// Check properties of an allocation.
    Check(CheckArgs),
    /// Print the perturbed instance, or its thresholds with --info.
    Perturb(PerturbArgs),
    /// Solve random instances and print one CSV row per trial.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub agents: usize,
    #[arg(long)]
    pub chores: usize,
    #[arg(long, default_value_t = 10)]
    pub max_cost: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also draw entitlements from 1..=3.
    #[arg(long)]
    pub entitlements: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, default_value = "paper", value_parser = ["paper", "bruteforce", "cells"])]
    pub method: String,
    /// Shrinking parameter as `p/q`; defaults to half the admissible bound.
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Limit on `n^m` for the exhaustive oracle and fallback.
    #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
    pub budget: u64,
    /// Print each FindpEF1 iteration to standard error.
    #[arg(long)]
    pub trace: bool,
    /// Accept zero costs (such chores go to an agent with cost zero).
    #[arg(long)]
    pub allow_zero: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    /// Result file holding `bundles` and optionally a `certificate`.
    #[arg(long)]
    pub allocation: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "ef1,po")]
    pub properties: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub allow_zero: bool,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub info: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Limit on the number of bipartite cycles examined.
    #[arg(long, default_value_t = DEFAULT_CYCLE_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Agent range such as `2..4` (inclusive).
    #[arg(long, default_value = "2..3", value_parser = parse_range)]
    pub agents: RangeInclusive<usize>,
    #[arg(long, default_value = "2..6", value_parser = parse_range)]
    pub chores: RangeInclusive<usize>,
    #[arg(long, default_value_t = 10)]
    pub max_cost: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub entitlements: bool,
    #[arg(long, default_value = "paper", value_parser = ["paper", "bruteforce", "cells"])]
    pub method: String,
}

/// Parses `a..b` or `a..=b` (both inclusive) or a single number.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad range bound {t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(lo..=hi)
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code; errors are printed to `err` as a JSON object.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return 1;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let text = match cmd {
        Command::Gen(a) => cmd_gen(&a)?,
        Command::Solve(a) => {
            let (text, trace, code) = cmd_solve(&a)?;
            for line in trace {
                writeln!(err, "{line}").map_err(io)?;
            }
            write!(out, "{text}").map_err(io)?;
            return Ok(code);
        }
        Command::Check(a) => cmd_check(&a)?,
        Command::Perturb(a) => cmd_perturb(&a)?,
        Command::Bench(a) => cmd_bench(&a)?,
    };
    write!(out, "{text}").map_err(io)?;
    Ok(0)
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path, allow_zero: bool) -> CliResult<Instance> {
    InstanceFile::parse_str(&read(path)?, allow_zero)
}

/// Seeded instance with integer costs in `1..=max_cost`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, max_cost: u64, entitlements: bool) -> Instance {
    let costs = (0..n)
        .map(|_| (0..m).map(|_| int(rng.random_range(1..=max_cost) as i64)).collect())
        .collect();
    if entitlements {
        let alpha = (0..n).map(|_| int(rng.random_range(1..=3))).collect();
        Instance::with_entitlements(costs, alpha).expect("positive entitlements")
    } else {
        Instance::new(costs).expect("rectangular costs")
    }
}

pub fn cmd_gen(a: &GenArgs) -> CliResult<String> {
    if a.agents == 0 {
        return Err(CliError::Usage("--agents must be at least 1".into()));
    }
    if a.max_cost == 0 || a.max_cost > i64::MAX as u64 {
        return Err(CliError::Usage("--max-cost must be a positive 64-bit integer".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let inst = random_instance(&mut rng, a.agents, a.chores, a.max_cost, a.entitlements);
    Ok(format!("{}\n", instance_json(&inst)))
}

/// Returns the result JSON, trace lines and exit code.
pub fn cmd_solve(a: &SolveArgs) -> CliResult<(String, Vec<String>, i32)> {
    let inst = load(&a.file, a.allow_zero)?;
    let opts = SolveOptions {
        method: Method::parse(&a.method).ok_or_else(|| CliError::Usage(format!("unknown method {}", a.method)))?,
        tau: a.tau.as_deref().map(parse_rat).transpose()?,
        seed: a.seed,
        oracle_budget: a.budget,
        ..SolveOptions::default()
    };
    let s = solve(&inst, &opts)?;
    let trace = if a.trace {
        s.run.as_ref().map(|r| r.trace()).unwrap_or_default()
    } else {
        Vec::new()
    };
    let doc = json!({
        "bundles": bundles_json(&s.allocation),
        "certificate": certificate_json(&s.certificate),
    });
    let code = if s.certificate.checks.certified() { 0 } else { 3 };
    Ok((format!("{doc}\n"), trace, code))
}

fn report_json(r: &CheckReport) -> String {
    json!({
        "property": r.property,
        "verdict": r.verdict,
        "witness": r.witness.as_ref().map(|w| w.to_string()),
    })
    .to_string()
}

pub fn cmd_check(a: &CheckArgs) -> CliResult<String> {
    let inst = load(&a.file, a.allow_zero)?;
    let text = read(&a.allocation)?;
    let result: ResultFile =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("allocation file: {e}")))?;
    let x = result.allocation(inst.n(), inst.m())?;
    let mut out = String::new();
    for prop in &a.properties {
        let report = match prop.trim() {
            "ef1" => CheckReport {
                property: "ef1",
                ..check_wef1(&inst.unweighted(), &x)?
            },
            "wef1" => check_wef1(&inst, &x)?,
            "po" => check_po_bruteforce(&inst, &x, a.budget)?,
            "fpo" => {
                inst.require_positive()?;
                check_fpo(&inst, &x)?
            }
            "pef1" => CheckReport {
                property: "pef1",
                ..check_pef1(&inst, &x, &result)?
            },
            other => return Err(CliError::Usage(format!("unknown property {other}"))),
        };
        writeln!(out, "{}", report_json(&report)).expect("string write");
    }
    Ok(out)
}

/// Recomputes the perturbed prices from the certificate's seed, weights and
/// shrinking parameter, then checks wpEF1 on the positive-cost chores.
fn check_pef1(inst: &Instance, x: &chorefair::Allocation, result: &ResultFile) -> CliResult<CheckReport> {
    let missing = |what: &str| CliError::Usage(format!("pef1 needs certificate {what} in the allocation file"));
    let cert = result.certificate.as_ref().ok_or_else(|| missing("(none present)"))?;
    let tau = cert.tau.as_ref().ok_or_else(|| missing("tau"))?.parse()?;
    let weights: Vec<Rat> = cert
        .weights
        .as_ref()
        .ok_or_else(|| missing("weights"))?
        .iter()
        .map(|v| v.parse())
        .collect::<Result<_, _>>()?;
    let seed = cert.perturbation_seed.ok_or_else(|| missing("perturbation_seed"))?;
    let pre = preprocess_zero_costs(inst);
    let (pert, _) = certify_perturbation(&pre.instance, seed, DEFAULT_CYCLE_BUDGET)?;
    let sw = shrink(&pert, &weights, &tau)?;
    let prices = dual_prices(&pert, &sw.shrunk);
    Ok(check_wpef1(&prices, &pre.restrict(x), pert.entitlements()))
}

fn eps_line(name: &str, e: &Option<EpsBound>) -> String {
    match e {
        Some(e) => format!("{name} base {} ratio {}", fmt_rat(&e.base), fmt_rat(&e.ratio)),
        None => format!("{name} none"),
    }
}

pub fn cmd_perturb(a: &PerturbArgs) -> CliResult<String> {
    let inst = load(&a.file, false)?;
    if !a.info {
        let (pert, plan) = certify_perturbation(&inst, a.seed, a.budget)?;
        let mut doc: serde_json::Value =
            serde_json::from_str(&instance_json(&pert)).expect("instance JSON is valid");
        doc["perturbation_attempt"] = json!(plan.attempt);
        return Ok(format!("{doc}\n"));
    }
    let t = thresholds(&inst, a.budget, DEFAULT_SUBSET_BUDGET)?;
    let eta = chorefair::perturb::margin_eta(&inst, DEFAULT_SUBSET_BUDGET)?;
    let mut out = String::new();
    let opt = |r: &Option<Rat>| r.as_ref().map_or_else(|| "none".to_string(), fmt_rat);
    writeln!(out, "delta {}", opt(&t.delta)).unwrap();
    match &t.delta_prime {
        Some(d) => writeln!(out, "delta_prime {}", fmt_rat(d)).unwrap(),
        None => writeln!(out, "delta_prime none (no cycle with π ≠ 1)").unwrap(),
    }
    for (name, e) in [
        ("eps_nondegen", &t.eps_nondegen),
        ("eps_ef1", &t.eps_ef1),
        ("eps_po", &t.eps_po),
        ("eps_wef1", &t.eps_wef1),
    ] {
        writeln!(out, "{}", eps_line(name, e)).unwrap();
    }
    writeln!(out, "eta {}", fmt_rat(&eta)).unwrap();
    writeln!(out, "primes {}", serde_json::to_string(&t.primes).expect("serialisable")).unwrap();
    Ok(out)
}

pub const BENCH_HEADER: &str = "trial,n,m,seed,method,iterations,phi_start,ef1,pef1,fpo_perturbed,po_original,fallback";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_bool(b: Option<bool>) -> String {
    b.map_or_else(String::new, |v| v.to_string())
}

/// One trial: returns the CSV row and whether the answer came from a fallback.
fn bench_trial(a: &BenchArgs, method: Method, trial: u64) -> (String, bool) {
    let seed = a.seed.wrapping_add(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(a.agents.clone());
    let m = rng.random_range(a.chores.clone());
    let inst = random_instance(&mut rng, n, m, a.max_cost, a.entitlements);
    let opts = SolveOptions {
        method,
        seed,
        ..SolveOptions::default()
    };
    match solve(&inst, &opts) {
        Ok(s) => {
            let c = &s.certificate;
            let row = format!(
                "{trial},{n},{m},{seed},{},{},{},{},{},{},{},{}",
                c.method.name(),
                c.iterations,
                c.phi_start.map_or_else(String::new, |p| p.to_string()),
                c.checks.ef1,
                opt_bool(c.checks.pef1),
                c.checks.fpo_perturbed,
                opt_bool(c.checks.po_original),
                csv_field(c.fallback.as_deref().unwrap_or("")),
            );
            (row, c.fallback.is_some())
        }
        Err(e) => (
            format!("{trial},{n},{m},{seed},error,,,,,,,{}", csv_field(&e.to_string())),
            true,
        ),
    }
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<String> {
    if *a.agents.start() == 0 {
        return Err(CliError::Usage("--agents must start at 1 or more".into()));
    }
    if a.max_cost == 0 || a.max_cost > i64::MAX as u64 {
        return Err(CliError::Usage("--max-cost must be a positive 64-bit integer".into()));
    }
    let method = Method::parse(&a.method).ok_or_else(|| CliError::Usage(format!("unknown method {}", a.method)))?;
    let rows = par::map_range(a.trials as usize, |t| bench_trial(a, method, t as u64));
    let mut out = String::new();
    writeln!(out, "{BENCH_HEADER}").unwrap();
    let mut fallbacks = 0;
    for (row, fell_back) in &rows {
        writeln!(out, "{row}").unwrap();
        fallbacks += usize::from(*fell_back);
    }
    let rate = if rows.is_empty() {
        0.0
    } else {
        fallbacks as f64 / rows.len() as f64
    };
    writeln!(out, "# fallback_rate {rate:.4} ({fallbacks}/{})", rows.len()).unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..4").unwrap(), 2..=4);
        assert_eq!(parse_range("2..=4").unwrap(), 2..=4);
        assert_eq!(parse_range("3").unwrap(), 3..=3);
        assert!(parse_range("4..2").is_err());
        assert!(parse_range("a..2").is_err());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a, b"), "\"a, b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }
}
