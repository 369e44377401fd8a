//! Command-line front end: model checking, witness generation, certificate
//! checking and randomized self-checking.
//!
//! Exit codes: 0 success (proved, written, CERTIFIED, no discrepancy),
//! 1 negative answer (counterexample, REJECTED, fuzz discrepancy),
//! 2 usage, input or I/O error, 3 undecided (bound reached, INDETERMINATE).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use stratcert::certify::{certify, CertReport, CertifyOptions, CheckStatus, Embedding, Verdict};
use stratcert::circuit::Circuit;
use stratcert::format::{is_aiger_expressible, parse_extended, print_aiger, print_extended};
use stratcert::kind::{prove, KindCheck, KindCheckRecord, KindResult, KindVerdict};
use stratcert::oracle::{random_stratified_circuit, reachable_unsafe, GenParams};
use stratcert::sat::{Budget, SatConfig, SolverChoice};
use stratcert::trace::Trace;
use stratcert::witness::{build_witness, witness_stratified, WitnessError, WitnessLayout};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "stratcert", version, about = "k-induction with checkable witness circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// SAT back end: `embedded` or `cmd:<command>` for a DIMACS solver.
    #[arg(long, global = true, default_value = "embedded")]
    pub solver: SolverChoice,
    /// Conflict limit per SAT call.
    #[arg(long, global = true)]
    pub max_conflicts: Option<u64>,
    /// Time limit per SAT call, in seconds.
    #[arg(long, global = true)]
    pub timeout: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
    /// Worker threads for independent checks and fuzz seeds.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for the embedded solver and, for `fuzz`, the first circuit.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prove or refute the property by k-induction.
    Check {
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        kmax: usize,
    },
    /// Build the witness circuit for a k-inductive property.
    Witness {
        model: PathBuf,
        #[arg(short, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Do not build a witness for k = 1; the model is its own certificate.
        #[arg(long)]
        skip_k1: bool,
    },
    /// Check a witness circuit against the model.
    Certify {
        model: PathBuf,
        /// Witness file; required unless `--pipeline` is given.
        witness: Option<PathBuf>,
        #[arg(short, value_parser = clap::value_parser!(u64).range(1..))]
        k: Option<u64>,
        /// Model check, build the witness and certify it in one run.
        #[arg(long, conflicts_with = "witness")]
        pipeline: bool,
        #[arg(long, default_value_t = 20)]
        kmax: usize,
        /// Latch correspondence file: lines `<model latch> <witness latch>`.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Write each SAT check to `<dir>/<check>.cnf`.
        #[arg(long)]
        dump_cnf: Option<PathBuf>,
        /// With `--pipeline`, certify a k = 1 proof on the model itself.
        #[arg(long)]
        skip_k1: bool,
    },
    /// Cross-check the whole pipeline against the explicit-state oracles on
    /// random circuits.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 4)]
        latches: usize,
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, default_value_t = 16)]
        gates: usize,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn sat_config(common: &Common) -> SatConfig {
    SatConfig {
        solver: common.solver.clone(),
        budget: Budget {
            max_conflicts: common.max_conflicts,
            max_time: common.timeout.map(Duration::from_secs_f64),
        },
        seed: common.seed,
    }
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_extended(&bytes).with_context(|| format!("cannot parse {}", path.display()))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sat = sat_config(&cli.common);
    let json = cli.common.report == ReportFormat::Json;
    match &cli.command {
        Command::Check { model, kmax } => {
            let c = read_circuit(model)?;
            cmd_check(&c, *kmax, &sat, json, out)
        }
        Command::Witness {
            model,
            k,
            output,
            skip_k1,
        } => {
            let c = read_circuit(model)?;
            cmd_witness(&c, *k as usize, output.as_deref(), *skip_k1, out, err)
        }
        Command::Certify {
            model,
            witness,
            k,
            pipeline,
            kmax,
            mapping,
            dump_cnf,
            skip_k1,
        } => {
            let c = read_circuit(model)?;
            if let Some(dir) = dump_cnf {
                std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            let options = CertifyOptions {
                sat: sat.clone(),
                jobs: cli.common.jobs,
                dump_dir: dump_cnf.clone(),
            };
            let report = if *pipeline {
                match pipeline_report(&c, *kmax, *skip_k1, &options, out, json)? {
                    Ok(report) => report,
                    Err(code) => return Ok(code),
                }
            } else {
                let Some(path) = witness else {
                    bail!("certify needs a witness file or --pipeline");
                };
                let w = read_circuit(path)?;
                let emb = match mapping {
                    Some(m) => {
                        let text =
                            std::fs::read_to_string(m).with_context(|| format!("cannot read {}", m.display()))?;
                        Embedding::parse(&text, c.latches().len())?
                    }
                    None => Embedding::by_name(&c, &w)?,
                };
                certify(&c, &w, k.map(|k| k as usize), &emb, &options)
            };
            write_cert_report(&report, json, out)?;
            Ok(match report.verdict {
                Verdict::Certified => EXIT_OK,
                Verdict::Rejected => EXIT_NEGATIVE,
                Verdict::Indeterminate => EXIT_UNDECIDED,
            })
        }
        Command::Fuzz {
            count,
            latches,
            inputs,
            gates,
            kmax,
        } => {
            let params = GenParams {
                latches: *latches,
                inputs: *inputs,
                gates: *gates,
            };
            cmd_fuzz(cli.common.seed, *count, params, *kmax, &sat, cli.common.jobs, json, out)
        }
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    verdict: &'static str,
    k: Option<usize>,
    kmax: Option<usize>,
    trace: Option<&'a Trace>,
    checks: &'a [KindCheckRecord],
}

fn cmd_check(c: &Circuit, kmax: usize, sat: &SatConfig, json: bool, out: &mut dyn Write) -> Result<i32> {
    let result = match prove(c, kmax, sat) {
        Ok(r) => r,
        Err(e) => {
            writeln!(out, "undecided: {e}")?;
            return Ok(EXIT_UNDECIDED);
        }
    };
    write_kind_report(c, &result, json, out)?;
    Ok(match result.verdict {
        KindVerdict::Proved { .. } => EXIT_OK,
        KindVerdict::Counterexample(_) => EXIT_NEGATIVE,
        KindVerdict::BoundReached { .. } => EXIT_UNDECIDED,
    })
}

fn write_kind_report(c: &Circuit, result: &KindResult, json: bool, out: &mut dyn Write) -> Result<()> {
    if !json {
        return write_kind_text(c, result, out);
    }
    let (verdict, k, kmax, trace) = match &result.verdict {
        KindVerdict::Proved { k } => ("proved", Some(*k), None, None),
        KindVerdict::Counterexample(t) => ("counterexample", None, None, Some(t)),
        KindVerdict::BoundReached { kmax } => ("bound_reached", None, Some(*kmax), None),
    };
    let report = CheckReport {
        verdict,
        k,
        kmax,
        trace,
        checks: &result.checks,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn write_kind_text(c: &Circuit, result: &KindResult, out: &mut dyn Write) -> Result<()> {
    for r in &result.checks {
        let status = if r.unsat { "UNSAT" } else { "SAT" };
        let check = match r.check {
            KindCheck::Bmc => "bmc",
            KindCheck::Consecution => "consecution",
        };
        writeln!(out, "k={} {check} {status} {:.6}s", r.k, r.stats.wall_seconds)?;
    }
    match &result.verdict {
        KindVerdict::Proved { k } => writeln!(out, "proved k={k}")?,
        KindVerdict::Counterexample(t) => {
            writeln!(out, "counterexample length {}", t.len())?;
            write!(out, "{}", t.render(c))?;
        }
        KindVerdict::BoundReached { kmax } => writeln!(out, "bound reached kmax={kmax}")?,
    }
    Ok(())
}

fn witness_text(w: &Circuit) -> String {
    if is_aiger_expressible(w) {
        print_aiger(w).expect("checked expressible")
    } else {
        print_extended(w)
    }
}

fn cmd_witness(
    c: &Circuit,
    k: usize,
    output: Option<&Path>,
    skip_k1: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    if k == 1 && skip_k1 {
        writeln!(err, "k=1: no witness generated; the model is its own certificate")?;
        return Ok(EXIT_OK);
    }
    let w = match build_witness(c, k) {
        Ok(w) => w,
        Err(e @ WitnessError::NotStratified { .. }) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_USAGE);
        }
        Err(e) => bail!(e),
    };
    let text = witness_text(&w.circuit);
    match output {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    writeln!(
        err,
        "witness k={k} latches={} inputs={} gates={} (model latches={} gates={})",
        w.circuit.latches().len(),
        w.circuit.inputs().len(),
        w.circuit.gates().len(),
        c.latches().len(),
        c.gates().len()
    )?;
    Ok(EXIT_OK)
}

/// Model checks `c` and certifies the resulting witness. When the property
/// is not proved, reports the model checking result and returns its exit
/// code instead.
fn pipeline_report(
    c: &Circuit,
    kmax: usize,
    skip_k1: bool,
    options: &CertifyOptions,
    out: &mut dyn Write,
    json: bool,
) -> Result<std::result::Result<CertReport, i32>> {
    let result = prove(c, kmax, &options.sat)?;
    let k = match result.verdict {
        KindVerdict::Proved { k } => k,
        KindVerdict::Counterexample(_) | KindVerdict::BoundReached { .. } => {
            write_kind_report(c, &result, json, out)?;
            let undecided = matches!(result.verdict, KindVerdict::BoundReached { .. });
            return Ok(Err(if undecided { EXIT_UNDECIDED } else { EXIT_NEGATIVE }));
        }
    };
    let identity = Embedding::identity(c.latches().len());
    if k == 1 && skip_k1 {
        return Ok(Ok(certify(c, c, Some(1), &identity, options)));
    }
    let w = build_witness(c, k)?;
    Ok(Ok(certify(c, &w.circuit, Some(k), &identity, options)))
}

fn write_cert_report(report: &CertReport, json: bool, out: &mut dyn Write) -> Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(report)?)?;
        return Ok(());
    }
    if let Some(e) = &report.error {
        writeln!(out, "error={e}")?;
    }
    for r in &report.checks {
        let status = serde_json::to_value(r.status)?;
        write!(
            out,
            "check={} status={} seconds={:.6} vars={} clauses={}",
            r.name,
            status.as_str().unwrap_or_default(),
            r.seconds,
            r.variables,
            r.clauses
        )?;
        if let Some(s) = &r.stats {
            write!(out, " conflicts={} decisions={}", s.conflicts, s.decisions)?;
        }
        writeln!(out)?;
        if let Some(cycle) = &r.cycle {
            let mut shown = cycle.clone();
            shown.extend(cycle.first().cloned());
            writeln!(out, "  cycle {}", shown.join(" -> "))?;
        }
        if let Some(cex) = &r.counterexample {
            let cells: Vec<String> = cex
                .iter()
                .map(|a| format!("{}@{}={}", a.name, a.frame, u8::from(a.value)))
                .collect();
            writeln!(out, "  counterexample {}", cells.join(" "))?;
        }
        if let Some(m) = &r.message {
            writeln!(out, "  message {m}")?;
        }
    }
    let verdict = serde_json::to_value(report.verdict)?;
    writeln!(out, "sat_calls={}", report.sat_calls)?;
    if let Some(k) = report.k {
        writeln!(out, "k={k}")?;
    }
    writeln!(out, "verdict={}", verdict.as_str().unwrap_or_default())?;
    Ok(())
}

#[derive(Default, Serialize)]
struct FuzzSummary {
    seeds: u64,
    proved: u64,
    counterexample: u64,
    bound_reached: u64,
    certified: u64,
    discrepancies: Vec<String>,
}

/// Runs the pipeline on one generated circuit and lists every disagreement
/// with the oracles. The returned verdict is `proved`, `counterexample` or
/// `bound_reached`.
fn fuzz_one(seed: u64, params: GenParams, kmax: usize, sat: &SatConfig) -> (&'static str, bool, Vec<String>) {
    let mut problems = Vec::new();
    let c = random_stratified_circuit(seed, params);
    let oracle = reachable_unsafe(&c).ok();
    let result = match prove(&c, kmax, sat) {
        Ok(r) => r,
        Err(e) => return ("bound_reached", false, vec![format!("seed {seed}: solver error {e}")]),
    };
    let identity = Embedding::identity(c.latches().len());
    let options = CertifyOptions {
        sat: sat.clone(),
        ..CertifyOptions::default()
    };
    match result.verdict {
        KindVerdict::Proved { k } => {
            if let Some(Some(_)) = oracle {
                problems.push(format!(
                    "seed {seed}: proved at k={k} but the oracle finds a counterexample"
                ));
            }
            let w = match build_witness(&c, k) {
                Ok(w) => w,
                Err(e) => return ("proved", false, vec![format!("seed {seed}: witness failed: {e}")]),
            };
            if !witness_stratified(&w.circuit) {
                problems.push(format!("seed {seed}: witness resets not stratified"));
            }
            let expected = WitnessLayout::expected_latches(k, c.latches().len(), c.inputs().len());
            if w.circuit.latches().len() != expected {
                problems.push(format!(
                    "seed {seed}: witness has {} latches, expected {expected}",
                    w.circuit.latches().len()
                ));
            }
            let report = certify(&c, &w.circuit, Some(k), &identity, &options);
            let certified = report.verdict == Verdict::Certified;
            if !certified {
                let failing: Vec<String> = report
                    .checks
                    .iter()
                    .filter(|r| r.status != CheckStatus::Pass)
                    .map(|r| r.name.to_string())
                    .collect();
                problems.push(format!(
                    "seed {seed}: witness for k={k} not certified ({})",
                    failing.join(", ")
                ));
            }
            ("proved", certified, problems)
        }
        KindVerdict::Counterexample(trace) => {
            if !trace.is_counterexample(&c) {
                problems.push(format!("seed {seed}: reported trace is not a counterexample"));
            }
            match oracle {
                Some(Some(shortest)) if shortest.len() != trace.len() => problems.push(format!(
                    "seed {seed}: counterexample length {} but the shortest has length {}",
                    trace.len(),
                    shortest.len()
                )),
                Some(None) => problems.push(format!("seed {seed}: counterexample on a safe circuit")),
                _ => {}
            }
            for k in 1..=kmax.min(4) {
                if let Ok(w) = build_witness(&c, k) {
                    if certify(&c, &w.circuit, Some(k), &identity, &options).verdict == Verdict::Certified {
                        problems.push(format!("seed {seed}: unsafe circuit certified at k={k}"));
                    }
                }
            }
            ("counterexample", false, problems)
        }
        KindVerdict::BoundReached { .. } => ("bound_reached", false, problems),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz(
    first: u64,
    count: u64,
    params: GenParams,
    kmax: usize,
    sat: &SatConfig,
    jobs: usize,
    json: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let results: Vec<_> = pool.install(|| {
        (first..first + count)
            .into_par_iter()
            .map(|seed| fuzz_one(seed, params, kmax, sat))
            .collect()
    });
    let mut summary = FuzzSummary {
        seeds: count,
        ..FuzzSummary::default()
    };
    for (verdict, certified, problems) in results {
        match verdict {
            "proved" => summary.proved += 1,
            "counterexample" => summary.counterexample += 1,
            _ => summary.bound_reached += 1,
        }
        summary.certified += u64::from(certified);
        summary.discrepancies.extend(problems);
    }
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    } else {
        for d in &summary.discrepancies {
            writeln!(out, "discrepancy: {d}")?;
        }
        writeln!(
            out,
            "seeds={} proved={} certified={} counterexample={} bound_reached={} discrepancies={}",
            summary.seeds,
            summary.proved,
            summary.certified,
            summary.counterexample,
            summary.bound_reached,
            summary.discrepancies.len()
        )?;
    }
    Ok(if summary.discrepancies.is_empty() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}
