//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always appear in `cargo test` output.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stratcert::certify::{certify, check_queries, CertifyOptions, CheckName, CheckStatus, Embedding, Verdict};
use stratcert::circuit::{Circuit, CircuitBuilder};
use stratcert::family::{chain_reset_circuit, counter, counter_fixture};
use stratcert::format::{parse_aiger, parse_extended, print_aiger, print_extended};
use stratcert::kind::{bmc_check, consecution_check};
use stratcert::mutation::{mutate, Mutation};
use stratcert::oracle::{
    brute_force_sat, kinductive_bruteforce, random_format_circuit, random_stratified_circuit, reachable_unsafe,
    GenParams,
};
use stratcert::sat::{check_model, solve_with, SatConfig, SatStatus, SolverChoice};
use stratcert::witness::{build_witness, witness_stratified, WitnessLayout};

/// Criteria expected to fail, with the reason recorded in the project notes.
/// A listed criterion still counts as a failure if it fails for any other
/// reason than the one its check recognizes.
const EXPECTED_FAILURES: &[usize] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
    /// Set when a failure is exactly the documented one.
    documented: bool,
}

impl Outcome {
    fn check(pass: bool, detail: String) -> Outcome {
        Outcome {
            pass,
            detail,
            documented: false,
        }
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = stratcert_cli::run(
        std::iter::once("stratcert").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8_lossy(&out).into_owned())
}

fn identity(c: &Circuit) -> Embedding {
    Embedding::identity(c.latches().len())
}

/// Shared per-witness results from the counter family and the random corpus.
#[derive(Default)]
struct Ledger {
    witnesses: usize,
    size_law_violations: Vec<String>,
    unstratified: Vec<String>,
    unsound: Vec<String>,
}

impl Ledger {
    fn record_witness(&mut self, tag: &str, c: &Circuit, k: usize, w: &Circuit) {
        self.witnesses += 1;
        let expected = WitnessLayout::expected_latches(k, c.latches().len(), c.inputs().len());
        if w.latches().len() != expected {
            self.size_law_violations.push(format!(
                "{tag} k={k}: {} latches, expected {expected}",
                w.latches().len()
            ));
        }
        if !witness_stratified(w) {
            self.unstratified.push(format!("{tag} k={k}"));
        }
    }
}

fn criterion_counter_family(ledger: &mut Ledger) -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut instances = 0;
    let mut problems = Vec::new();
    for width in 4..=8usize {
        for m in [3u64, 4, 7] {
            for b in [m + 1, m + 3, m + 5] {
                if b >= 1 << width {
                    continue;
                }
                instances += 1;
                let tag = format!("counter({width},{m},{b})");
                let c = counter(width, m, b);
                let expected = (b - m + 1) as usize;
                let path = dir.path().join(format!("{width}_{m}_{b}.aag"));
                std::fs::write(&path, print_aiger(&c).unwrap()).unwrap();
                let model = path.to_str().unwrap();

                let (code, out) = cli(&["check", model, "--kmax", "12"]);
                let proved = out
                    .lines()
                    .find_map(|l| l.strip_prefix("proved k="))
                    .and_then(|k| k.parse().ok());
                if code != 0 || proved != Some(expected) {
                    problems.push(format!("{tag}: check gave {proved:?}, expected k={expected}"));
                    continue;
                }
                let minimal =
                    kinductive_bruteforce(&c, expected).unwrap() && !kinductive_bruteforce(&c, expected - 1).unwrap();
                if !minimal {
                    problems.push(format!("{tag}: oracle disagrees that k={expected} is minimal"));
                }
                let safe = reachable_unsafe(&c).unwrap().is_none();
                let (code, out) = cli(&["certify", model, "--pipeline", "--kmax", "12", "--jobs", "2"]);
                let certified = code == 0 && out.lines().any(|l| l == "verdict=CERTIFIED");
                if !certified {
                    problems.push(format!("{tag}: witness not certified"));
                }
                if certified && !safe {
                    ledger.unsound.push(tag.clone());
                }
                let w = build_witness(&c, expected).unwrap();
                ledger.record_witness(&tag, &c, expected, &w.circuit);
            }
        }
    }
    let pass = problems.is_empty() && instances >= 20;
    let detail = if pass {
        format!("{instances} instances proved at k=b-m+1 (minimal per oracle) and CERTIFIED")
    } else {
        format!("{instances} instances; {}", problems.join("; "))
    };
    Outcome::check(pass, detail)
}

struct CorpusStats {
    instances: usize,
    simulation_failures: Vec<String>,
    equivalence_mismatches: Vec<String>,
    certified: usize,
    unsafe_circuits: usize,
}

fn corpus_params(seed: u64) -> GenParams {
    GenParams {
        latches: 1 + (seed % 6) as usize,
        inputs: ((seed / 6) % 4) as usize,
        gates: 24,
    }
}

fn run_corpus(ledger: &mut Ledger) -> CorpusStats {
    let sat = SatConfig::default();
    let options = CertifyOptions::default();
    let mut stats = CorpusStats {
        instances: 0,
        simulation_failures: Vec::new(),
        equivalence_mismatches: Vec::new(),
        certified: 0,
        unsafe_circuits: 0,
    };
    for seed in 0..500 {
        let c = random_stratified_circuit(seed, corpus_params(seed));
        let safe = reachable_unsafe(&c).unwrap().is_none();
        stats.unsafe_circuits += usize::from(!safe);
        for k in 1..=4 {
            stats.instances += 1;
            let tag = format!("seed {seed}");
            let w = build_witness(&c, k).unwrap();
            ledger.record_witness(&tag, &c, k, &w.circuit);
            let report = certify(&c, &w.circuit, Some(k), &identity(&c), &options);
            let passes = |names: &[CheckName]| names.iter().all(|&n| report.status(n) == Some(CheckStatus::Pass));
            if !passes(&[CheckName::Reset, CheckName::Trans, CheckName::Prop]) {
                stats.simulation_failures.push(format!("{tag} k={k}"));
            }
            let invariant = passes(&[CheckName::Init, CheckName::Consist, CheckName::Consec]);
            let direct =
                bmc_check(&c, k, &sat).unwrap().0.is_unsat() && consecution_check(&c, k, &sat).unwrap().0.is_unsat();
            if invariant != direct {
                stats
                    .equivalence_mismatches
                    .push(format!("{tag} k={k}: witness {invariant}, direct {direct}"));
            }
            if report.verdict == Verdict::Certified {
                stats.certified += 1;
                if !safe {
                    ledger.unsound.push(format!("{tag} k={k}"));
                }
            }
        }
    }
    stats
}

fn criterion_lemma(ledger: &Ledger) -> Outcome {
    let mut chains = 0;
    let mut failures = ledger.unstratified.clone();
    for depth in 3..=7 {
        for pattern in 0..4usize {
            let negate: Vec<bool> = (0..depth).map(|j| (pattern >> (j % 2)) & 1 == 1).collect();
            let c = chain_reset_circuit(depth, &negate, pattern % 2 == 0);
            chains += 1;
            for k in 1..=3 {
                let w = build_witness(&c, k).unwrap();
                if !witness_stratified(&w.circuit) {
                    failures.push(format!("chain depth {depth} pattern {pattern} k={k}"));
                }
            }
        }
    }
    Outcome::check(
        failures.is_empty() && chains >= 20,
        format!(
            "{} corpus witnesses and {chains} chain-reset circuits stratified; {} failures",
            ledger.witnesses,
            failures.len()
        ),
    )
}

/// Rewrites the resets of 2-3 distinct witness latches into a cycle, some
/// edges going through a gate.
fn inject_cycle(w: &Circuit, rng: &mut ChaCha8Rng) -> Circuit {
    let n = w.latches().len();
    let len = rng.gen_range(2..=3.min(n));
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < len {
        let j = rng.gen_range(0..n);
        if !picked.contains(&j) {
            picked.push(j);
        }
    }
    let mut b = CircuitBuilder::from_circuit(w);
    for (i, &j) in picked.iter().enumerate() {
        let from = w.latches()[picked[(i + 1) % len]].lit().negate_if(rng.gen());
        let reset = if rng.gen_bool(0.5) {
            // A different latch, so the gate cannot fold away the edge.
            let mut other = w.latches()[rng.gen_range(0..n)].lit();
            while other.node() == from.node() {
                other = w.latches()[rng.gen_range(0..n)].lit();
            }
            b.and(from, other.negate_if(rng.gen()))
        } else {
            from
        };
        b.set_reset(w.latches()[j].lit(), reset);
    }
    b.finish(w.property())
}

fn criterion_cycle_rejection() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rejected = 0;
    let mut problems = Vec::new();
    for i in 0..50u64 {
        let c = random_stratified_circuit(
            1000 + i,
            GenParams {
                latches: 3,
                inputs: 1,
                gates: 12,
            },
        );
        let k = 1 + (i % 3) as usize;
        let w = build_witness(&c, k).unwrap();
        let broken = inject_cycle(&w.circuit, &mut rng);
        let model_path = dir.path().join(format!("m{i}.aag"));
        let witness_path = dir.path().join(format!("w{i}.aag"));
        std::fs::write(&model_path, print_extended(&c)).unwrap();
        std::fs::write(&witness_path, print_extended(&broken)).unwrap();
        let (code, out) = cli(&[
            "certify",
            model_path.to_str().unwrap(),
            witness_path.to_str().unwrap(),
            "--report",
            "json",
        ]);
        let report: stratcert::certify::CertReport = match serde_json::from_str(&out) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("case {i}: unreadable report ({e}), exit {code}"));
                continue;
            }
        };
        let strat = report.check(CheckName::Strat);
        let ok_shape = code == 1
            && report.verdict == Verdict::Rejected
            && report.sat_calls == 0
            && report.checks.len() == 1
            && strat.is_some_and(|r| r.status == CheckStatus::Fail);
        if !ok_shape {
            problems.push(format!("case {i}: not rejected at strat before SAT calls"));
            continue;
        }
        let parsed = parse_extended(std::fs::read(&witness_path).unwrap().as_slice()).unwrap();
        let by_label: HashMap<String, usize> = (0..parsed.latches().len())
            .map(|j| (parsed.latch_label(j), parsed.latches()[j].node))
            .collect();
        let cycle: Option<Vec<usize>> = strat
            .unwrap()
            .cycle
            .as_ref()
            .and_then(|names| names.iter().map(|n| by_label.get(n).copied()).collect());
        match cycle {
            Some(nodes) if parsed.dependency_graph().contains_cycle(&nodes) => rejected += 1,
            _ => problems.push(format!("case {i}: reported cycle is not in the dependency graph")),
        }
    }
    Outcome::check(
        problems.is_empty(),
        format!(
            "{rejected}/50 injected cycles rejected at strat with verified cycles, no SAT calls {}",
            problems.join("; ")
        ),
    )
}

fn criterion_mutations() -> Outcome {
    let cases = [
        ("counter fixture", counter_fixture(), 2),
        ("counter(4,3,6)", counter(4, 3, 6), 4),
        ("counter(5,4,9)", counter(5, 4, 9), 6),
        ("counter(4,7,10)", counter(4, 7, 10), 4),
    ];
    let mut survivors: Vec<(Mutation, String)> = Vec::new();
    let mut killed = 0;
    for (name, c, k) in &cases {
        let w = build_witness(c, *k).unwrap();
        for m in Mutation::ALL {
            let report = certify(c, &mutate(c, &w, m), Some(*k), &identity(c), &CertifyOptions::default());
            let fails = report
                .checks
                .iter()
                .any(|r| r.name != CheckName::Strat && r.status == CheckStatus::Fail);
            if fails {
                killed += 1;
            } else {
                survivors.push((m, name.to_string()));
            }
        }
    }
    let total = cases.len() * Mutation::ALL.len();
    if survivors.is_empty() {
        return Outcome::check(true, format!("{killed}/{total} mutants killed"));
    }
    // The documented survivor: dropping the monotonicity conjunct, which the
    // explicit-state oracle confirms leaves a valid inductive certificate.
    let only_monotone = survivors.iter().all(|(m, _)| *m == Mutation::DropPart(0));
    let oracle_confirms = cases
        .iter()
        .filter(|(_, c, k)| c.latches().len() * k + k <= 16)
        .all(|(_, c, k)| {
            let mutant = mutate(c, &build_witness(c, *k).unwrap(), Mutation::DropPart(0));
            kinductive_bruteforce(&mutant, 1).unwrap_or(false)
        });
    let kinds_killed = Mutation::ALL
        .iter()
        .filter(|m| !survivors.iter().any(|(s, _)| s == *m))
        .count();
    let names: Vec<String> = survivors.iter().map(|(m, c)| format!("{m} on {c}")).collect();
    Outcome {
        pass: false,
        detail: format!(
            "{killed}/{total} mutants killed, {kinds_killed}/10 mutation kinds always killed; survivors: {}{}",
            names.join(", "),
            if only_monotone && oracle_confirms {
                " (equivalent mutant: the oracle shows the weakened property is still 1-inductive)"
            } else {
                ""
            }
        ),
        documented: only_monotone && oracle_confirms,
    }
}

fn external_solver() -> Option<String> {
    if let Ok(cmd) = std::env::var("STRATCERT_EXTERNAL_SOLVER") {
        if !cmd.trim().is_empty() {
            return Some(cmd);
        }
    }
    let path = std::env::var_os("PATH")?;
    ["kissat", "cadical", "minisat"].iter().find_map(|name| {
        std::env::split_paths(&path)
            .map(|dir| dir.join(name))
            .find(|p| p.is_file())
            .map(|p| p.to_string_lossy().into_owned())
    })
}

fn criterion_solver_trust() -> Outcome {
    let embedded = SatConfig::default();
    let external = external_solver().map(|cmd| SatConfig {
        solver: SolverChoice::External(cmd),
        ..SatConfig::default()
    });
    let mut enumerated = 0;
    let mut solved = 0;
    let mut external_runs = 0;
    let mut problems = Vec::new();
    for seed in 0..500 {
        let c = random_stratified_circuit(seed, corpus_params(seed));
        for k in 1..=4 {
            let w = build_witness(&c, k).unwrap();
            for q in check_queries(&c, &w.circuit, &identity(&c)) {
                solved += 1;
                let outcome = match solve_with(&q.formula, &embedded) {
                    Ok(o) => o,
                    Err(e) => {
                        problems.push(format!("seed {seed} k={k} {}: {e}", q.name));
                        continue;
                    }
                };
                let sat = outcome.status == SatStatus::Sat;
                if let Some(model) = &outcome.model {
                    if !check_model(&q.formula, model) {
                        problems.push(format!("seed {seed} k={k} {}: model fails check", q.name));
                    }
                }
                let primaries = q.primary_vars();
                if primaries.len() <= 20 {
                    enumerated += 1;
                    match brute_force_sat(&q.formula, &primaries, 20) {
                        Ok(expected) if expected == sat => {}
                        Ok(expected) => problems.push(format!(
                            "seed {seed} k={k} {}: embedded {sat}, enumeration {expected}",
                            q.name
                        )),
                        Err(e) => problems.push(format!("seed {seed} k={k} {}: {e}", q.name)),
                    }
                }
                if let Some(ext) = &external {
                    external_runs += 1;
                    match solve_with(&q.formula, ext) {
                        Ok(o) if (o.status == SatStatus::Sat) == sat => {}
                        Ok(_) => problems.push(format!("seed {seed} k={k} {}: external solver disagrees", q.name)),
                        Err(e) => problems.push(format!("seed {seed} k={k} {}: external solver error {e}", q.name)),
                    }
                }
            }
        }
    }
    let external_note = if external.is_some() {
        format!("{external_runs} cross-checked with the external solver")
    } else {
        "no external DIMACS solver available, external cross-check skipped".to_string()
    };
    Outcome::check(
        problems.is_empty(),
        format!(
            "{solved} check formulas solved, {enumerated} with <= 20 projected variables match enumeration, all models verified; {external_note}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_round_trip() -> Outcome {
    let mut problems = Vec::new();
    for seed in 0..1000u64 {
        let plain = random_format_circuit(seed, false);
        let text = print_aiger(&plain).unwrap();
        if parse_aiger(text.as_bytes()).as_ref() != Ok(&plain) {
            problems.push(format!("aiger seed {seed}"));
        }
        let ext = random_format_circuit(seed, true);
        let text = print_extended(&ext);
        if parse_extended(text.as_bytes()).as_ref() != Ok(&ext) {
            problems.push(format!("extended seed {seed}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut panics = 0;
    let mut rejected = 0;
    let samples = 100_000;
    let previous_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..samples {
        let bytes: Vec<u8> = if i % 2 == 0 {
            let len = rng.gen_range(0..96);
            (0..len).map(|_| rng.gen()).collect()
        } else {
            let mut text = print_extended(&random_format_circuit(rng.gen(), true)).into_bytes();
            for _ in 0..rng.gen_range(1..4) {
                let at = rng.gen_range(0..text.len());
                text[at] = if rng.gen_bool(0.5) {
                    rng.gen()
                } else {
                    b"0123456789 \n-ar"[rng.gen_range(0..15)]
                };
            }
            text
        };
        let result = catch_unwind(AssertUnwindSafe(|| {
            (parse_aiger(&bytes).is_err(), parse_extended(&bytes).is_err())
        }));
        match result {
            Ok((a, b)) => rejected += usize::from(a || b),
            Err(_) => panics += 1,
        }
    }
    std::panic::set_hook(previous_hook);
    if panics > 0 {
        problems.push(format!("{panics} parser panics"));
    }
    Outcome::check(
        problems.is_empty(),
        format!(
            "1000 circuits per format round-trip exactly; {samples} random or corrupted inputs parsed without panic ({rejected} rejected){}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

struct Tally {
    passed: usize,
    total: usize,
    unexpected: usize,
}

impl Tally {
    fn report(&mut self, n: usize, name: &str, outcome: Outcome, seconds: f64) {
        use std::io::Write;
        self.total += 1;
        self.passed += usize::from(outcome.pass);
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        let known = !outcome.pass && outcome.documented && EXPECTED_FAILURES.contains(&n);
        if !outcome.pass && !known {
            self.unexpected += 1;
        }
        let note = if known { " [known limitation, see notes]" } else { "" };
        println!(
            "criterion {n:>2} {status} {name} ({seconds:.1}s): {}{note}",
            outcome.detail.trim_end()
        );
        let _ = std::io::stdout().flush();
    }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, f64) {
    let t = Instant::now();
    let outcome = f();
    (outcome, t.elapsed().as_secs_f64())
}

fn main() {
    let started = Instant::now();
    let mut ledger = Ledger::default();
    let mut tally = Tally {
        passed: 0,
        total: 0,
        unexpected: 0,
    };

    let (o, t) = timed(|| criterion_counter_family(&mut ledger));
    tally.report(1, "counter family", o, t);

    let t = Instant::now();
    let corpus = run_corpus(&mut ledger);
    let corpus_time = t.elapsed().as_secs_f64();
    tally.report(
        2,
        "simulation checks on random witnesses",
        Outcome::check(
            corpus.simulation_failures.is_empty(),
            format!(
                "{} witnesses, {} simulation failures {}",
                corpus.instances,
                corpus.simulation_failures.len(),
                corpus.simulation_failures.join(", ")
            ),
        ),
        corpus_time,
    );
    tally.report(
        3,
        "witness invariant equals direct k-induction",
        Outcome::check(
            corpus.equivalence_mismatches.is_empty(),
            format!(
                "{} (circuit, k) pairs, {} mismatches {}",
                corpus.instances,
                corpus.equivalence_mismatches.len(),
                corpus.equivalence_mismatches.join(", ")
            ),
        ),
        corpus_time,
    );
    tally.report(
        4,
        "soundness against explicit-state oracle",
        Outcome::check(
            ledger.unsound.is_empty(),
            format!(
                "{} corpus certificates all on safe circuits; {} unsafe circuits never certified; violations: {}",
                corpus.certified,
                corpus.unsafe_circuits,
                ledger.unsound.len()
            ),
        ),
        corpus_time,
    );
    let (o, t) = timed(|| criterion_lemma(&ledger));
    tally.report(5, "witness resets stratified", o, t);
    let (o, t) = timed(criterion_cycle_rejection);
    tally.report(6, "cyclic resets rejected at strat", o, t);
    let (o, t) = timed(criterion_mutations);
    tally.report(7, "mutation kill rate", o, t);
    let (o, t) = timed(criterion_solver_trust);
    tally.report(8, "solver trust", o, t);
    let (o, t) = timed(criterion_round_trip);
    tally.report(9, "format round-trip and parser robustness", o, t);
    tally.report(
        10,
        "witness size law",
        Outcome::check(
            ledger.size_law_violations.is_empty(),
            format!(
                "{} witnesses have k*|L| + (k-1)*|I| + k latches; {} violations {}",
                ledger.witnesses,
                ledger.size_law_violations.len(),
                ledger.size_law_violations.join(", ")
            ),
        ),
        0.0,
    );

    println!(
        "acceptance: {}/{} criteria pass, {} unexpected failures, {:.1}s",
        tally.passed,
        tally.total,
        tally.unexpected,
        started.elapsed().as_secs_f64()
    );
    if tally.unexpected > 0 {
        std::process::exit(1);
    }
}
