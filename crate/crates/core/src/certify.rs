//! Certificate checking: a witness circuit `C'` certifies the property of
//! `C` when its resets are stratified, it simulates `C` (reset, transition
//! and property checks) and its property is an inductive invariant
//! (initiation, consistency and consecution checks). Each of the six
//! semantic checks is a SAT query that must be UNSAT.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{ternary_and, ternary_lit, ternary_xor, Circuit, Lit, Stratification};
use crate::encode::{emit_dimacs, encode_reset_all, encode_unrolling, tseitin_cone, CnfFormula, FrameMap};
use crate::sat::{solve_with, Model, SatConfig, SolverStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckName {
    Strat,
    Reset,
    Trans,
    Prop,
    Init,
    Consist,
    Consec,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Strat,
        CheckName::Reset,
        CheckName::Trans,
        CheckName::Prop,
        CheckName::Init,
        CheckName::Consist,
        CheckName::Consec,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Strat => "strat",
            CheckName::Reset => "reset",
            CheckName::Trans => "trans",
            CheckName::Prop => "prop",
            CheckName::Init => "init",
            CheckName::Consist => "consist",
            CheckName::Consec => "consec",
        }
    }
}

impl std::fmt::Display for CheckName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Certified,
    Rejected,
    Indeterminate,
}

/// One variable of a failing assignment. `frame` is 0 except for the
/// consecution check, where frame 1 is the successor step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub frame: usize,
    pub name: String,
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub status: CheckStatus,
    pub seconds: f64,
    pub variables: u32,
    pub clauses: usize,
    /// Lifted failing assignment; unlisted variables may take any value.
    pub counterexample: Option<Vec<Assignment>>,
    /// Reset dependency cycle, as latch names, when the strat check fails.
    pub cycle: Option<Vec<String>>,
    pub stats: Option<SolverStats>,
    pub message: Option<String>,
}

impl CheckRecord {
    fn new(name: CheckName, status: CheckStatus) -> CheckRecord {
        CheckRecord {
            name,
            status,
            seconds: 0.0,
            variables: 0,
            clauses: 0,
            counterexample: None,
            cycle: None,
            stats: None,
            message: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub k: Option<usize>,
    pub verdict: Verdict,
    pub checks: Vec<CheckRecord>,
    pub sat_calls: usize,
    /// Why certification stopped before running the checks, if it did.
    pub error: Option<String>,
}

impl CertReport {
    fn from_checks(k: Option<usize>, checks: Vec<CheckRecord>, sat_calls: usize) -> CertReport {
        let verdict = if checks.iter().any(|r| r.status == CheckStatus::Fail) {
            Verdict::Rejected
        } else if checks.len() == CheckName::ALL.len() && checks.iter().all(|r| r.status == CheckStatus::Pass) {
            Verdict::Certified
        } else {
            Verdict::Indeterminate
        };
        CertReport {
            k,
            verdict,
            checks,
            sat_calls,
            error: None,
        }
    }

    pub fn check(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|r| r.name == name)
    }

    pub fn status(&self, name: CheckName) -> Option<CheckStatus> {
        self.check(name).map(|r| r.status)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("the circuits have different input counts ({original} vs {witness})")]
    InputCount { original: usize, witness: usize },
    #[error("mapping has {found} entries but the circuit has {expected} latches")]
    Incomplete { expected: usize, found: usize },
    #[error("latch {0} is mapped to a witness latch that does not exist")]
    OutOfRange(usize),
    #[error("witness latch {0} is the image of more than one latch")]
    NotInjective(usize),
    #[error("no witness latch is named '{0}'; supply a mapping file")]
    MissingName(String),
    #[error("more than one witness latch is named '{0}'; supply a mapping file")]
    AmbiguousName(String),
    #[error("mapping line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Correspondence between the latches of `C` and latches of `C'`; inputs
/// correspond by position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    /// `latches[j]` is the position in `C'` of the image of latch `j` of `C`.
    pub latches: Vec<usize>,
}

impl Embedding {
    pub fn identity(num_latches: usize) -> Embedding {
        Embedding {
            latches: (0..num_latches).collect(),
        }
    }

    /// Matches each latch of `c` (its symbol, or `l<position>` without one)
    /// against the explicit latch symbols of `witness`.
    pub fn by_name(c: &Circuit, witness: &Circuit) -> Result<Embedding, EmbeddingError> {
        let mut latches = Vec::with_capacity(c.latches().len());
        for j in 0..c.latches().len() {
            let label = c.latch_label(j);
            let mut hits = witness
                .latches()
                .iter()
                .enumerate()
                .filter(|(_, l)| witness.name(l.node) == Some(label.as_str()))
                .map(|(i, _)| i);
            let first = hits.next().ok_or_else(|| EmbeddingError::MissingName(label.clone()))?;
            if hits.next().is_some() {
                return Err(EmbeddingError::AmbiguousName(label));
            }
            latches.push(first);
        }
        Ok(Embedding { latches })
    }

    /// Reads lines `<latch position in C> <latch position in C'>`. Blank
    /// lines and text after `#` are ignored.
    pub fn parse(text: &str, num_latches: usize) -> Result<Embedding, EmbeddingError> {
        let mut latches = vec![None; num_latches];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| EmbeddingError::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [from, to] = fields[..] else {
                return Err(err(format!("expected two latch positions, found '{line}'")));
            };
            let from: usize = from.parse().map_err(|_| err(format!("bad position '{from}'")))?;
            let to: usize = to.parse().map_err(|_| err(format!("bad position '{to}'")))?;
            let slot = latches
                .get_mut(from)
                .ok_or_else(|| err(format!("latch {from} does not exist")))?;
            if slot.replace(to).is_some() {
                return Err(err(format!("latch {from} is mapped twice")));
            }
        }
        let found = latches.iter().filter(|l| l.is_some()).count();
        if found != num_latches {
            return Err(EmbeddingError::Incomplete {
                expected: num_latches,
                found,
            });
        }
        Ok(Embedding {
            latches: latches.into_iter().flatten().collect(),
        })
    }

    /// Structural extension check: same inputs, every latch mapped to a
    /// distinct existing witness latch.
    pub fn validate(&self, c: &Circuit, witness: &Circuit) -> Result<(), EmbeddingError> {
        if c.inputs().len() != witness.inputs().len() {
            return Err(EmbeddingError::InputCount {
                original: c.inputs().len(),
                witness: witness.inputs().len(),
            });
        }
        if self.latches.len() != c.latches().len() {
            return Err(EmbeddingError::Incomplete {
                expected: c.latches().len(),
                found: self.latches.len(),
            });
        }
        let mut used = vec![false; witness.latches().len()];
        for (j, &i) in self.latches.iter().enumerate() {
            let slot = used.get_mut(i).ok_or(EmbeddingError::OutOfRange(j))?;
            if std::mem::replace(slot, true) {
                return Err(EmbeddingError::NotInjective(i));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct CertifyOptions {
    pub sat: SatConfig,
    /// Number of checks solved concurrently; 0 and 1 both mean sequential.
    pub jobs: usize,
    /// When set, each SAT check is also written to `<dir>/<check>.cnf`.
    pub dump_dir: Option<PathBuf>,
}

/// A witness-circuit variable that the checks quantify over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Input { frame: usize, index: usize },
    Latch { index: usize },
}

/// One SAT check: the formula and the variables a failing model is
/// reported over.
#[derive(Clone, Debug)]
pub struct CheckQuery {
    pub name: CheckName,
    pub formula: CnfFormula,
    primaries: Vec<(Slot, i32)>,
}

impl CheckQuery {
    /// The CNF variables of the witness inputs and latches; every other
    /// variable of the formula is determined by them.
    pub fn primary_vars(&self) -> Vec<u32> {
        self.primaries.iter().map(|&(_, v)| v.unsigned_abs()).collect()
    }
}

struct Context<'a> {
    original: Option<(&'a Circuit, &'a Embedding)>,
    witness: &'a Circuit,
    invariant: Lit,
}

/// Allocates the witness inputs and latches of frame 0 and binds the
/// original circuit's variables to their images.
fn shared_frame(
    c: &Circuit,
    witness: &Circuit,
    emb: &Embedding,
    f: &mut CnfFormula,
) -> (FrameMap, FrameMap, Vec<(Slot, i32)>) {
    let mut wmap = FrameMap::new();
    wmap.allocate_state(witness, 0, f);
    let primaries = frame0_primaries(witness, &mut wmap, f);
    let mut cmap = FrameMap::new();
    for (j, &node) in c.inputs().iter().enumerate() {
        cmap.bind(0, node, wmap.var(f, 0, witness.inputs()[j]));
    }
    for (j, latch) in c.latches().iter().enumerate() {
        cmap.bind(0, latch.node, wmap.var(f, 0, witness.latches()[emb.latches[j]].node));
    }
    (wmap, cmap, primaries)
}

fn frame0_primaries(witness: &Circuit, wmap: &mut FrameMap, f: &mut CnfFormula) -> Vec<(Slot, i32)> {
    let mut primaries: Vec<(Slot, i32)> = Vec::new();
    for (index, &node) in witness.inputs().iter().enumerate() {
        primaries.push((Slot::Input { frame: 0, index }, wmap.var(f, 0, node)));
    }
    for (index, l) in witness.latches().iter().enumerate() {
        primaries.push((Slot::Latch { index }, wmap.var(f, 0, l.node)));
    }
    primaries
}

/// Miter over pairs of functions: satisfiable iff some pair differs.
fn miter(
    c: &Circuit,
    witness: &Circuit,
    emb: &Embedding,
    name: CheckName,
    pick: impl Fn(&crate::circuit::LatchDef) -> Lit,
) -> CheckQuery {
    let mut f = CnfFormula::new();
    let (mut wmap, mut cmap, primaries) = shared_frame(c, witness, emb, &mut f);
    let mut diffs = Vec::new();
    for (j, latch) in c.latches().iter().enumerate() {
        let a = tseitin_cone(c, pick(latch), &mut cmap, 0, &mut f);
        let b = tseitin_cone(witness, pick(&witness.latches()[emb.latches[j]]), &mut wmap, 0, &mut f);
        if a != b {
            diffs.push(f.xor2(a, b));
        }
    }
    let any = f.or_all(&diffs);
    f.add_clause([any]);
    CheckQuery {
        name,
        formula: f,
        primaries,
    }
}

/// The reset, transition and property checks of `witness` against `c`.
pub fn simulation_queries(c: &Circuit, witness: &Circuit, emb: &Embedding) -> Vec<CheckQuery> {
    let reset = miter(c, witness, emb, CheckName::Reset, |l| l.reset);
    let trans = miter(c, witness, emb, CheckName::Trans, |l| l.next);

    let mut f = CnfFormula::new();
    let (mut wmap, mut cmap, primaries) = shared_frame(c, witness, emb, &mut f);
    let p_witness = tseitin_cone(witness, witness.property(), &mut wmap, 0, &mut f);
    let p = tseitin_cone(c, c.property(), &mut cmap, 0, &mut f);
    f.add_clause([p_witness]);
    f.add_clause([-p]);
    let prop = CheckQuery {
        name: CheckName::Prop,
        formula: f,
        primaries,
    };
    vec![reset, trans, prop]
}

/// Initiation, consistency and consecution of `invariant` in `witness`,
/// with the witness property as the property to imply.
pub fn invariant_queries(witness: &Circuit, invariant: Lit) -> Vec<CheckQuery> {
    let mut f = CnfFormula::new();
    let mut map = FrameMap::new();
    map.allocate_state(witness, 0, &mut f);
    let primaries = frame0_primaries(witness, &mut map, &mut f);
    encode_reset_all(witness, &mut map, &mut f);
    let phi = tseitin_cone(witness, invariant, &mut map, 0, &mut f);
    f.add_clause([-phi]);
    let init = CheckQuery {
        name: CheckName::Init,
        formula: f,
        primaries,
    };

    let mut f = CnfFormula::new();
    let mut map = FrameMap::new();
    map.allocate_state(witness, 0, &mut f);
    let primaries = frame0_primaries(witness, &mut map, &mut f);
    let phi = tseitin_cone(witness, invariant, &mut map, 0, &mut f);
    let p = tseitin_cone(witness, witness.property(), &mut map, 0, &mut f);
    f.add_clause([phi]);
    f.add_clause([-p]);
    let consist = CheckQuery {
        name: CheckName::Consist,
        formula: f,
        primaries,
    };

    let mut f = CnfFormula::new();
    let mut map = FrameMap::new();
    map.allocate_state(witness, 0, &mut f);
    map.allocate_state(witness, 1, &mut f);
    let mut primaries = frame0_primaries(witness, &mut map, &mut f);
    for (index, &node) in witness.inputs().iter().enumerate() {
        primaries.push((Slot::Input { frame: 1, index }, map.var(&mut f, 1, node)));
    }
    encode_unrolling(witness, 1, &mut map, &mut f);
    let phi0 = tseitin_cone(witness, invariant, &mut map, 0, &mut f);
    let phi1 = tseitin_cone(witness, invariant, &mut map, 1, &mut f);
    f.add_clause([phi0]);
    f.add_clause([-phi1]);
    let consec = CheckQuery {
        name: CheckName::Consec,
        formula: f,
        primaries,
    };
    vec![init, consist, consec]
}

/// Three-valued value of the violation a query asserts, over partial
/// values of the witness inputs (per frame) and frame-0 latches.
#[allow(clippy::manual_try_fold)] // None is "unknown" here, not a short-circuit
fn violation(
    ctx: &Context<'_>,
    name: CheckName,
    inputs: &[Vec<Option<bool>>],
    latches: &[Option<bool>],
) -> Option<bool> {
    let w = ctx.witness;
    let wv = w.eval_ternary(&inputs[0], latches);
    let or_all = |vals: Vec<Option<bool>>| {
        vals.into_iter().fold(Some(false), |acc, v| {
            ternary_and(acc.map(|a| !a), v.map(|b| !b)).map(|x| !x)
        })
    };
    match name {
        CheckName::Reset | CheckName::Trans | CheckName::Prop => {
            let (c, emb) = ctx.original.expect("simulation checks need the original circuit");
            let mapped: Vec<Option<bool>> = emb.latches.iter().map(|&i| latches[i]).collect();
            let cv = c.eval_ternary(&inputs[0], &mapped);
            match name {
                CheckName::Prop => ternary_and(
                    ternary_lit(&wv, w.property()),
                    ternary_lit(&cv, c.property()).map(|v| !v),
                ),
                _ => {
                    let diffs = c
                        .latches()
                        .iter()
                        .zip(&emb.latches)
                        .map(|(l, &i)| {
                            let wl = &w.latches()[i];
                            let (a, b) = if name == CheckName::Reset {
                                (l.reset, wl.reset)
                            } else {
                                (l.next, wl.next)
                            };
                            ternary_xor(ternary_lit(&cv, a), ternary_lit(&wv, b))
                        })
                        .collect();
                    or_all(diffs)
                }
            }
        }
        CheckName::Init => {
            let in_reset = w
                .latches()
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.is_uninitialized())
                .fold(Some(true), |acc, (i, l)| {
                    ternary_and(acc, ternary_xor(latches[i], ternary_lit(&wv, l.reset)).map(|x| !x))
                });
            ternary_and(in_reset, ternary_lit(&wv, ctx.invariant).map(|v| !v))
        }
        CheckName::Consist => ternary_and(
            ternary_lit(&wv, ctx.invariant),
            ternary_lit(&wv, w.property()).map(|v| !v),
        ),
        CheckName::Consec => {
            let next: Vec<Option<bool>> = w.latches().iter().map(|l| ternary_lit(&wv, l.next)).collect();
            let wv1 = w.eval_ternary(&inputs[1], &next);
            ternary_and(
                ternary_lit(&wv, ctx.invariant),
                ternary_lit(&wv1, ctx.invariant).map(|v| !v),
            )
        }
        CheckName::Strat => unreachable!("strat is not a SAT check"),
    }
}

/// Greedy don't-care lifting: each primary variable in turn is made unknown
/// if the violation still evaluates to true without it.
fn lift(ctx: &Context<'_>, query: &CheckQuery, model: &Model) -> Vec<Assignment> {
    let w = ctx.witness;
    let frames = if query.name == CheckName::Consec { 2 } else { 1 };
    let mut inputs = vec![vec![None; w.inputs().len()]; frames];
    let mut latches = vec![None; w.latches().len()];
    for &(slot, var) in &query.primaries {
        let value = Some(model.lit(var));
        match slot {
            Slot::Input { frame, index } => inputs[frame][index] = value,
            Slot::Latch { index } => latches[index] = value,
        }
    }
    let lifting_sound = violation(ctx, query.name, &inputs, &latches) == Some(true);
    let mut kept = Vec::new();
    for &(slot, _) in &query.primaries {
        let cell = match slot {
            Slot::Input { frame, index } => &mut inputs[frame][index],
            Slot::Latch { index } => &mut latches[index],
        };
        let saved = cell.take();
        let still = lifting_sound && violation(ctx, query.name, &inputs, &latches) == Some(true);
        if !still {
            match slot {
                Slot::Input { frame, index } => inputs[frame][index] = saved,
                Slot::Latch { index } => latches[index] = saved,
            }
            let (frame, name) = match slot {
                Slot::Input { frame, index } => (frame, w.input_label(index)),
                Slot::Latch { index } => (0, w.latch_label(index)),
            };
            kept.push(Assignment {
                frame,
                name,
                value: saved.expect("primary values start known"),
            });
        }
    }
    kept
}

fn run_query(ctx: &Context<'_>, query: &CheckQuery, options: &CertifyOptions) -> CheckRecord {
    let start = Instant::now();
    let mut record = CheckRecord::new(query.name, CheckStatus::Indeterminate);
    record.variables = query.formula.num_vars();
    record.clauses = query.formula.num_clauses();
    if let Some(dir) = &options.dump_dir {
        let path = dir.join(format!("{}.cnf", query.name));
        if let Err(e) = std::fs::write(&path, emit_dimacs(&query.formula)) {
            record.message = Some(format!("cannot write {}: {e}", path.display()));
        }
    }
    match solve_with(&query.formula, &options.sat) {
        Ok(out) => {
            record.stats = Some(out.stats);
            match out.model {
                None => record.status = CheckStatus::Pass,
                Some(model) => {
                    record.status = CheckStatus::Fail;
                    record.counterexample = Some(lift(ctx, query, &model));
                }
            }
        }
        Err(e) => {
            record.message = Some(e.to_string());
            if let crate::sat::SatError::BudgetExhausted { stats } = e {
                record.stats = Some(stats);
            }
        }
    }
    record.seconds = start.elapsed().as_secs_f64();
    record
}

fn run_queries(ctx: &Context<'_>, queries: &[CheckQuery], options: &CertifyOptions) -> Vec<CheckRecord> {
    let jobs = options.jobs.max(1);
    if jobs == 1 {
        return queries.iter().map(|q| run_query(ctx, q, options)).collect();
    }
    let mut records = Vec::with_capacity(queries.len());
    for chunk in queries.chunks(jobs) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|q| scope.spawn(move || run_query(ctx, q, options)))
                .collect();
            for h in handles {
                records.push(h.join().expect("check thread panicked"));
            }
        });
    }
    records
}

/// The reset, transition and property checks.
pub fn check_simulation(c: &Circuit, witness: &Circuit, emb: &Embedding, options: &CertifyOptions) -> Vec<CheckRecord> {
    let ctx = Context {
        original: Some((c, emb)),
        witness,
        invariant: witness.property(),
    };
    run_queries(&ctx, &simulation_queries(c, witness, emb), options)
}

/// The initiation, consistency and consecution checks of `invariant`.
pub fn check_invariant(witness: &Circuit, invariant: Lit, options: &CertifyOptions) -> Vec<CheckRecord> {
    let ctx = Context {
        original: None,
        witness,
        invariant,
    };
    run_queries(&ctx, &invariant_queries(witness, invariant), options)
}

/// All six SAT checks of a certificate, in report order.
pub fn check_queries(c: &Circuit, witness: &Circuit, emb: &Embedding) -> Vec<CheckQuery> {
    let mut queries = simulation_queries(c, witness, emb);
    queries.extend(invariant_queries(witness, witness.property()));
    queries
}

/// Runs the stratification check and, if it passes, the six SAT checks.
/// A structural mismatch between the circuits or a reset cycle rejects the
/// certificate without any SAT call.
pub fn certify(
    c: &Circuit,
    witness: &Circuit,
    k: Option<usize>,
    emb: &Embedding,
    options: &CertifyOptions,
) -> CertReport {
    let structural = emb.validate(c, witness).map_err(|e| e.to_string()).and_then(|_| {
        let violations = witness.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(format!(
                "witness is invalid: {}",
                violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            ))
        }
    });
    if let Err(error) = structural {
        return CertReport {
            k,
            verdict: Verdict::Rejected,
            checks: Vec::new(),
            sat_calls: 0,
            error: Some(error),
        };
    }

    let start = Instant::now();
    let stratification = witness.stratification();
    let mut strat = CheckRecord::new(CheckName::Strat, CheckStatus::Pass);
    if let Stratification::Cyclic { cycle } = stratification {
        strat.status = CheckStatus::Fail;
        strat.cycle = Some(
            cycle
                .iter()
                .map(|&n| witness.latch_label(witness.latch_index(n).expect("cycle nodes are latches")))
                .collect(),
        );
    }
    strat.seconds = start.elapsed().as_secs_f64();
    if strat.status == CheckStatus::Fail {
        return CertReport::from_checks(k, vec![strat], 0);
    }

    let ctx = Context {
        original: Some((c, emb)),
        witness,
        invariant: witness.property(),
    };
    let queries = check_queries(c, witness, emb);
    let mut checks = vec![strat];
    checks.extend(run_queries(&ctx, &queries, options));
    CertReport::from_checks(k, checks, queries.len())
}
