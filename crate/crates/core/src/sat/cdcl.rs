//! Conflict-driven clause learning: two watched literals with blockers,
//! first-UIP learning with local minimization, VSIDS with phase saving,
//! geometric restarts and activity-based learnt clause deletion.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Budget, Model, SatError, SatOutcome, SatStatus, SolverStats};
use crate::encode::CnfFormula;

/// Internal literal: `2 * var + negated`, with `var` zero-based.
type ILit = u32;

const NO_REASON: u32 = u32::MAX;
const RESTART_FIRST: f64 = 100.0;
const RESTART_GROWTH: f64 = 1.5;
const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RANDOM_DECISION_FREQ: f64 = 0.01;

#[derive(Clone, Copy)]
struct Watcher {
    clause: u32,
    blocker: ILit,
}

struct Clause {
    lits: Vec<ILit>,
    learnt: bool,
    activity: f64,
}

enum SearchResult {
    Sat,
    Unsat,
    Restart,
}

pub(super) struct Solver {
    num_vars: usize,
    clauses: Vec<Clause>,
    /// `watches[l]` holds the clauses watching `¬l`, visited when `l` becomes true.
    watches: Vec<Vec<Watcher>>,
    /// Per variable: 1 true, -1 false, 0 unassigned.
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    num_learnts: usize,
    max_learnts: f64,
    ok: bool,
    rng: ChaCha8Rng,
    stats: SolverStats,
}

fn ilit(dimacs: i32) -> ILit {
    ((dimacs.unsigned_abs() - 1) << 1) | (dimacs < 0) as u32
}

impl Solver {
    pub(super) fn new(f: &CnfFormula, seed: u64) -> Solver {
        let n = f.num_vars() as usize;
        let mut s = Solver {
            num_vars: n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![0; n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::new(n),
            polarity: vec![false; n],
            seen: vec![false; n],
            num_learnts: 0,
            max_learnts: 0.0,
            ok: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: SolverStats::default(),
        };
        for c in f.clauses() {
            if !s.ok {
                break;
            }
            let lits: Vec<ILit> = c.iter().map(|&l| ilit(l)).collect();
            s.add_original(lits);
        }
        s.max_learnts = (s.clauses.len() as f64 / 3.0).max(1000.0);
        s
    }

    fn value(&self, lit: ILit) -> i8 {
        let a = self.assigns[(lit >> 1) as usize];
        if lit & 1 == 1 {
            -a
        } else {
            a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn add_original(&mut self, mut lits: Vec<ILit>) {
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return;
        }
        // Only level-0 units are assigned while clauses are being added.
        if lits.iter().any(|&l| self.value(l) == 1) {
            return;
        }
        lits.retain(|&l| self.value(l) == 0);
        match lits.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(lits[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(lits, false);
            }
        }
    }

    fn attach(&mut self, lits: Vec<ILit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[(lits[0] ^ 1) as usize].push(Watcher {
            clause: cref,
            blocker: lits[1],
        });
        self.watches[(lits[1] ^ 1) as usize].push(Watcher {
            clause: cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            activity: 0.0,
        });
        if learnt {
            self.num_learnts += 1;
        }
        cref
    }

    fn enqueue(&mut self, lit: ILit, reason: u32) {
        let v = (lit >> 1) as usize;
        debug_assert_eq!(self.assigns[v], 0);
        self.assigns[v] = if lit & 1 == 1 { -1 } else { 1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.clause as usize;
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let watcher = Watcher {
                    clause: w.clause,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == 1 {
                    ws[j] = watcher;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != -1 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(l ^ 1) as usize].push(watcher);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = watcher;
                j += 1;
                if self.value(first) == -1 {
                    conflict = Some(w.clause);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.clause);
                }
            }
            ws.truncate(j);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause, asserting
    /// literal first, and the level to backtrack to.
    fn analyze(&mut self, conflict: u32) -> (Vec<ILit>, u32) {
        let mut learnt: Vec<ILit> = vec![0];
        let mut pending = 0usize;
        let mut index = self.trail.len();
        let mut cref = conflict as usize;
        let mut asserting: Option<ILit> = None;
        let current = self.decision_level();
        loop {
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let start = usize::from(asserting.is_some());
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = (q >> 1) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[(self.trail[index] >> 1) as usize] {
                    break;
                }
            }
            let p = self.trail[index];
            let v = (p >> 1) as usize;
            self.seen[v] = false;
            pending -= 1;
            asserting = Some(p);
            if pending == 0 {
                break;
            }
            cref = self.reason[v] as usize;
        }
        learnt[0] = asserting.expect("conflict at level > 0 has a UIP") ^ 1;

        // Drop literals implied by other literals of the clause.
        let original = learnt.clone();
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let v = (l >> 1) as usize;
            let r = self.reason[v];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|&q| {
                    let u = (q >> 1) as usize;
                    self.seen[u] || self.level[u] == 0
                });
            if !redundant {
                kept.push(l);
            }
        }
        for &l in &original {
            self.seen[(l >> 1) as usize] = false;
        }
        learnt = kept;

        let backtrack = if learnt.len() == 1 {
            0
        } else {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[(learnt[k] >> 1) as usize] > self.level[(learnt[best] >> 1) as usize] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            self.level[(learnt[1] >> 1) as usize]
        };
        (learnt, backtrack)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for k in (lim..self.trail.len()).rev() {
            let lit = self.trail[k];
            let v = (lit >> 1) as usize;
            self.polarity[v] = lit & 1 == 0;
            self.assigns[v] = 0;
            self.reason[v] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<ILit> {
        let mut next = None;
        if !self.heap.is_empty() && self.rng.gen_bool(RANDOM_DECISION_FREQ) {
            let v = self.heap.data[self.rng.gen_range(0..self.heap.data.len())];
            if self.assigns[v] == 0 {
                next = Some(v);
            }
        }
        while next.is_none() {
            let v = self.heap.pop(&self.activity)?;
            if self.assigns[v] == 0 {
                next = Some(v);
            }
        }
        let v = next?;
        Some(((v as u32) << 1) | u32::from(!self.polarity[v]))
    }

    fn locked(&self, cref: usize) -> bool {
        let first = self.clauses[cref].lits[0];
        let v = (first >> 1) as usize;
        self.reason[v] == cref as u32 && self.value(first) == 1
    }

    /// Deletes the less active half of the learnt clauses, keeping binary
    /// clauses and reasons, then compacts the clause store.
    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len()).filter(|&c| self.clauses[c].learnt).collect();
        learnts.sort_by(|&a, &b| self.clauses[a].activity.total_cmp(&self.clauses[b].activity));
        let mut remove = vec![false; self.clauses.len()];
        for &c in &learnts[..learnts.len() / 2] {
            if self.clauses[c].lits.len() > 2 && !self.locked(c) {
                remove[c] = true;
            }
        }
        let mut remap = vec![NO_REASON; self.clauses.len()];
        let old = std::mem::take(&mut self.clauses);
        for (i, c) in old.into_iter().enumerate() {
            if remove[i] {
                self.num_learnts -= 1;
            } else {
                remap[i] = self.clauses.len() as u32;
                self.clauses.push(c);
            }
        }
        for r in &mut self.reason {
            if *r != NO_REASON {
                *r = remap[*r as usize];
            }
        }
        for w in &mut self.watches {
            w.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            self.watches[(c.lits[0] ^ 1) as usize].push(Watcher {
                clause: i as u32,
                blocker: c.lits[1],
            });
            self.watches[(c.lits[1] ^ 1) as usize].push(Watcher {
                clause: i as u32,
                blocker: c.lits[0],
            });
        }
    }

    fn search(&mut self, conflict_limit: u64, budget: Budget, start: Instant) -> Result<SearchResult, SatError> {
        let mut conflicts = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    return Ok(SearchResult::Unsat);
                }
                let (learnt, backtrack) = self.analyze(conflict);
                self.cancel_until(backtrack);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let asserting = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref as usize);
                    self.enqueue(asserting, cref);
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                if self.exhausted(budget, start) {
                    return Err(SatError::BudgetExhausted {
                        stats: self.stats.clone(),
                    });
                }
            } else {
                if conflicts >= conflict_limit {
                    self.cancel_until(0);
                    return Ok(SearchResult::Restart);
                }
                if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                match self.pick_branch() {
                    None => return Ok(SearchResult::Sat),
                    Some(lit) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(lit, NO_REASON);
                    }
                }
            }
        }
    }

    fn exhausted(&self, budget: Budget, start: Instant) -> bool {
        if budget.max_conflicts.is_some_and(|m| self.stats.conflicts >= m) {
            return true;
        }
        self.stats.conflicts.is_multiple_of(64) && budget.max_time.is_some_and(|t| start.elapsed() >= t)
    }

    pub(super) fn solve(mut self, budget: Budget) -> Result<SatOutcome, SatError> {
        let start = Instant::now();
        let mut status = SatStatus::Unsat;
        if self.ok && self.propagate().is_none() {
            let mut restart = 0i32;
            loop {
                let limit = (RESTART_FIRST * RESTART_GROWTH.powi(restart)) as u64;
                match self.search(limit, budget, start) {
                    Ok(SearchResult::Sat) => {
                        status = SatStatus::Sat;
                        break;
                    }
                    Ok(SearchResult::Unsat) => break,
                    Ok(SearchResult::Restart) => {
                        restart += 1;
                        self.stats.restarts += 1;
                    }
                    Err(SatError::BudgetExhausted { mut stats }) => {
                        stats.wall_seconds = start.elapsed().as_secs_f64();
                        return Err(SatError::BudgetExhausted { stats });
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        self.stats.wall_seconds = start.elapsed().as_secs_f64();
        let model = (status == SatStatus::Sat).then(|| {
            let mut values = vec![false; self.num_vars + 1];
            for v in 0..self.num_vars {
                values[v + 1] = self.assigns[v] == 1;
            }
            Model::from_values(values)
        });
        Ok(SatOutcome {
            status,
            model,
            stats: self.stats,
        })
    }
}

/// Binary max-heap of variables keyed by activity.
struct VarHeap {
    data: Vec<usize>,
    /// Position of each variable in `data`, or `usize::MAX` when absent.
    index: Vec<usize>,
}

impl VarHeap {
    fn new(n: usize) -> VarHeap {
        VarHeap {
            data: (0..n).collect(),
            index: (0..n).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn contains(&self, v: usize) -> bool {
        self.index[v] != usize::MAX
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.index[v] = self.data.len();
        self.data.push(v);
        self.sift_up(self.data.len() - 1, act);
    }

    fn increased(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.index[v], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.data.first()?;
        let last = self.data.pop().expect("non-empty");
        self.index[top] = usize::MAX;
        if !self.data.is_empty() {
            self.data[0] = last;
            self.index[last] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.data[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.data[parent]] >= act[v] {
                break;
            }
            self.data[i] = self.data[parent];
            self.index[self.data[i]] = i;
            i = parent;
        }
        self.data[i] = v;
        self.index[v] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.data[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.data.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.data.len() && act[self.data[right]] > act[self.data[left]] {
                right
            } else {
                left
            };
            if act[self.data[child]] <= act[v] {
                break;
            }
            self.data[i] = self.data[child];
            self.index[self.data[i]] = i;
            i = child;
        }
        self.data[i] = v;
        self.index[v] = i;
    }
}
