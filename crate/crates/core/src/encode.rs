//! Tseitin encoding of circuit cones and unrollings into CNF, and DIMACS I/O.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, Lit, NodeKind};

/// Clause database over variables `1..=num_vars`. Literals are nonzero
/// integers whose sign is the polarity, as in DIMACS.
#[derive(Clone, Debug, Default)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<i32>>,
    true_lit: Option<i32>,
}

impl PartialEq for CnfFormula {
    fn eq(&self, other: &Self) -> bool {
        self.num_vars == other.num_vars && self.clauses == other.clauses
    }
}

impl Eq for CnfFormula {}

impl CnfFormula {
    pub fn new() -> CnfFormula {
        CnfFormula::default()
    }

    /// Panics if a literal is zero or exceeds `num_vars`.
    pub fn from_clauses(num_vars: u32, clauses: Vec<Vec<i32>>) -> CnfFormula {
        for &lit in clauses.iter().flatten() {
            assert!(lit != 0 && lit.unsigned_abs() <= num_vars, "literal {lit} out of range");
        }
        CnfFormula {
            num_vars,
            clauses,
            true_lit: None,
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn new_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    pub fn add_clause(&mut self, clause: impl Into<Vec<i32>>) {
        let clause = clause.into();
        debug_assert!(clause.iter().all(|&l| l != 0 && l.unsigned_abs() <= self.num_vars));
        self.clauses.push(clause);
    }

    /// A literal fixed to true; allocated with its unit clause on first use.
    pub fn true_lit(&mut self) -> i32 {
        if let Some(t) = self.true_lit {
            return t;
        }
        let t = self.new_var();
        self.add_clause([t]);
        self.true_lit = Some(t);
        t
    }

    /// Fresh variable equivalent to `a ∧ b`.
    pub fn and2(&mut self, a: i32, b: i32) -> i32 {
        let g = self.new_var();
        self.add_clause([-g, a]);
        self.add_clause([-g, b]);
        self.add_clause([g, -a, -b]);
        g
    }

    /// Fresh variable equivalent to `a ⊕ b`.
    pub fn xor2(&mut self, a: i32, b: i32) -> i32 {
        let x = self.new_var();
        self.add_clause([-x, a, b]);
        self.add_clause([-x, -a, -b]);
        self.add_clause([x, -a, b]);
        self.add_clause([x, a, -b]);
        x
    }

    /// Fresh variable equivalent to the disjunction; the empty disjunction is false.
    pub fn or_all(&mut self, lits: &[i32]) -> i32 {
        if lits.is_empty() {
            return -self.true_lit();
        }
        if let [single] = lits {
            return *single;
        }
        let o = self.new_var();
        for &l in lits {
            self.add_clause([o, -l]);
        }
        let mut big = vec![-o];
        big.extend_from_slice(lits);
        self.add_clause(big);
        o
    }

    /// Asserts `a ↔ b` with two binary clauses.
    pub fn add_equal(&mut self, a: i32, b: i32) {
        self.add_clause([-a, b]);
        self.add_clause([a, -b]);
    }
}

/// Assignment of CNF variables to circuit nodes per time frame.
///
/// Gate variables are cached per `(frame, node)`, so a gate shared by several
/// cones in one frame is encoded once. Different frames never share.
#[derive(Clone, Debug, Default)]
pub struct FrameMap {
    vars: HashMap<(usize, usize), i32>,
}

impl FrameMap {
    pub fn new() -> FrameMap {
        FrameMap::default()
    }

    pub fn get(&self, frame: usize, node: usize) -> Option<i32> {
        self.vars.get(&(frame, node)).copied()
    }

    /// Binds `(frame, node)` to an existing CNF literal, for instance a
    /// variable owned by another circuit's frame map.
    pub fn bind(&mut self, frame: usize, node: usize, lit: i32) {
        self.vars.insert((frame, node), lit);
    }

    /// The variable of `(frame, node)`, allocated if missing.
    pub fn var(&mut self, out: &mut CnfFormula, frame: usize, node: usize) -> i32 {
        *self.vars.entry((frame, node)).or_insert_with(|| out.new_var())
    }

    /// Allocates the variables of every input and latch of `c` at `frame`,
    /// in ascending node order.
    pub fn allocate_state(&mut self, c: &Circuit, frame: usize, out: &mut CnfFormula) {
        let mut nodes: Vec<usize> = c.inputs().to_vec();
        nodes.extend(c.latches().iter().map(|l| l.node));
        nodes.sort_unstable();
        for node in nodes {
            self.var(out, frame, node);
        }
    }

    pub fn input_vars(&mut self, c: &Circuit, frame: usize, out: &mut CnfFormula) -> Vec<i32> {
        c.inputs().iter().map(|&n| self.var(out, frame, n)).collect()
    }

    pub fn latch_vars(&mut self, c: &Circuit, frame: usize, out: &mut CnfFormula) -> Vec<i32> {
        c.latches().iter().map(|l| self.var(out, frame, l.node)).collect()
    }
}

/// Returns a CNF literal equivalent to `root` at `frame`, adding three
/// clauses per newly encoded AND gate.
pub fn tseitin_cone(c: &Circuit, root: Lit, frame: &mut FrameMap, t: usize, out: &mut CnfFormula) -> i32 {
    if root.is_const() {
        let tl = out.true_lit();
        return if root == Lit::TRUE { tl } else { -tl };
    }
    for node in c.cone_gates(root) {
        if frame.get(t, node).is_some() {
            continue;
        }
        let NodeKind::And(g) = c.kind(node) else { unreachable!() };
        let gate = c.gates()[g];
        let a = operand(c, gate.lhs, frame, t, out);
        let b = operand(c, gate.rhs, frame, t, out);
        let v = out.and2(a, b);
        frame.bind(t, node, v);
    }
    operand(c, root, frame, t, out)
}

fn operand(c: &Circuit, lit: Lit, frame: &mut FrameMap, t: usize, out: &mut CnfFormula) -> i32 {
    if lit.is_const() {
        let tl = out.true_lit();
        return if lit == Lit::TRUE { tl } else { -tl };
    }
    debug_assert!(!matches!(c.kind(lit.node()), NodeKind::Undefined | NodeKind::Const));
    let v = frame.var(out, t, lit.node());
    if lit.is_negated() {
        -v
    } else {
        v
    }
}

/// Asserts `L_{t+1} = F(I_t, L_t)` for every `t < m`.
pub fn encode_unrolling(c: &Circuit, m: usize, frame: &mut FrameMap, out: &mut CnfFormula) {
    for t in 0..m {
        frame.allocate_state(c, t, out);
        for latch in c.latches() {
            let next = tseitin_cone(c, latch.next, frame, t, out);
            let v = frame.var(out, t + 1, latch.node);
            out.add_equal(v, next);
        }
    }
}

/// Asserts `l = r_l(L)` at frame 0 for the latches at the given positions.
/// Uninitialized latches add nothing; constant resets add one unit clause.
pub fn encode_reset(c: &Circuit, latches: &[usize], frame: &mut FrameMap, out: &mut CnfFormula) {
    for &i in latches {
        let latch = c.latches()[i];
        if latch.is_uninitialized() {
            continue;
        }
        let v = frame.var(out, 0, latch.node);
        if latch.reset.is_const() {
            out.add_clause([if latch.reset == Lit::TRUE { v } else { -v }]);
        } else {
            let r = tseitin_cone(c, latch.reset, frame, 0, out);
            out.add_equal(v, r);
        }
    }
}

/// [`encode_reset`] over every latch.
pub fn encode_reset_all(c: &Circuit, frame: &mut FrameMap, out: &mut CnfFormula) {
    let all: Vec<usize> = (0..c.latches().len()).collect();
    encode_reset(c, &all, frame, out);
}

pub fn emit_dimacs(f: &CnfFormula) -> String {
    let mut s = String::with_capacity(16 + f.clauses.len() * 12);
    let _ = writeln!(s, "p cnf {} {}", f.num_vars, f.clauses.len());
    for clause in &f.clauses {
        for lit in clause {
            let _ = write!(s, "{lit} ");
        }
        s.push_str("0\n");
    }
    s
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {0}: missing or malformed 'p cnf' header")]
    Header(usize),
    #[error("line {line}: invalid literal '{token}'")]
    Literal { line: usize, token: String },
    #[error("line {line}: literal {lit} exceeds declared variable count {num_vars}")]
    OutOfRange { line: usize, lit: i64, num_vars: u32 },
    #[error("declared {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("last clause is not terminated by 0")]
    Unterminated,
}

/// Parses DIMACS CNF, ignoring `c` comment lines. Clauses may span lines.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if header.is_some() || parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(DimacsError::Header(line_no));
            }
            let vars = parts[2].parse::<u32>().map_err(|_| DimacsError::Header(line_no))?;
            let count = parts[3].parse::<usize>().map_err(|_| DimacsError::Header(line_no))?;
            if vars > i32::MAX as u32 {
                return Err(DimacsError::Header(line_no));
            }
            header = Some((vars, count));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(DimacsError::Header(line_no));
        };
        for token in trimmed.split_whitespace() {
            let lit: i64 = token.parse().map_err(|_| DimacsError::Literal {
                line: line_no,
                token: token.to_owned(),
            })?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if lit.unsigned_abs() > num_vars as u64 {
                return Err(DimacsError::OutOfRange {
                    line: line_no,
                    lit,
                    num_vars,
                });
            } else {
                current.push(lit as i32);
            }
        }
    }
    let (num_vars, declared) = header.ok_or(DimacsError::Header(1))?;
    if !current.is_empty() {
        return Err(DimacsError::Unterminated);
    }
    if clauses.len() != declared {
        return Err(DimacsError::ClauseCount {
            declared,
            found: clauses.len(),
        });
    }
    Ok(CnfFormula::from_clauses(num_vars, clauses))
}
