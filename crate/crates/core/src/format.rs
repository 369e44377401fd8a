//! AIGER ASCII (`aag`) reading and writing, plus an extended dialect that
//! carries arbitrary reset functions.
//!
//! Supported header forms are `aag M I L O A` and `aag M I L O A B [C J F]`
//! with the constraint, justice and fairness counts equal to zero. The single
//! bad-state literal (first `B` entry, or the only output when there is no
//! `B` section) is the negation of the circuit property. Every variable
//! `1..=M` must be defined, so `M = I + L + A`.
//!
//! The extended dialect appends, inside the comment section, the magic line
//! [`RESET_SECTION_MAGIC`] followed by lines `r <latch-literal> <reset-literal>`.
//! A plain AIGER reader ignores that section and sees those latches as
//! uninitialized.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{AndGate, Circuit, LatchDef, Lit, NodeKind};

pub const RESET_SECTION_MAGIC: &str = "reset-functions v1";

/// Upper bound on `M`; larger headers are rejected before allocating.
const MAX_VARIABLES: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("invalid number '{0}'")]
    Number(String),
    #[error("literal misuse: {0}")]
    Literal(String),
    #[error("missing property: no bad-state literal and no output")]
    MissingProperty,
    #[error("multiple properties unsupported")]
    MultipleProperties,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid symbol: {0}")]
    Symbol(String),
    #[error("invalid reset-function section: {0}")]
    ResetSection(String),
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("input is not valid UTF-8")]
    Encoding,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrintError {
    #[error("reset of latch {latch} is a function ({reset:?}): not AIGER-expressible, use extended format")]
    NotExpressible { latch: usize, reset: Lit },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Plain,
    Extended,
}

pub fn parse_aiger(text: &[u8]) -> Result<Circuit, ParseError> {
    parse(text, Dialect::Plain)
}

/// Parses the extended dialect. Files without a reset-function section are
/// read exactly like plain AIGER.
pub fn parse_extended(text: &[u8]) -> Result<Circuit, ParseError> {
    parse(text, Dialect::Extended)
}

pub fn print_aiger(c: &Circuit) -> Result<String, PrintError> {
    if let Some(latch) = c.latches().iter().find(|l| !plain_reset(l)) {
        return Err(PrintError::NotExpressible {
            latch: latch.node,
            reset: latch.reset,
        });
    }
    Ok(print(c, Dialect::Plain))
}

pub fn print_extended(c: &Circuit) -> String {
    print(c, Dialect::Extended)
}

/// Whether every reset is FALSE, TRUE or the latch itself.
pub fn is_aiger_expressible(c: &Circuit) -> bool {
    c.latches().iter().all(plain_reset)
}

fn plain_reset(l: &LatchDef) -> bool {
    l.reset == Lit::FALSE || l.reset == Lit::TRUE || l.is_uninitialized()
}

fn print(c: &Circuit, dialect: Dialect) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "aag {} {} {} 1 {}",
        c.num_nodes() - 1,
        c.inputs().len(),
        c.latches().len(),
        c.gates().len()
    );
    for &node in c.inputs() {
        let _ = writeln!(s, "{}", Lit::positive(node));
    }
    for l in c.latches() {
        let shown = if plain_reset(l) { l.reset } else { l.lit() };
        if shown == Lit::FALSE {
            let _ = writeln!(s, "{} {}", l.lit(), l.next);
        } else {
            let _ = writeln!(s, "{} {} {}", l.lit(), l.next, shown);
        }
    }
    let _ = writeln!(s, "{}", !c.property());
    for g in c.gates() {
        let _ = writeln!(s, "{} {} {}", Lit::positive(g.node), g.lhs, g.rhs);
    }
    for (i, &node) in c.inputs().iter().enumerate() {
        if let Some(name) = c.name(node) {
            let _ = writeln!(s, "i{i} {name}");
        }
    }
    for (i, l) in c.latches().iter().enumerate() {
        if let Some(name) = c.name(l.node) {
            let _ = writeln!(s, "l{i} {name}");
        }
    }
    if dialect == Dialect::Extended {
        let _ = writeln!(s, "c");
        let _ = writeln!(s, "{RESET_SECTION_MAGIC}");
        for l in c.latches().iter().filter(|l| !plain_reset(l)) {
            let _ = writeln!(s, "r {} {}", l.lit(), l.reset);
        }
    }
    s
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    /// Next line with its 1-based number, or a count mismatch error.
    fn expect(&mut self, what: &str, declared: u64) -> Result<(usize, &'a str), ParseError> {
        match self.lines.get(self.pos) {
            Some(line) => {
                self.pos += 1;
                Ok((self.pos, line))
            }
            None => Err(err(
                self.pos + 1,
                ParseErrorKind::CountMismatch(format!("header declares {declared} {what} but the file ends early")),
            )),
        }
    }

    fn remaining(&self) -> usize {
        self.lines.len() - self.pos
    }
}

fn number(line: usize, token: &str) -> Result<u64, ParseError> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(line, ParseErrorKind::Number(token.to_owned())));
    }
    token
        .parse::<u64>()
        .map_err(|_| err(line, ParseErrorKind::Number(token.to_owned())))
}

/// Splits a body line into exactly `count` numbers separated by single spaces.
fn numbers(line_no: usize, line: &str, min: usize, max: usize) -> Result<Vec<u64>, ParseError> {
    let tokens: Vec<&str> = line.split(' ').collect();
    if tokens.len() < min || tokens.len() > max {
        return Err(err(
            line_no,
            ParseErrorKind::CountMismatch(format!(
                "expected {} fields, found {} in '{line}'",
                if min == max {
                    min.to_string()
                } else {
                    format!("{min}-{max}")
                },
                tokens.len()
            )),
        ));
    }
    tokens.into_iter().map(|t| number(line_no, t)).collect()
}

fn parse(text: &[u8], dialect: Dialect) -> Result<Circuit, ParseError> {
    let text = std::str::from_utf8(text).map_err(|_| err(1, ParseErrorKind::Encoding))?;
    let mut all: Vec<&str> = text.split('\n').collect();
    // A trailing newline yields one empty final piece.
    if all.last() == Some(&"") {
        all.pop();
    }
    let mut lines = Lines { lines: all, pos: 0 };

    let (hl, header) = lines
        .expect("header", 1)
        .map_err(|_| err(1, ParseErrorKind::Header("empty file".to_owned())))?;
    let mut fields = header.split(' ');
    match fields.next() {
        Some("aag") => {}
        Some("aig") => return Err(err(hl, ParseErrorKind::Unsupported("binary AIGER ('aig')".to_owned()))),
        other => {
            return Err(err(
                hl,
                ParseErrorKind::Header(format!("expected 'aag', found '{}'", other.unwrap_or(""))),
            ))
        }
    }
    let counts: Vec<u64> = fields.map(|t| number(hl, t)).collect::<Result<_, _>>()?;
    if counts.len() < 5 || counts.len() > 9 {
        return Err(err(
            hl,
            ParseErrorKind::Header(format!("expected 5 to 9 counts, found {}", counts.len())),
        ));
    }
    let (m, ni, nl, no, na) = (counts[0], counts[1], counts[2], counts[3], counts[4]);
    let nb = counts.get(5).copied().unwrap_or(0);
    for (i, name) in ["constraints", "justice properties", "fairness constraints"]
        .iter()
        .enumerate()
    {
        if counts.get(6 + i).copied().unwrap_or(0) != 0 {
            return Err(err(hl, ParseErrorKind::Unsupported((*name).to_owned())));
        }
    }
    if m > MAX_VARIABLES {
        return Err(err(hl, ParseErrorKind::Header(format!("M = {m} is too large"))));
    }
    if ni.checked_add(nl).and_then(|x| x.checked_add(na)) != Some(m) {
        return Err(err(
            hl,
            ParseErrorKind::CountMismatch(format!(
                "M = {m} must equal I + L + A (every variable defined exactly once)"
            )),
        ));
    }
    let body = ni + nl + no + na + nb;
    if body > lines.remaining() as u64 {
        return Err(err(
            hl,
            ParseErrorKind::CountMismatch(format!(
                "header declares {body} body lines but only {} lines follow",
                lines.remaining()
            )),
        ));
    }

    let m = m as usize;
    let max_code = 2 * m as u64 + 1;
    let num_nodes = m + 1;
    let mut definer = vec![0usize; num_nodes];
    let mut define = |line: usize, code: u64, what: &str| -> Result<usize, ParseError> {
        if code % 2 == 1 {
            return Err(err(
                line,
                ParseErrorKind::Literal(format!("{what} literal {code} is odd")),
            ));
        }
        if code < 2 {
            return Err(err(
                line,
                ParseErrorKind::Literal(format!("{what} literal {code} is a constant")),
            ));
        }
        if code > max_code {
            return Err(err(
                line,
                ParseErrorKind::Literal(format!("{what} literal {code} exceeds 2M+1")),
            ));
        }
        let node = (code / 2) as usize;
        if definer[node] != 0 {
            return Err(err(
                line,
                ParseErrorKind::Literal(format!("variable {node} already defined on line {}", definer[node])),
            ));
        }
        definer[node] = line;
        Ok(node)
    };
    let operand = |line: usize, code: u64| -> Result<Lit, ParseError> {
        if code > max_code {
            return Err(err(
                line,
                ParseErrorKind::Literal(format!("literal {code} exceeds 2M+1")),
            ));
        }
        Ok(Lit::from_code(code as u32))
    };

    let mut inputs = Vec::with_capacity(ni as usize);
    for _ in 0..ni {
        let (no_, line) = lines.expect("inputs", ni)?;
        let v = numbers(no_, line, 1, 1)?;
        inputs.push(define(no_, v[0], "input")?);
    }

    let mut latches = Vec::with_capacity(nl as usize);
    for _ in 0..nl {
        let (no_, line) = lines.expect("latches", nl)?;
        let v = numbers(no_, line, 2, 3)?;
        let node = define(no_, v[0], "latch")?;
        let next = operand(no_, v[1])?;
        let reset = match v.get(2).copied() {
            None | Some(0) => Lit::FALSE,
            Some(1) => Lit::TRUE,
            Some(r) if r == v[0] => Lit::positive(node),
            Some(r) => {
                return Err(err(
                    no_,
                    ParseErrorKind::Unsupported(format!(
                        "latch reset value {r} (only 0, 1 or the latch literal are allowed)"
                    )),
                ))
            }
        };
        latches.push(LatchDef { node, reset, next });
    }

    let mut outputs = Vec::with_capacity(no as usize);
    for _ in 0..no {
        let (no_, line) = lines.expect("outputs", no)?;
        let v = numbers(no_, line, 1, 1)?;
        outputs.push((no_, operand(no_, v[0])?));
    }
    let mut bads = Vec::with_capacity(nb as usize);
    for _ in 0..nb {
        let (no_, line) = lines.expect("bad-state properties", nb)?;
        let v = numbers(no_, line, 1, 1)?;
        bads.push((no_, operand(no_, v[0])?));
    }

    let mut gates = Vec::with_capacity(na as usize);
    for _ in 0..na {
        let (no_, line) = lines.expect("AND gates", na)?;
        let v = numbers(no_, line, 3, 3)?;
        let node = define(no_, v[0], "AND gate")?;
        let lhs = operand(no_, v[1])?;
        let rhs = operand(no_, v[2])?;
        for op in [lhs, rhs] {
            if op.node() >= node {
                return Err(err(
                    no_,
                    ParseErrorKind::Invalid(format!(
                        "gate order: gate {node} reads variable {} which is not strictly earlier",
                        op.node()
                    )),
                ));
            }
        }
        gates.push(AndGate { node, lhs, rhs });
    }
    gates.sort_by_key(|g| g.node);

    let bad = match (bads.as_slice(), outputs.as_slice()) {
        ([(_, b)], _) => *b,
        ([_, (line, _), ..], _) => return Err(err(*line, ParseErrorKind::MultipleProperties)),
        ([], [(_, o)]) => *o,
        ([], [_, (line, _), ..]) => return Err(err(*line, ParseErrorKind::MultipleProperties)),
        ([], []) => return Err(err(hl, ParseErrorKind::MissingProperty)),
    };

    // Symbol table, then an optional comment section.
    let mut names = BTreeMap::new();
    let mut comment_start = None;
    while lines.remaining() > 0 {
        let (no_, line) = lines.expect("symbols", 0)?;
        if line == "c" {
            comment_start = Some(lines.pos);
            break;
        }
        let (tag, rest) = line.split_once(' ').ok_or_else(|| {
            err(
                no_,
                ParseErrorKind::Symbol(format!("expected '<type><index> <name>', found '{line}'")),
            )
        })?;
        let kind = tag.chars().next().unwrap_or(' ');
        let index = number(no_, &tag[kind.len_utf8().min(tag.len())..])
            .map_err(|_| err(no_, ParseErrorKind::Symbol(format!("bad symbol position in '{tag}'"))))?;
        if rest.is_empty() || rest.contains('\r') {
            return Err(err(no_, ParseErrorKind::Symbol("empty or malformed name".to_owned())));
        }
        let node = match kind {
            'i' => inputs.get(index as usize).copied(),
            'l' => latches.get(index as usize).map(|l: &LatchDef| l.node),
            'o' if index < no => None,
            'b' if index < nb => None,
            _ => {
                return Err(err(no_, ParseErrorKind::Symbol(format!("unknown symbol '{tag}'"))));
            }
        };
        match (kind, node) {
            (_, Some(node)) => {
                if names.insert(node, rest.to_owned()).is_some() {
                    return Err(err(no_, ParseErrorKind::Symbol(format!("duplicate symbol '{tag}'"))));
                }
            }
            ('i' | 'l', None) => {
                return Err(err(
                    no_,
                    ParseErrorKind::Symbol(format!("symbol position out of range in '{tag}'")),
                ));
            }
            _ => {}
        }
    }

    if dialect == Dialect::Extended {
        if let Some(start) = comment_start {
            let section = &lines.lines[start..];
            if let Some(magic) = section.iter().position(|l| *l == RESET_SECTION_MAGIC) {
                let mut seen = vec![false; latches.len()];
                for (offset, line) in section[magic + 1..].iter().enumerate() {
                    let line_no = start + magic + offset + 2;
                    let Some(rest) = line.strip_prefix("r ") else {
                        return Err(err(
                            line_no,
                            ParseErrorKind::ResetSection(format!("expected 'r <latch> <reset>', found '{line}'")),
                        ));
                    };
                    let v = numbers(line_no, rest, 2, 2)?;
                    let latch = latches
                        .iter()
                        .position(|l| Lit::positive(l.node).code() as u64 == v[0])
                        .ok_or_else(|| {
                            err(
                                line_no,
                                ParseErrorKind::ResetSection(format!("{} is not a latch literal", v[0])),
                            )
                        })?;
                    if std::mem::replace(&mut seen[latch], true) {
                        return Err(err(
                            line_no,
                            ParseErrorKind::ResetSection(format!("latch {} has two reset functions", v[0])),
                        ));
                    }
                    latches[latch].reset = operand(line_no, v[1])?;
                }
            }
        }
    }

    let circuit = Circuit::from_parts(num_nodes, inputs, latches, gates, !bad, names);
    let violations = circuit.validate();
    if !violations.is_empty() {
        let text = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(err(0, ParseErrorKind::Invalid(text)));
    }
    debug_assert!(circuit
        .gates()
        .iter()
        .all(|g| matches!(circuit.kind(g.node), NodeKind::And(_))));
    Ok(circuit)
}
