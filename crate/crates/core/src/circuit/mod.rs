//! And-inverter graph model of a sequential circuit with per-latch reset
//! functions and a single good-states property.
//!
//! Node 0 is the constant FALSE node. Every other node is exactly one of an
//! input, a latch or a two-input AND gate, and gate operands always refer to
//! nodes with a strictly smaller index, so evaluating nodes in index order is
//! a valid topological evaluation of the combinational logic.

mod builder;
mod graph;

pub use builder::CircuitBuilder;
pub use graph::{DependencyGraph, Stratification};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A possibly negated reference to a circuit node, encoded AIGER style as
/// `2 * node + negated`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    pub fn new(node: usize, negated: bool) -> Lit {
        Lit(((node as u32) << 1) | negated as u32)
    }

    pub fn positive(node: usize) -> Lit {
        Lit::new(node, false)
    }

    /// Builds a literal from its AIGER code.
    pub fn from_code(code: u32) -> Lit {
        Lit(code)
    }

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.node() == 0
    }

    /// The unnegated literal of the same node.
    pub fn regular(self) -> Lit {
        Lit(self.0 & !1)
    }

    /// Flips the literal when `negate` is set.
    pub fn negate_if(self, negate: bool) -> Lit {
        Lit(self.0 ^ negate as u32)
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Lit::FALSE => write!(f, "FALSE"),
            Lit::TRUE => write!(f, "TRUE"),
            lit if lit.is_negated() => write!(f, "!n{}", lit.node()),
            lit => write!(f, "n{}", lit.node()),
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatchDef {
    pub node: usize,
    /// Reset function over latches only. `Lit::positive(node)` marks an
    /// uninitialized latch.
    pub reset: Lit,
    pub next: Lit,
}

impl LatchDef {
    pub fn lit(&self) -> Lit {
        Lit::positive(self.node)
    }

    pub fn is_uninitialized(&self) -> bool {
        self.reset == self.lit()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AndGate {
    pub node: usize,
    pub lhs: Lit,
    pub rhs: Lit,
}

/// What a node index refers to; the payload is the position in the
/// corresponding list of the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Const,
    Input(usize),
    Latch(usize),
    And(usize),
    Undefined,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("unknown node {0}")]
    UnknownNode(usize),
}

/// A structural defect reported by [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NodeOutOfRange { context: String, node: usize },
    DuplicateDefinition { node: usize },
    UndefinedNode { node: usize },
    ConstantRedefined,
    GateOrder { gate: usize, operand: usize },
    ResetReadsInput { latch: usize, input: usize },
    BadName { node: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeOutOfRange { context, node } => {
                write!(f, "node out of range: {context} references node {node}")
            }
            Violation::DuplicateDefinition { node } => {
                write!(f, "duplicate definition: node {node} is defined more than once")
            }
            Violation::UndefinedNode { node } => {
                write!(f, "undefined node: node {node} is not an input, latch or gate")
            }
            Violation::ConstantRedefined => write!(f, "constant redefined: node 0 is reserved"),
            Violation::GateOrder { gate, operand } => write!(
                f,
                "gate order: gate {gate} reads node {operand} which is not strictly earlier"
            ),
            Violation::ResetReadsInput { latch, input } => {
                write!(f, "reset reads input: reset of latch {latch} depends on input {input}")
            }
            Violation::BadName { node } => write!(
                f,
                "bad name: symbol of node {node} is empty, contains a line break, or names a gate"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    num_nodes: usize,
    inputs: Vec<usize>,
    latches: Vec<LatchDef>,
    gates: Vec<AndGate>,
    property: Lit,
    names: BTreeMap<usize, String>,
    kinds: Vec<NodeKind>,
}

impl Circuit {
    /// Assembles a circuit from raw parts without checking it. Call
    /// [`Circuit::validate`] before handing the result to any other module.
    pub fn from_parts(
        num_nodes: usize,
        inputs: Vec<usize>,
        latches: Vec<LatchDef>,
        gates: Vec<AndGate>,
        property: Lit,
        names: BTreeMap<usize, String>,
    ) -> Circuit {
        let num_nodes = num_nodes.max(1);
        let mut kinds = vec![NodeKind::Undefined; num_nodes];
        kinds[0] = NodeKind::Const;
        let mut claim = |node: usize, kind: NodeKind| {
            if let Some(slot) = kinds.get_mut(node) {
                if *slot == NodeKind::Undefined {
                    *slot = kind;
                }
            }
        };
        for (i, &node) in inputs.iter().enumerate() {
            claim(node, NodeKind::Input(i));
        }
        for (i, latch) in latches.iter().enumerate() {
            claim(latch.node, NodeKind::Latch(i));
        }
        for (i, gate) in gates.iter().enumerate() {
            claim(gate.node, NodeKind::And(i));
        }
        Circuit {
            num_nodes,
            inputs,
            latches,
            gates,
            property,
            names,
            kinds,
        }
    }

    /// Like [`Circuit::from_parts`] but rejects circuits with violations.
    pub fn new_checked(
        num_nodes: usize,
        inputs: Vec<usize>,
        latches: Vec<LatchDef>,
        gates: Vec<AndGate>,
        property: Lit,
        names: BTreeMap<usize, String>,
    ) -> Result<Circuit, Vec<Violation>> {
        let circuit = Circuit::from_parts(num_nodes, inputs, latches, gates, property, names);
        let violations = circuit.validate();
        if violations.is_empty() {
            Ok(circuit)
        } else {
            Err(violations)
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn latches(&self) -> &[LatchDef] {
        &self.latches
    }

    pub fn gates(&self) -> &[AndGate] {
        &self.gates
    }

    pub fn property(&self) -> Lit {
        self.property
    }

    pub fn names(&self) -> &BTreeMap<usize, String> {
        &self.names
    }

    pub fn name(&self, node: usize) -> Option<&str> {
        self.names.get(&node).map(String::as_str)
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds.get(node).copied().unwrap_or(NodeKind::Undefined)
    }

    /// Position of `node` in the latch list.
    pub fn latch_index(&self, node: usize) -> Option<usize> {
        match self.kind(node) {
            NodeKind::Latch(i) => Some(i),
            _ => None,
        }
    }

    pub fn input_index(&self, node: usize) -> Option<usize> {
        match self.kind(node) {
            NodeKind::Input(i) => Some(i),
            _ => None,
        }
    }

    /// Display name of a latch: its symbol, or `l<position>` when it has none.
    pub fn latch_label(&self, index: usize) -> String {
        let node = self.latches[index].node;
        self.name(node)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("l{index}"))
    }

    pub fn input_label(&self, index: usize) -> String {
        let node = self.inputs[index];
        self.name(node)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("i{index}"))
    }

    /// Returns a copy with a different property literal.
    pub fn with_property(&self, property: Lit) -> Circuit {
        let mut c = self.clone();
        c.property = property;
        c
    }

    /// Returns a copy where latch `index` has the given definition fields.
    pub fn with_latch(&self, index: usize, reset: Lit, next: Lit) -> Circuit {
        let mut c = self.clone();
        c.latches[index].reset = reset;
        c.latches[index].next = next;
        c
    }

    /// Lists every structural violation; an empty list means the circuit is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.num_nodes;
        let mut defined = vec![0u32; n];
        let mut define = |node: usize, context: &str, out: &mut Vec<Violation>| {
            if node == 0 {
                out.push(Violation::ConstantRedefined);
            } else if node >= n {
                out.push(Violation::NodeOutOfRange {
                    context: context.to_owned(),
                    node,
                });
            } else {
                defined[node] += 1;
                if defined[node] == 2 {
                    out.push(Violation::DuplicateDefinition { node });
                }
            }
        };
        for &node in &self.inputs {
            define(node, "input", &mut out);
        }
        for latch in &self.latches {
            define(latch.node, "latch", &mut out);
        }
        for gate in &self.gates {
            define(gate.node, "gate", &mut out);
        }
        for (node, &count) in defined.iter().enumerate().skip(1) {
            if count == 0 {
                out.push(Violation::UndefinedNode { node });
            }
        }

        let in_range = |lit: Lit| lit.node() < n;
        for gate in &self.gates {
            for operand in [gate.lhs, gate.rhs] {
                if !in_range(operand) {
                    out.push(Violation::NodeOutOfRange {
                        context: format!("gate {}", gate.node),
                        node: operand.node(),
                    });
                } else if operand.node() >= gate.node {
                    out.push(Violation::GateOrder {
                        gate: gate.node,
                        operand: operand.node(),
                    });
                }
            }
        }
        for latch in &self.latches {
            for (what, lit) in [("reset", latch.reset), ("next", latch.next)] {
                if !in_range(lit) {
                    out.push(Violation::NodeOutOfRange {
                        context: format!("{what} of latch {}", latch.node),
                        node: lit.node(),
                    });
                }
            }
        }
        if !in_range(self.property) {
            out.push(Violation::NodeOutOfRange {
                context: "property".to_owned(),
                node: self.property.node(),
            });
        }
        for (&node, name) in &self.names {
            let names_var = matches!(self.kind(node), NodeKind::Input(_) | NodeKind::Latch(_));
            if !names_var || name.is_empty() || name.contains(['\n', '\r']) {
                out.push(Violation::BadName { node });
            }
        }
        // Cone traversals below need the structural invariants above.
        if !out.is_empty() {
            return out;
        }
        for latch in &self.latches {
            if latch.is_uninitialized() {
                continue;
            }
            let support = self.support_unchecked(latch.reset);
            if let Some(&input) = support.iter().find(|&&v| self.input_index(v).is_some()) {
                out.push(Violation::ResetReadsInput {
                    latch: latch.node,
                    input,
                });
            }
        }
        out
    }

    /// Input and latch nodes reachable from `root` through gate operands.
    pub fn support(&self, root: Lit) -> Result<BTreeSet<usize>, CircuitError> {
        if root.node() >= self.num_nodes {
            return Err(CircuitError::UnknownNode(root.node()));
        }
        Ok(self.support_unchecked(root))
    }

    fn support_unchecked(&self, root: Lit) -> BTreeSet<usize> {
        let mut support = BTreeSet::new();
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![root.node()];
        while let Some(node) = stack.pop() {
            if std::mem::replace(&mut seen[node], true) {
                continue;
            }
            match self.kind(node) {
                NodeKind::Input(_) | NodeKind::Latch(_) => {
                    support.insert(node);
                }
                NodeKind::And(g) => {
                    let gate = &self.gates[g];
                    stack.push(gate.lhs.node());
                    stack.push(gate.rhs.node());
                }
                NodeKind::Const | NodeKind::Undefined => {}
            }
        }
        support
    }

    /// Gate nodes in the combinational cone of `root`, in ascending node order.
    pub fn cone_gates(&self, root: Lit) -> Vec<usize> {
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![root.node()];
        let mut gates = Vec::new();
        while let Some(node) = stack.pop() {
            if std::mem::replace(&mut seen[node], true) {
                continue;
            }
            if let NodeKind::And(g) = self.kind(node) {
                gates.push(node);
                stack.push(self.gates[g].lhs.node());
                stack.push(self.gates[g].rhs.node());
            }
        }
        gates.sort_unstable();
        gates
    }

    /// Evaluates every node under the given input and latch values (indexed
    /// by position in the input and latch lists).
    pub fn eval(&self, inputs: &[bool], latches: &[bool]) -> Vec<bool> {
        let mut values = vec![false; self.num_nodes];
        for (node, value) in values.iter_mut().enumerate().skip(1) {
            *value = match self.kinds[node] {
                NodeKind::Input(i) => inputs[i],
                NodeKind::Latch(i) => latches[i],
                _ => false,
            };
        }
        // Gates in node order: operands are always strictly earlier.
        for node in 1..self.num_nodes {
            if let NodeKind::And(g) = self.kinds[node] {
                let gate = self.gates[g];
                values[node] = lit_value(&values, gate.lhs) && lit_value(&values, gate.rhs);
            }
        }
        values
    }

    /// Three-valued evaluation where `None` stands for an unknown value.
    pub fn eval_ternary(&self, inputs: &[Option<bool>], latches: &[Option<bool>]) -> Vec<Option<bool>> {
        let mut values = vec![Some(false); self.num_nodes];
        for node in 1..self.num_nodes {
            values[node] = match self.kinds[node] {
                NodeKind::Input(i) => inputs[i],
                NodeKind::Latch(i) => latches[i],
                NodeKind::And(g) => {
                    let gate = self.gates[g];
                    ternary_and(ternary_lit(&values, gate.lhs), ternary_lit(&values, gate.rhs))
                }
                _ => Some(false),
            };
        }
        values
    }

    /// Successor latch values from evaluated node values.
    pub fn next_state(&self, values: &[bool]) -> Vec<bool> {
        self.latches.iter().map(|l| lit_value(values, l.next)).collect()
    }

    /// Whether the latch values satisfy every reset constraint `l = r_l(L)`.
    pub fn is_reset_state(&self, latches: &[bool]) -> bool {
        let no_inputs = vec![false; self.inputs.len()];
        let values = self.eval(&no_inputs, latches);
        self.latches
            .iter()
            .enumerate()
            .all(|(i, l)| latches[i] == lit_value(&values, l.reset))
    }

    pub fn dependency_graph(&self) -> DependencyGraph {
        graph::dependency_graph(self)
    }

    /// Checks whether the reset dependency graph is acyclic.
    pub fn stratification(&self) -> Stratification {
        graph::stratification(&self.dependency_graph())
    }

    pub fn is_stratified(&self) -> bool {
        matches!(self.stratification(), Stratification::Stratified { .. })
    }
}

pub fn lit_value(values: &[bool], lit: Lit) -> bool {
    values[lit.node()] ^ lit.is_negated()
}

pub fn ternary_lit(values: &[Option<bool>], lit: Lit) -> Option<bool> {
    values[lit.node()].map(|v| v ^ lit.is_negated())
}

pub fn ternary_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

pub fn ternary_xor(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    Some(a? ^ b?)
}
