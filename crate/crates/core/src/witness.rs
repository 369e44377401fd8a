//! Witness circuits: a circuit `C'` whose property is 1-inductive exactly
//! when the property of `C` is k-inductive.
//!
//! `C'` keeps the inputs and latches of `C` (the youngest copy, index
//! `k - 1`) and adds `k - 1` older copies of the latches and inputs, which
//! shift one position per step, plus one initialization bit per copy. The
//! bits record how many genuine steps the copies have seen since reset.
//!
//! Latch order in `C'`: the original latches, then for `i = k-2 .. 0` the
//! latch copies and input copies of index `i`, then `b@(k-1) .. b@0`.

use std::collections::HashMap;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, Lit, Stratification, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("resets are not stratified: cycle through latches {}", render_cycle(.cycle))]
    NotStratified { cycle: Vec<String> },
    #[error("input circuit is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

fn render_cycle(cycle: &[String]) -> String {
    let mut s = cycle.join(" -> ");
    if let Some(first) = cycle.first() {
        s.push_str(" -> ");
        s.push_str(first);
    }
    s
}

/// Node positions of the copies inside the witness circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessLayout {
    pub k: usize,
    /// `latch_copies[i][j]`: node of copy `i` of original latch `j`. Copy
    /// `k - 1` is the original latch itself.
    pub latch_copies: Vec<Vec<usize>>,
    /// `input_copies[i][j]`: node of copy `i` of original input `j`. Copy
    /// `k - 1` holds the primary inputs of the witness, the others are latches.
    pub input_copies: Vec<Vec<usize>>,
    /// `init_bits[i]`: node of the initialization bit of copy `i`.
    pub init_bits: Vec<usize>,
}

impl WitnessLayout {
    /// For each latch of the original circuit, the position of the
    /// corresponding latch in the witness.
    pub fn embedding(&self) -> Vec<usize> {
        (0..self.latch_copies[self.k - 1].len()).collect()
    }

    /// Number of latches the construction produces.
    pub fn expected_latches(k: usize, latches: usize, inputs: usize) -> usize {
        k * latches + (k - 1) * inputs + k
    }
}

/// The five conjuncts of the witness property.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropertyParts {
    /// Initialization bits only turn on from the oldest copy upward.
    pub monotone: Lit,
    /// Initialized consecutive copies are related by the transition function.
    pub transitions: Lit,
    /// Initialized copies satisfy the original property.
    pub property: Lit,
    /// The oldest initialized copy is a reset state.
    pub reset: Lit,
    /// The youngest copy is always initialized.
    pub youngest: Lit,
}

impl PropertyParts {
    pub fn as_array(&self) -> [Lit; 5] {
        [
            self.monotone,
            self.transitions,
            self.property,
            self.reset,
            self.youngest,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub circuit: Circuit,
    pub layout: WitnessLayout,
    pub parts: PropertyParts,
}

pub fn build_witness(c: &Circuit, k: usize) -> Result<Witness, WitnessError> {
    if k == 0 {
        return Err(WitnessError::ZeroK);
    }
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(WitnessError::Invalid(violations));
    }
    if let Stratification::Cyclic { cycle } = c.stratification() {
        let cycle = cycle
            .iter()
            .map(|&n| c.latch_label(c.latch_index(n).expect("cycle nodes are latches")))
            .collect();
        return Err(WitnessError::NotStratified { cycle });
    }

    let num_latches = c.latches().len();
    let num_inputs = c.inputs().len();
    let mut b = CircuitBuilder::new();
    let mut latch_copies = vec![Vec::new(); k];
    let mut input_copies = vec![Vec::new(); k];
    let mut init_bits = vec![0; k];

    for &node in c.inputs() {
        let lit = b.input(c.name(node));
        input_copies[k - 1].push(lit.node());
    }
    for j in 0..num_latches {
        let lit = b.latch(Some(&c.latch_label(j)));
        latch_copies[k - 1].push(lit.node());
    }
    for i in (0..k - 1).rev() {
        for j in 0..num_latches {
            let lit = b.latch(Some(&format!("{}@{i}", c.latch_label(j))));
            latch_copies[i].push(lit.node());
        }
        for j in 0..num_inputs {
            let lit = b.latch(Some(&format!("{}@{i}", c.input_label(j))));
            input_copies[i].push(lit.node());
        }
    }
    for i in (0..k).rev() {
        init_bits[i] = b.latch(Some(&format!("b@{i}"))).node();
    }
    let layout = WitnessLayout {
        k,
        latch_copies,
        input_copies,
        init_bits,
    };

    let pos = Lit::positive;
    // Youngest copy: the original resets and transitions.
    let live = copy_binding(c, &layout, k - 1);
    for (j, latch) in c.latches().iter().enumerate() {
        let mut map = live.clone();
        let reset = b.import(c, latch.reset, &mut map);
        let next = b.import(c, latch.next, &mut map);
        b.set_latch(pos(layout.latch_copies[k - 1][j]), reset, next);
    }
    b.set_latch(pos(layout.init_bits[k - 1]), Lit::TRUE, pos(layout.init_bits[k - 1]));
    // Older copies shift toward index 0 and start uninitialized.
    for i in 0..k - 1 {
        for j in 0..num_latches {
            let node = layout.latch_copies[i][j];
            b.set_latch(pos(node), pos(node), pos(layout.latch_copies[i + 1][j]));
        }
        for j in 0..num_inputs {
            let node = layout.input_copies[i][j];
            b.set_latch(pos(node), pos(node), pos(layout.input_copies[i + 1][j]));
        }
        b.set_latch(pos(layout.init_bits[i]), Lit::FALSE, pos(layout.init_bits[i + 1]));
    }

    let parts = build_witness_property(&mut b, c, &layout);
    let property = b.and_all(parts.as_array());
    let circuit = b.finish(property);
    debug_assert_eq!(circuit.validate(), vec![]);
    debug_assert_eq!(
        circuit.latches().len(),
        WitnessLayout::expected_latches(k, num_latches, num_inputs)
    );
    Ok(Witness { circuit, layout, parts })
}

/// Binds the inputs and latches of `c` to the nodes of copy `i`.
fn copy_binding(c: &Circuit, layout: &WitnessLayout, i: usize) -> HashMap<usize, Lit> {
    let mut map = HashMap::new();
    for (j, &node) in c.inputs().iter().enumerate() {
        map.insert(node, Lit::positive(layout.input_copies[i][j]));
    }
    for (j, latch) in c.latches().iter().enumerate() {
        map.insert(latch.node, Lit::positive(layout.latch_copies[i][j]));
    }
    map
}

/// Adds the gates of the five property conjuncts to `b`. Each use of the
/// transition, property or reset functions instantiates the original cone
/// over the copy it refers to.
pub fn build_witness_property(b: &mut CircuitBuilder, c: &Circuit, layout: &WitnessLayout) -> PropertyParts {
    let k = layout.k;
    let bit = |i: usize| Lit::positive(layout.init_bits[i]);

    let mut monotone = Vec::new();
    let mut transitions = Vec::new();
    for i in 0..k - 1 {
        monotone.push(b.implies(bit(i), bit(i + 1)));
        let mut map = copy_binding(c, layout, i);
        let mut equal = Vec::new();
        for (j, latch) in c.latches().iter().enumerate() {
            let next = b.import(c, latch.next, &mut map);
            equal.push(b.xnor(Lit::positive(layout.latch_copies[i + 1][j]), next));
        }
        let step = b.and_all(equal);
        transitions.push(b.implies(bit(i), step));
    }

    let mut property = Vec::new();
    for i in 0..k {
        let mut map = copy_binding(c, layout, i);
        let p = b.import(c, c.property(), &mut map);
        property.push(b.implies(bit(i), p));
    }

    let mut reset = Vec::new();
    for i in 1..k {
        let mut map = copy_binding(c, layout, i);
        let mut equal = Vec::new();
        for (j, latch) in c.latches().iter().enumerate() {
            let r = b.import(c, latch.reset, &mut map);
            equal.push(b.xnor(Lit::positive(layout.latch_copies[i][j]), r));
        }
        let is_reset = b.and_all(equal);
        let oldest = b.and(!bit(i - 1), bit(i));
        reset.push(b.implies(oldest, is_reset));
    }

    PropertyParts {
        monotone: b.and_all(monotone),
        transitions: b.and_all(transitions),
        property: b.and_all(property),
        reset: b.and_all(reset),
        youngest: bit(k - 1),
    }
}

/// Whether the witness resets are stratified.
pub fn witness_stratified(witness: &Circuit) -> bool {
    witness.is_stratified()
}
