//! Deliberate corruptions of witness circuits, for testing that the
//! certificate checks reject broken certificates.

use crate::circuit::{Circuit, CircuitBuilder, Lit};
use crate::witness::Witness;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Remove one conjunct (0..5, in `PropertyParts::as_array` order).
    DropPart(usize),
    /// Disjoin the property with "the oldest copy is not initialized".
    WeakenProperty,
    /// Youngest initialization bit resets to 0 instead of 1.
    FlipYoungestInitReset,
    /// Oldest initialization bit resets to 1 instead of 0.
    FlipOldestInitReset,
    /// Negate the next-state function of the oldest copy of a latch the
    /// original property reads (the first latch if it reads none).
    BreakCopyTransition,
    /// The youngest initialization bit clears instead of holding.
    BreakInitTransition,
}

impl Mutation {
    pub const ALL: [Mutation; 10] = [
        Mutation::DropPart(0),
        Mutation::DropPart(1),
        Mutation::DropPart(2),
        Mutation::DropPart(3),
        Mutation::DropPart(4),
        Mutation::WeakenProperty,
        Mutation::FlipYoungestInitReset,
        Mutation::FlipOldestInitReset,
        Mutation::BreakCopyTransition,
        Mutation::BreakInitTransition,
    ];
}

impl std::fmt::Display for Mutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mutation::DropPart(i) => write!(f, "drop p{i}"),
            Mutation::WeakenProperty => f.write_str("weaken property"),
            Mutation::FlipYoungestInitReset => f.write_str("flip youngest init reset"),
            Mutation::FlipOldestInitReset => f.write_str("flip oldest init reset"),
            Mutation::BreakCopyTransition => f.write_str("break copy transition"),
            Mutation::BreakInitTransition => f.write_str("break init transition"),
        }
    }
}

fn latch_position(c: &Circuit, node: usize) -> usize {
    c.latch_index(node).expect("layout nodes are latches")
}

/// Returns the mutated witness circuit; `original` is the circuit `w` was
/// built from. Panics if there is no latch to corrupt for
/// `BreakCopyTransition`.
pub fn mutate(original: &Circuit, w: &Witness, m: Mutation) -> Circuit {
    let c = &w.circuit;
    let layout = &w.layout;
    match m {
        Mutation::DropPart(i) => {
            let mut b = CircuitBuilder::from_circuit(c);
            let parts = w.parts.as_array();
            let kept = parts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &p)| p);
            let property = b.and_all(kept.collect::<Vec<_>>());
            b.finish(property)
        }
        Mutation::WeakenProperty => {
            let mut b = CircuitBuilder::from_circuit(c);
            let oldest = Lit::positive(layout.init_bits[0]);
            let property = b.or(c.property(), !oldest);
            b.finish(property)
        }
        Mutation::FlipYoungestInitReset | Mutation::FlipOldestInitReset => {
            let node = if m == Mutation::FlipYoungestInitReset {
                layout.init_bits[layout.k - 1]
            } else {
                layout.init_bits[0]
            };
            let j = latch_position(c, node);
            let l = c.latches()[j];
            c.with_latch(j, !l.reset, l.next)
        }
        Mutation::BreakCopyTransition => {
            let support = original.support(original.property()).unwrap_or_default();
            let target = original
                .latches()
                .iter()
                .position(|l| support.contains(&l.node))
                .unwrap_or(0);
            let node = *layout.latch_copies[0].get(target).expect("circuit has latches");
            let j = latch_position(c, node);
            let l = c.latches()[j];
            c.with_latch(j, l.reset, !l.next)
        }
        Mutation::BreakInitTransition => {
            let j = latch_position(c, layout.init_bits[layout.k - 1]);
            let l = c.latches()[j];
            c.with_latch(j, l.reset, Lit::FALSE)
        }
    }
}
