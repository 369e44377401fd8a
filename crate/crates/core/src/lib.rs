//! Bit-level safety verification by k-induction with certificates that are
//! checked without quantifier reasoning.
//!
//! A proof of `P` at some `k` is turned into a witness circuit whose property
//! is 1-inductive. The certifier then checks that the witness simulates the
//! original circuit and that its property is an inductive invariant, using a
//! linear-time reset stratification check plus six SAT queries.

pub mod certify;
pub mod circuit;
pub mod encode;
pub mod family;
pub mod format;
pub mod kind;
pub mod mutation;
pub mod oracle;
pub mod sat;
pub mod trace;
pub mod witness;
