//! Parametric benchmark circuits and the small fixtures used across tests.

use crate::circuit::{Circuit, CircuitBuilder, Lit};

/// Modulo counter of `width` bits with a synchronous clear input `en`.
///
/// The counter starts at 0, clears to 0 when `en` is set, and otherwise
/// increments, wrapping to 0 after `m - 1` and on overflow. The property is
/// `c != b`. For `m <= b < 2^width` the property holds, and it is
/// k-inductive for `k = b - m + 1` and no smaller `k`: the states `m..b-1`
/// form the longest chain of good states leading into `b`, and none of them
/// is reachable.
///
/// Panics unless `1 <= m < 2^width` and `b < 2^width`.
pub fn counter(width: usize, m: u64, b: u64) -> Circuit {
    assert!((1..=31).contains(&width), "width out of range");
    assert!(m >= 1 && m < 1 << width && b < 1 << width, "bounds out of range");
    let mut cb = CircuitBuilder::new();
    let en = cb.input(Some("en"));
    let bits: Vec<Lit> = (0..width).map(|j| cb.latch(Some(&format!("c{j}")))).collect();

    let equals = |cb: &mut CircuitBuilder, value: u64| {
        let lits: Vec<Lit> = bits
            .iter()
            .enumerate()
            .map(|(j, &l)| l.negate_if(value >> j & 1 == 0))
            .collect();
        cb.and_all(lits)
    };
    let wrap = equals(&mut cb, m - 1);
    let clear = cb.or(en, wrap);
    let mut carry = Lit::TRUE;
    for &l in &bits {
        let sum = cb.xor(l, carry);
        carry = cb.and(l, carry);
        let next = cb.and(!clear, sum);
        cb.set_latch(l, Lit::FALSE, next);
    }
    let bad = equals(&mut cb, b);
    cb.finish(!bad)
}

/// Two latches `lo` and `hi`, both reset to 0. `lo` toggles only while it is
/// clear or `hi` is set; `hi` holds. Reachable states are `00` and `10`
/// (written `lo hi`), the property is `!(lo & hi)`, and it is 2-inductive
/// but not 1-inductive: the unreachable state `01` is good and steps to `11`.
pub fn counter_fixture() -> Circuit {
    let mut b = CircuitBuilder::new();
    let lo = b.latch(Some("lo"));
    let hi = b.latch(Some("hi"));
    let both = b.and(lo, hi);
    let low_only = b.and(lo, !hi);
    b.set_latch(lo, Lit::FALSE, !low_only);
    b.set_latch(hi, Lit::FALSE, hi);
    b.finish(!both)
}

/// Free-running 2-bit counter from 0 with property `!(l1 & l0)`; the bad
/// state 3 is reached after three steps.
pub fn free_running_counter() -> Circuit {
    let mut b = CircuitBuilder::new();
    let l0 = b.latch(None);
    let l1 = b.latch(None);
    let sum = b.xor(l1, l0);
    b.set_latch(l0, Lit::FALSE, !l0);
    b.set_latch(l1, Lit::FALSE, sum);
    let bad = b.and(l0, l1);
    b.finish(!bad)
}

/// 2-bit counter from 0 that wraps after 2, with property `!(l1 & l0)`.
pub fn mod3_counter() -> Circuit {
    let mut b = CircuitBuilder::new();
    let l0 = b.latch(None);
    let l1 = b.latch(None);
    let n0 = b.and(!l0, !l1);
    let n1 = b.and(l0, !l1);
    b.set_latch(l0, Lit::FALSE, n0);
    b.set_latch(l1, Lit::FALSE, n1);
    let bad = b.and(l0, l1);
    b.finish(!bad)
}

/// Shift register `s0 .. s<depth>` fed by input `in`. Latch `s0` resets to
/// `seed_value`; `s<j>` resets to `!s<j-1> & s<j-2>` when `j >= 2` and
/// `negate[j-1]` is set, and to `s<j-1>` otherwise. The resets form a
/// dependency chain of length `depth`. The property is `!(s<depth> & s0)`.
pub fn chain_reset_circuit(depth: usize, negate: &[bool], seed_value: bool) -> Circuit {
    assert!(depth >= 1 && negate.len() >= depth);
    let mut b = CircuitBuilder::new();
    let input = b.input(Some("in"));
    let latches: Vec<Lit> = (0..=depth).map(|j| b.latch(Some(&format!("s{j}")))).collect();
    b.set_latch(latches[0], Lit::from_code(seed_value as u32), input);
    for j in 1..=depth {
        let reset = if j >= 2 && negate[j - 1] {
            b.and(!latches[j - 1], latches[j - 2])
        } else {
            latches[j - 1]
        };
        b.set_latch(latches[j], reset, latches[j - 1]);
    }
    let last = latches[depth];
    let first = latches[0];
    let bad = b.and(last, first);
    b.finish(!bad)
}
