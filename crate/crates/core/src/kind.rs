//! k-induction: a bounded check from the reset states and a consecution
//! check over k consecutive good states, for increasing k.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::encode::{encode_reset_all, encode_unrolling, tseitin_cone, CnfFormula, FrameMap};
use crate::sat::{solve_with, SatConfig, SatError, SolverStats};
use crate::trace::Trace;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Unsat,
    /// A satisfying execution of the query.
    Sat(Trace),
}

impl CheckResult {
    pub fn is_unsat(&self) -> bool {
        matches!(self, CheckResult::Unsat)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KindVerdict {
    Proved { k: usize },
    Counterexample(Trace),
    BoundReached { kmax: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindCheck {
    Bmc,
    Consecution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindCheckRecord {
    pub k: usize,
    pub check: KindCheck,
    pub unsat: bool,
    pub stats: SolverStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KindResult {
    pub verdict: KindVerdict,
    pub checks: Vec<KindCheckRecord>,
}

/// `R(L_0) ∧ U_{k-1} ∧ ⋁_{i<k} ¬P(I_i, L_i)` together with its frame map.
pub fn bmc_formula(c: &Circuit, k: usize) -> (CnfFormula, FrameMap) {
    assert!(k >= 1, "k must be positive");
    let mut f = CnfFormula::new();
    let mut map = FrameMap::new();
    for t in 0..k {
        map.allocate_state(c, t, &mut f);
    }
    encode_reset_all(c, &mut map, &mut f);
    encode_unrolling(c, k - 1, &mut map, &mut f);
    let bad: Vec<i32> = (0..k)
        .map(|t| -tseitin_cone(c, c.property(), &mut map, t, &mut f))
        .collect();
    f.add_clause(bad);
    (f, map)
}

/// `U_k ∧ ⋀_{i<k} P(I_i, L_i) ∧ ¬P(I_k, L_k)` together with its frame map.
pub fn consecution_formula(c: &Circuit, k: usize) -> (CnfFormula, FrameMap) {
    assert!(k >= 1, "k must be positive");
    let mut f = CnfFormula::new();
    let mut map = FrameMap::new();
    for t in 0..=k {
        map.allocate_state(c, t, &mut f);
    }
    encode_unrolling(c, k, &mut map, &mut f);
    for t in 0..k {
        let p = tseitin_cone(c, c.property(), &mut map, t, &mut f);
        f.add_clause([p]);
    }
    let p = tseitin_cone(c, c.property(), &mut map, k, &mut f);
    f.add_clause([-p]);
    (f, map)
}

/// Bounded check: UNSAT iff every state within `k - 1` steps of a reset
/// state satisfies the property. A SAT answer is returned as a trace that
/// ends at the first violating frame.
pub fn bmc_check(c: &Circuit, k: usize, sat: &SatConfig) -> Result<(CheckResult, SolverStats), SatError> {
    let (f, map) = bmc_formula(c, k);
    let out = solve_with(&f, sat)?;
    let result = match out.model {
        None => CheckResult::Unsat,
        Some(model) => {
            let mut trace = Trace::from_model(c, &map, &model, k);
            let first_bad = trace
                .property_values(c)
                .iter()
                .position(|&p| !p)
                .expect("a BMC model violates the property in some frame");
            trace.truncate(first_bad + 1);
            CheckResult::Sat(trace)
        }
    };
    Ok((result, out.stats))
}

/// Consecution: UNSAT iff `k` consecutive good states are always followed
/// by a good state.
pub fn consecution_check(c: &Circuit, k: usize, sat: &SatConfig) -> Result<(CheckResult, SolverStats), SatError> {
    let (f, map) = consecution_formula(c, k);
    let out = solve_with(&f, sat)?;
    let result = match out.model {
        None => CheckResult::Unsat,
        Some(model) => CheckResult::Sat(Trace::from_model(c, &map, &model, k + 1)),
    };
    Ok((result, out.stats))
}

/// Whether both k-induction conditions hold at exactly this `k`.
pub fn is_k_inductive(c: &Circuit, k: usize, sat: &SatConfig) -> Result<bool, SatError> {
    Ok(bmc_check(c, k, sat)?.0.is_unsat() && consecution_check(c, k, sat)?.0.is_unsat())
}

/// Tries `k = 1, 2, .., kmax` and stops at the first `k` where both checks
/// are UNSAT, or at the first counterexample.
pub fn prove(c: &Circuit, kmax: usize, sat: &SatConfig) -> Result<KindResult, SatError> {
    let mut checks = Vec::new();
    for k in 1..=kmax {
        let (bmc, stats) = bmc_check(c, k, sat)?;
        checks.push(KindCheckRecord {
            k,
            check: KindCheck::Bmc,
            unsat: bmc.is_unsat(),
            stats,
        });
        if let CheckResult::Sat(trace) = bmc {
            return Ok(KindResult {
                verdict: KindVerdict::Counterexample(trace),
                checks,
            });
        }
        let (step, stats) = consecution_check(c, k, sat)?;
        checks.push(KindCheckRecord {
            k,
            check: KindCheck::Consecution,
            unsat: step.is_unsat(),
            stats,
        });
        if step.is_unsat() {
            return Ok(KindResult {
                verdict: KindVerdict::Proved { k },
                checks,
            });
        }
    }
    Ok(KindResult {
        verdict: KindVerdict::BoundReached { kmax },
        checks,
    })
}
