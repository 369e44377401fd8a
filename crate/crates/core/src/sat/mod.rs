//! Satisfiability of [`CnfFormula`]s: an embedded CDCL solver and an adapter
//! for external DIMACS solvers. Every SAT answer is checked against the
//! formula before it is returned.

mod cdcl;
mod external;

pub use external::{external_solve, parse_solver_output};

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::CnfFormula;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SatStatus {
    Sat,
    Unsat,
}

/// Total assignment; `values[v]` is the value of DIMACS variable `v`, and
/// index 0 is unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn from_values(values: Vec<bool>) -> Model {
        Model { values }
    }

    /// Model from a list of true variables over `num_vars` variables.
    pub fn from_true_vars(num_vars: u32, true_vars: impl IntoIterator<Item = u32>) -> Model {
        let mut values = vec![false; num_vars as usize + 1];
        for v in true_vars {
            values[v as usize] = true;
        }
        Model { values }
    }

    pub fn num_vars(&self) -> u32 {
        (self.values.len().max(1) - 1) as u32
    }

    /// Value of a DIMACS literal. Variables beyond the model read as false.
    pub fn lit(&self, lit: i32) -> bool {
        let v = self.values.get(lit.unsigned_abs() as usize).copied().unwrap_or(false);
        v == (lit > 0)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SatOutcome {
    pub status: SatStatus,
    /// Present exactly when `status` is `Sat`.
    pub model: Option<Model>,
    pub stats: SolverStats,
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Sat
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_conflicts: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Budget {
        Budget::default()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SatError {
    #[error("solver budget exhausted after {} conflicts", stats.conflicts)]
    BudgetExhausted { stats: SolverStats },
    #[error("external solver: {0}")]
    External(String),
    #[error("solver model does not satisfy the formula")]
    InvalidModel,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SolverChoice {
    #[default]
    Embedded,
    /// Command line of an external solver; the DIMACS file path is appended.
    External(String),
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverChoice::Embedded => write!(f, "embedded"),
            SolverChoice::External(cmd) => write!(f, "cmd:{cmd}"),
        }
    }
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedded" => Ok(SolverChoice::Embedded),
            _ => match s.strip_prefix("cmd:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(SolverChoice::External(cmd.to_owned())),
                _ => Err(format!("unknown solver '{s}', expected 'embedded' or 'cmd:<command>'")),
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SatConfig {
    pub solver: SolverChoice,
    pub budget: Budget,
    pub seed: u64,
}

/// Solves with the embedded solver.
pub fn solve(f: &CnfFormula, budget: Budget) -> Result<SatOutcome, SatError> {
    solve_seeded(f, budget, 0)
}

pub fn solve_seeded(f: &CnfFormula, budget: Budget, seed: u64) -> Result<SatOutcome, SatError> {
    let outcome = cdcl::Solver::new(f, seed).solve(budget)?;
    if let Some(model) = &outcome.model {
        if !check_model(f, model) {
            return Err(SatError::InvalidModel);
        }
    }
    Ok(outcome)
}

pub fn solve_with(f: &CnfFormula, config: &SatConfig) -> Result<SatOutcome, SatError> {
    match &config.solver {
        SolverChoice::Embedded => solve_seeded(f, config.budget, config.seed),
        SolverChoice::External(cmd) => external_solve(f, cmd, config.budget),
    }
}

/// True iff every clause has a literal that is true under `model`.
pub fn check_model(f: &CnfFormula, model: &Model) -> bool {
    f.clauses().iter().all(|c| c.iter().any(|&l| model.lit(l)))
}
