use std::io::Write as _;
use std::process::Command;
use std::time::Instant;

use super::{check_model, Budget, Model, SatError, SatOutcome, SatStatus, SolverStats};
use crate::encode::{emit_dimacs, CnfFormula};

/// Runs an external solver on `f`. The command is split on whitespace and
/// the path of a temporary DIMACS file is appended as the last argument.
///
/// Exit codes 10 and 20 follow the competition convention; 0 is accepted
/// when the output carries a status line. SAT models are checked before
/// they are returned. Only the time budget is forwarded, as a hard limit on
/// the output being accepted.
pub fn external_solve(f: &CnfFormula, command: &str, budget: Budget) -> Result<SatOutcome, SatError> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| SatError::External("empty solver command".to_owned()))?;
    let mut file = tempfile::Builder::new()
        .suffix(".cnf")
        .tempfile()
        .map_err(|e| SatError::External(format!("cannot create temporary file: {e}")))?;
    file.write_all(emit_dimacs(f).as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| SatError::External(format!("cannot write DIMACS: {e}")))?;

    let start = Instant::now();
    let output = Command::new(program)
        .args(parts)
        .arg(file.path())
        .output()
        .map_err(|e| SatError::External(format!("cannot run '{program}': {e}")))?;
    let elapsed = start.elapsed();
    if budget.max_time.is_some_and(|t| elapsed > t) {
        return Err(SatError::BudgetExhausted {
            stats: SolverStats {
                wall_seconds: elapsed.as_secs_f64(),
                ..SolverStats::default()
            },
        });
    }

    let stdout = String::from_utf8_lossy(&output.stdout);
    let (status, true_vars) = parse_solver_output(&stdout, f.num_vars())?;
    let expected = match output.status.code() {
        Some(10) => Some(SatStatus::Sat),
        Some(20) => Some(SatStatus::Unsat),
        Some(0) => None,
        code => {
            return Err(SatError::External(format!(
                "'{program}' exited with unexpected status {code:?}"
            )))
        }
    };
    if expected.is_some_and(|e| e != status) {
        return Err(SatError::External(format!(
            "exit status {:?} contradicts the reported result {status:?}",
            output.status.code()
        )));
    }
    let stats = SolverStats {
        wall_seconds: elapsed.as_secs_f64(),
        ..SolverStats::default()
    };
    let model = match status {
        SatStatus::Unsat => None,
        SatStatus::Sat => {
            let model = Model::from_true_vars(f.num_vars(), true_vars);
            if !check_model(f, &model) {
                return Err(SatError::External("model fails validation".to_owned()));
            }
            Some(model)
        }
    };
    Ok(SatOutcome { status, model, stats })
}

/// Reads the status line and `v` lines of competition-style solver output.
/// Returns the status and the variables assigned true.
pub fn parse_solver_output(text: &str, num_vars: u32) -> Result<(SatStatus, Vec<u32>), SatError> {
    let mut status = None;
    let mut true_vars = Vec::new();
    let mut terminated = false;
    for line in text.lines() {
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix("s ") {
            let s = match rest.trim() {
                "SATISFIABLE" => SatStatus::Sat,
                "UNSATISFIABLE" => SatStatus::Unsat,
                "UNKNOWN" => {
                    return Err(SatError::External("solver answered UNKNOWN".to_owned()));
                }
                other => return Err(SatError::External(format!("unrecognized status line 's {other}'"))),
            };
            if status.replace(s).is_some() {
                return Err(SatError::External("more than one status line".to_owned()));
            }
        } else if let Some(rest) = line.strip_prefix('v') {
            for token in rest.split_whitespace() {
                let lit: i64 = token
                    .parse()
                    .map_err(|_| SatError::External(format!("bad value token '{token}'")))?;
                if lit == 0 {
                    terminated = true;
                } else if lit.unsigned_abs() > num_vars as u64 {
                    return Err(SatError::External(format!("value {lit} names an unknown variable")));
                } else if lit > 0 {
                    true_vars.push(lit as u32);
                }
            }
        }
    }
    let status = status.ok_or_else(|| SatError::External("no status line in solver output".to_owned()))?;
    if status == SatStatus::Sat && num_vars > 0 && !terminated {
        return Err(SatError::External("model is missing or not terminated by 0".to_owned()));
    }
    Ok((status, true_vars))
}
