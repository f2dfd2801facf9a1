//! Bridge to DIMACS-speaking external solvers: the formula goes to a
//! temporary file, the command runs with that path appended, and the
//! "s SATISFIABLE/UNSATISFIABLE" plus "v" lines come back.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use thiserror::Error;

use crate::cnf::{read_dimacs_model, CnfFormula};
use crate::solver::{SolveOutcome, SolveStats, SolveStatus};

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("empty solver command")]
    EmptyCommand,
    #[error("failed to run {0}: {1}")]
    Spawn(String, std::io::Error),
    #[error("solver answered SATISFIABLE but printed no parseable model")]
    MissingModel,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct ExternalSolver {
    command: Vec<String>,
}

impl ExternalSolver {
    pub fn new(command: &str) -> Result<Self, ExternalError> {
        let parts: Vec<String> = command.split_whitespace().map(String::from).collect();
        if parts.is_empty() {
            return Err(ExternalError::EmptyCommand);
        }
        Ok(ExternalSolver { command: parts })
    }

    pub fn solve(&self, formula: &CnfFormula) -> Result<SolveOutcome, ExternalError> {
        let started = Instant::now();
        let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
        file.write_all(formula.to_dimacs().as_bytes())?;
        file.flush()?;
        let output = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(file.path())
            .output()
            .map_err(|e| ExternalError::Spawn(self.command.join(" "), e))?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        let stats = SolveStats { elapsed: started.elapsed(), ..Default::default() };
        let status_line = stdout.lines().find(|l| l.starts_with("s "));
        match status_line.map(str::trim) {
            Some("s SATISFIABLE") => {
                let model = read_dimacs_model(&stdout).map_err(|_| ExternalError::MissingModel)?;
                Ok(SolveOutcome {
                    status: SolveStatus::Sat,
                    model: Some(model),
                    best_unsat: None,
                    stats,
                })
            }
            Some("s UNSATISFIABLE") => {
                Ok(SolveOutcome { status: SolveStatus::Unsat, model: None, best_unsat: None, stats })
            }
            _ => Ok(SolveOutcome { status: SolveStatus::Unknown, model: None, best_unsat: None, stats }),
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use std::os::unix::fs::PermissionsExt;

    fn fake_solver(answer: &str) -> tempfile::TempPath {
        let mut file = tempfile::Builder::new().suffix(".sh").tempfile().unwrap();
        writeln!(file, "#!/bin/sh").unwrap();
        writeln!(file, "{answer}").unwrap();
        let path = file.into_temp_path();
        let mut perms = std::fs::metadata(&path).unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&path, perms).unwrap();
        path
    }

    #[test]
    fn parses_sat_answers() {
        let script = fake_solver("echo 's SATISFIABLE'; echo 'v 1 -2 0'");
        let solver = ExternalSolver::new(script.to_str().unwrap()).unwrap();
        let mut f = CnfFormula::new(2);
        f.add_clause(&[1, -2]).unwrap();
        let out = solver.solve(&f).unwrap();
        assert_eq!(out.status, SolveStatus::Sat);
        let m = out.model.unwrap();
        assert!(m.get(1));
        assert!(!m.get(2));
    }

    #[test]
    fn parses_unsat_and_unknown_answers() {
        let f = CnfFormula::new(1);
        let script = fake_solver("echo 's UNSATISFIABLE'");
        let solver = ExternalSolver::new(script.to_str().unwrap()).unwrap();
        assert_eq!(solver.solve(&f).unwrap().status, SolveStatus::Unsat);
        let script = fake_solver("echo 'c nothing to see'");
        let solver = ExternalSolver::new(script.to_str().unwrap()).unwrap();
        assert_eq!(solver.solve(&f).unwrap().status, SolveStatus::Unknown);
    }

    #[test]
    fn rejects_empty_commands() {
        assert!(ExternalSolver::new("  ").is_err());
    }
}
