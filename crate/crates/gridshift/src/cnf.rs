//! Clause database and DIMACS text formats.
//!
//! Literals are nonzero integers whose sign is the polarity, DIMACS style.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("empty clause")]
    EmptyClause,
    #[error("literal {0} references a variable beyond {1}")]
    LiteralOutOfRange(i32, u32),
    #[error("clause contains both {0} and its negation")]
    Tautology(i32),
    #[error("malformed DIMACS: {0}")]
    Dimacs(String),
    #[error("no model line with a terminating 0 found")]
    NoModel,
}

/// A CNF formula over variables 1..=num_vars.
///
/// Construction rejects empty and tautological clauses and drops repeated
/// literals inside a clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: u32) -> Self {
        CnfFormula { num_vars, clauses: Vec::new() }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Reserves `n` fresh variables, returning the first new id.
    pub fn add_vars(&mut self, n: u32) -> u32 {
        let first = self.num_vars + 1;
        self.num_vars += n;
        first
    }

    pub fn add_clause(&mut self, lits: &[i32]) -> Result<(), CnfError> {
        if lits.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        let mut clause: Vec<i32> = Vec::with_capacity(lits.len());
        for &lit in lits {
            if lit == 0 || lit.unsigned_abs() > self.num_vars {
                return Err(CnfError::LiteralOutOfRange(lit, self.num_vars));
            }
            if clause.contains(&-lit) {
                return Err(CnfError::Tautology(lit));
            }
            if !clause.contains(&lit) {
                clause.push(lit);
            }
        }
        self.clauses.push(clause);
        Ok(())
    }

    /// Serializes to DIMACS CNF text.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&lit.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }

    /// Parses DIMACS CNF text; `to_dimacs` composed with `parse_dimacs` is
    /// the identity.
    pub fn parse_dimacs(text: &str) -> Result<Self, CnfError> {
        let mut header: Option<(u32, usize)> = None;
        let mut formula = CnfFormula::new(0);
        let mut current: Vec<i32> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                if header.is_some() {
                    return Err(CnfError::Dimacs("duplicate header".into()));
                }
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [fmt, vars, clauses] = parts[..] else {
                    return Err(CnfError::Dimacs(format!("bad header {line:?}")));
                };
                if fmt != "cnf" {
                    return Err(CnfError::Dimacs(format!("unsupported format {fmt:?}")));
                }
                let vars: u32 =
                    vars.parse().map_err(|_| CnfError::Dimacs(format!("bad var count {vars:?}")))?;
                let clauses: usize = clauses
                    .parse()
                    .map_err(|_| CnfError::Dimacs(format!("bad clause count {clauses:?}")))?;
                header = Some((vars, clauses));
                formula = CnfFormula::new(vars);
                continue;
            }
            if header.is_none() {
                return Err(CnfError::Dimacs("clause before header".into()));
            }
            for tok in line.split_whitespace() {
                let lit: i32 =
                    tok.parse().map_err(|_| CnfError::Dimacs(format!("bad literal {tok:?}")))?;
                if lit == 0 {
                    formula.add_clause(&current)?;
                    current.clear();
                } else {
                    current.push(lit);
                }
            }
        }
        let (_, expected) = header.ok_or_else(|| CnfError::Dimacs("missing header".into()))?;
        if !current.is_empty() {
            return Err(CnfError::Dimacs("unterminated clause".into()));
        }
        if formula.clauses.len() != expected {
            return Err(CnfError::Dimacs(format!(
                "header promises {expected} clauses, found {}",
                formula.clauses.len()
            )));
        }
        Ok(formula)
    }
}

/// A truth assignment; variables beyond the stored range read as false.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<bool>, // index var, slot 0 unused
}

impl Assignment {
    pub fn new(num_vars: u32) -> Self {
        Assignment { values: vec![false; num_vars as usize + 1] }
    }

    pub fn set(&mut self, var: u32, value: bool) {
        if var as usize >= self.values.len() {
            self.values.resize(var as usize + 1, false);
        }
        self.values[var as usize] = value;
    }

    pub fn get(&self, var: u32) -> bool {
        self.values.get(var as usize).copied().unwrap_or(false)
    }

    /// True iff the literal holds under this assignment.
    pub fn satisfies_lit(&self, lit: i32) -> bool {
        self.get(lit.unsigned_abs()) == (lit > 0)
    }
}

/// Model evaluator independent of any solver's internal state.
pub fn evaluate(formula: &CnfFormula, assignment: &Assignment) -> bool {
    formula
        .clauses()
        .iter()
        .all(|clause| clause.iter().any(|&lit| assignment.satisfies_lit(lit)))
}

/// Parses solver output: lines beginning with "v" carry literals, the model
/// ends at a literal 0.
pub fn read_dimacs_model(text: &str) -> Result<Assignment, CnfError> {
    let mut assignment = Assignment::default();
    let mut terminated = false;
    let mut saw_lit = false;
    'outer: for line in text.lines() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix('v') else {
            continue;
        };
        for tok in rest.split_whitespace() {
            let lit: i32 = tok.parse().map_err(|_| CnfError::Dimacs(format!("bad literal {tok:?}")))?;
            if lit == 0 {
                terminated = true;
                break 'outer;
            }
            saw_lit = true;
            assignment.set(lit.unsigned_abs(), lit > 0);
        }
    }
    if !terminated || !saw_lit {
        return Err(CnfError::NoModel);
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_text_is_exact() {
        let mut f = CnfFormula::new(2);
        f.add_clause(&[1, -2]).unwrap();
        assert_eq!(f.to_dimacs(), "p cnf 2 1\n1 -2 0\n");
    }

    #[test]
    fn roundtrip_is_identity() {
        let mut f = CnfFormula::new(5);
        f.add_clause(&[1, -2, 3]).unwrap();
        f.add_clause(&[-4]).unwrap();
        f.add_clause(&[5, 2]).unwrap();
        let parsed = CnfFormula::parse_dimacs(&f.to_dimacs()).unwrap();
        assert_eq!(parsed, f);
    }

    #[test]
    fn clause_validation() {
        let mut f = CnfFormula::new(2);
        assert_eq!(f.add_clause(&[]), Err(CnfError::EmptyClause));
        assert_eq!(f.add_clause(&[3]), Err(CnfError::LiteralOutOfRange(3, 2)));
        assert_eq!(f.add_clause(&[0]), Err(CnfError::LiteralOutOfRange(0, 2)));
        assert_eq!(f.add_clause(&[1, -1]), Err(CnfError::Tautology(-1)));
        f.add_clause(&[1, 1, -2]).unwrap();
        assert_eq!(f.clauses()[0], vec![1, -2]);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(CnfFormula::parse_dimacs("1 -2 0\n").is_err());
        assert!(CnfFormula::parse_dimacs("p cnf 2\n").is_err());
        assert!(CnfFormula::parse_dimacs("p cnf 1 1\n1 -2 0\n").is_err());
        assert!(CnfFormula::parse_dimacs("p cnf 2 2\n1 -2 0\n").is_err());
        assert!(CnfFormula::parse_dimacs("p cnf 2 1\n1 -2\n").is_err());
        let with_comments = "c generated\np cnf 2 1\nc body\n1 -2 0\n";
        assert!(CnfFormula::parse_dimacs(with_comments).is_ok());
    }

    #[test]
    fn model_lines() {
        let a = read_dimacs_model("s SATISFIABLE\nv 1 -2 0\n").unwrap();
        assert!(a.get(1));
        assert!(!a.get(2));
        let a = read_dimacs_model("v 1 -2 3\nv -4 0\n").unwrap();
        assert!(a.get(3));
        assert!(!a.get(4));
        assert!(read_dimacs_model("s SATISFIABLE\n").is_err());
        assert!(read_dimacs_model("v 1 -2\n").is_err());
        assert!(read_dimacs_model("v x 0\n").is_err());
    }

    #[test]
    fn evaluator() {
        let mut f = CnfFormula::new(2);
        f.add_clause(&[1, -2]).unwrap();
        let mut a = Assignment::new(2);
        assert!(evaluate(&f, &a)); // 2 defaults to false
        a.set(2, true);
        assert!(!evaluate(&f, &a));
        a.set(1, true);
        assert!(evaluate(&f, &a));
    }
}
