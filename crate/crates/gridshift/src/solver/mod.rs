//! Embedded SAT engines: a CDCL solver, a WalkSAT-style local search, a
//! racing portfolio, and all-solutions enumeration over coloring encodings.

mod cdcl;
mod external;
mod walksat;

pub use external::ExternalSolver;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{evaluate, Assignment, CnfFormula};
use crate::encoder::{blocking_clause, EncodeError, VarMap};
use crate::grid::Coloring;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineMode {
    Cdcl,
    LocalSearch,
    Portfolio,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub seed: u64,
    pub timeout: Duration,
    pub mode: EngineMode,
    /// Flip budget per local-search run.
    pub max_flips: u64,
    /// WalkSAT noise parameter.
    pub noise: f64,
    /// Geometric restart policy: first interval and multiplier.
    pub restart_base: u64,
    pub restart_mult: f64,
    /// VSIDS activity decay factor.
    pub var_decay: f64,
    /// Fraction of decisions taken on a seeded-random unassigned variable.
    pub random_decision_freq: f64,
    /// Worker count in portfolio mode (one CDCL, the rest local search).
    pub portfolio_workers: usize,
    /// External cancellation knob shared by portfolio workers.
    pub stop: Option<Arc<AtomicBool>>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            seed: 0,
            timeout: Duration::from_secs(60),
            mode: EngineMode::Cdcl,
            max_flips: 20_000_000,
            noise: 0.5,
            restart_base: 100,
            restart_mult: 1.02,
            var_decay: 0.95,
            random_decision_freq: 0.02,
            portfolio_workers: 4,
            stop: None,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if self.timeout.is_zero() {
            return Err(SolveError::Config("timeout must be positive".into()));
        }
        if self.max_flips == 0 {
            return Err(SolveError::Config("max_flips must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(SolveError::Config("noise must lie in [0, 1]".into()));
        }
        if self.portfolio_workers == 0 {
            return Err(SolveError::Config("portfolio needs at least one worker".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub flips: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub model: Option<Assignment>,
    /// Minimum number of unsatisfied clauses seen, local search only.
    pub best_unsat: Option<u64>,
    pub stats: SolveStats,
}

/// Run controls shared by the engines.
#[derive(Clone)]
pub(crate) struct Budget {
    pub deadline: Instant,
    pub stop: Option<Arc<AtomicBool>>,
}

impl Budget {
    fn new(cfg: &SolveConfig) -> Self {
        Budget { deadline: Instant::now() + cfg.timeout, stop: cfg.stop.clone() }
    }

    pub fn exhausted(&self) -> bool {
        if Instant::now() >= self.deadline {
            return true;
        }
        match &self.stop {
            Some(flag) => flag.load(Ordering::Relaxed),
            None => false,
        }
    }
}

fn check_model(formula: &CnfFormula, outcome: &SolveOutcome) {
    if outcome.status == SolveStatus::Sat {
        let model = outcome.model.as_ref().expect("sat outcome carries a model");
        assert!(evaluate(formula, model), "engine returned a model that fails the evaluator");
    }
}

/// Solves a formula with the configured engine. Timeouts yield `Unknown`,
/// never a wrong status; every returned model is re-checked by the
/// independent evaluator.
pub fn solve(formula: &CnfFormula, cfg: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    cfg.validate()?;
    let budget = Budget::new(cfg);
    let outcome = match cfg.mode {
        EngineMode::Cdcl => {
            let mut engine = cdcl::Cdcl::from_formula(formula, cfg);
            engine.solve(&budget)
        }
        EngineMode::LocalSearch => walksat::run(formula, cfg, cfg.seed, &budget),
        EngineMode::Portfolio => portfolio(formula, cfg, &budget),
    };
    check_model(formula, &outcome);
    Ok(outcome)
}

fn portfolio(formula: &CnfFormula, cfg: &SolveConfig, budget: &Budget) -> SolveOutcome {
    let start = Instant::now();
    let shared = Arc::new(formula.clone());
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<SolveOutcome>();
    let mut handles = Vec::new();
    for worker in 0..cfg.portfolio_workers {
        let formula = Arc::clone(&shared);
        let tx = tx.clone();
        let mut worker_cfg = cfg.clone();
        worker_cfg.stop = Some(Arc::clone(&stop));
        worker_cfg.seed = cfg.seed.wrapping_add(worker as u64);
        let worker_budget = Budget { deadline: budget.deadline, stop: Some(Arc::clone(&stop)) };
        handles.push(std::thread::spawn(move || {
            let outcome = if worker == 0 {
                let mut engine = cdcl::Cdcl::from_formula(&formula, &worker_cfg);
                engine.solve(&worker_budget)
            } else {
                walksat::run(&formula, &worker_cfg, worker_cfg.seed, &worker_budget)
            };
            let _ = tx.send(outcome);
        }));
    }
    drop(tx);

    let mut best_unsat: Option<u64> = None;
    let mut decisive: Option<SolveOutcome> = None;
    for outcome in rx.iter() {
        if let Some(b) = outcome.best_unsat {
            best_unsat = Some(best_unsat.map_or(b, |cur| cur.min(b)));
        }
        if outcome.status != SolveStatus::Unknown {
            decisive = Some(outcome);
            stop.store(true, Ordering::Relaxed);
            break;
        }
    }
    stop.store(true, Ordering::Relaxed);
    for handle in handles {
        let _ = handle.join();
    }
    match decisive {
        Some(mut outcome) => {
            outcome.stats.elapsed = start.elapsed();
            outcome
        }
        None => SolveOutcome {
            status: SolveStatus::Unknown,
            model: None,
            best_unsat,
            stats: SolveStats { elapsed: start.elapsed(), ..Default::default() },
        },
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub colorings: Vec<Coloring>,
    /// True iff the search ended with an unsatisfiable formula, so the list
    /// is the complete solution set of the encoding.
    pub complete: bool,
}

/// Enumerates the colorings of an encoding: repeated solving with a
/// blocking clause after each model. Selector and counter variables are
/// projected out, so the yield is pairwise-distinct colorings.
pub fn enumerate(
    formula: &CnfFormula,
    vm: &VarMap,
    limit: usize,
    cfg: &SolveConfig,
) -> Result<EnumerationResult, SolveError> {
    cfg.validate()?;
    let budget = Budget::new(cfg);
    let mut engine = cdcl::Cdcl::from_formula(formula, cfg);
    let mut colorings = Vec::new();
    loop {
        if colorings.len() >= limit {
            return Ok(EnumerationResult { colorings, complete: false });
        }
        match engine.solve(&budget) {
            out if out.status == SolveStatus::Sat => {
                let model = out.model.expect("sat carries model");
                debug_assert!(evaluate(formula, &model));
                let coloring = vm.decode(&model)?;
                let lits = blocking_clause(vm, &coloring)?;
                colorings.push(coloring);
                if !engine.add_clause_dimacs(&lits) {
                    return Ok(EnumerationResult { colorings, complete: true });
                }
            }
            out if out.status == SolveStatus::Unsat => {
                return Ok(EnumerationResult { colorings, complete: true });
            }
            _ => return Ok(EnumerationResult { colorings, complete: false }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::encode_base;
    use crate::grid::GridSpec;
    use crate::testutil::brute_force_rectangle_free;

    fn formula(num_vars: u32, clauses: &[&[i32]]) -> CnfFormula {
        let mut f = CnfFormula::new(num_vars);
        for c in clauses {
            f.add_clause(c).unwrap();
        }
        f
    }

    #[test]
    fn unit_formula_is_sat() {
        let f = formula(1, &[&[1]]);
        let out = solve(&f, &SolveConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Sat);
        assert!(out.model.unwrap().get(1));
    }

    #[test]
    fn contradictory_units_are_unsat() {
        let f = formula(1, &[&[1], &[-1]]);
        let out = solve(&f, &SolveConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Unsat);
    }

    #[test]
    fn empty_formula_is_sat() {
        let f = CnfFormula::new(3);
        let out = solve(&f, &SolveConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Sat);
    }

    #[test]
    fn cdcl_is_deterministic() {
        let spec = GridSpec::new(4, 4, 2).unwrap();
        let (f, _) = encode_base(spec).unwrap();
        let cfg = SolveConfig::default();
        let a = solve(&f, &cfg).unwrap();
        let b = solve(&f, &cfg).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.model.as_ref().map(|m| format!("{m:?}")), b.model.as_ref().map(|m| format!("{m:?}")));
        assert_eq!((a.stats.conflicts, a.stats.decisions, a.stats.propagations), (b.stats.conflicts, b.stats.decisions, b.stats.propagations));
    }

    #[test]
    fn local_search_finds_easy_models_and_never_reports_unsat() {
        let sat = formula(3, &[&[1, 2], &[-1, 3], &[2, -3]]);
        let mut cfg = SolveConfig { mode: EngineMode::LocalSearch, ..Default::default() };
        let out = solve(&sat, &cfg).unwrap();
        assert_eq!(out.status, SolveStatus::Sat);

        let unsat = formula(1, &[&[1], &[-1]]);
        cfg.max_flips = 2_000;
        let out = solve(&unsat, &cfg).unwrap();
        assert_eq!(out.status, SolveStatus::Unknown);
        assert!(out.best_unsat.unwrap() >= 1);
    }

    #[test]
    fn portfolio_settles_both_ways() {
        let sat = formula(3, &[&[1, 2], &[-1, 3]]);
        let cfg = SolveConfig { mode: EngineMode::Portfolio, ..Default::default() };
        let out = solve(&sat, &cfg).unwrap();
        assert_eq!(out.status, SolveStatus::Sat);

        let unsat = formula(2, &[&[1, 2], &[1, -2], &[-1, 2], &[-1, -2]]);
        let out = solve(&unsat, &cfg).unwrap();
        assert_eq!(out.status, SolveStatus::Unsat);
    }

    #[test]
    fn enumerate_small_specs() {
        // 1×2 with two colors: all four colorings are rectangle-free.
        let spec = GridSpec::new(1, 2, 2).unwrap();
        let (f, vm) = encode_base(spec).unwrap();
        let out = enumerate(&f, &vm, usize::MAX, &SolveConfig::default()).unwrap();
        assert!(out.complete);
        assert_eq!(out.colorings.len(), 4);

        // Constant 2×2 with one color always has a rectangle.
        let spec = GridSpec::new(2, 2, 1).unwrap();
        let (f, vm) = encode_base(spec).unwrap();
        let out = enumerate(&f, &vm, usize::MAX, &SolveConfig::default()).unwrap();
        assert!(out.complete);
        assert!(out.colorings.is_empty());
    }

    #[test]
    fn enumeration_agrees_with_brute_force() {
        for (m, n, k) in [(2, 2, 2), (2, 3, 2), (3, 3, 2), (2, 2, 3)] {
            let spec = GridSpec::new(m, n, k).unwrap();
            let (f, vm) = encode_base(spec).unwrap();
            let out = enumerate(&f, &vm, usize::MAX, &SolveConfig::default()).unwrap();
            assert!(out.complete);
            let mut got: Vec<Vec<u8>> = out.colorings.iter().map(|c| c.cells().to_vec()).collect();
            let mut want: Vec<Vec<u8>> =
                brute_force_rectangle_free(spec).iter().map(|c| c.cells().to_vec()).collect();
            got.sort();
            want.sort();
            assert_eq!(got, want, "spec {m}x{n}x{k}");
        }
    }

    #[test]
    fn enumeration_respects_limit_and_flags_incompleteness() {
        let spec = GridSpec::new(1, 2, 2).unwrap();
        let (f, vm) = encode_base(spec).unwrap();
        let out = enumerate(&f, &vm, 2, &SolveConfig::default()).unwrap();
        assert_eq!(out.colorings.len(), 2);
        assert!(!out.complete);
    }

    #[test]
    fn blocking_is_sound_no_coloring_repeats() {
        let spec = GridSpec::new(3, 3, 2).unwrap();
        let (f, vm) = encode_base(spec).unwrap();
        let out = enumerate(&f, &vm, usize::MAX, &SolveConfig::default()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in &out.colorings {
            assert!(seen.insert(c.cells().to_vec()), "coloring repeated");
        }
    }

    #[test]
    fn config_validation() {
        let f = CnfFormula::new(1);
        let bad = SolveConfig { timeout: Duration::ZERO, ..Default::default() };
        assert!(solve(&f, &bad).is_err());
        let bad = SolveConfig { max_flips: 0, ..Default::default() };
        assert!(solve(&f, &bad).is_err());
        let bad = SolveConfig { noise: 1.5, ..Default::default() };
        assert!(solve(&f, &bad).is_err());
    }
}
