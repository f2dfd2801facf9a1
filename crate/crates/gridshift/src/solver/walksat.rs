//! WalkSAT/SKC local search: pick a random unsatisfied clause, flip a
//! zero-break variable if one exists, otherwise flip a random clause
//! variable with probability `noise` and the minimum-break variable
//! otherwise. Restarts from a fresh random assignment every
//! max_flips/10 flips.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::time::Instant;

use crate::cnf::{Assignment, CnfFormula};
use crate::solver::{Budget, SolveConfig, SolveOutcome, SolveStats, SolveStatus};

struct State {
    nvars: usize,
    clauses: Vec<Vec<i32>>,
    /// Clause indices per literal occurrence; literal l maps to slot
    /// 2·(var−1) + (l < 0).
    occ: Vec<Vec<u32>>,
    assign: Vec<bool>,
    n_true: Vec<u32>,
    unsat: Vec<u32>,
    unsat_pos: Vec<i32>,
}

fn slot(lit: i32) -> usize {
    ((lit.unsigned_abs() as usize - 1) << 1) | usize::from(lit < 0)
}

impl State {
    fn new(formula: &CnfFormula) -> Self {
        let nvars = formula.num_vars() as usize;
        let clauses: Vec<Vec<i32>> = formula.clauses().to_vec();
        let mut occ = vec![Vec::new(); 2 * nvars];
        for (ci, clause) in clauses.iter().enumerate() {
            for &lit in clause {
                occ[slot(lit)].push(ci as u32);
            }
        }
        State {
            nvars,
            n_true: vec![0; clauses.len()],
            unsat: Vec::new(),
            unsat_pos: vec![-1; clauses.len()],
            assign: vec![false; nvars],
            clauses,
            occ,
        }
    }

    fn lit_true(&self, lit: i32) -> bool {
        self.assign[lit.unsigned_abs() as usize - 1] == (lit > 0)
    }

    fn randomize(&mut self, rng: &mut ChaCha8Rng) {
        for v in 0..self.nvars {
            self.assign[v] = rng.gen_bool(0.5);
        }
        self.unsat.clear();
        self.unsat_pos.iter_mut().for_each(|p| *p = -1);
        for ci in 0..self.clauses.len() {
            self.n_true[ci] = self.clauses[ci].iter().filter(|&&l| self.lit_true(l)).count() as u32;
            if self.n_true[ci] == 0 {
                self.unsat_pos[ci] = self.unsat.len() as i32;
                self.unsat.push(ci as u32);
            }
        }
    }

    fn flip(&mut self, var: usize) {
        let old = self.assign[var];
        self.assign[var] = !old;
        let was_true = slot(if old { var as i32 + 1 } else { -(var as i32 + 1) });
        let now_true = was_true ^ 1;
        for i in 0..self.occ[was_true].len() {
            let ci = self.occ[was_true][i] as usize;
            self.n_true[ci] -= 1;
            if self.n_true[ci] == 0 {
                self.unsat_pos[ci] = self.unsat.len() as i32;
                self.unsat.push(ci as u32);
            }
        }
        for i in 0..self.occ[now_true].len() {
            let ci = self.occ[now_true][i] as usize;
            self.n_true[ci] += 1;
            if self.n_true[ci] == 1 {
                let pos = self.unsat_pos[ci] as usize;
                let last = *self.unsat.last().expect("clause was unsatisfied");
                self.unsat.swap_remove(pos);
                if pos < self.unsat.len() {
                    self.unsat_pos[last as usize] = pos as i32;
                }
                self.unsat_pos[ci] = -1;
            }
        }
    }

    /// Number of clauses that become unsatisfied if `var` flips: those
    /// where its currently-true literal is the only true one.
    fn break_count(&self, var: usize) -> u32 {
        let lit_slot = slot(if self.assign[var] { var as i32 + 1 } else { -(var as i32 + 1) });
        self.occ[lit_slot].iter().filter(|&&ci| self.n_true[ci as usize] == 1).count() as u32
    }
}

pub(crate) fn run(formula: &CnfFormula, cfg: &SolveConfig, seed: u64, budget: &Budget) -> SolveOutcome {
    let started = Instant::now();
    let mut stats = SolveStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = State::new(formula);
    state.randomize(&mut rng);
    let restart_interval = (cfg.max_flips / 10).max(1);
    let mut best_unsat = state.unsat.len() as u64;
    let mut last_restart = 0u64;

    while !state.unsat.is_empty() {
        if stats.flips >= cfg.max_flips {
            break;
        }
        if stats.flips % 2048 == 0 && budget.exhausted() {
            break;
        }
        if stats.flips - last_restart >= restart_interval {
            stats.restarts += 1;
            last_restart = stats.flips;
            state.randomize(&mut rng);
            best_unsat = best_unsat.min(state.unsat.len() as u64);
            continue;
        }
        let clause_idx = state.unsat[rng.gen_range(0..state.unsat.len())] as usize;
        let vars: Vec<usize> =
            state.clauses[clause_idx].iter().map(|l| l.unsigned_abs() as usize - 1).collect();
        let breaks: Vec<u32> = vars.iter().map(|&v| state.break_count(v)).collect();
        let zero: Vec<usize> = (0..vars.len()).filter(|&i| breaks[i] == 0).collect();
        let chosen = if !zero.is_empty() {
            vars[zero[rng.gen_range(0..zero.len())]]
        } else if rng.gen_bool(cfg.noise) {
            vars[rng.gen_range(0..vars.len())]
        } else {
            let min = *breaks.iter().min().expect("clause is nonempty");
            let mins: Vec<usize> = (0..vars.len()).filter(|&i| breaks[i] == min).collect();
            vars[mins[rng.gen_range(0..mins.len())]]
        };
        state.flip(chosen);
        stats.flips += 1;
        best_unsat = best_unsat.min(state.unsat.len() as u64);
    }

    stats.elapsed = started.elapsed();
    if state.unsat.is_empty() {
        let mut model = Assignment::new(formula.num_vars());
        for v in 0..state.nvars {
            model.set(v as u32 + 1, state.assign[v]);
        }
        SolveOutcome { status: SolveStatus::Sat, model: Some(model), best_unsat: Some(0), stats }
    } else {
        SolveOutcome { status: SolveStatus::Unknown, model: None, best_unsat: Some(best_unsat), stats }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn budget() -> Budget {
        Budget { deadline: Instant::now() + Duration::from_secs(10), stop: None }
    }

    #[test]
    fn finds_models_on_random_satisfiable_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            // Plant a solution, then generate clauses consistent with it.
            let n = 20;
            let planted: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let mut f = CnfFormula::new(n as u32);
            for _ in 0..60 {
                let mut clause = Vec::new();
                loop {
                    clause.clear();
                    while clause.len() < 3 {
                        let v = rng.gen_range(1..=n as i32);
                        if !clause.iter().any(|&l: &i32| l.abs() == v) {
                            clause.push(if rng.gen_bool(0.5) { v } else { -v });
                        }
                    }
                    let satisfied =
                        clause.iter().any(|&l| planted[l.unsigned_abs() as usize - 1] == (l > 0));
                    if satisfied {
                        break;
                    }
                }
                f.add_clause(&clause).unwrap();
            }
            let cfg = SolveConfig { max_flips: 200_000, ..Default::default() };
            let out = run(&f, &cfg, 7, &budget());
            assert_eq!(out.status, SolveStatus::Sat);
            assert!(crate::cnf::evaluate(&f, &out.model.unwrap()));
        }
    }

    #[test]
    fn reports_best_unsat_on_hopeless_formulas() {
        let mut f = CnfFormula::new(1);
        f.add_clause(&[1]).unwrap();
        f.add_clause(&[-1]).unwrap();
        let cfg = SolveConfig { max_flips: 5_000, ..Default::default() };
        let out = run(&f, &cfg, 1, &budget());
        assert_eq!(out.status, SolveStatus::Unknown);
        assert_eq!(out.best_unsat, Some(1));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let mut f = CnfFormula::new(6);
        for c in [[1, 2, 3], [-1, 4, 5], [2, -4, 6], [-2, -5, -6]] {
            f.add_clause(&c).unwrap();
        }
        let cfg = SolveConfig { max_flips: 10_000, ..Default::default() };
        let a = run(&f, &cfg, 5, &budget());
        let b = run(&f, &cfg, 5, &budget());
        assert_eq!(a.status, b.status);
        assert_eq!(a.stats.flips, b.stats.flips);
    }
}
