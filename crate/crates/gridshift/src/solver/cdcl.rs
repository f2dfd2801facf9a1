//! Conflict-driven clause learning: two-watched-literal propagation,
//! first-UIP learning with basic minimization, activity-based branching
//! with phase saving, geometric restarts, and activity-aged clause
//! deletion above a 10,000-clause floor. Fully deterministic for a fixed
//! input, independent of the seed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{Assignment, CnfFormula};
use crate::solver::{Budget, SolveConfig, SolveOutcome, SolveStats, SolveStatus};

const VAL_FALSE: u8 = 0;
const VAL_TRUE: u8 = 1;
const VAL_UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit(u32);

impl Lit {
    fn new(var: usize, positive: bool) -> Lit {
        Lit((var << 1) as u32 | u32::from(!positive))
    }

    fn from_dimacs(l: i32) -> Lit {
        Lit::new(l.unsigned_abs() as usize - 1, l > 0)
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn is_pos(self) -> bool {
        self.0 & 1 == 0
    }

    fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

fn lit_value(values: &[u8], l: Lit) -> u8 {
    let v = values[l.var()];
    if v == VAL_UNDEF {
        VAL_UNDEF
    } else {
        u8::from((v == VAL_TRUE) == l.is_pos())
    }
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

#[derive(Default)]
struct ClauseDb {
    data: Vec<Lit>,
    start: Vec<u32>,
    len: Vec<u32>,
    learnt: Vec<bool>,
    deleted: Vec<bool>,
    activity: Vec<f32>,
}

impl ClauseDb {
    fn push(&mut self, lits: &[Lit], learnt: bool) -> u32 {
        let cref = self.start.len() as u32;
        self.start.push(self.data.len() as u32);
        self.len.push(lits.len() as u32);
        self.learnt.push(learnt);
        self.deleted.push(false);
        self.activity.push(0.0);
        self.data.extend_from_slice(lits);
        cref
    }

    fn lits(&self, cref: u32) -> &[Lit] {
        let s = self.start[cref as usize] as usize;
        &self.data[s..s + self.len[cref as usize] as usize]
    }
}

/// Indexed binary max-heap over variable activities.
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarOrder {
    fn new(nvars: usize) -> Self {
        // All activities start at zero, so identity order is a valid heap.
        VarOrder {
            heap: (0..nvars as u32).collect(),
            pos: (0..nvars as i32).collect(),
        }
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] >= 0
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len() as i32;
        self.heap.push(v as u32);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()? as usize;
        let last = self.heap.pop().expect("nonempty");
        self.pos[top] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Ok(i) = usize::try_from(self.pos[v]) {
            self.up(i, act);
        }
    }

    fn before(a: u32, b: u32, act: &[f64]) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::before(self.heap[i], self.heap[parent], act) {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && Self::before(self.heap[l], self.heap[best], act) {
                best = l;
            }
            if r < self.heap.len() && Self::before(self.heap[r], self.heap[best], act) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a] as usize] = a as i32;
        self.pos[self.heap[b] as usize] = b as i32;
    }
}

pub(crate) struct Cdcl {
    nvars: usize,
    db: ClauseDb,
    watches: Vec<Vec<Watcher>>,
    values: Vec<u8>,
    phase: Vec<bool>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<u32>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    order: VarOrder,
    seen: Vec<bool>,
    learnts: Vec<u32>,
    max_learnts: usize,
    dbg_watcher_visits: u64,
    dbg_analyze_lits: u64,
    dbg_learnt_len_sum: u64,
    restart_base: f64,
    restart_mult: f64,
    var_decay: f64,
    random_freq: f64,
    rng: ChaCha8Rng,
    ok: bool,
    stats: SolveStats,
}

impl Cdcl {
    pub fn new(nvars: usize, cfg: &SolveConfig) -> Self {
        Cdcl {
            nvars,
            db: ClauseDb::default(),
            watches: vec![Vec::new(); 2 * nvars],
            values: vec![VAL_UNDEF; nvars],
            phase: vec![false; nvars],
            level: vec![0; nvars],
            reason: vec![NO_REASON; nvars],
            trail: Vec::with_capacity(nvars),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; nvars],
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::new(nvars),
            seen: vec![false; nvars],
            learnts: Vec::new(),
            max_learnts: 10_000,
            dbg_watcher_visits: 0,
            dbg_analyze_lits: 0,
            dbg_learnt_len_sum: 0,
            restart_base: cfg.restart_base.max(1) as f64,
            restart_mult: cfg.restart_mult.max(1.0),
            var_decay: cfg.var_decay.clamp(0.5, 1.0),
            random_freq: cfg.random_decision_freq.clamp(0.0, 0.5),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            ok: true,
            stats: SolveStats::default(),
        }
    }

    pub fn from_formula(formula: &CnfFormula, cfg: &SolveConfig) -> Self {
        let mut solver = Cdcl::new(formula.num_vars() as usize, cfg);
        for clause in formula.clauses() {
            if !solver.add_clause_dimacs(clause) {
                break;
            }
        }
        solver
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause at the root level; returns false once the formula is
    /// unsatisfiable. Backtracks to level 0 first, so it is safe between
    /// solve calls.
    pub fn add_clause_dimacs(&mut self, clause: &[i32]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let mut lits: Vec<Lit> = Vec::with_capacity(clause.len());
        for &l in clause {
            let lit = Lit::from_dimacs(l);
            match lit_value(&self.values, lit) {
                VAL_TRUE => return true, // satisfied at the root
                VAL_FALSE => continue,   // permanently false
                _ => {
                    if lits.contains(&lit.neg()) {
                        return true; // tautology
                    }
                    if !lits.contains(&lit) {
                        lits.push(lit);
                    }
                }
            }
        }
        match lits.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(lits[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                let cref = self.db.push(&lits, false);
                self.attach(cref);
                true
            }
        }
    }

    fn attach(&mut self, cref: u32) {
        let lits = self.db.lits(cref);
        let (a, b) = (lits[0], lits[1]);
        self.watches[a.idx()].push(Watcher { cref, blocker: b });
        self.watches[b.idx()].push(Watcher { cref, blocker: a });
    }

    fn enqueue(&mut self, lit: Lit, reason: u32) {
        debug_assert_eq!(lit_value(&self.values, lit), VAL_UNDEF);
        let v = lit.var();
        self.values[v] = u8::from(lit.is_pos());
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p.neg();
            let mut ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                self.dbg_watcher_visits += 1;
                if lit_value(&self.values, w.blocker) == VAL_TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.db.deleted[cref] {
                    continue;
                }
                let s = self.db.start[cref] as usize;
                let len = self.db.len[cref] as usize;
                if self.db.data[s] == false_lit {
                    self.db.data.swap(s, s + 1);
                }
                debug_assert_eq!(self.db.data[s + 1], false_lit);
                let first = self.db.data[s];
                if first != w.blocker && lit_value(&self.values, first) == VAL_TRUE {
                    ws[j] = Watcher { cref: w.cref, blocker: first };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for idx in 2..len {
                    let cand = self.db.data[s + idx];
                    if lit_value(&self.values, cand) != VAL_FALSE {
                        self.db.data.swap(s + 1, s + idx);
                        self.watches[cand.idx()].push(Watcher { cref: w.cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                // Unit or conflicting.
                ws[j] = w;
                j += 1;
                if lit_value(&self.values, first) == VAL_FALSE {
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    ws.truncate(j);
                    self.watches[false_lit.idx()] = ws;
                    self.qhead = self.trail.len();
                    return Some(w.cref);
                }
                self.enqueue(first, w.cref);
            }
            ws.truncate(j);
            self.watches[false_lit.idx()] = ws;
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        if !self.db.learnt[cref as usize] {
            return;
        }
        self.db.activity[cref as usize] += self.cla_inc;
        if self.db.activity[cref as usize] > 1e20 {
            for (a, &learnt) in self.db.activity.iter_mut().zip(&self.db.learnt) {
                if learnt {
                    *a *= 1e-20;
                }
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = vec![Lit(0)];
        let mut to_clear: Vec<usize> = Vec::new();
        let mut counter = 0usize;
        let mut index = self.trail.len();
        let mut resolved: Option<Lit> = None;
        loop {
            self.bump_clause(confl);
            let s = self.db.start[confl as usize] as usize;
            let len = self.db.len[confl as usize] as usize;
            let skip = usize::from(resolved.is_some());
            self.dbg_analyze_lits += (len - skip) as u64;
            for k in skip..len {
                let q = self.db.data[s + k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    to_clear.push(v);
                    self.bump_var(v);
                    if self.level[v] as usize >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let p = self.trail[index];
            self.seen[p.var()] = false;
            counter -= 1;
            resolved = Some(p);
            if counter == 0 {
                learnt[0] = p.neg();
                break;
            }
            confl = self.reason[p.var()];
            debug_assert_ne!(confl, NO_REASON);
        }
        // Recursive minimization: drop literals whose reasons resolve away
        // entirely inside the clause.
        let abstract_levels = learnt[1..]
            .iter()
            .fold(0u32, |acc, l| acc | (1 << (self.level[l.var()] & 31)));
        let uip = learnt[0];
        let mut minimized: Vec<Lit> = vec![uip];
        for &q in &learnt[1..] {
            if self.reason[q.var()] == NO_REASON || !self.lit_redundant(q, abstract_levels, &mut to_clear) {
                minimized.push(q);
            }
        }
        for v in to_clear {
            self.seen[v] = false;
        }
        // Backtrack target: the second-highest level; that literal watches
        // position 1.
        let mut blevel = 0usize;
        if minimized.len() > 1 {
            let mut max_i = 1;
            for i in 2..minimized.len() {
                if self.level[minimized[i].var()] > self.level[minimized[max_i].var()] {
                    max_i = i;
                }
            }
            minimized.swap(1, max_i);
            blevel = self.level[minimized[1].var()] as usize;
        }
        (minimized, blevel)
    }

    /// True iff the literal's reasons resolve away inside the current
    /// learnt clause (marked in `seen`), searching through reason chains.
    fn lit_redundant(&mut self, lit: Lit, abstract_levels: u32, to_clear: &mut Vec<usize>) -> bool {
        let mut stack: Vec<Lit> = vec![lit];
        let undo_from = to_clear.len();
        while let Some(l) = stack.pop() {
            let cref = self.reason[l.var()];
            debug_assert_ne!(cref, NO_REASON);
            let s = self.db.start[cref as usize] as usize;
            let len = self.db.len[cref as usize] as usize;
            for k in 1..len {
                let q = self.db.data[s + k];
                let v = q.var();
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                if self.reason[v] != NO_REASON && (1u32 << (self.level[v] & 31)) & abstract_levels != 0 {
                    self.seen[v] = true;
                    to_clear.push(v);
                    stack.push(q);
                } else {
                    for &undo in &to_clear[undo_from..] {
                        self.seen[undo] = false;
                    }
                    to_clear.truncate(undo_from);
                    return false;
                }
            }
        }
        true
    }

    fn cancel_until(&mut self, target: usize) {
        if self.decision_level() <= target {
            return;
        }
        let keep = self.trail_lim[target] as usize;
        for idx in (keep..self.trail.len()).rev() {
            let lit = self.trail[idx];
            let v = lit.var();
            self.phase[v] = self.values[v] == VAL_TRUE;
            self.values[v] = VAL_UNDEF;
            self.reason[v] = NO_REASON;
            self.order.insert(v, &self.activity);
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(target);
        self.qhead = keep;
    }

    fn reduce_db(&mut self) {
        let mut candidates: Vec<u32> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| !self.db.deleted[c as usize] && self.db.len[c as usize] > 2)
            .collect();
        candidates.sort_by(|&a, &b| {
            self.db.activity[a as usize]
                .partial_cmp(&self.db.activity[b as usize])
                .expect("activities are finite")
                .then(a.cmp(&b))
        });
        let drop_count = candidates.len() / 2;
        for &cref in &candidates[..drop_count] {
            if self.is_locked(cref) {
                continue;
            }
            self.db.deleted[cref as usize] = true;
            let lits = self.db.lits(cref);
            let (a, b) = (lits[0], lits[1]);
            for lit in [a, b] {
                let ws = &mut self.watches[lit.idx()];
                if let Some(pos) = ws.iter().position(|w| w.cref == cref) {
                    ws.swap_remove(pos);
                }
            }
        }
        self.learnts.retain(|&c| !self.db.deleted[c as usize]);
    }

    fn is_locked(&self, cref: u32) -> bool {
        let first = self.db.lits(cref)[0];
        lit_value(&self.values, first) == VAL_TRUE && self.reason[first.var()] == cref
    }

    fn decide(&mut self) -> bool {
        // An occasional seeded-random decision breaks heavy-tail stalls.
        if self.random_freq > 0.0 && self.rng.gen_bool(self.random_freq) {
            let v = self.rng.gen_range(0..self.nvars.max(1));
            if self.values[v] == VAL_UNDEF {
                self.stats.decisions += 1;
                self.trail_lim.push(self.trail.len() as u32);
                self.enqueue(Lit::new(v, self.phase[v]), NO_REASON);
                return true;
            }
        }
        while let Some(v) = self.order.pop(&self.activity) {
            if self.values[v] == VAL_UNDEF {
                self.stats.decisions += 1;
                self.trail_lim.push(self.trail.len() as u32);
                self.enqueue(Lit::new(v, self.phase[v]), NO_REASON);
                return true;
            }
        }
        false
    }

    fn finish(&mut self, started: Instant, status: SolveStatus, model: Option<Assignment>) -> SolveOutcome {
        self.stats.elapsed += started.elapsed();
        SolveOutcome { status, model, best_unsat: None, stats: self.stats.clone() }
    }

    pub fn solve(&mut self, budget: &Budget) -> SolveOutcome {
        let started = Instant::now();
        if !self.ok {
            return self.finish(started, SolveStatus::Unsat, None);
        }
        let mut restart_limit = self.restart_base;
        let mut since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return self.finish(started, SolveStatus::Unsat, None);
                }
                let (learnt, blevel) = self.analyze(confl);
                self.cancel_until(blevel);
                self.dbg_learnt_len_sum += learnt.len() as u64;
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let cref = self.db.push(&learnt, true);
                    self.attach(cref);
                    self.bump_clause(cref);
                    self.learnts.push(cref);
                    self.enqueue(learnt[0], cref);
                }
                self.var_inc /= self.var_decay;
                self.cla_inc /= 0.999;
                if self.stats.conflicts % 512 == 0 && budget.exhausted() {
                    eprintln!("dbg: watcher_visits={} analyze_lits={} learnt_len_avg={} learnts_db={}",
                        self.dbg_watcher_visits, self.dbg_analyze_lits,
                        self.dbg_learnt_len_sum / self.stats.conflicts.max(1), self.learnts.len());
                    return self.finish(started, SolveStatus::Unknown, None);
                }
            } else {
                if since_restart as f64 >= restart_limit && self.decision_level() > 0 {
                    self.stats.restarts += 1;
                    restart_limit *= self.restart_mult;
                    since_restart = 0;
                    self.cancel_until(0);
                    continue;
                }
                if self.learnts.len() >= self.max_learnts {
                    self.reduce_db();
                }
                if !self.decide() {
                    let mut model = Assignment::new(self.nvars as u32);
                    for v in 0..self.nvars {
                        model.set(v as u32 + 1, self.values[v] == VAL_TRUE);
                    }
                    return self.finish(started, SolveStatus::Sat, Some(model));
                }
                if self.stats.decisions % 4096 == 0 && budget.exhausted() {
                    return self.finish(started, SolveStatus::Unknown, None);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn budget() -> Budget {
        Budget { deadline: Instant::now() + Duration::from_secs(30), stop: None }
    }

    fn solve_clauses(nvars: u32, clauses: &[&[i32]]) -> SolveStatus {
        let mut f = CnfFormula::new(nvars);
        for c in clauses {
            f.add_clause(c).unwrap();
        }
        let mut s = Cdcl::from_formula(&f, &SolveConfig::default());
        s.solve(&budget()).status
    }

    #[test]
    fn simple_statuses() {
        assert_eq!(solve_clauses(1, &[&[1]]), SolveStatus::Sat);
        assert_eq!(solve_clauses(1, &[&[1], &[-1]]), SolveStatus::Unsat);
        assert_eq!(solve_clauses(2, &[&[1, 2], &[-1, 2], &[1, -2], &[-1, -2]]), SolveStatus::Unsat);
        assert_eq!(solve_clauses(3, &[&[1, 2, 3], &[-1], &[-2]]), SolveStatus::Sat);
    }

    #[test]
    fn pigeonhole_three_into_two_is_unsat() {
        // p(i, h): pigeon i in hole h; vars 1..=6.
        let p = |i: i32, h: i32| (i - 1) * 2 + h;
        let mut clauses: Vec<Vec<i32>> = Vec::new();
        for i in 1..=3 {
            clauses.push(vec![p(i, 1), p(i, 2)]);
        }
        for h in 1..=2 {
            for i in 1..=3 {
                for j in i + 1..=3 {
                    clauses.push(vec![-p(i, h), -p(j, h)]);
                }
            }
        }
        let refs: Vec<&[i32]> = clauses.iter().map(|c| c.as_slice()).collect();
        assert_eq!(solve_clauses(6, &refs), SolveStatus::Unsat);
    }

    #[test]
    fn repeated_solves_with_added_clauses() {
        let mut f = CnfFormula::new(2);
        f.add_clause(&[1, 2]).unwrap();
        let mut s = Cdcl::from_formula(&f, &SolveConfig::default());
        let mut models = Vec::new();
        loop {
            let out = s.solve(&budget());
            if out.status != SolveStatus::Sat {
                assert_eq!(out.status, SolveStatus::Unsat);
                break;
            }
            let m = out.model.unwrap();
            let block: Vec<i32> = (1..=2)
                .map(|v| if m.get(v) { -(v as i32) } else { v as i32 })
                .collect();
            models.push((m.get(1), m.get(2)));
            if !s.add_clause_dimacs(&block) {
                break;
            }
        }
        models.sort();
        assert_eq!(models, vec![(false, true), (true, false), (true, true)]);
    }
}
