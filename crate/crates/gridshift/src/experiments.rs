//! The experiment recipe book: one-command reproductions of the published
//! results, shared between the CLI's `repro` subcommand and the acceptance
//! suite.

use std::time::Duration;

use crate::cnf::CnfFormula;
use crate::dist::{
    check_necessary, export_smtlib, known_25x25_distribution, search_distributions, subgrid_bound_holds,
    DistributionSet, SearchOptions,
};
use crate::encoder::{
    add_distribution_constraints, base_clause_count, encode_base, encode_shift_merged,
    encode_shift_selector, VarMap,
};
use crate::grid::{find_monochromatic_rectangle, Coloring, GridSpec};
use crate::iso::{canonical_form, classify};
use crate::layout::{matches_layout, extract_distribution, PatternLayout, ShiftDirection};
use crate::solver::{enumerate, solve, EngineMode, SolveConfig, SolveStatus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecipeStatus {
    Pass,
    /// Budget ran out on a step the recipe declares non-gating.
    NonGating(String),
    /// Budget ran out on a gating step.
    Timeout(String),
    Fail(String),
}

#[derive(Debug, Clone)]
pub struct RecipeReport {
    pub name: &'static str,
    pub status: RecipeStatus,
    pub detail: Vec<String>,
}

impl RecipeReport {
    fn new(name: &'static str) -> Self {
        RecipeReport { name, status: RecipeStatus::Pass, detail: Vec::new() }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.detail.push(line.into());
    }

    fn fail(&mut self, line: impl Into<String>) {
        let line = line.into();
        self.detail.push(format!("FAIL: {line}"));
        if matches!(self.status, RecipeStatus::Pass | RecipeStatus::NonGating(_)) {
            self.status = RecipeStatus::Fail(line);
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, RecipeStatus::Pass | RecipeStatus::NonGating(_))
    }
}

#[derive(Debug, Clone)]
pub struct RecipeContext {
    pub seed: u64,
    /// Budget for ordinary solver calls.
    pub solve_timeout: Duration,
    /// Budget for the two heavy solves (the 16×16 refutation and the 25×25
    /// search), which their criteria declare non-gating past 30 minutes.
    pub heavy_timeout: Duration,
}

impl Default for RecipeContext {
    fn default() -> Self {
        RecipeContext {
            seed: 0,
            solve_timeout: Duration::from_secs(60),
            heavy_timeout: Duration::from_secs(300),
        }
    }
}

impl RecipeContext {
    fn config(&self, mode: EngineMode, timeout: Duration) -> SolveConfig {
        SolveConfig { seed: self.seed, timeout, mode, ..Default::default() }
    }
}

pub struct ExperimentRecipe {
    pub name: &'static str,
    pub description: &'static str,
    pub expected: &'static str,
    /// Non-gating recipes report budget exhaustion without failing.
    pub gating: bool,
    pub run: fn(&RecipeContext) -> RecipeReport,
}

pub fn recipe_book() -> Vec<ExperimentRecipe> {
    vec![
        ExperimentRecipe {
            name: "grid442",
            description: "enumerate all 4x4 2-colorings and classify them",
            expected: "840 colorings, 3 isomorphism classes",
            gating: true,
            run: run_grid442,
        },
        ExperimentRecipe {
            name: "table1-left",
            description: "10x10, 3 colors, left-shift merged encoding, subgrid sizes 2..9",
            expected: "sat only at subgrid size 4",
            gating: true,
            run: run_table1_left,
        },
        ExperimentRecipe {
            name: "table1-both",
            description: "10x10, 3 colors, selector encoding, subgrid sizes 2..9",
            expected: "sat only at subgrid size 4",
            gating: true,
            run: run_table1_both,
        },
        ExperimentRecipe {
            name: "pigeonhole",
            description: "single-subgrid refutations and the closed-form bound",
            expected: "unsat for (k=2, n=5) and (k=3, n=10); bound matches for n<=50, k<=7",
            gating: true,
            run: run_pigeonhole,
        },
        ExperimentRecipe {
            name: "grid18",
            description: "18x18, 4 colors, 3-subgrids with 9-midgrids",
            expected: "sat; decoded coloring rectangle-free and layout-conformant",
            gating: true,
            run: run_grid18,
        },
        ExperimentRecipe {
            name: "table3",
            description: "necessary-condition checks on the published 25x25 distribution",
            expected: "all checks pass; any +1 mutation breaks the sum check",
            gating: true,
            run: run_table3,
        },
        ExperimentRecipe {
            name: "remark16",
            description: "16x16, 4 colors, 4-subgrids, all-ones distribution",
            expected: "distribution passes checks yet the encoding is unsat",
            gating: true,
            run: run_remark16,
        },
        ExperimentRecipe {
            name: "grid25",
            description: "25x25, 5 colors, 5-subgrids, all-ones distribution",
            expected: "sat; solution rectangle-free with the exact distribution",
            gating: true,
            run: run_grid25,
        },
        ExperimentRecipe {
            name: "oracle-equivalence",
            description: "implementation-vs-oracle agreement sweeps",
            expected: "agreement on every sweep",
            gating: true,
            run: run_oracles,
        },
        ExperimentRecipe {
            name: "encoding-invariants",
            description: "clause-count closed forms, DIMACS roundtrip, blocking soundness",
            expected: "all invariants hold",
            gating: true,
            run: run_encoding_invariants,
        },
        ExperimentRecipe {
            name: "size13-smt",
            description: "26x26 full-tiling distribution feasibility, exported to SMT-LIB",
            expected: "valid scripts; desk-scale search of the z=13 case",
            gating: false,
            run: run_size13,
        },
        ExperimentRecipe {
            name: "shatter-class",
            description: "classify a few enumerated 10x10 shift solutions",
            expected: "one isomorphism class",
            gating: false,
            run: run_shatter_class,
        },
        ExperimentRecipe {
            name: "g26-partial",
            description: "26x26, 5 colors, 8-subgrids with partial shift on the last two rows/cols",
            expected: "pipeline runs; satisfiability open",
            gating: false,
            run: run_g26_partial,
        },
        ExperimentRecipe {
            name: "conj1",
            description: "both-shifts satisfiability never exceeds single-direction",
            expected: "no counterexample at desk scale",
            gating: false,
            run: run_conj1,
        },
        ExperimentRecipe {
            name: "conj2-k2",
            description: "4x4 with 2-subgrids, each color twice per subgrid, stripe extension",
            expected: "6x4 rectangle-free extension",
            gating: false,
            run: |ctx| run_conj2(ctx, 2, "conj2-k2"),
        },
        ExperimentRecipe {
            name: "conj2-k3",
            description: "9x9 with 3-subgrids, each color three times per subgrid, stripe extension",
            expected: "12x9 rectangle-free extension",
            gating: false,
            run: |ctx| run_conj2(ctx, 3, "conj2-k3"),
        },
    ]
}

pub fn find_recipe(name: &str) -> Option<ExperimentRecipe> {
    recipe_book().into_iter().find(|r| r.name == name)
}

fn spec(m: usize, n: usize, k: usize) -> GridSpec {
    GridSpec::new(m, n, k).expect("recipe specs are well-formed")
}

fn run_grid442(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("grid442");
    let (formula, vm) = encode_base(spec(4, 4, 2)).expect("encoding cannot fail");
    let cfg = ctx.config(EngineMode::Cdcl, ctx.solve_timeout);
    let result = match enumerate(&formula, &vm, usize::MAX, &cfg) {
        Ok(r) => r,
        Err(e) => {
            report.fail(format!("enumeration error: {e}"));
            return report;
        }
    };
    if !result.complete {
        report.status = RecipeStatus::Timeout("enumeration did not exhaust the formula".into());
        return report;
    }
    report.note(format!("{} colorings enumerated", result.colorings.len()));
    if result.colorings.len() != 840 {
        report.fail(format!("expected 840 colorings, got {}", result.colorings.len()));
    }
    for c in &result.colorings {
        if find_monochromatic_rectangle(c).is_some() {
            report.fail("enumerated coloring contains a rectangle");
            break;
        }
    }
    match classify(&result.colorings) {
        Ok(classes) => {
            report.note(format!("{} isomorphism classes", classes.class_count()));
            if classes.class_count() != 3 {
                report.fail(format!("expected 3 classes, got {}", classes.class_count()));
            }
            // The known representatives must land in exactly those classes.
            let known: std::collections::BTreeSet<Vec<u8>> = crate::experiments::known_reps_4x4()
                .iter()
                .map(|c| canonical_form(c).expect("small grid").cells)
                .collect();
            let found: std::collections::BTreeSet<Vec<u8>> =
                classes.classes.iter().map(|c| c.canonical.cells.clone()).collect();
            if known != found {
                report.fail("classes do not match the known representatives");
            }
        }
        Err(e) => report.fail(format!("classification error: {e}")),
    }
    report
}

/// The three known 4×4 class representatives.
pub fn known_reps_4x4() -> [Coloring; 3] {
    let s = spec(4, 4, 2);
    [
        Coloring::new(s, vec![1, 2, 2, 1, 1, 2, 1, 2, 2, 1, 2, 2, 2, 1, 1, 1]).unwrap(),
        Coloring::new(s, vec![1, 2, 2, 1, 1, 2, 1, 2, 1, 1, 2, 2, 2, 1, 1, 1]).unwrap(),
        Coloring::new(s, vec![1, 2, 1, 2, 1, 1, 2, 2, 2, 1, 2, 1, 2, 2, 1, 1]).unwrap(),
    ]
}

fn table1_row(
    ctx: &RecipeContext,
    report: &mut RecipeReport,
    encode: impl Fn(usize) -> (CnfFormula, VarMap),
) {
    for z in 2..=9usize {
        let (formula, vm) = encode(z);
        let cfg = ctx.config(EngineMode::Cdcl, ctx.solve_timeout);
        let out = solve(&formula, &cfg).expect("valid config");
        let expected = if z == 4 { SolveStatus::Sat } else { SolveStatus::Unsat };
        report.note(format!("z={z}: {:?} ({} conflicts)", out.status, out.stats.conflicts));
        if out.status == SolveStatus::Unknown {
            report.status = RecipeStatus::Timeout(format!("z={z} exceeded the budget"));
            return;
        }
        if out.status != expected {
            report.fail(format!("z={z}: expected {expected:?}, got {:?}", out.status));
            return;
        }
        if out.status == SolveStatus::Sat {
            let coloring = vm.decode(out.model.as_ref().expect("sat")).expect("decodable");
            if find_monochromatic_rectangle(&coloring).is_some() {
                report.fail(format!("z={z}: decoded coloring has a rectangle"));
            }
            let layout = vm.layout().expect("shift encodings carry layouts");
            if !matches_layout(&coloring, layout).expect("valid layout") {
                report.fail(format!("z={z}: decoded coloring violates the layout"));
            }
        }
    }
}

fn run_table1_left(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("table1-left");
    table1_row(ctx, &mut report, |z| {
        let layout = PatternLayout::new(z, ShiftDirection::Left).expect("z >= 2");
        encode_shift_merged(spec(10, 10, 3), &layout).expect("valid layout")
    });
    report
}

fn run_table1_both(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("table1-both");
    table1_row(ctx, &mut report, |z| {
        let layout = PatternLayout::new(z, ShiftDirection::SelectorBoth).expect("z >= 2");
        encode_shift_selector(spec(10, 10, 3), &layout).expect("valid layout")
    });
    report
}

fn run_pigeonhole(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("pigeonhole");
    for (k, n) in [(2usize, 5usize), (3, 10)] {
        let layout = PatternLayout::new(n, ShiftDirection::Right).expect("n >= 2");
        let (formula, _) = encode_shift_merged(spec(n, n, k), &layout).expect("valid layout");
        let out = solve(&formula, &ctx.config(EngineMode::Cdcl, ctx.solve_timeout)).expect("valid config");
        report.note(format!("k={k}, n={n}: {:?}", out.status));
        match out.status {
            SolveStatus::Unsat => {}
            SolveStatus::Sat => report.fail(format!("k={k}, n={n}: expected unsat")),
            SolveStatus::Unknown => {
                report.status = RecipeStatus::Timeout(format!("k={k}, n={n} exceeded the budget"));
                return report;
            }
        }
    }
    for k in 1..=7usize {
        for n in 1..=50usize {
            let excluded = k * k < n && n < k * k + k;
            if subgrid_bound_holds(n, k) != !excluded {
                report.fail(format!("bound mismatch at n={n}, k={k}"));
            }
        }
    }
    report.note("closed-form bound agrees for n<=50, k<=7".to_string());
    report
}

fn run_grid18(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("grid18");
    let layout = PatternLayout::new(3, ShiftDirection::Right).expect("z >= 2").with_midgrid(9);
    let (formula, vm) = encode_shift_merged(spec(18, 18, 4), &layout).expect("valid layout");
    report.note(format!("{} vars, {} clauses", formula.num_vars(), formula.num_clauses()));
    let out = solve(&formula, &ctx.config(EngineMode::Cdcl, ctx.solve_timeout)).expect("valid config");
    match out.status {
        SolveStatus::Sat => {
            let coloring = vm.decode(out.model.as_ref().expect("sat")).expect("decodable");
            report.note(format!("sat in {:?}", out.stats.elapsed));
            if find_monochromatic_rectangle(&coloring).is_some() {
                report.fail("decoded coloring has a rectangle");
            }
            if !matches_layout(&coloring, &layout).expect("valid layout") {
                report.fail("decoded coloring violates the layout");
            }
        }
        SolveStatus::Unsat => report.fail("expected sat, got unsat"),
        SolveStatus::Unknown => {
            report.status = RecipeStatus::Timeout("solver exceeded the budget".into())
        }
    }
    report
}

fn run_table3(_ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("table3");
    let d = known_25x25_distribution();
    let base = check_necessary(&d);
    if base.passed() {
        report.note("published distribution passes all checks".to_string());
    } else {
        report.fail(format!("published distribution failed:\n{base}"));
    }
    let mut mutations = 0usize;
    for color in 1..=5usize {
        for i in 0..5 {
            for j in 0..5 {
                let mut mutated = d.clone();
                let v = mutated.entry(color, i, j);
                if mutated.set_entry(color, i, j, v + 1).is_err() {
                    continue;
                }
                mutations += 1;
                let checked = check_necessary(&mutated);
                if checked.sum.is_empty() {
                    report.fail(format!("mutation at color {color}, ({i}, {j}) kept the sum check"));
                }
            }
        }
    }
    report.note(format!("{mutations} single-entry mutations all break the sum check"));
    report
}

fn run_remark16(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("remark16");
    let d = DistributionSet::all_ones(4, 4, 4, 4).expect("shape is valid");
    if !check_necessary(&d).passed() {
        report.fail("all-ones distribution unexpectedly fails the checks");
        return report;
    }
    report.note("all-ones distribution passes the necessary conditions".to_string());
    let layout = PatternLayout::new(4, ShiftDirection::Right).expect("z >= 2");
    let (mut formula, mut vm) = encode_shift_merged(spec(16, 16, 4), &layout).expect("valid layout");
    add_distribution_constraints(&mut formula, &mut vm, &d).expect("matching shape");
    // The DIMACS export path is gating regardless of the solve outcome.
    let dimacs = formula.to_dimacs();
    match CnfFormula::parse_dimacs(&dimacs) {
        Ok(parsed) if parsed == formula => {
            report.note(format!("DIMACS export: {} vars, {} clauses", formula.num_vars(), formula.num_clauses()))
        }
        _ => report.fail("DIMACS export failed to roundtrip"),
    }
    let out = solve(&formula, &ctx.config(EngineMode::Cdcl, ctx.heavy_timeout)).expect("valid config");
    match out.status {
        SolveStatus::Unsat => report.note(format!(
            "unsat after {} conflicts in {:?}",
            out.stats.conflicts, out.stats.elapsed
        )),
        SolveStatus::Sat => report.fail("expected unsat: a model would contradict the published result"),
        SolveStatus::Unknown => {
            report.status = RecipeStatus::NonGating(format!(
                "refutation exceeded the {:?} budget (declared non-gating)",
                ctx.heavy_timeout
            ));
        }
    }
    report
}

fn run_grid25(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("grid25");
    let d = DistributionSet::all_ones(5, 5, 5, 5).expect("shape is valid");
    let layout = PatternLayout::new(5, ShiftDirection::Right).expect("z >= 2");
    let (mut formula, mut vm) = encode_shift_merged(spec(25, 25, 5), &layout).expect("valid layout");
    add_distribution_constraints(&mut formula, &mut vm, &d).expect("matching shape");
    report.note(format!("{} vars, {} clauses", formula.num_vars(), formula.num_clauses()));
    let out = solve(&formula, &ctx.config(EngineMode::Portfolio, ctx.heavy_timeout)).expect("valid config");
    match out.status {
        SolveStatus::Sat => {
            report.note(format!("sat in {:?}", out.stats.elapsed));
            // The verifier path is gating on any model found.
            let coloring = match vm.decode(out.model.as_ref().expect("sat")) {
                Ok(c) => c,
                Err(e) => {
                    report.fail(format!("model failed to decode: {e}"));
                    return report;
                }
            };
            if find_monochromatic_rectangle(&coloring).is_some() {
                report.fail("decoded coloring has a rectangle");
            }
            if !matches_layout(&coloring, &layout).expect("valid layout") {
                report.fail("decoded coloring violates the layout");
            }
            match extract_distribution(&coloring, &layout) {
                Ok(extracted) if extracted == d => report.note("distribution is exactly all-ones".to_string()),
                Ok(_) => report.fail("distribution of the solution is not all-ones"),
                Err(e) => report.fail(format!("distribution extraction failed: {e}")),
            }
        }
        SolveStatus::Unsat => report.fail("expected sat: the instance has published solutions"),
        SolveStatus::Unknown => {
            report.status = RecipeStatus::NonGating(format!(
                "no model within the {:?} budget (declared non-gating); best_unsat={:?}",
                ctx.heavy_timeout, out.best_unsat
            ));
        }
    }
    report
}

fn run_oracles(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("oracle-equivalence");
    oracle_base_vs_brute(ctx, &mut report);
    oracle_canonical_vs_orbit(&mut report);
    oracle_cdcl_vs_truth_table(ctx, &mut report);
    oracle_bitset_vs_quad_loop(&mut report);
    report
}

fn oracle_base_vs_brute(ctx: &RecipeContext, report: &mut RecipeReport) {
    let mut specs = 0usize;
    for m in 1..=12usize {
        for n in 1..=12usize {
            if m * n > 12 {
                continue;
            }
            for k in 1..=3usize {
                let s = spec(m, n, k);
                let (formula, vm) = encode_base(s).expect("encoding cannot fail");
                let cfg = ctx.config(EngineMode::Cdcl, ctx.solve_timeout.max(Duration::from_secs(240)));
                let got = match enumerate(&formula, &vm, usize::MAX, &cfg) {
                    Ok(r) if r.complete => r.colorings,
                    Ok(_) => {
                        report.status = RecipeStatus::Timeout(format!("enumeration budget at {m}x{n}x{k}"));
                        return;
                    }
                    Err(e) => {
                        report.fail(format!("enumeration error at {m}x{n}x{k}: {e}"));
                        return;
                    }
                };
                let mut got: Vec<Vec<u8>> = got.iter().map(|c| c.cells().to_vec()).collect();
                got.sort_unstable();
                let mut want = brute_force_cells(s);
                want.sort_unstable();
                if got != want {
                    report.fail(format!(
                        "base encoding disagrees with brute force at {m}x{n}x{k}: {} vs {}",
                        got.len(),
                        want.len()
                    ));
                    return;
                }
                specs += 1;
            }
        }
    }
    report.note(format!("base encoding matches brute force on {specs} specs"));
}

/// All rectangle-free cell vectors of a spec by exhaustive enumeration.
fn brute_force_cells(s: GridSpec) -> Vec<Vec<u8>> {
    let n = s.cell_count();
    let k = s.colors as u8;
    let mut out = Vec::new();
    let mut cells = vec![1u8; n];
    loop {
        let c = Coloring::new(s, cells.clone()).expect("odometer stays in range");
        if quad_loop_free(&c) {
            out.push(cells.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if cells[i] < k {
                cells[i] += 1;
                break;
            }
            cells[i] = 1;
            i += 1;
        }
    }
}

fn quad_loop_free(c: &Coloring) -> bool {
    let s = c.spec();
    for color in 1..=s.colors as u8 {
        for r1 in 0..s.rows {
            for r2 in r1 + 1..s.rows {
                for c1 in 0..s.cols {
                    for c2 in c1 + 1..s.cols {
                        if c.at(r1, c1) == color
                            && c.at(r1, c2) == color
                            && c.at(r2, c1) == color
                            && c.at(r2, c2) == color
                        {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn oracle_canonical_vs_orbit(report: &mut RecipeReport) {
    let s = spec(3, 3, 2);
    let mut mismatches = 0usize;
    let mut cells = vec![1u8; 9];
    'all: loop {
        let c = Coloring::new(s, cells.clone()).expect("in range");
        let fast = canonical_form(&c).expect("small grid").cells;
        let slow = orbit_minimum_3x3(&c);
        if fast != slow {
            mismatches += 1;
        }
        let mut i = 0;
        loop {
            if i == 9 {
                break 'all;
            }
            if cells[i] < 2 {
                cells[i] += 1;
                break;
            }
            cells[i] = 1;
            i += 1;
        }
    }
    if mismatches == 0 {
        report.note("canonical form matches orbit enumeration on all 512 grids".to_string());
    } else {
        report.fail(format!("canonical form disagrees with orbit enumeration on {mismatches} grids"));
    }
}

fn orbit_minimum_3x3(c: &Coloring) -> Vec<u8> {
    use crate::grid::{apply_isomorphism, IsoElement};
    let perms3: Vec<Vec<usize>> = vec![
        vec![0, 1, 2],
        vec![0, 2, 1],
        vec![1, 0, 2],
        vec![1, 2, 0],
        vec![2, 0, 1],
        vec![2, 1, 0],
    ];
    let mut best: Option<Vec<u8>> = None;
    for transpose in [false, true] {
        for rp in &perms3 {
            for cp in &perms3 {
                for colors in [[1u8, 2], [2, 1]] {
                    let g = IsoElement {
                        row_perm: rp.clone(),
                        col_perm: cp.clone(),
                        transpose,
                        color_perm: colors.to_vec(),
                    };
                    let cells = apply_isomorphism(c, &g).expect("valid element").cells().to_vec();
                    if best.as_ref().is_none_or(|b| cells < *b) {
                        best = Some(cells);
                    }
                }
            }
        }
    }
    best.expect("orbit is nonempty")
}

fn oracle_cdcl_vs_truth_table(ctx: &RecipeContext, report: &mut RecipeReport) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(0xC0FFEE));
    let mut sat_count = 0usize;
    for case in 0..500usize {
        // Mostly exhaustive-scan-friendly sizes; a sparse large tail stays
        // cheap because low-density formulas satisfy early.
        let nvars: u32 = if case % 25 == 0 { rng.gen_range(19..=30) } else { rng.gen_range(5..=18) };
        let ratio = if case % 25 == 0 { 2.0 } else { rng.gen_range(2.0..6.0) };
        let nclauses = ((nvars as f64 * ratio) as usize).max(1);
        let mut formula = CnfFormula::new(nvars);
        for _ in 0..nclauses {
            let mut clause: Vec<i32> = Vec::new();
            while clause.len() < 3.min(nvars as usize) {
                let v = rng.gen_range(1..=nvars as i32);
                if !clause.iter().any(|l| l.abs() == v) {
                    clause.push(if rng.gen_bool(0.5) { v } else { -v });
                }
            }
            formula.add_clause(&clause).expect("well-formed clause");
        }
        let out = solve(&formula, &ctx.config(EngineMode::Cdcl, ctx.solve_timeout)).expect("valid config");
        let want = truth_table_sat(&formula);
        let got = match out.status {
            SolveStatus::Sat => true,
            SolveStatus::Unsat => false,
            SolveStatus::Unknown => {
                report.status = RecipeStatus::Timeout(format!("cdcl budget on random case {case}"));
                return;
            }
        };
        if got != want {
            report.fail(format!("cdcl disagrees with the truth table on case {case}"));
            return;
        }
        sat_count += usize::from(want);
    }
    report.note(format!("cdcl matches the truth table on 500 formulas ({sat_count} sat)"));
}

/// Exhaustive satisfiability scan with per-clause bitmasks.
fn truth_table_sat(formula: &CnfFormula) -> bool {
    let n = formula.num_vars();
    assert!(n <= 30, "truth table oracle capped at 30 variables");
    let masks: Vec<(u32, u32)> = formula
        .clauses()
        .iter()
        .map(|clause| {
            let mut pos = 0u32;
            let mut neg = 0u32;
            for &lit in clause {
                let bit = 1u32 << (lit.unsigned_abs() - 1);
                if lit > 0 {
                    pos |= bit;
                } else {
                    neg |= bit;
                }
            }
            (pos, neg)
        })
        .collect();
    for assign in 0..(1u64 << n) {
        let a = assign as u32;
        if masks.iter().all(|&(pos, neg)| (a & pos) != 0 || (!a & neg) != 0) {
            return true;
        }
    }
    false
}

fn oracle_bitset_vs_quad_loop(report: &mut RecipeReport) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xB175E7);
    for case in 0..1000usize {
        let s = spec(rng.gen_range(1..=8), rng.gen_range(1..=8), rng.gen_range(1..=4));
        let cells: Vec<u8> = (0..s.cell_count()).map(|_| rng.gen_range(1..=s.colors as u8)).collect();
        let c = Coloring::new(s, cells).expect("in range");
        let fast = find_monochromatic_rectangle(&c).is_some();
        let slow = !quad_loop_free(&c);
        if fast != slow {
            report.fail(format!("rectangle checkers disagree on case {case}"));
            return;
        }
    }
    report.note("bitset checker matches the quadruple loop on 1000 colorings".to_string());
}

fn run_encoding_invariants(ctx: &RecipeContext) -> RecipeReport {
    use rand::{Rng, SeedableRng};
    let mut report = RecipeReport::new("encoding-invariants");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(0x5EED));
    for _ in 0..20 {
        let s = spec(rng.gen_range(1..=15), rng.gen_range(1..=15), rng.gen_range(1..=5));
        let (formula, vm) = encode_base(s).expect("encoding cannot fail");
        if formula.num_clauses() != base_clause_count(s) {
            report.fail(format!("clause count mismatch on {s}"));
        }
        if vm.num_vars() as usize != s.cell_count() * s.colors {
            report.fail(format!("variable count mismatch on {s}"));
        }
    }
    report.note("clause-count closed forms hold on 20 random specs".to_string());

    let (formula, _) = encode_base(spec(4, 4, 2)).expect("encoding cannot fail");
    match CnfFormula::parse_dimacs(&formula.to_dimacs()) {
        Ok(parsed) if parsed == formula => report.note("DIMACS write/parse roundtrip is identity".to_string()),
        _ => report.fail("DIMACS roundtrip mismatch"),
    }

    // Blocking soundness: enumerations of random small specs never repeat.
    for _ in 0..10 {
        let s = spec(rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let (formula, vm) = encode_base(s).expect("encoding cannot fail");
        let cfg = ctx.config(EngineMode::Cdcl, ctx.solve_timeout);
        match enumerate(&formula, &vm, usize::MAX, &cfg) {
            Ok(result) => {
                let mut seen = std::collections::HashSet::new();
                for c in &result.colorings {
                    if !seen.insert(c.cells().to_vec()) {
                        report.fail(format!("blocked coloring reappeared on {s}"));
                    }
                }
            }
            Err(e) => report.fail(format!("enumeration error on {s}: {e}")),
        }
    }
    report.note("blocking clauses never repeat a coloring".to_string());
    report
}

fn run_size13(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("size13-smt");
    for (x, y, z, k) in [(13usize, 13usize, 2usize, 5usize), (2, 2, 13, 5)] {
        let script = export_smtlib(x, y, z, k);
        let decls = script.matches("(declare-const").count();
        let balanced = script.matches('(').count() == script.matches(')').count();
        if decls != k * x * y || !balanced || !script.contains("(check-sat)") {
            report.fail(format!("invalid SMT-LIB script for x={x} y={y} z={z} k={k}"));
        } else {
            report.note(format!("SMT-LIB script for x={x} y={y} z={z} k={k}: {decls} constants"));
        }
    }
    // Desk-scale feasibility search for the 13-subgrid case (x = y = 2).
    let opts = SearchOptions { node_budget: 20_000_000, ..Default::default() };
    match search_distributions(2, 2, 13, 5, 1, opts) {
        Ok(result) if result.complete && result.sets.is_empty() => {
            report.note("z=13 case refuted by the backtracking search".to_string());
        }
        Ok(result) if !result.sets.is_empty() => {
            report.fail("z=13 search found a distribution the published result excludes");
        }
        Ok(_) => {
            report.status = RecipeStatus::NonGating("z=13 search hit its node budget".into());
        }
        Err(e) => report.fail(format!("search error: {e}")),
    }
    let _ = ctx;
    report
}

fn run_shatter_class(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("shatter-class");
    let layout = PatternLayout::new(4, ShiftDirection::Left).expect("z >= 2");
    let (formula, vm) = encode_shift_merged(spec(10, 10, 3), &layout).expect("valid layout");
    let cfg = ctx.config(EngineMode::Cdcl, ctx.solve_timeout);
    match enumerate(&formula, &vm, 5, &cfg) {
        Ok(result) if result.colorings.is_empty() => {
            report.fail("no shift solutions found where the published results have them")
        }
        Ok(result) => {
            report.note(format!("{} solutions enumerated", result.colorings.len()));
            match classify(&result.colorings) {
                Ok(classes) => {
                    report.note(format!("{} isomorphism classes", classes.class_count()));
                    if classes.class_count() != 1 {
                        report.fail("solutions split into multiple classes; published results report one");
                    }
                }
                Err(e) => {
                    report.status = RecipeStatus::NonGating(format!("classification gave up: {e}"));
                }
            }
        }
        Err(e) => report.fail(format!("enumeration error: {e}")),
    }
    report
}

fn run_g26_partial(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("g26-partial");
    let layout = PatternLayout::new(8, ShiftDirection::Right)
        .expect("z >= 2")
        .with_partial(2, 2);
    let (formula, _) = encode_shift_merged(spec(26, 26, 5), &layout).expect("valid layout");
    report.note(format!("{} vars, {} clauses", formula.num_vars(), formula.num_clauses()));
    if CnfFormula::parse_dimacs(&formula.to_dimacs()).as_ref() != Ok(&formula) {
        report.fail("DIMACS export failed to roundtrip");
        return report;
    }
    report.note("DIMACS export roundtrips".to_string());
    let mut cfg = ctx.config(EngineMode::LocalSearch, ctx.solve_timeout);
    cfg.max_flips = 2_000_000;
    let out = solve(&formula, &cfg).expect("valid config");
    match out.status {
        SolveStatus::Sat => report.note("found a coloring (a new result at this scale!)".to_string()),
        _ => report.note(format!(
            "open as expected; best_unsat={:?} after {} flips",
            out.best_unsat, out.stats.flips
        )),
    }
    report
}

fn run_conj1(ctx: &RecipeContext) -> RecipeReport {
    let mut report = RecipeReport::new("conj1");
    for (m, n, k, z) in [(10usize, 10usize, 3usize, 3usize), (10, 10, 3, 4), (10, 10, 3, 5), (8, 8, 2, 4)] {
        let both = PatternLayout::new(z, ShiftDirection::SelectorBoth).expect("z >= 2");
        let left = PatternLayout::new(z, ShiftDirection::Left).expect("z >= 2");
        let (bf, _) = encode_shift_selector(spec(m, n, k), &both).expect("valid layout");
        let (lf, _) = encode_shift_merged(spec(m, n, k), &left).expect("valid layout");
        let cfg = ctx.config(EngineMode::Cdcl, ctx.solve_timeout);
        let both_out = solve(&bf, &cfg).expect("valid config");
        let left_out = solve(&lf, &cfg).expect("valid config");
        report.note(format!(
            "{m}x{n} k={k} z={z}: both={:?} left={:?}",
            both_out.status, left_out.status
        ));
        if both_out.status == SolveStatus::Unknown || left_out.status == SolveStatus::Unknown {
            report.status = RecipeStatus::NonGating("solver budget exceeded".into());
            return report;
        }
        if both_out.status == SolveStatus::Sat && left_out.status == SolveStatus::Unsat {
            report.fail(format!("counterexample at {m}x{n} k={k} z={z}"));
        }
    }
    report
}

/// Appends k stripe rows (blocks of k columns, cyclically colored) to a
/// solution of the k²×k² instance, giving a (k²+k)×k² coloring.
pub fn extend_with_stripes(c: &Coloring, k: usize) -> Coloring {
    let s = c.spec();
    let cols = s.cols;
    let mut cells = c.cells().to_vec();
    for t in 0..k {
        for col in 0..cols {
            let block = col / k;
            cells.push((((block + t) % k) as u8) + 1);
        }
    }
    Coloring::new(GridSpec::new(s.rows + k, cols, s.colors).expect("valid"), cells)
        .expect("stripe colors stay in range")
}

fn run_conj2(ctx: &RecipeContext, k: usize, name: &'static str) -> RecipeReport {
    let mut report = RecipeReport::new(name);
    let side = k * k;
    let d = DistributionSet::all_ones(k, k, k, k).expect("shape is valid");
    let layout = PatternLayout::new(k, ShiftDirection::Right).expect("k >= 2");
    let (mut formula, mut vm) = encode_shift_merged(spec(side, side, k), &layout).expect("valid layout");
    add_distribution_constraints(&mut formula, &mut vm, &d).expect("matching shape");
    let out = solve(&formula, &ctx.config(EngineMode::Cdcl, ctx.solve_timeout)).expect("valid config");
    match out.status {
        SolveStatus::Sat => {
            let base = vm.decode(out.model.as_ref().expect("sat")).expect("decodable");
            let extended = extend_with_stripes(&base, k);
            report.note(format!("{}x{} solution extended to {}x{}", side, side, side + k, side));
            if find_monochromatic_rectangle(&extended).is_some() {
                report.fail("stripe extension introduced a rectangle");
            }
        }
        SolveStatus::Unsat => report.fail("expected a solution with the uniform distribution"),
        SolveStatus::Unknown => {
            report.status = RecipeStatus::NonGating("solver budget exceeded".into());
        }
    }
    report
}
