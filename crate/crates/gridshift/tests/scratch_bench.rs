use gridshift::encoder::encode_shift_merged;
use gridshift::grid::GridSpec;
use gridshift::layout::{PatternLayout, ShiftDirection};

#[test]
fn batsat_reference() {
    use batsat::{lbool, Lit as BLit, Solver, SolverInterface, Var as BVar};
    for z in [2usize, 3, 6] {
        let spec = GridSpec::new(10, 10, 3).unwrap();
        let layout = PatternLayout::new(z, ShiftDirection::Left).unwrap();
        let (f, _) = encode_shift_merged(spec, &layout).unwrap();
        let mut solver = Solver::default();
        let vars: Vec<BVar> = (0..f.num_vars()).map(|_| solver.new_var_default()).collect();
        for clause in f.clauses() {
            let mut lits: Vec<BLit> = clause
                .iter()
                .map(|&l| BLit::new(vars[l.unsigned_abs() as usize - 1], l > 0))
                .collect();
            solver.add_clause_reuse(&mut lits);
        }
        let t = std::time::Instant::now();
        let res = solver.solve_limited(&[]);
        let status = if res == lbool::TRUE { "SAT" } else if res == lbool::FALSE { "UNSAT" } else { "UNKNOWN" };
        println!("batsat z={z}: {status} in {:?} ({} conflicts)", t.elapsed(), solver.num_conflicts());
    }
}
