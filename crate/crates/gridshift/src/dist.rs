//! Color-distribution solutions: the per-subgrid count matrices, the
//! necessary-condition checkers, a backtracking feasibility search, and
//! SMT-LIB export for instances beyond desk scale.
//!
//! For a grid of x×y subgrids of size z, entry (i, j) of the matrix for
//! color c is the number of cells of color c in subgrid (i, j) divided by z.
//! Shift colorings must satisfy: per-cell color sums equal z; per color and
//! column (or row) Σᵢ v²−v ≤ z−1 (z odd) or z−2 (z even); and per color the
//! dot product of any two column (or row) vectors is at most z.

use std::fmt;

use thiserror::Error;

use crate::layout::ShiftDirection;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("need {expected} matrices of {cells} entries, got a different shape")]
    Shape { expected: usize, cells: usize },
    #[error("entry {0} exceeds the subgrid size {1}")]
    EntryTooLarge(u32, usize),
    #[error("dimensions must be at least 1")]
    EmptyShape,
    #[error("necessary conditions for selector-both layouts are not known; refusing to check")]
    BothShiftsUnsupported,
    #[error("parse error: {0}")]
    Parse(String),
}

/// k matrices of per-subgrid color counts divided by z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionSet {
    x: usize,
    y: usize,
    z: usize,
    k: usize,
    /// matrices[color-1][i*y + j]
    matrices: Vec<Vec<u32>>,
}

impl DistributionSet {
    pub fn new(x: usize, y: usize, z: usize, k: usize, matrices: Vec<Vec<u32>>) -> Result<Self, DistError> {
        if x == 0 || y == 0 || z == 0 || k == 0 {
            return Err(DistError::EmptyShape);
        }
        if matrices.len() != k || matrices.iter().any(|m| m.len() != x * y) {
            return Err(DistError::Shape { expected: k, cells: x * y });
        }
        for m in &matrices {
            for &v in m {
                if v as usize > z {
                    return Err(DistError::EntryTooLarge(v, z));
                }
            }
        }
        Ok(DistributionSet { x, y, z, k, matrices })
    }

    /// All entries 1; the natural distribution when z = k.
    pub fn all_ones(x: usize, y: usize, z: usize, k: usize) -> Result<Self, DistError> {
        DistributionSet::new(x, y, z, k, vec![vec![1; x * y]; k])
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn colors(&self) -> usize {
        self.k
    }

    /// Entry for `color` (1-based) at subgrid (i, j), 0-based.
    pub fn entry(&self, color: usize, i: usize, j: usize) -> u32 {
        self.matrices[color - 1][i * self.y + j]
    }

    pub fn set_entry(&mut self, color: usize, i: usize, j: usize, v: u32) -> Result<(), DistError> {
        if v as usize > self.z {
            return Err(DistError::EntryTooLarge(v, self.z));
        }
        self.matrices[color - 1][i * self.y + j] = v;
        Ok(())
    }

    /// Text format: k blocks of x lines of y integers, blocks separated by
    /// blank lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in 0..self.k {
            if c > 0 {
                out.push('\n');
            }
            for i in 0..self.x {
                let row: Vec<String> =
                    (0..self.y).map(|j| self.matrices[c][i * self.y + j].to_string()).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    /// Parses the block format; z is context the file does not carry.
    pub fn parse(text: &str, z: usize) -> Result<Self, DistError> {
        let mut blocks: Vec<Vec<Vec<u32>>> = Vec::new();
        let mut current: Vec<Vec<u32>> = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                if !current.is_empty() {
                    blocks.push(std::mem::take(&mut current));
                }
                continue;
            }
            let row: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| DistError::Parse(format!("bad entry {t:?}"))))
                .collect::<Result<_, _>>()?;
            current.push(row);
        }
        if !current.is_empty() {
            blocks.push(current);
        }
        if blocks.is_empty() {
            return Err(DistError::Parse("no matrices found".into()));
        }
        let x = blocks[0].len();
        let y = blocks[0].first().map_or(0, |r| r.len());
        let k = blocks.len();
        let mut matrices = Vec::with_capacity(k);
        for block in &blocks {
            if block.len() != x || block.iter().any(|r| r.len() != y) {
                return Err(DistError::Parse("matrices have inconsistent shapes".into()));
            }
            matrices.push(block.iter().flatten().copied().collect());
        }
        DistributionSet::new(x, y, z, k, matrices)
    }
}

/// Bound for the self-gap condition: z−1 when z is odd, z−2 when z is even
/// (a gap of length z/2 wraps onto itself).
pub fn self_gap_bound(z: usize) -> i64 {
    if z % 2 == 1 {
        z as i64 - 1
    } else {
        z as i64 - 2
    }
}

/// Largest entry value consistent with the self-gap condition on its own.
pub fn max_entry(z: usize) -> u32 {
    let bound = self_gap_bound(z);
    let mut v = 0u32;
    loop {
        let next = (v + 1) as i64;
        if next * next - next > bound || next as usize > z {
            return v;
        }
        v += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumViolation {
    pub i: usize,
    pub j: usize,
    pub total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapViolation {
    pub color: usize,
    /// Column index for the column check, row index for the row check.
    pub index: usize,
    pub value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarViolation {
    pub color: usize,
    pub first: usize,
    pub second: usize,
    pub value: i64,
}

/// Outcome of the necessary-condition checks, with every violation cited.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintReport {
    pub sum: Vec<SumViolation>,
    pub self_gap_cols: Vec<GapViolation>,
    pub self_gap_rows: Vec<GapViolation>,
    pub scalar_cols: Vec<ScalarViolation>,
    pub scalar_rows: Vec<ScalarViolation>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.sum.is_empty()
            && self.self_gap_cols.is_empty()
            && self.self_gap_rows.is_empty()
            && self.scalar_cols.is_empty()
            && self.scalar_rows.is_empty()
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(f, "sum:              {}", status(self.sum.is_empty()))?;
        for v in &self.sum {
            writeln!(f, "  subgrid ({}, {}) sums to {}", v.i + 1, v.j + 1, v.total)?;
        }
        writeln!(f, "self-gap columns: {}", status(self.self_gap_cols.is_empty()))?;
        for v in &self.self_gap_cols {
            writeln!(f, "  color {} column {}: {}", v.color, v.index + 1, v.value)?;
        }
        writeln!(f, "self-gap rows:    {}", status(self.self_gap_rows.is_empty()))?;
        for v in &self.self_gap_rows {
            writeln!(f, "  color {} row {}: {}", v.color, v.index + 1, v.value)?;
        }
        writeln!(f, "scalar columns:   {}", status(self.scalar_cols.is_empty()))?;
        for v in &self.scalar_cols {
            writeln!(f, "  color {} columns ({}, {}): {}", v.color, v.first + 1, v.second + 1, v.value)?;
        }
        writeln!(f, "scalar rows:      {}", status(self.scalar_rows.is_empty()))?;
        for v in &self.scalar_rows {
            writeln!(f, "  color {} rows ({}, {}): {}", v.color, v.first + 1, v.second + 1, v.value)?;
        }
        Ok(())
    }
}

/// Evaluates the sum, self-gap and scalar-product conditions in both the
/// column and the symmetric row formulation.
pub fn check_necessary(d: &DistributionSet) -> ConstraintReport {
    let (x, y, z, k) = (d.x, d.y, d.z, d.k);
    let bound = self_gap_bound(z);
    let mut report = ConstraintReport::default();

    for i in 0..x {
        for j in 0..y {
            let total: u32 = (1..=k).map(|c| d.entry(c, i, j)).sum();
            if total as usize != z {
                report.sum.push(SumViolation { i, j, total });
            }
        }
    }

    for color in 1..=k {
        for j in 0..y {
            let gaps: i64 = (0..x)
                .map(|i| {
                    let v = d.entry(color, i, j) as i64;
                    v * v - v
                })
                .sum();
            if gaps > bound {
                report.self_gap_cols.push(GapViolation { color, index: j, value: gaps });
            }
        }
        for i in 0..x {
            let gaps: i64 = (0..y)
                .map(|j| {
                    let v = d.entry(color, i, j) as i64;
                    v * v - v
                })
                .sum();
            if gaps > bound {
                report.self_gap_rows.push(GapViolation { color, index: i, value: gaps });
            }
        }
        for j1 in 0..y {
            for j2 in j1 + 1..y {
                let dot: i64 =
                    (0..x).map(|i| d.entry(color, i, j1) as i64 * d.entry(color, i, j2) as i64).sum();
                if dot > z as i64 {
                    report.scalar_cols.push(ScalarViolation { color, first: j1, second: j2, value: dot });
                }
            }
        }
        for i1 in 0..x {
            for i2 in i1 + 1..x {
                let dot: i64 =
                    (0..y).map(|j| d.entry(color, i1, j) as i64 * d.entry(color, i2, j) as i64).sum();
                if dot > z as i64 {
                    report.scalar_rows.push(ScalarViolation { color, first: i1, second: i2, value: dot });
                }
            }
        }
    }
    report
}

/// Layout-aware entry point: the scalar-product bound is only proved for
/// single-direction shifts, so selector-both layouts are refused.
pub fn check_necessary_for(d: &DistributionSet, direction: ShiftDirection) -> Result<ConstraintReport, DistError> {
    match direction {
        ShiftDirection::SelectorBoth => Err(DistError::BothShiftsUnsupported),
        ShiftDirection::Left | ShiftDirection::Right => Ok(check_necessary(d)),
    }
}

/// True iff a k-colored n-subgrid shift pattern is not excluded by the
/// pigeonhole bound, i.e. n ≤ k² or n ≥ k² + k.
pub fn subgrid_bound_holds(n: usize, k: usize) -> bool {
    n <= k * k || n >= k * k + k
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub node_budget: u64,
    /// Require color matrices in non-increasing lexicographic order,
    /// pruning the k! color symmetry.
    pub break_color_symmetry: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { node_budget: 50_000_000, break_color_symmetry: true }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub sets: Vec<DistributionSet>,
    /// False when the node budget ran out before the space was exhausted.
    pub complete: bool,
    pub nodes: u64,
}

struct Search {
    x: usize,
    y: usize,
    z: usize,
    k: usize,
    vmax: u32,
    bound: i64,
    limit: usize,
    opts: SearchOptions,
    entries: Vec<u32>, // [cell * k + (color-1)], cell = i*y + j
    out: Vec<DistributionSet>,
    nodes: u64,
    exhausted_budget: bool,
}

impl Search {
    fn value(&self, color: usize, i: usize, j: usize) -> u32 {
        self.entries[(i * self.y + j) * self.k + color - 1]
    }

    /// Checks every condition whose scope is fully assigned once entry
    /// (color, i, j) has been set; prefix-monotone conditions are also
    /// checked on partial scopes.
    fn consistent(&self, color: usize, i: usize, j: usize) -> bool {
        let v = self.value(color, i, j) as i64;
        let z = self.z as i64;
        // Partial cell sum; exact once the last color is placed.
        let partial: i64 = (1..=color).map(|c| self.value(c, i, j) as i64).sum();
        if partial > z || (color == self.k && partial != z) {
            return false;
        }
        // Remaining colors cannot lift the cell sum to z.
        if color < self.k && partial + (self.k - color) as i64 * i64::from(self.vmax) < z {
            return false;
        }
        // Lexicographic color symmetry breaking against the previous color:
        // compare entries in assignment order.
        if self.opts.break_color_symmetry && color > 1 {
            let mut ordering = std::cmp::Ordering::Equal;
            'outer: for ci in 0..=i {
                let j_end = if ci == i { j + 1 } else { self.y };
                for cj in 0..j_end {
                    let a = self.value(color - 1, ci, cj);
                    let b = self.value(color, ci, cj);
                    if a != b {
                        ordering = a.cmp(&b);
                        break 'outer;
                    }
                }
            }
            if ordering == std::cmp::Ordering::Less {
                return false;
            }
        }
        // Self-gap along column j (rows 0..=i assigned) and row i (cols 0..=j).
        let col_gaps: i64 = (0..=i)
            .map(|r| {
                let w = self.value(color, r, j) as i64;
                w * w - w
            })
            .sum();
        if col_gaps > self.bound {
            return false;
        }
        let row_gaps: i64 = (0..=j)
            .map(|c| {
                let w = self.value(color, i, c) as i64;
                w * w - w
            })
            .sum();
        if row_gaps > self.bound {
            return false;
        }
        // Scalar products: column pairs over assigned rows, row pairs over
        // assigned columns. Both are monotone in the prefix.
        if v > 0 {
            for j2 in 0..self.y {
                if j2 == j || (i == 0 && j2 > j) {
                    continue;
                }
                let upto = if j2 < j { i } else { i - 1 };
                let dot: i64 = (0..=upto)
                    .map(|r| self.value(color, r, j) as i64 * self.value(color, r, j2) as i64)
                    .sum();
                if dot > z {
                    return false;
                }
            }
            for i2 in 0..i {
                let dot: i64 =
                    (0..=j).map(|c| self.value(color, i, c) as i64 * self.value(color, i2, c) as i64).sum();
                if dot > z {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, pos: usize) {
        if self.out.len() >= self.limit || self.exhausted_budget {
            return;
        }
        if pos == self.x * self.y * self.k {
            let matrices: Vec<Vec<u32>> = (0..self.k)
                .map(|c| {
                    (0..self.x * self.y).map(|cell| self.entries[cell * self.k + c]).collect()
                })
                .collect();
            let set = DistributionSet::new(self.x, self.y, self.z, self.k, matrices)
                .expect("search stays within entry bounds");
            debug_assert!(check_necessary(&set).passed());
            self.out.push(set);
            return;
        }
        let cell = pos / self.k;
        let color = pos % self.k + 1;
        let (i, j) = (cell / self.y, cell % self.y);
        for v in 0..=self.vmax {
            self.nodes += 1;
            if self.nodes > self.opts.node_budget {
                self.exhausted_budget = true;
                return;
            }
            self.entries[pos] = v;
            if self.consistent(color, i, j) {
                self.run(pos + 1);
                if self.out.len() >= self.limit || self.exhausted_budget {
                    break;
                }
            }
        }
        self.entries[pos] = 0;
    }
}

/// Backtracking search for distribution sets passing all necessary
/// conditions, in cell-major then color order. Exhaustive when it
/// terminates with `complete = true`.
pub fn search_distributions(
    x: usize,
    y: usize,
    z: usize,
    k: usize,
    limit: usize,
    opts: SearchOptions,
) -> Result<SearchResult, DistError> {
    if x == 0 || y == 0 || z == 0 || k == 0 {
        return Err(DistError::EmptyShape);
    }
    let mut search = Search {
        x,
        y,
        z,
        k,
        vmax: max_entry(z).min(z as u32),
        bound: self_gap_bound(z),
        limit,
        opts,
        entries: vec![0; x * y * k],
        out: Vec::new(),
        nodes: 0,
        exhausted_budget: false,
    };
    search.run(0);
    Ok(SearchResult {
        complete: !search.exhausted_budget && search.out.len() < limit,
        sets: search.out,
        nodes: search.nodes,
    })
}

/// SMT-LIB 2 script asserting the sum, self-gap, and scalar-product
/// conditions for rows and columns over integer constants v_c_i_j.
pub fn export_smtlib(x: usize, y: usize, z: usize, k: usize) -> String {
    let mut s = String::new();
    s.push_str("(set-option :produce-models true)\n");
    s.push_str("(set-logic QF_NIA)\n");
    let name = |c: usize, i: usize, j: usize| format!("v_{c}_{i}_{j}");
    for c in 1..=k {
        for i in 1..=x {
            for j in 1..=y {
                s.push_str(&format!("(declare-const {} Int)\n", name(c, i, j)));
            }
        }
    }
    for c in 1..=k {
        for i in 1..=x {
            for j in 1..=y {
                let v = name(c, i, j);
                s.push_str(&format!("(assert (and (>= {v} 0) (<= {v} {z})))\n"));
            }
        }
    }
    // Sum per subgrid cell.
    for i in 1..=x {
        for j in 1..=y {
            let terms: Vec<String> = (1..=k).map(|c| name(c, i, j)).collect();
            if k == 1 {
                s.push_str(&format!("(assert (= {} {z}))\n", terms[0]));
            } else {
                s.push_str(&format!("(assert (= (+ {}) {z}))\n", terms.join(" ")));
            }
        }
    }
    let gap = |v: &str| format!("(- (* {v} {v}) {v})");
    let bound = self_gap_bound(z);
    let sum_expr = |terms: &[String]| {
        if terms.len() == 1 {
            terms[0].clone()
        } else {
            format!("(+ {})", terms.join(" "))
        }
    };
    for c in 1..=k {
        for j in 1..=y {
            let terms: Vec<String> = (1..=x).map(|i| gap(&name(c, i, j))).collect();
            s.push_str(&format!("(assert (<= {} {bound}))\n", sum_expr(&terms)));
        }
        for i in 1..=x {
            let terms: Vec<String> = (1..=y).map(|j| gap(&name(c, i, j))).collect();
            s.push_str(&format!("(assert (<= {} {bound}))\n", sum_expr(&terms)));
        }
        for j1 in 1..=y {
            for j2 in j1 + 1..=y {
                let terms: Vec<String> =
                    (1..=x).map(|i| format!("(* {} {})", name(c, i, j1), name(c, i, j2))).collect();
                s.push_str(&format!("(assert (<= {} {z}))\n", sum_expr(&terms)));
            }
        }
        for i1 in 1..=x {
            for i2 in i1 + 1..=x {
                let terms: Vec<String> =
                    (1..=y).map(|j| format!("(* {} {})", name(c, i1, j), name(c, i2, j))).collect();
                s.push_str(&format!("(assert (<= {} {z}))\n", sum_expr(&terms)));
            }
        }
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

/// The five matrices of the published 25×25 distribution solution
/// (z = 5, k = 5).
pub fn known_25x25_distribution() -> DistributionSet {
    let matrices: Vec<Vec<u32>> = vec![
        vec![
            2, 1, 0, 1, 1, //
            1, 0, 2, 2, 0, //
            1, 2, 1, 1, 0, //
            0, 1, 0, 2, 1, //
            1, 1, 2, 0, 2,
        ],
        vec![
            1, 0, 2, 2, 1, //
            0, 2, 1, 0, 2, //
            2, 1, 1, 0, 1, //
            1, 2, 1, 1, 0, //
            2, 0, 0, 1, 1,
        ],
        vec![
            1, 1, 0, 0, 2, //
            1, 1, 0, 2, 1, //
            0, 1, 1, 0, 2, //
            2, 0, 2, 1, 1, //
            0, 2, 2, 1, 0,
        ],
        vec![
            1, 2, 1, 0, 1, //
            2, 0, 2, 0, 1, //
            0, 1, 2, 2, 1, //
            0, 1, 0, 1, 2, //
            2, 1, 0, 2, 0,
        ],
        vec![
            0, 1, 2, 2, 0, //
            1, 2, 0, 1, 1, //
            2, 0, 0, 2, 1, //
            2, 1, 2, 0, 1, //
            0, 1, 1, 1, 2,
        ],
    ];
    DistributionSet::new(5, 5, 5, 5, matrices).expect("known solution is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_solution_passes_all_checks() {
        let d = known_25x25_distribution();
        let total: u32 = (1..=5).map(|c| d.entry(c, 0, 0)).sum();
        assert_eq!(total, 5);
        let report = check_necessary(&d);
        assert!(report.passed(), "unexpected violations:\n{report}");
    }

    #[test]
    fn all_ones_passes_when_z_equals_k() {
        let d = DistributionSet::all_ones(5, 5, 5, 5).unwrap();
        assert!(check_necessary(&d).passed());
        let d = DistributionSet::all_ones(4, 4, 4, 4).unwrap();
        assert!(check_necessary(&d).passed());
    }

    #[test]
    fn repeated_full_entries_fail_gap_and_scalar() {
        // One column holding the value z twice for the same color.
        let d = DistributionSet::new(2, 1, 2, 1, vec![vec![2, 2]]).unwrap();
        let report = check_necessary(&d);
        assert!(report.sum.is_empty());
        assert!(!report.self_gap_cols.is_empty());
        assert!(!report.scalar_rows.is_empty());
        assert!((2i64 * 2 - 2) > self_gap_bound(2));
    }

    #[test]
    fn sum_check_catches_mutations() {
        let mut d = known_25x25_distribution();
        let old = d.entry(3, 2, 4);
        d.set_entry(3, 2, 4, old + 1).unwrap();
        let report = check_necessary(&d);
        assert_eq!(report.sum, vec![SumViolation { i: 2, j: 4, total: 6 }]);
    }

    #[test]
    fn both_shifts_are_refused() {
        let d = DistributionSet::all_ones(2, 2, 2, 2).unwrap();
        assert_eq!(
            check_necessary_for(&d, ShiftDirection::SelectorBoth),
            Err(DistError::BothShiftsUnsupported)
        );
        assert!(check_necessary_for(&d, ShiftDirection::Left).is_ok());
    }

    #[test]
    fn pigeonhole_bound() {
        assert!(!subgrid_bound_holds(26, 5));
        assert!(!subgrid_bound_holds(5, 2));
        assert!(subgrid_bound_holds(4, 2));
        assert!(subgrid_bound_holds(25, 5));
        assert!(subgrid_bound_holds(30, 5));
        for k in 1..=7usize {
            for n in 1..=60 {
                let excluded = k * k < n && n < k * k + k;
                assert_eq!(subgrid_bound_holds(n, k), !excluded);
            }
        }
    }

    #[test]
    fn max_entry_matches_definition() {
        for z in 2..=20 {
            let m = max_entry(z) as i64;
            assert!(m * m - m <= self_gap_bound(z));
            assert!((m + 1) * (m + 1) - (m + 1) > self_gap_bound(z) || m as usize == z);
        }
        assert_eq!(max_entry(2), 1);
        assert_eq!(max_entry(5), 2);
        assert_eq!(max_entry(13), 4);
    }

    /// Independent oracle: per-cell compositions of z into k bounded parts,
    /// expanded to full sets and filtered by check_necessary.
    fn exhaustive_sets(x: usize, y: usize, z: usize, k: usize) -> Vec<DistributionSet> {
        fn compositions(total: u32, parts: usize, cap: u32, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if parts == 1 {
                if total <= cap {
                    acc.push(total);
                    out.push(acc.clone());
                    acc.pop();
                }
                return;
            }
            for v in 0..=total.min(cap) {
                acc.push(v);
                compositions(total - v, parts - 1, cap, acc, out);
                acc.pop();
            }
        }
        let mut per_cell = Vec::new();
        compositions(z as u32, k, max_entry(z).min(z as u32), &mut Vec::new(), &mut per_cell);
        let cells = x * y;
        let mut out = Vec::new();
        let mut idx = vec![0usize; cells];
        loop {
            let mut matrices = vec![vec![0u32; cells]; k];
            for cell in 0..cells {
                for c in 0..k {
                    matrices[c][cell] = per_cell[idx[cell]][c];
                }
            }
            let d = DistributionSet::new(x, y, z, k, matrices).unwrap();
            if check_necessary(&d).passed() {
                out.push(d);
            }
            let mut pos = 0;
            loop {
                if pos == cells {
                    return out;
                }
                idx[pos] += 1;
                if idx[pos] < per_cell.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn search_agrees_with_exhaustive_enumeration() {
        let cases = [(1, 1, 2, 2), (1, 1, 3, 3), (2, 2, 2, 2), (2, 2, 3, 2), (2, 1, 4, 3), (2, 2, 4, 2)];
        for (x, y, z, k) in cases {
            let opts = SearchOptions { break_color_symmetry: false, ..Default::default() };
            let got = search_distributions(x, y, z, k, usize::MAX, opts).unwrap();
            assert!(got.complete);
            let want = exhaustive_sets(x, y, z, k);
            let mut got_sets = got.sets;
            let mut want_sets = want;
            let key = |d: &DistributionSet| d.to_text();
            got_sets.sort_by_key(key);
            want_sets.sort_by_key(key);
            assert_eq!(got_sets, want_sets, "mismatch at x={x} y={y} z={z} k={k}");
        }
    }

    #[test]
    fn symmetry_breaking_keeps_one_representative_per_orbit() {
        let (x, y, z, k) = (2, 2, 3, 2);
        let all = search_distributions(x, y, z, k, usize::MAX, SearchOptions {
            break_color_symmetry: false,
            ..Default::default()
        })
        .unwrap();
        let broken = search_distributions(x, y, z, k, usize::MAX, SearchOptions::default()).unwrap();
        assert!(all.complete && broken.complete);
        // Every unbroken solution, after sorting its matrices into
        // non-increasing order, appears in the broken set.
        let canon = |d: &DistributionSet| {
            let mut ms: Vec<Vec<u32>> = (1..=k)
                .map(|c| (0..x).flat_map(|i| (0..y).map(move |j| (i, j))).map(|(i, j)| d.entry(c, i, j)).collect())
                .collect();
            ms.sort();
            ms.reverse();
            ms
        };
        let broken_keys: std::collections::BTreeSet<Vec<Vec<u32>>> =
            broken.sets.iter().map(canon).collect();
        for d in &all.sets {
            assert!(broken_keys.contains(&canon(d)));
        }
        assert!(broken.sets.len() <= all.sets.len());
    }

    #[test]
    fn single_cell_search_matches_composition_filter() {
        for (z, k) in [(2, 2), (3, 3), (4, 4), (5, 5)] {
            let got = search_distributions(1, 1, z, k, usize::MAX, SearchOptions {
                break_color_symmetry: false,
                ..Default::default()
            })
            .unwrap();
            assert!(got.complete);
            let want = exhaustive_sets(1, 1, z, k);
            assert_eq!(got.sets.len(), want.len());
        }
    }

    #[test]
    fn first_solution_for_25x25_is_all_ones() {
        let got = search_distributions(5, 5, 5, 5, 1, SearchOptions::default()).unwrap();
        assert_eq!(got.sets.len(), 1);
        assert_eq!(got.sets[0], DistributionSet::all_ones(5, 5, 5, 5).unwrap());
    }

    #[test]
    fn smtlib_structure() {
        let s = export_smtlib(1, 1, 2, 1);
        assert!(s.contains("(set-logic QF_NIA)"));
        assert!(s.contains("(declare-const v_1_1_1 Int)"));
        assert!(s.contains("(assert (= v_1_1_1 2))"));
        assert!(s.contains("(assert (<= (- (* v_1_1_1 v_1_1_1) v_1_1_1) 0))"));
        assert!(s.contains("(check-sat)"));
        assert!(s.contains("(get-model)"));
        // The asserted conditions are indeed unsatisfiable: v = 2 gives
        // v² − v = 2 > 0.
        let none = search_distributions(1, 1, 2, 1, usize::MAX, SearchOptions::default()).unwrap();
        assert!(none.complete && none.sets.is_empty());

        let s = export_smtlib(3, 2, 5, 4);
        let decls = s.matches("(declare-const").count();
        assert_eq!(decls, 4 * 3 * 2);
        let opens = s.matches('(').count();
        let closes = s.matches(')').count();
        assert_eq!(opens, closes);
    }

    #[test]
    fn text_roundtrip() {
        let d = known_25x25_distribution();
        let parsed = DistributionSet::parse(&d.to_text(), 5).unwrap();
        assert_eq!(parsed, d);
        assert!(DistributionSet::parse("", 5).is_err());
        assert!(DistributionSet::parse("1 2\n3\n", 5).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(DistributionSet::new(0, 1, 2, 1, vec![]).is_err());
        assert!(DistributionSet::new(1, 1, 2, 1, vec![vec![3]]).is_err());
        assert!(DistributionSet::new(1, 1, 2, 2, vec![vec![1]]).is_err());
    }
}
