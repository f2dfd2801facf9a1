//! CNF encodings of the rectangle-free coloring problem.
//!
//! Variable numbering: cell (i, j) with color c maps to (i·n + j)·k + c
//! before merging; merging remaps cells to class representatives (smallest
//! member cell) and compacts ids contiguously, so DIMACS output is
//! reproducible. Auxiliary variables (selector pairs, cardinality counters)
//! live in a reserved range above all cell variables.

use std::collections::HashSet;

use thiserror::Error;

use crate::cnf::{Assignment, CnfError, CnfFormula};
use crate::dist::DistributionSet;
use crate::grid::{Coloring, GridError, GridSpec};
use crate::layout::{CellClasses, DiagonalMode, LayoutError, PatternLayout, Shift, ShiftDirection};
use crate::layout::merged_cell_classes;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("selector encoding requires direction selector-both")]
    SelectorNeedsBoth,
    #[error("distribution constraints require a merged-variable map")]
    NotMergedMap,
    #[error("distribution shape {0}x{1}, z={2}, k={3} does not match the encoding")]
    DistributionShape(usize, usize, usize, usize),
    #[error("cell ({0}, {1}) has no true color variable in the model")]
    DecodeNoColor(usize, usize),
    #[error("cell ({0}, {1}) has {2} true color variables in the model")]
    DecodeMultiColor(usize, usize, usize),
    #[error("coloring assigns different colors to merged cells ({0}, {1}) and ({2}, {3})")]
    InconsistentWithClasses(usize, usize, usize, usize),
    #[error("malformed map file: {0}")]
    MapParse(String),
}

/// Mapping from (cell, color) pairs to CNF variables, many-to-one under
/// merged layouts, plus the auxiliary-variable bookkeeping.
#[derive(Debug, Clone)]
pub struct VarMap {
    spec: GridSpec,
    layout: Option<PatternLayout>,
    classes: CellClasses,
    /// First member cell (row-major index) of each class.
    rep_cell: Vec<u32>,
    merged: bool,
    num_aux: u32,
}

impl VarMap {
    fn new(spec: GridSpec, layout: Option<PatternLayout>, classes: CellClasses, merged: bool) -> Self {
        let mut rep_cell = vec![u32::MAX; classes.num_classes];
        for (cell, &class) in classes.class_of.iter().enumerate() {
            if rep_cell[class as usize] == u32::MAX {
                rep_cell[class as usize] = cell as u32;
            }
        }
        VarMap { spec, layout, classes, rep_cell, merged, num_aux: 0 }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn layout(&self) -> Option<&PatternLayout> {
        self.layout.as_ref()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.num_classes
    }

    pub fn num_cell_vars(&self) -> u32 {
        (self.classes.num_classes * self.spec.colors) as u32
    }

    pub fn num_vars(&self) -> u32 {
        self.num_cell_vars() + self.num_aux
    }

    /// Variable for cell (row, col) carrying `color`; 0-based cell, 1-based
    /// color. Merged cells share variables.
    pub fn var(&self, row: usize, col: usize, color: usize) -> i32 {
        let class = self.classes.class_of[row * self.spec.cols + col] as usize;
        (class * self.spec.colors + color) as i32
    }

    fn class_var(&self, class: usize, color: usize) -> i32 {
        (class * self.spec.colors + color) as i32
    }

    fn register_aux(&mut self, n: u32) -> u32 {
        let first = self.num_vars() + 1;
        self.num_aux += n;
        first
    }

    /// Sidecar map text: one "var cell_i cell_j color" line per (cell,
    /// color) pair, 1-based coordinates.
    pub fn to_map_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.spec.rows {
            for j in 0..self.spec.cols {
                for c in 1..=self.spec.colors {
                    out.push_str(&format!("{} {} {} {}\n", self.var(i, j, c), i + 1, j + 1, c));
                }
            }
        }
        out
    }

    /// Decodes a model: each cell takes the unique color whose variable is
    /// true.
    pub fn decode(&self, model: &Assignment) -> Result<Coloring, EncodeError> {
        decode_model(model, self, self.spec)
    }
}

fn push_unique(
    formula: &mut CnfFormula,
    seen: &mut HashSet<u128>,
    vars: &mut Vec<i32>,
) -> Result<(), CnfError> {
    vars.sort_unstable();
    vars.dedup();
    let mut key: u128 = 0;
    for &v in vars.iter() {
        key = (key << 32) | v as u128;
    }
    if seen.insert(key) {
        let lits: Vec<i32> = vars.iter().map(|&v| -v).collect();
        formula.add_clause(&lits)?;
    }
    Ok(())
}

/// Exactly-one color per class plus one 4-literal rectangle clause per
/// (color, row pair, column pair), simplified and deduplicated after
/// mapping through the classes.
fn encode_with_classes(
    spec: GridSpec,
    layout: Option<PatternLayout>,
    classes: CellClasses,
    merged: bool,
) -> Result<(CnfFormula, VarMap), EncodeError> {
    let vm = VarMap::new(spec, layout, classes, merged);
    let k = spec.colors;
    let mut formula = CnfFormula::new(vm.num_cell_vars());
    for class in 0..vm.num_classes() {
        let vars: Vec<i32> = (1..=k).map(|c| vm.class_var(class, c)).collect();
        formula.add_clause(&vars)?;
        for a in 0..k {
            for b in a + 1..k {
                formula.add_clause(&[-vars[a], -vars[b]])?;
            }
        }
    }
    let mut seen: HashSet<u128> = HashSet::new();
    let mut corner_vars: Vec<i32> = Vec::with_capacity(4);
    for r1 in 0..spec.rows {
        for r2 in r1 + 1..spec.rows {
            for c1 in 0..spec.cols {
                for c2 in c1 + 1..spec.cols {
                    for color in 1..=k {
                        corner_vars.clear();
                        corner_vars.extend([
                            vm.var(r1, c1, color),
                            vm.var(r1, c2, color),
                            vm.var(r2, c1, color),
                            vm.var(r2, c2, color),
                        ]);
                        push_unique(&mut formula, &mut seen, &mut corner_vars)?;
                    }
                }
            }
        }
    }
    Ok((formula, vm))
}

/// Preliminary encoding: exactly-one color per cell plus the rectangle-free
/// clauses, one variable per (cell, color) pair.
pub fn encode_base(spec: GridSpec) -> Result<(CnfFormula, VarMap), EncodeError> {
    encode_with_classes(spec, None, CellClasses::discrete(spec), false)
}

/// Closed-form clause count of [`encode_base`]:
/// m·n·(1 + k(k−1)/2) + k·C(m,2)·C(n,2).
pub fn base_clause_count(spec: GridSpec) -> usize {
    let (m, n, k) = (spec.rows, spec.cols, spec.colors);
    let pairs = |v: usize| v * (v - 1) / 2;
    m * n * (1 + pairs(k).max(0)) + k * pairs(m) * pairs(n)
}

/// Merged-variable shift encoding: only class representatives carry
/// variables, so each subgrid keeps its first row only.
pub fn encode_shift_merged(
    spec: GridSpec,
    layout: &PatternLayout,
) -> Result<(CnfFormula, VarMap), EncodeError> {
    let classes = merged_cell_classes(spec, layout)?;
    encode_with_classes(spec, Some(*layout), classes, true)
}

/// Single-direction shift encoding over the full variable set, with binary
/// Equal clauses tying each merged-class member to its representative.
pub fn encode_shift_equal(
    spec: GridSpec,
    layout: &PatternLayout,
) -> Result<(CnfFormula, VarMap), EncodeError> {
    let classes = merged_cell_classes(spec, layout)?;
    let (mut formula, mut vm) = encode_base(spec)?;
    vm.layout = Some(*layout);
    let k = spec.colors;
    let mut anchor: Vec<Option<(usize, usize)>> = vec![None; classes.num_classes];
    for i in 0..spec.rows {
        for j in 0..spec.cols {
            let class = classes.class_of[i * spec.cols + j] as usize;
            match anchor[class] {
                None => anchor[class] = Some((i, j)),
                Some((ai, aj)) => {
                    for c in 1..=k {
                        let x = vm.var(ai, aj, c);
                        let y = vm.var(i, j, c);
                        formula.add_clause(&[-x, y])?;
                        formula.add_clause(&[x, -y])?;
                    }
                }
            }
        }
    }
    Ok((formula, vm))
}

/// Selector encoding: every subgrid gets a fresh (L, R) pair with an
/// exclusive-or; ternary clauses enforce the left equalities unless L is
/// set and the right equalities unless R is set, so each subgrid picks a
/// direction. Midgrids get their own selector pair one level up.
pub fn encode_shift_selector(
    spec: GridSpec,
    layout: &PatternLayout,
) -> Result<(CnfFormula, VarMap), EncodeError> {
    if layout.direction != ShiftDirection::SelectorBoth {
        return Err(EncodeError::SelectorNeedsBoth);
    }
    layout.validate(spec)?;
    let (mut formula, mut vm) = encode_base(spec)?;
    vm.layout = Some(*layout);
    let z = layout.subgrid;
    let k = spec.colors;
    let bands_r = layout.band_rows(spec);
    let bands_c = layout.band_cols(spec);
    let virt_bands_r = bands_r + usize::from(layout.partial_rows > 0);
    let virt_bands_c = bands_c + usize::from(layout.partial_cols > 0);

    // One equality chain per (direction, first-row source column), anchored
    // at the smallest real cell, disabled by the direction's selector.
    let tie = |formula: &mut CnfFormula,
                   vm: &VarMap,
                   r0: usize,
                   c0: usize,
                   rows: usize,
                   cols: usize,
                   shift: Shift,
                   selector: i32|
     -> Result<(), CnfError> {
        for key in 0..z {
            let mut anchor: Option<(usize, usize)> = None;
            for p in 0..rows {
                for q in 0..cols {
                    if shift.source_col(p, q, z) != key {
                        continue;
                    }
                    match anchor {
                        None => anchor = Some((p, q)),
                        Some((ap, aq)) => {
                            for c in 1..=k {
                                let x = vm.var(r0 + ap, c0 + aq, c);
                                let y = vm.var(r0 + p, c0 + q, c);
                                formula.add_clause(&[-x, y, selector])?;
                                formula.add_clause(&[x, -y, selector])?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    };

    for bi in 0..virt_bands_r {
        for bj in 0..virt_bands_c {
            let rows = if bi < bands_r { z } else { layout.partial_rows };
            let cols = if bj < bands_c { z } else { layout.partial_cols };
            let first = vm.register_aux(2);
            formula.add_vars(2);
            let (l, r) = (first as i32, first as i32 + 1);
            formula.add_clause(&[l, r])?;
            formula.add_clause(&[-l, -r])?;
            tie(&mut formula, &vm, bi * z, bj * z, rows, cols, Shift::Left, l)?;
            tie(&mut formula, &vm, bi * z, bj * z, rows, cols, Shift::Right, r)?;
        }
    }

    if let Some(mid) = layout.midgrid {
        let w = mid / z;
        for a in 0..bands_r / w {
            for b in 0..bands_c / w {
                let first = vm.register_aux(2);
                formula.add_vars(2);
                let (l, r) = (first as i32, first as i32 + 1);
                formula.add_clause(&[l, r])?;
                formula.add_clause(&[-l, -r])?;
                for (shift, selector) in [(Shift::Left, l), (Shift::Right, r)] {
                    for pp in 1..w {
                        for qq in 0..w {
                            let src = shift.source_col(pp, qq, w);
                            let (ti, tj) = ((a * w + pp) * z, (b * w + qq) * z);
                            let (si, sj) = (a * w * z, (b * w + src) * z);
                            for p in 0..z {
                                for q in 0..z {
                                    for c in 1..=k {
                                        let x = vm.var(si + p, sj + q, c);
                                        let y = vm.var(ti + p, tj + q, c);
                                        formula.add_clause(&[-x, y, selector])?;
                                        formula.add_clause(&[x, -y, selector])?;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Diagonal identifications are direction-free: plain binary equalities.
    let len = bands_r.min(bands_c);
    let equal_subgrids = |formula: &mut CnfFormula, a: (usize, usize), b: (usize, usize)| -> Result<(), CnfError> {
        for p in 0..z {
            for q in 0..z {
                for c in 1..=k {
                    let x = vm.var(a.0 * z + p, a.1 * z + q, c);
                    let y = vm.var(b.0 * z + p, b.1 * z + q, c);
                    formula.add_clause(&[-x, y])?;
                    formula.add_clause(&[x, -y])?;
                }
            }
        }
        Ok(())
    };
    if matches!(layout.diagonal_equal, DiagonalMode::Diagonal | DiagonalMode::Both) {
        for i in 1..len {
            equal_subgrids(&mut formula, (i, i), (0, 0))?;
        }
    }
    if matches!(layout.diagonal_equal, DiagonalMode::AntiDiagonal | DiagonalMode::Both) {
        for i in 1..len {
            equal_subgrids(&mut formula, (i, bands_c - 1 - i), (0, bands_c - 1))?;
        }
    }

    Ok((formula, vm))
}

/// Adds an exactly-k sequential counter over the given literals. Counter
/// variables s(i, j) mean "at least j of the first i literals are true".
fn add_exactly_k(formula: &mut CnfFormula, vm: &mut VarMap, xs: &[i32], k: u32) -> Result<(), CnfError> {
    let n = xs.len() as u32;
    debug_assert!(k <= n);
    if k == 0 {
        for &x in xs {
            formula.add_clause(&[-x])?;
        }
        return Ok(());
    }
    if k == n {
        for &x in xs {
            formula.add_clause(&[x])?;
        }
        return Ok(());
    }
    let jmax = k + 1;
    // s[i][j] for 1 <= i <= n, 1 <= j <= min(i, jmax); 0 elsewhere.
    let width = |i: u32| jmax.min(i);
    let total: u32 = (1..=n).map(width).sum();
    let first = vm.register_aux(total);
    formula.add_vars(total);
    let mut offsets = Vec::with_capacity(n as usize + 1);
    let mut acc = first;
    for i in 1..=n {
        offsets.push(acc);
        acc += width(i);
    }
    let s = |i: u32, j: u32| -> Option<i32> {
        if j == 0 || j > i {
            return None; // constant: true for j == 0, false for j > i
        }
        Some((offsets[i as usize - 1] + j - 1) as i32)
    };
    for i in 1..=n {
        let x = xs[i as usize - 1];
        for j in 1..=width(i) {
            let sij = s(i, j).expect("in range");
            // prefix count >= j  =>  s(i, j)
            match s(i - 1, j - 1) {
                None => formula.add_clause(&[-x, sij])?, // j == 1
                Some(prev) => formula.add_clause(&[-x, -prev, sij])?,
            }
            if let Some(carry) = s(i - 1, j) {
                formula.add_clause(&[-carry, sij])?;
            }
            // s(i, j)  =>  prefix count >= j
            match (s(i - 1, j), s(i - 1, j - 1)) {
                (Some(carry), Some(prev)) => {
                    formula.add_clause(&[-sij, carry, x])?;
                    formula.add_clause(&[-sij, carry, prev])?;
                }
                (Some(carry), None) => {
                    // j == 1: s(i-1, 0) is constant true.
                    formula.add_clause(&[-sij, carry, x])?;
                }
                (None, Some(prev)) => {
                    // j == i: s(i-1, j) is constant false.
                    formula.add_clause(&[-sij, x])?;
                    formula.add_clause(&[-sij, prev])?;
                }
                (None, None) => {
                    // i == j == 1.
                    formula.add_clause(&[-sij, x])?;
                }
            }
        }
    }
    formula.add_clause(&[s(n, k).expect("k <= n")])?;
    if let Some(cap) = s(n, jmax) {
        formula.add_clause(&[-cap])?;
    }
    Ok(())
}

/// Constrains, for each full subgrid and color, the number of true
/// first-row classes to the distribution entry, with sequential counters.
pub fn add_distribution_constraints(
    formula: &mut CnfFormula,
    vm: &mut VarMap,
    d: &DistributionSet,
) -> Result<(), EncodeError> {
    if !vm.merged {
        return Err(EncodeError::NotMergedMap);
    }
    let layout = vm.layout.expect("merged maps carry a layout");
    let spec = vm.spec;
    let z = layout.subgrid;
    let (x, y) = (layout.band_rows(spec), layout.band_cols(spec));
    if d.x() != x || d.y() != y || d.z() != z || d.colors() != spec.colors {
        return Err(EncodeError::DistributionShape(d.x(), d.y(), d.z(), d.colors()));
    }
    let mut seen: HashSet<(Vec<i32>, u32)> = HashSet::new();
    for bi in 0..x {
        for bj in 0..y {
            for color in 1..=spec.colors {
                let lits: Vec<i32> = (0..z).map(|q| vm.var(bi * z, bj * z + q, color)).collect();
                let target = d.entry(color, bi, bj);
                let mut key = lits.clone();
                key.sort_unstable();
                if !seen.insert((key, target)) {
                    continue; // midgrid/diagonal copies share classes
                }
                add_exactly_k(formula, vm, &lits, target)?;
            }
        }
    }
    Ok(())
}

/// Appends one clause forbidding every coloring that decodes identically to
/// `c`: the negated true literal of each variable class. Auxiliary
/// variables are never mentioned, so enumeration counts colorings.
pub fn add_blocking_clause(
    formula: &mut CnfFormula,
    vm: &VarMap,
    c: &Coloring,
) -> Result<(), EncodeError> {
    let lits = blocking_clause(vm, c)?;
    formula.add_clause(&lits)?;
    Ok(())
}

pub(crate) fn blocking_clause(vm: &VarMap, c: &Coloring) -> Result<Vec<i32>, EncodeError> {
    let spec = vm.spec;
    // Merged cells must agree before we block on class literals.
    for (cell, &class) in vm.classes.class_of.iter().enumerate() {
        let rep = vm.rep_cell[class as usize] as usize;
        if c.cells()[cell] != c.cells()[rep] {
            return Err(EncodeError::InconsistentWithClasses(
                rep / spec.cols,
                rep % spec.cols,
                cell / spec.cols,
                cell % spec.cols,
            ));
        }
    }
    Ok((0..vm.num_classes())
        .map(|class| {
            let rep = vm.rep_cell[class] as usize;
            -vm.class_var(class, c.cells()[rep] as usize)
        })
        .collect())
}

/// Reads a coloring out of a model: per cell, the unique color whose mapped
/// variable is true.
pub fn decode_model(
    model: &Assignment,
    vm: &VarMap,
    spec: GridSpec,
) -> Result<Coloring, EncodeError> {
    let mut cells = Vec::with_capacity(spec.cell_count());
    for i in 0..spec.rows {
        for j in 0..spec.cols {
            let mut found: Option<usize> = None;
            let mut count = 0;
            for c in 1..=spec.colors {
                if model.get(vm.var(i, j, c) as u32) {
                    count += 1;
                    found = Some(c);
                }
            }
            match (count, found) {
                (1, Some(c)) => cells.push(c as u8),
                (0, _) => return Err(EncodeError::DecodeNoColor(i, j)),
                (n, _) => return Err(EncodeError::DecodeMultiColor(i, j, n)),
            }
        }
    }
    Ok(Coloring::new(spec, cells)?)
}

/// Decodes an external-solver model with only the sidecar map text, for use
/// when the encoding VarMap is no longer in memory.
pub fn decode_with_map(map_text: &str, model: &Assignment) -> Result<Coloring, EncodeError> {
    let mut entries: Vec<(u32, usize, usize, usize)> = Vec::new();
    let (mut rows, mut cols, mut colors) = (0usize, 0usize, 0usize);
    for line in map_text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| EncodeError::MapParse(format!("bad token {t:?}"))))
            .collect::<Result<_, _>>()?;
        let [var, i, j, c] = nums[..] else {
            return Err(EncodeError::MapParse(format!("expected 4 fields: {line:?}")));
        };
        if var == 0 || i == 0 || j == 0 || c == 0 {
            return Err(EncodeError::MapParse(format!("fields must be positive: {line:?}")));
        }
        rows = rows.max(i);
        cols = cols.max(j);
        colors = colors.max(c);
        entries.push((var as u32, i - 1, j - 1, c));
    }
    let spec = GridSpec::new(rows, cols, colors)?;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); spec.cell_count()];
    for (var, i, j, c) in entries {
        if model.get(var) {
            cells[i * cols + j].push(c);
        }
    }
    let mut out = Vec::with_capacity(spec.cell_count());
    for (idx, colors_here) in cells.iter().enumerate() {
        match colors_here.as_slice() {
            [c] => out.push(*c as u8),
            [] => return Err(EncodeError::DecodeNoColor(idx / cols, idx % cols)),
            many => return Err(EncodeError::DecodeMultiColor(idx / cols, idx % cols, many.len())),
        }
    }
    Ok(Coloring::new(spec, out)?)
}
