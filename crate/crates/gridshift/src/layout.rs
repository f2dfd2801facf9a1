//! Shift-pattern layouts: subgrid tiling, midgrids, partial bands, diagonal
//! equality, the conformance check, and per-subgrid color-count extraction.
//!
//! Conventions (0-based, subgrid-relative): a left shift means
//! `value(p, q) = value(0, (q + p) mod z)`, a right shift means
//! `value(p, q) = value(0, (q - p) mod z)`; row p of a subgrid is the first
//! row rotated by p positions. Midgrids repeat the same relation one level
//! up, with whole subgrids as the units.

use thiserror::Error;

use crate::dist::DistributionSet;
use crate::grid::{Coloring, GridSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("subgrid size must be at least 2")]
    SubgridTooSmall,
    #[error("partial rows/cols must be smaller than the subgrid size")]
    PartialTooLarge,
    #[error("midgrid size {0} is not a positive multiple of the subgrid size")]
    MidgridNotMultiple(usize),
    #[error("midgrid size {0} does not fit in the grid")]
    MidgridTooLarge(usize),
    #[error("partial rows/cols exceed the leftover band ({0} available)")]
    PartialExceedsLeftover(usize),
    #[error("grid {0}x{1} is not divisible into {2}-subgrids")]
    NonDivisibleGrid(usize, usize, usize),
    #[error("color count in subgrid ({0}, {1}) is not divisible by the subgrid size; not a shift coloring")]
    CountNotDivisible(usize, usize),
    #[error("merged classes require a single shift direction, not selector-both")]
    MergedNeedsSingleDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftDirection {
    Left,
    Right,
    /// Each subgrid (and each midgrid) independently satisfies a left or a
    /// right shift.
    SelectorBoth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DiagonalMode {
    #[default]
    None,
    /// Subgrids (i, i) carry the same coloring as subgrid (0, 0).
    Diagonal,
    /// Subgrids (i, last-i) carry the same coloring as subgrid (0, last).
    AntiDiagonal,
    Both,
}

/// A shift-pattern layout. Subgrids tile the upper-left ⌊m/z⌋z × ⌊n/z⌋z
/// region; leftover rows and columns are unconstrained unless
/// `partial_rows`/`partial_cols` continue the pattern as if the grid
/// extended to the next multiple of z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternLayout {
    pub subgrid: usize,
    pub direction: ShiftDirection,
    pub midgrid: Option<usize>,
    pub partial_rows: usize,
    pub partial_cols: usize,
    pub diagonal_equal: DiagonalMode,
}

impl PatternLayout {
    pub fn new(subgrid: usize, direction: ShiftDirection) -> Result<Self, LayoutError> {
        if subgrid < 2 {
            return Err(LayoutError::SubgridTooSmall);
        }
        Ok(PatternLayout {
            subgrid,
            direction,
            midgrid: None,
            partial_rows: 0,
            partial_cols: 0,
            diagonal_equal: DiagonalMode::None,
        })
    }

    pub fn with_midgrid(mut self, midgrid: usize) -> Self {
        self.midgrid = Some(midgrid);
        self
    }

    pub fn with_partial(mut self, rows: usize, cols: usize) -> Self {
        self.partial_rows = rows;
        self.partial_cols = cols;
        self
    }

    pub fn with_diagonal(mut self, mode: DiagonalMode) -> Self {
        self.diagonal_equal = mode;
        self
    }

    pub fn validate(&self, spec: GridSpec) -> Result<(), LayoutError> {
        let z = self.subgrid;
        if z < 2 {
            return Err(LayoutError::SubgridTooSmall);
        }
        if self.partial_rows >= z || self.partial_cols >= z {
            return Err(LayoutError::PartialTooLarge);
        }
        if let Some(mid) = self.midgrid {
            if mid == 0 || mid % z != 0 {
                return Err(LayoutError::MidgridNotMultiple(mid));
            }
            if mid > spec.rows.min(spec.cols) {
                return Err(LayoutError::MidgridTooLarge(mid));
            }
        }
        let leftover_rows = spec.rows - self.tiled_rows(spec);
        if self.partial_rows > leftover_rows {
            return Err(LayoutError::PartialExceedsLeftover(leftover_rows));
        }
        let leftover_cols = spec.cols - self.tiled_cols(spec);
        if self.partial_cols > leftover_cols {
            return Err(LayoutError::PartialExceedsLeftover(leftover_cols));
        }
        Ok(())
    }

    /// Number of full subgrid bands vertically.
    pub fn band_rows(&self, spec: GridSpec) -> usize {
        spec.rows / self.subgrid
    }

    pub fn band_cols(&self, spec: GridSpec) -> usize {
        spec.cols / self.subgrid
    }

    pub fn tiled_rows(&self, spec: GridSpec) -> usize {
        self.band_rows(spec) * self.subgrid
    }

    pub fn tiled_cols(&self, spec: GridSpec) -> usize {
        self.band_cols(spec) * self.subgrid
    }

    fn shift_options(&self) -> &'static [Shift] {
        match self.direction {
            ShiftDirection::Left => &[Shift::Left],
            ShiftDirection::Right => &[Shift::Right],
            ShiftDirection::SelectorBoth => &[Shift::Left, Shift::Right],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Shift {
    Left,
    Right,
}

impl Shift {
    /// First-row column that cell (p, q) of a subgrid copies, mod z.
    pub(crate) fn source_col(self, p: usize, q: usize, z: usize) -> usize {
        match self {
            Shift::Left => (q + p) % z,
            Shift::Right => (q + z - p % z) % z,
        }
    }

    pub(crate) fn from_direction(dir: ShiftDirection) -> Result<Self, LayoutError> {
        match dir {
            ShiftDirection::Left => Ok(Shift::Left),
            ShiftDirection::Right => Ok(Shift::Right),
            ShiftDirection::SelectorBoth => Err(LayoutError::MergedNeedsSingleDirection),
        }
    }
}

/// True iff the coloring satisfies every shift relation the layout imposes:
/// full subgrids, partial bands, midgrid level, and diagonal-equality
/// classes.
pub fn matches_layout(c: &Coloring, layout: &PatternLayout) -> Result<bool, LayoutError> {
    let spec = c.spec();
    layout.validate(spec)?;
    let z = layout.subgrid;
    let bands_r = layout.band_rows(spec);
    let bands_c = layout.band_cols(spec);

    // A (possibly truncated) subgrid with top-left (r0, c0) and real extent
    // rows×cols satisfies a shift iff cells sharing a first-row source
    // column are constant.
    let subgrid_ok = |r0: usize, c0: usize, rows: usize, cols: usize, shift: Shift| -> bool {
        for key in 0..z {
            let mut value: Option<u8> = None;
            for p in 0..rows {
                for q in 0..cols {
                    if shift.source_col(p, q, z) != key {
                        continue;
                    }
                    let v = c.at(r0 + p, c0 + q);
                    match value {
                        None => value = Some(v),
                        Some(prev) if prev != v => return false,
                        Some(_) => {}
                    }
                }
            }
        }
        true
    };

    let subgrid_matches = |r0: usize, c0: usize, rows: usize, cols: usize| -> bool {
        layout
            .shift_options()
            .iter()
            .any(|&s| subgrid_ok(r0, c0, rows, cols, s))
    };

    for bi in 0..bands_r {
        for bj in 0..bands_c {
            if !subgrid_matches(bi * z, bj * z, z, z) {
                return Ok(false);
            }
        }
    }
    if layout.partial_rows > 0 {
        let r0 = bands_r * z;
        for bj in 0..bands_c {
            if !subgrid_matches(r0, bj * z, layout.partial_rows, z) {
                return Ok(false);
            }
        }
        if layout.partial_cols > 0
            && !subgrid_matches(r0, bands_c * z, layout.partial_rows, layout.partial_cols)
        {
            return Ok(false);
        }
    }
    if layout.partial_cols > 0 {
        let c0 = bands_c * z;
        for bi in 0..bands_r {
            if !subgrid_matches(bi * z, c0, z, layout.partial_cols) {
                return Ok(false);
            }
        }
    }

    if let Some(mid) = layout.midgrid {
        let w = mid / z;
        let subgrids_equal = |a: (usize, usize), b: (usize, usize)| -> bool {
            (0..z).all(|p| (0..z).all(|q| c.at(a.0 * z + p, a.1 * z + q) == c.at(b.0 * z + p, b.1 * z + q)))
        };
        let midgrid_ok = |a: usize, b: usize, shift: Shift| -> bool {
            for pp in 1..w {
                for qq in 0..w {
                    let src = shift.source_col(pp, qq, w);
                    if !subgrids_equal((a * w + pp, b * w + qq), (a * w, b * w + src)) {
                        return false;
                    }
                }
            }
            true
        };
        for a in 0..bands_r / w {
            for b in 0..bands_c / w {
                if !layout.shift_options().iter().any(|&s| midgrid_ok(a, b, s)) {
                    return Ok(false);
                }
            }
        }
    }

    if layout.diagonal_equal != DiagonalMode::None {
        let subgrids_equal = |a: (usize, usize), b: (usize, usize)| -> bool {
            (0..z).all(|p| (0..z).all(|q| c.at(a.0 * z + p, a.1 * z + q) == c.at(b.0 * z + p, b.1 * z + q)))
        };
        let len = bands_r.min(bands_c);
        if matches!(layout.diagonal_equal, DiagonalMode::Diagonal | DiagonalMode::Both) {
            for i in 1..len {
                if !subgrids_equal((i, i), (0, 0)) {
                    return Ok(false);
                }
            }
        }
        if matches!(layout.diagonal_equal, DiagonalMode::AntiDiagonal | DiagonalMode::Both) {
            for i in 1..len {
                if !subgrids_equal((i, bands_c - 1 - i), (0, bands_c - 1)) {
                    return Ok(false);
                }
            }
        }
    }

    Ok(true)
}

/// Per-subgrid color counts divided by z, for fully tiled shift colorings.
///
/// The caller is responsible for `matches_layout`; a count that is not
/// divisible by z signals a non-shift coloring and is reported as an error.
pub fn extract_distribution(c: &Coloring, layout: &PatternLayout) -> Result<DistributionSet, LayoutError> {
    let spec = c.spec();
    layout.validate(spec)?;
    let z = layout.subgrid;
    if spec.rows % z != 0 || spec.cols % z != 0 {
        return Err(LayoutError::NonDivisibleGrid(spec.rows, spec.cols, z));
    }
    let (x, y) = (spec.rows / z, spec.cols / z);
    let k = spec.colors;
    let mut matrices = vec![vec![0u32; x * y]; k];
    for i in 0..x {
        for j in 0..y {
            let mut counts = vec![0usize; k + 1];
            for p in 0..z {
                for q in 0..z {
                    counts[c.at(i * z + p, j * z + q) as usize] += 1;
                }
            }
            for color in 1..=k {
                if counts[color] % z != 0 {
                    return Err(LayoutError::CountNotDivisible(i, j));
                }
                matrices[color - 1][i * y + j] = (counts[color] / z) as u32;
            }
        }
    }
    Ok(DistributionSet::new(x, y, z, k, matrices).expect("counts/z cannot exceed z"))
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (ra, rb) = if self.rank[ra as usize] < self.rank[rb as usize] { (rb, ra) } else { (ra, rb) };
        self.parent[rb as usize] = ra;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[ra as usize] += 1;
        }
    }
}

/// Partition of the real cells into merged-variable classes under the
/// layout's shift relations (single direction only).
#[derive(Debug, Clone)]
pub struct CellClasses {
    /// Real cell (row-major) → class index, classes numbered by their
    /// smallest member cell.
    pub class_of: Vec<u32>,
    pub num_classes: usize,
}

impl CellClasses {
    /// Trivial partition: every cell its own class.
    pub fn discrete(spec: GridSpec) -> Self {
        CellClasses {
            class_of: (0..spec.cell_count() as u32).collect(),
            num_classes: spec.cell_count(),
        }
    }
}

/// Computes the merged cell classes for a single-direction layout: within
/// each subgrid only the first row is free, midgrids merge whole subgrids,
/// diagonal modes identify diagonal subgrids, and partial bands extend the
/// relation onto a virtual grid truncated at the real boundary.
pub fn merged_cell_classes(spec: GridSpec, layout: &PatternLayout) -> Result<CellClasses, LayoutError> {
    layout.validate(spec)?;
    let shift = Shift::from_direction(layout.direction)?;
    let z = layout.subgrid;
    let bands_r = layout.band_rows(spec);
    let bands_c = layout.band_cols(spec);
    let virt_bands_r = bands_r + usize::from(layout.partial_rows > 0);
    let virt_bands_c = bands_c + usize::from(layout.partial_cols > 0);
    // Virtual grid: large enough for all real cells plus any partial
    // subgrids completed to full size.
    let virt_rows = spec.rows.max(virt_bands_r * z);
    let virt_cols = spec.cols.max(virt_bands_c * z);
    let cell = |r: usize, c: usize| (r * virt_cols + c) as u32;

    let mut uf = UnionFind::new(virt_rows * virt_cols);
    for bi in 0..virt_bands_r {
        for bj in 0..virt_bands_c {
            let (r0, c0) = (bi * z, bj * z);
            for p in 1..z {
                for q in 0..z {
                    let src = shift.source_col(p, q, z);
                    uf.union(cell(r0 + p, c0 + q), cell(r0, c0 + src));
                }
            }
        }
    }
    if let Some(mid) = layout.midgrid {
        let w = mid / z;
        for a in 0..bands_r / w {
            for b in 0..bands_c / w {
                for pp in 1..w {
                    for qq in 0..w {
                        let src = shift.source_col(pp, qq, w);
                        let (ti, tj) = ((a * w + pp) * z, (b * w + qq) * z);
                        let (si, sj) = (a * w * z, (b * w + src) * z);
                        for p in 0..z {
                            for q in 0..z {
                                uf.union(cell(ti + p, tj + q), cell(si + p, sj + q));
                            }
                        }
                    }
                }
            }
        }
    }
    let len = bands_r.min(bands_c);
    if matches!(layout.diagonal_equal, DiagonalMode::Diagonal | DiagonalMode::Both) {
        for i in 1..len {
            for p in 0..z {
                for q in 0..z {
                    uf.union(cell(i * z + p, i * z + q), cell(p, q));
                }
            }
        }
    }
    if matches!(layout.diagonal_equal, DiagonalMode::AntiDiagonal | DiagonalMode::Both) {
        for i in 1..len {
            for p in 0..z {
                for q in 0..z {
                    uf.union(cell(i * z + p, (bands_c - 1 - i) * z + q), cell(p, (bands_c - 1) * z + q));
                }
            }
        }
    }

    // Compact: classes ordered by their smallest real member.
    let mut first_real: Vec<u32> = vec![u32::MAX; virt_rows * virt_cols];
    let mut roots_in_order: Vec<u32> = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let idx = (r * spec.cols + c) as u32;
            let root = uf.find(cell(r, c));
            if first_real[root as usize] == u32::MAX {
                first_real[root as usize] = idx;
                roots_in_order.push(root);
            }
        }
    }
    let mut class_id: Vec<u32> = vec![u32::MAX; virt_rows * virt_cols];
    for (id, &root) in roots_in_order.iter().enumerate() {
        class_id[root as usize] = id as u32;
    }
    let mut class_of = vec![0u32; spec.cell_count()];
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let root = uf.find(cell(r, c));
            class_of[r * spec.cols + c] = class_id[root as usize];
        }
    }
    Ok(CellClasses { class_of, num_classes: roots_in_order.len() })
}

/// Materializes a coloring from one color per merged class.
pub(crate) fn coloring_from_classes(
    spec: GridSpec,
    classes: &CellClasses,
    class_colors: &[u8],
) -> Coloring {
    let cells: Vec<u8> = classes.class_of.iter().map(|&cl| class_colors[cl as usize]).collect();
    Coloring::new(spec, cells).expect("class colors in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_coloring;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 4×4 right-shift schematic: each row is the previous rotated right.
    fn schematic_4x4() -> Coloring {
        let spec = GridSpec::new(4, 4, 4).unwrap();
        Coloring::new(spec, vec![1, 2, 3, 4, 4, 1, 2, 3, 3, 4, 1, 2, 2, 3, 4, 1]).unwrap()
    }

    #[test]
    fn schematic_matches_right_shift() {
        let layout = PatternLayout::new(4, ShiftDirection::Right).unwrap();
        assert!(matches_layout(&schematic_4x4(), &layout).unwrap());
        let left = PatternLayout::new(4, ShiftDirection::Left).unwrap();
        assert!(!matches_layout(&schematic_4x4(), &left).unwrap());
        let both = PatternLayout::new(4, ShiftDirection::SelectorBoth).unwrap();
        assert!(matches_layout(&schematic_4x4(), &both).unwrap());
    }

    #[test]
    fn constant_coloring_matches_everything() {
        let spec = GridSpec::new(6, 6, 3).unwrap();
        let c = Coloring::constant(spec, 2).unwrap();
        for dir in [ShiftDirection::Left, ShiftDirection::Right, ShiftDirection::SelectorBoth] {
            let layout = PatternLayout::new(3, dir)
                .unwrap()
                .with_midgrid(6)
                .with_diagonal(DiagonalMode::Both);
            assert!(matches_layout(&c, &layout).unwrap());
        }
        let layout = PatternLayout::new(4, ShiftDirection::Left).unwrap().with_partial(2, 2);
        assert!(matches_layout(&c, &layout).unwrap());
    }

    #[test]
    fn any_single_mutation_breaks_the_schematic() {
        let base = schematic_4x4();
        let layout = PatternLayout::new(4, ShiftDirection::Right).unwrap();
        for idx in 0..16 {
            for color in 1..=4u8 {
                if color == base.cells()[idx] {
                    continue;
                }
                let mut cells = base.cells().to_vec();
                cells[idx] = color;
                let mutated = Coloring::new(base.spec(), cells).unwrap();
                assert!(!matches_layout(&mutated, &layout).unwrap(), "mutation at {idx} undetected");
            }
        }
    }

    #[test]
    fn selector_both_accepts_mixed_directions() {
        // Two 3-subgrids side by side: one left-shifted, one right-shifted.
        let spec = GridSpec::new(3, 6, 3).unwrap();
        #[rustfmt::skip]
        let cells = vec![
            1, 2, 3,  1, 2, 3,
            2, 3, 1,  3, 1, 2,
            3, 1, 2,  2, 3, 1,
        ];
        let c = Coloring::new(spec, cells).unwrap();
        let both = PatternLayout::new(3, ShiftDirection::SelectorBoth).unwrap();
        assert!(matches_layout(&c, &both).unwrap());
        let left = PatternLayout::new(3, ShiftDirection::Left).unwrap();
        assert!(!matches_layout(&c, &left).unwrap());
        let right = PatternLayout::new(3, ShiftDirection::Right).unwrap();
        assert!(!matches_layout(&c, &right).unwrap());
    }

    #[test]
    fn merged_classes_respect_the_relation() {
        let spec = GridSpec::new(10, 10, 3).unwrap();
        let layout = PatternLayout::new(4, ShiftDirection::Left).unwrap();
        let classes = merged_cell_classes(spec, &layout).unwrap();
        // 4 full subgrids keep 4 cells each; 10·10 − 8·8 = 36 leftover cells
        // stay discrete.
        assert_eq!(classes.num_classes, 16 + 36);
        // Random colorings built from classes always match the layout.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let colors: Vec<u8> = (0..classes.num_classes).map(|_| rng.gen_range(1..=3)).collect();
            let c = coloring_from_classes(spec, &classes, &colors);
            assert!(matches_layout(&c, &layout).unwrap());
        }
    }

    #[test]
    fn midgrid_classes_and_conformance() {
        let spec = GridSpec::new(18, 18, 4).unwrap();
        let layout = PatternLayout::new(3, ShiftDirection::Right).unwrap().with_midgrid(9);
        let classes = merged_cell_classes(spec, &layout).unwrap();
        // Per 9-midgrid: first subgrid row of 3 subgrids × 3 free cells.
        assert_eq!(classes.num_classes, 4 * 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let colors: Vec<u8> = (0..classes.num_classes).map(|_| rng.gen_range(1..=4)).collect();
            let c = coloring_from_classes(spec, &classes, &colors);
            assert!(matches_layout(&c, &layout).unwrap());
            // Perturbing one non-representative cell must break conformance.
            let mut cells = c.cells().to_vec();
            cells[17 * 18 + 17] = if cells[17 * 18 + 17] == 1 { 2 } else { 1 };
            let bad = Coloring::new(spec, cells).unwrap();
            assert!(!matches_layout(&bad, &layout).unwrap());
        }
    }

    #[test]
    fn partial_rows_continue_the_pattern() {
        let spec = GridSpec::new(6, 4, 2).unwrap();
        let layout = PatternLayout::new(4, ShiftDirection::Right).unwrap().with_partial(2, 0);
        let classes = merged_cell_classes(spec, &layout).unwrap();
        // Full subgrid: 4 classes; partial band rows 4..6: first row fresh
        // (4 classes), second row merged into it.
        assert_eq!(classes.num_classes, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let colors: Vec<u8> = (0..classes.num_classes).map(|_| rng.gen_range(1..=2)).collect();
        let c = coloring_from_classes(spec, &classes, &colors);
        assert!(matches_layout(&c, &layout).unwrap());
        // Row 5 must be row 4 rotated right by one.
        for q in 0..4 {
            assert_eq!(c.at(5, q), c.at(4, (q + 3) % 4));
        }
        // Without the partial flag the same coloring also matches (fewer
        // constraints), but a mutation in row 5 only trips the partial one.
        let mut cells = c.cells().to_vec();
        cells[5 * 4] = if cells[5 * 4] == 1 { 2 } else { 1 };
        let bad = Coloring::new(spec, cells).unwrap();
        let plain = PatternLayout::new(4, ShiftDirection::Right).unwrap();
        assert!(matches_layout(&bad, &plain).unwrap());
        assert!(!matches_layout(&bad, &layout).unwrap());
    }

    #[test]
    fn partial_corner_truncates_virtual_cells() {
        // 6×6 with z=4: tiled 4×4, partial band of 2 on both sides. The
        // corner subgrid has only its 2×2 upper-left cells real.
        let spec = GridSpec::new(6, 6, 3).unwrap();
        let layout = PatternLayout::new(4, ShiftDirection::Right).unwrap().with_partial(2, 2);
        let classes = merged_cell_classes(spec, &layout).unwrap();
        let c_of = |r: usize, c: usize| classes.class_of[r * 6 + c];
        // Corner cells: (4,4),(4,5) fresh; (5,5) copies (4,4); (5,4) copies a
        // virtual first-row cell, so it keeps a class of its own.
        assert_eq!(c_of(5, 5), c_of(4, 4));
        assert_ne!(c_of(5, 4), c_of(4, 4));
        assert_ne!(c_of(5, 4), c_of(4, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let colors: Vec<u8> = (0..classes.num_classes).map(|_| rng.gen_range(1..=3)).collect();
            let c = coloring_from_classes(spec, &classes, &colors);
            assert!(matches_layout(&c, &layout).unwrap());
        }
    }

    #[test]
    fn diagonal_equality_identifies_subgrids() {
        let spec = GridSpec::new(6, 6, 3).unwrap();
        let layout = PatternLayout::new(2, ShiftDirection::Right)
            .unwrap()
            .with_diagonal(DiagonalMode::Diagonal);
        let classes = merged_cell_classes(spec, &layout).unwrap();
        // 9 subgrids × 2 classes = 18, minus 2 diagonal identifications × 2.
        assert_eq!(classes.num_classes, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let colors: Vec<u8> = (0..classes.num_classes).map(|_| rng.gen_range(1..=3)).collect();
        let c = coloring_from_classes(spec, &classes, &colors);
        assert!(matches_layout(&c, &layout).unwrap());
        for p in 0..2 {
            for q in 0..2 {
                assert_eq!(c.at(p, q), c.at(2 + p, 2 + q));
                assert_eq!(c.at(p, q), c.at(4 + p, 4 + q));
            }
        }
    }

    #[test]
    fn extraction_gives_counts_over_z() {
        // Constant coloring on a single 2×2 subgrid.
        let spec = GridSpec::new(2, 2, 3).unwrap();
        let layout = PatternLayout::new(2, ShiftDirection::Right).unwrap();
        let c = Coloring::constant(spec, 2).unwrap();
        let d = extract_distribution(&c, &layout).unwrap();
        assert_eq!(d.entry(1, 0, 0), 0);
        assert_eq!(d.entry(2, 0, 0), 2);
        assert_eq!(d.entry(3, 0, 0), 0);
    }

    #[test]
    fn extraction_sums_to_z_on_shift_colorings() {
        let spec = GridSpec::new(8, 8, 3).unwrap();
        let layout = PatternLayout::new(4, ShiftDirection::Left).unwrap();
        let classes = merged_cell_classes(spec, &layout).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..30 {
            let colors: Vec<u8> = (0..classes.num_classes).map(|_| rng.gen_range(1..=3)).collect();
            let c = coloring_from_classes(spec, &classes, &colors);
            let d = extract_distribution(&c, &layout).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let total: u32 = (1..=3).map(|col| d.entry(col, i, j)).sum();
                    assert_eq!(total, 4);
                }
            }
        }
    }

    #[test]
    fn extraction_rejects_bad_inputs() {
        let spec = GridSpec::new(5, 4, 2).unwrap();
        let layout = PatternLayout::new(4, ShiftDirection::Left).unwrap();
        let c = Coloring::constant(spec, 1).unwrap();
        assert_eq!(
            extract_distribution(&c, &layout),
            Err(LayoutError::NonDivisibleGrid(5, 4, 4))
        );
        // A non-shift coloring with a color count not divisible by z.
        let spec = GridSpec::new(2, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let layout = PatternLayout::new(2, ShiftDirection::Left).unwrap();
        let mut saw_error = false;
        for _ in 0..50 {
            let c = random_coloring(&mut rng, spec);
            match extract_distribution(&c, &layout) {
                Err(LayoutError::CountNotDivisible(..)) => saw_error = true,
                Err(e) => panic!("unexpected error {e}"),
                Ok(_) => {}
            }
        }
        assert!(saw_error);
    }

    #[test]
    fn validation_errors() {
        let spec = GridSpec::new(10, 10, 3).unwrap();
        assert!(PatternLayout::new(1, ShiftDirection::Left).is_err());
        let l = PatternLayout::new(4, ShiftDirection::Left).unwrap().with_midgrid(6);
        assert_eq!(l.validate(spec), Err(LayoutError::MidgridNotMultiple(6)));
        let l = PatternLayout::new(4, ShiftDirection::Left).unwrap().with_midgrid(12);
        assert_eq!(l.validate(spec), Err(LayoutError::MidgridTooLarge(12)));
        let l = PatternLayout::new(4, ShiftDirection::Left).unwrap().with_partial(4, 0);
        assert_eq!(l.validate(spec), Err(LayoutError::PartialTooLarge));
        let l = PatternLayout::new(5, ShiftDirection::Left).unwrap().with_partial(1, 0);
        assert_eq!(l.validate(spec), Err(LayoutError::PartialExceedsLeftover(0)));
        let l = PatternLayout::new(3, ShiftDirection::SelectorBoth).unwrap();
        assert_eq!(
            merged_cell_classes(spec, &l).unwrap_err(),
            LayoutError::MergedNeedsSingleDirection
        );
    }
}
