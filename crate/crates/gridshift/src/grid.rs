//! Grid and coloring domain types, the rectangle oracle, and the
//! isomorphism-group action on colorings.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid dimensions and color count must be at least 1")]
    EmptySpec,
    #[error("color count {0} exceeds the supported maximum of 255")]
    TooManyColors(usize),
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell value {value} out of range 1..={colors}")]
    ColorOutOfRange { value: usize, colors: usize },
    #[error("specs differ: {0} vs {1}")]
    SpecMismatch(GridSpec, GridSpec),
    #[error("invalid isomorphism element: {0}")]
    BadIsoElement(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Problem dimensions: an m×n grid colored with colors 1..=k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub colors: usize,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, colors: usize) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 || colors == 0 {
            return Err(GridError::EmptySpec);
        }
        if colors > 255 {
            return Err(GridError::TooManyColors(colors));
        }
        Ok(GridSpec { rows, cols, colors })
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} grid, {} colors", self.rows, self.cols, self.colors)
    }
}

/// An assignment of colors 1..=k to every cell, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coloring {
    spec: GridSpec,
    cells: Vec<u8>,
}

impl Coloring {
    pub fn new(spec: GridSpec, cells: Vec<u8>) -> Result<Self, GridError> {
        if cells.len() != spec.cell_count() {
            return Err(GridError::CellCount {
                expected: spec.cell_count(),
                got: cells.len(),
            });
        }
        for &v in &cells {
            if v == 0 || v as usize > spec.colors {
                return Err(GridError::ColorOutOfRange {
                    value: v as usize,
                    colors: spec.colors,
                });
            }
        }
        Ok(Coloring { spec, cells })
    }

    /// Constant coloring in the given color.
    pub fn constant(spec: GridSpec, color: u8) -> Result<Self, GridError> {
        Coloring::new(spec, vec![color; spec.cell_count()])
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Color at (row, col), 0-based indices.
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.spec.cols + col]
    }

    /// Parses the text format: first line "m n k", then m lines of n
    /// space-separated integers in 1..=k.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GridError::Parse("empty input".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| GridError::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_, _>>()?;
        let [m, n, k] = nums[..] else {
            return Err(GridError::Parse("header must be \"m n k\"".into()));
        };
        let spec = GridSpec::new(m, n, k)?;
        let mut cells = Vec::with_capacity(spec.cell_count());
        for _ in 0..m {
            let line = lines.next().ok_or_else(|| GridError::Parse("missing grid row".into()))?;
            let row: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| GridError::Parse(format!("bad cell token {t:?}"))))
                .collect::<Result<_, _>>()?;
            if row.len() != n {
                return Err(GridError::Parse(format!("expected {n} cells per row, got {}", row.len())));
            }
            for v in row {
                if v == 0 || v > k {
                    return Err(GridError::ColorOutOfRange { value: v, colors: k });
                }
                cells.push(v as u8);
            }
        }
        Coloring::new(spec, cells)
    }

    /// Writes the text format read by [`Coloring::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.spec.rows, self.spec.cols, self.spec.colors);
        for r in 0..self.spec.rows {
            let row: Vec<String> = (0..self.spec.cols).map(|c| self.at(r, c).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Four cells at the intersections of two rows and two columns, all sharing
/// one color. Coordinates are 1-based, matching the text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectangleWitness {
    pub row1: usize,
    pub row2: usize,
    pub col1: usize,
    pub col2: usize,
    pub color: u8,
}

impl fmt::Display for RectangleWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rows ({}, {}), cols ({}, {}), color {}",
            self.row1, self.row2, self.col1, self.col2, self.color
        )
    }
}

/// Bitset-based monochromatic rectangle search.
///
/// For each color, every row becomes a bitset of that color's columns; a
/// rectangle exists iff some row pair intersects in two or more columns.
/// Work is O(k·m²·⌈n/64⌉).
pub fn find_monochromatic_rectangle(c: &Coloring) -> Option<RectangleWitness> {
    let spec = c.spec();
    let words = spec.cols.div_ceil(64);
    let mut rows: Vec<u64> = vec![0; spec.rows * words];
    for color in 1..=spec.colors as u8 {
        rows.iter_mut().for_each(|w| *w = 0);
        for r in 0..spec.rows {
            for col in 0..spec.cols {
                if c.at(r, col) == color {
                    rows[r * words + col / 64] |= 1u64 << (col % 64);
                }
            }
        }
        for r1 in 0..spec.rows {
            for r2 in r1 + 1..spec.rows {
                let a = &rows[r1 * words..(r1 + 1) * words];
                let b = &rows[r2 * words..(r2 + 1) * words];
                let mut seen: Option<usize> = None;
                for w in 0..words {
                    let mut inter = a[w] & b[w];
                    while inter != 0 {
                        let col = w * 64 + inter.trailing_zeros() as usize;
                        match seen {
                            None => seen = Some(col),
                            Some(first) => {
                                return Some(RectangleWitness {
                                    row1: r1 + 1,
                                    row2: r2 + 1,
                                    col1: first + 1,
                                    col2: col + 1,
                                    color,
                                });
                            }
                        }
                        inter &= inter - 1;
                    }
                }
            }
        }
    }
    None
}

/// One element of the coloring-isomorphism group: row and column
/// permutations, an optional transpose (square grids only), and a color
/// permutation.
///
/// `row_perm[i]` is the source row placed at output row i (likewise for
/// columns); the transpose, when set, is applied to the input first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IsoElement {
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub transpose: bool,
    pub color_perm: Vec<u8>,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &v in p {
        if v >= p.len() || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

impl IsoElement {
    pub fn identity(spec: GridSpec) -> Self {
        IsoElement {
            row_perm: (0..spec.rows).collect(),
            col_perm: (0..spec.cols).collect(),
            transpose: false,
            color_perm: (1..=spec.colors as u8).collect(),
        }
    }

    pub fn validate(&self, spec: GridSpec) -> Result<(), GridError> {
        if self.transpose && !spec.is_square() {
            return Err(GridError::BadIsoElement("transpose on a non-square grid".into()));
        }
        if self.row_perm.len() != spec.rows || !is_permutation(&self.row_perm) {
            return Err(GridError::BadIsoElement("row_perm is not a permutation of the rows".into()));
        }
        if self.col_perm.len() != spec.cols || !is_permutation(&self.col_perm) {
            return Err(GridError::BadIsoElement("col_perm is not a permutation of the columns".into()));
        }
        let cp: Vec<usize> = self.color_perm.iter().map(|&c| c as usize - 1).collect();
        if self.color_perm.len() != spec.colors || self.color_perm.contains(&0) || !is_permutation(&cp) {
            return Err(GridError::BadIsoElement("color_perm is not a permutation of 1..=k".into()));
        }
        Ok(())
    }

    /// g · h: the element acting like `apply_isomorphism(apply_isomorphism(c, g), h)`.
    pub fn compose(&self, h: &IsoElement) -> IsoElement {
        let g = self;
        if h.transpose {
            IsoElement {
                row_perm: h.row_perm.iter().map(|&i| g.col_perm[i]).collect(),
                col_perm: h.col_perm.iter().map(|&j| g.row_perm[j]).collect(),
                transpose: !g.transpose,
                color_perm: g.color_perm.iter().map(|&c| h.color_perm[c as usize - 1]).collect(),
            }
        } else {
            IsoElement {
                row_perm: h.row_perm.iter().map(|&i| g.row_perm[i]).collect(),
                col_perm: h.col_perm.iter().map(|&j| g.col_perm[j]).collect(),
                transpose: g.transpose,
                color_perm: g.color_perm.iter().map(|&c| h.color_perm[c as usize - 1]).collect(),
            }
        }
    }
}

/// Applies a group element to a coloring. Rectangle-freeness is preserved.
pub fn apply_isomorphism(c: &Coloring, g: &IsoElement) -> Result<Coloring, GridError> {
    let spec = c.spec();
    g.validate(spec)?;
    let (rows, cols) = (spec.rows, spec.cols);
    let mut cells = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (si, sj) = (g.row_perm[i], g.col_perm[j]);
            let v = if g.transpose { c.at(sj, si) } else { c.at(si, sj) };
            cells.push(g.color_perm[v as usize - 1]);
        }
    }
    Coloring::new(spec, cells)
}
