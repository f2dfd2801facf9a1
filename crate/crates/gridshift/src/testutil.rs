//! Shared helpers for unit tests. Oracles here are intentionally naive and
//! independent of the implementation paths they check.

use rand::Rng;

use crate::grid::{Coloring, GridSpec, IsoElement, RectangleWitness};

/// The three known representatives of the 4×4 2-coloring classes.
pub fn known_4x4_representatives() -> [Coloring; 3] {
    let spec = GridSpec::new(4, 4, 2).unwrap();
    let a = Coloring::new(spec, vec![1, 2, 2, 1, 1, 2, 1, 2, 2, 1, 2, 2, 2, 1, 1, 1]).unwrap();
    let b = Coloring::new(spec, vec![1, 2, 2, 1, 1, 2, 1, 2, 1, 1, 2, 2, 2, 1, 1, 1]).unwrap();
    let c = Coloring::new(spec, vec![1, 2, 1, 2, 1, 1, 2, 2, 2, 1, 2, 1, 2, 2, 1, 1]).unwrap();
    [a, b, c]
}

/// Quadruple-loop rectangle oracle.
pub fn quad_loop_rectangle(c: &Coloring) -> Option<RectangleWitness> {
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
                            return Some(RectangleWitness {
                                row1: r1 + 1,
                                row2: r2 + 1,
                                col1: c1 + 1,
                                col2: c2 + 1,
                                color,
                            });
                        }
                    }
                }
            }
        }
    }
    None
}

pub fn random_coloring(rng: &mut impl Rng, spec: GridSpec) -> Coloring {
    let cells = (0..spec.cell_count())
        .map(|_| rng.gen_range(1..=spec.colors as u8))
        .collect();
    Coloring::new(spec, cells).unwrap()
}

pub fn random_iso(rng: &mut impl Rng, spec: GridSpec) -> IsoElement {
    let mut perm = |n: usize| {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            p.swap(i, rng.gen_range(0..=i));
        }
        p
    };
    let row_perm = perm(spec.rows);
    let col_perm = perm(spec.cols);
    let color_perm: Vec<u8> = perm(spec.colors).into_iter().map(|v| v as u8 + 1).collect();
    let transpose = spec.is_square() && rng.gen_bool(0.5);
    IsoElement { row_perm, col_perm, transpose, color_perm }
}

/// All rectangle-free colorings of a spec by exhaustive enumeration over
/// k^(m·n) assignments, checked with the quadruple-loop oracle.
pub fn brute_force_rectangle_free(spec: GridSpec) -> Vec<Coloring> {
    let n = spec.cell_count();
    let k = spec.colors as u8;
    let mut out = Vec::new();
    let mut cells = vec![1u8; n];
    loop {
        let c = Coloring::new(spec, cells.clone()).unwrap();
        if quad_loop_rectangle(&c).is_none() {
            out.push(c);
        }
        // odometer increment
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
