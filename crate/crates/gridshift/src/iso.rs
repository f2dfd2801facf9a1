//! Canonical forms and classification of colorings under the isomorphism
//! group: row and column permutations, transposition for squares, and
//! color permutations.
//!
//! The canonical form is the lexicographically minimal row-major cell
//! sequence over the orbit, with colors relabeled by first appearance (the
//! minimal relabeling for any fixed arrangement, which makes the color
//! permutation implicit). The search walks row orderings level by level,
//! keeping an ordered partition of columns refined by each placed row;
//! only candidates achieving the minimal next chunk survive a level, so
//! every surviving leaf carries the canonical sequence.

use std::collections::HashSet;

use thiserror::Error;

use crate::grid::{apply_isomorphism, Coloring, GridError, GridSpec, IsoElement};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IsoError {
    #[error("canonical search exceeded its node budget")]
    BudgetExceeded,
    #[error("colorings have mixed specs: {0} vs {1}")]
    MixedSpecs(GridSpec, GridSpec),
    #[error("no colorings to classify")]
    Empty,
    #[error("grid-to-graph conversion requires a square grid")]
    NotSquare,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// The canonical representative of a coloring's isomorphism class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalForm {
    pub spec: GridSpec,
    pub cells: Vec<u8>,
    pub iso: IsoElement,
}

impl CanonicalForm {
    pub fn coloring(&self) -> Coloring {
        Coloring::new(self.spec, self.cells.clone()).expect("canonical cells are well-formed")
    }
}

const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

#[derive(Clone)]
struct State {
    row_order: Vec<usize>,
    remaining: Vec<usize>,
    /// Ordered partition of columns; all columns in one group agree on
    /// every placed row.
    groups: Vec<Vec<usize>>,
    /// Original color (index c-1) → assigned label, 0 while unassigned.
    relabel: Vec<u8>,
    next_label: u8,
}

struct Matrix {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
}

impl Matrix {
    fn at(&self, r: usize, c: usize) -> u8 {
        self.cells[r * self.cols + c]
    }
}

/// One candidate row placement: the resulting chunk plus everything needed
/// to expand it into successor states.
struct Candidate {
    state_idx: usize,
    row: usize,
    chunk: Vec<u8>,
    /// Per group: ordered value classes (value, columns); classes of equal
    /// size among the new values are interchangeable and branch later.
    refined: Vec<Vec<(u8, Vec<usize>)>>,
}

fn row_chunk(m: &Matrix, state: &State, row: usize) -> (Vec<u8>, Vec<Vec<(u8, Vec<usize>)>>) {
    let mut chunk = Vec::with_capacity(m.cols);
    let mut refined = Vec::with_capacity(state.groups.len());
    let mut next_label = state.next_label;
    // Labels assigned inside this row are tentative; the real assignment
    // happens on expansion, where ties branch.
    let mut tentative: Vec<u8> = state.relabel.clone();
    for group in &state.groups {
        let mut classes: Vec<(u8, Vec<usize>)> = Vec::new();
        for &col in group {
            let value = m.at(row, col);
            match classes.iter_mut().find(|(v, _)| *v == value) {
                Some((_, cols)) => cols.push(col),
                None => classes.push((value, vec![col])),
            }
        }
        // Old labels first in label order, then new values by descending
        // class size; ties keep value order here (branching handles them).
        classes.sort_by_key(|(value, cols)| {
            let label = tentative[*value as usize - 1];
            if label != 0 {
                (0u8, label, 0usize, *value)
            } else {
                (1u8, 0, usize::MAX - cols.len(), *value)
            }
        });
        for (value, cols) in &classes {
            let label = match tentative[*value as usize - 1] {
                0 => {
                    let l = next_label;
                    tentative[*value as usize - 1] = l;
                    next_label += 1;
                    l
                }
                l => l,
            };
            chunk.extend(std::iter::repeat(label).take(cols.len()));
        }
        refined.push(classes);
    }
    (chunk, refined)
}

/// Orderings of one group's classes: old classes stay put, equal-sized runs
/// of new classes permute.
fn class_orderings(classes: &[(u8, Vec<usize>)], relabel: &[u8]) -> Vec<Vec<usize>> {
    let mut result: Vec<Vec<usize>> = vec![(0..classes.len()).collect()];
    let mut block_start = 0;
    while block_start < classes.len() {
        let (value, cols) = &classes[block_start];
        if relabel[*value as usize - 1] != 0 {
            block_start += 1;
            continue;
        }
        let size = cols.len();
        let mut block_end = block_start;
        while block_end < classes.len() {
            let (v, c) = &classes[block_end];
            if relabel[*v as usize - 1] != 0 || c.len() != size {
                break;
            }
            block_end += 1;
        }
        if block_end - block_start > 1 {
            let block: Vec<usize> = (block_start..block_end).collect();
            let perms = permutations(&block);
            let mut grown = Vec::with_capacity(result.len() * perms.len());
            for base in &result {
                for perm in &perms {
                    let mut order = base.clone();
                    order[block_start..block_end].copy_from_slice(perm);
                    grown.push(order);
                }
            }
            result = grown;
        }
        block_start = block_end.max(block_start + 1);
    }
    result
}

/// Expands a winning candidate into successor states, branching over
/// orderings of equal-sized new-value classes inside each group.
fn expand(state: &State, row: usize, refined: &[Vec<(u8, Vec<usize>)>], out: &mut Vec<State>) {
    let per_group: Vec<Vec<Vec<usize>>> =
        refined.iter().map(|classes| class_orderings(classes, &state.relabel)).collect();
    let mut choice: Vec<usize> = vec![0; per_group.len()];
    loop {
        let mut next = State {
            row_order: state.row_order.clone(),
            remaining: state.remaining.iter().copied().filter(|&r| r != row).collect(),
            groups: Vec::new(),
            relabel: state.relabel.clone(),
            next_label: state.next_label,
        };
        next.row_order.push(row);
        for (g, classes) in refined.iter().enumerate() {
            let order = &per_group[g][choice[g]];
            for &ci in order {
                let (value, cols) = &classes[ci];
                let slot = &mut next.relabel[*value as usize - 1];
                if *slot == 0 {
                    *slot = next.next_label;
                    next.next_label += 1;
                }
                next.groups.push(cols.clone());
            }
        }
        out.push(next);
        // Advance the mixed-radix choice vector.
        let mut pos = 0;
        loop {
            if pos == per_group.len() {
                return;
            }
            choice[pos] += 1;
            if choice[pos] < per_group[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn state_key(m: &Matrix, state: &State) -> (Vec<Vec<u8>>, Vec<Vec<usize>>, Vec<u8>) {
    let mut remaining_rows: Vec<Vec<u8>> = state
        .remaining
        .iter()
        .map(|&r| (0..m.cols).map(|c| m.at(r, c)).collect())
        .collect();
    remaining_rows.sort();
    (remaining_rows, state.groups.clone(), state.relabel.clone())
}

fn minimize_orientation(m: &Matrix, colors: usize, budget: &mut u64) -> Result<(Vec<u8>, State), IsoError> {
    let initial = State {
        row_order: Vec::new(),
        remaining: (0..m.rows).collect(),
        groups: vec![(0..m.cols).collect()],
        relabel: vec![0; colors],
        next_label: 1,
    };
    let mut states = vec![initial];
    let mut string: Vec<u8> = Vec::with_capacity(m.rows * m.cols);
    for _level in 0..m.rows {
        let mut best_chunk: Option<Vec<u8>> = None;
        let mut candidates: Vec<Candidate> = Vec::new();
        for (state_idx, state) in states.iter().enumerate() {
            let mut seen_rows: HashSet<Vec<u8>> = HashSet::new();
            for &row in &state.remaining {
                let content: Vec<u8> = (0..m.cols).map(|c| m.at(row, c)).collect();
                if !seen_rows.insert(content) {
                    continue;
                }
                if *budget == 0 {
                    return Err(IsoError::BudgetExceeded);
                }
                *budget -= 1;
                let (chunk, refined) = row_chunk(m, state, row);
                match &best_chunk {
                    Some(best) if chunk > *best => continue,
                    Some(best) if chunk < *best => {
                        candidates.clear();
                        best_chunk = Some(chunk.clone());
                    }
                    None => best_chunk = Some(chunk.clone()),
                    _ => {}
                }
                candidates.push(Candidate { state_idx, row, chunk, refined });
            }
        }
        let best = best_chunk.expect("states always have remaining rows");
        string.extend_from_slice(&best);
        let mut next_states: Vec<State> = Vec::new();
        let mut seen_states: HashSet<(Vec<Vec<u8>>, Vec<Vec<usize>>, Vec<u8>)> = HashSet::new();
        for cand in candidates.into_iter().filter(|c| c.chunk == best) {
            let mut expanded = Vec::new();
            expand(&states[cand.state_idx], cand.row, &cand.refined, &mut expanded);
            for st in expanded {
                if *budget == 0 {
                    return Err(IsoError::BudgetExceeded);
                }
                *budget -= 1;
                if seen_states.insert(state_key(m, &st)) {
                    next_states.push(st);
                }
            }
        }
        states = next_states;
    }
    let leaf = states.into_iter().next().expect("at least one survivor");
    Ok((string, leaf))
}

fn finish_iso(transpose: bool, leaf: &State) -> IsoElement {
    let mut col_perm: Vec<usize> = Vec::new();
    for group in &leaf.groups {
        let mut cols = group.clone();
        cols.sort_unstable();
        col_perm.extend(cols);
    }
    let mut relabel = leaf.relabel.clone();
    let mut next = leaf.next_label;
    for slot in relabel.iter_mut() {
        if *slot == 0 {
            *slot = next;
            next += 1;
        }
    }
    IsoElement { row_perm: leaf.row_order.clone(), col_perm, transpose, color_perm: relabel }
}

/// Canonical form with the default node budget.
pub fn canonical_form(c: &Coloring) -> Result<CanonicalForm, IsoError> {
    canonical_form_budgeted(c, DEFAULT_NODE_BUDGET)
}

/// Canonical form; two colorings are isomorphic iff their canonical cell
/// sequences agree. The budget bounds search nodes on pathological inputs.
pub fn canonical_form_budgeted(c: &Coloring, budget: u64) -> Result<CanonicalForm, IsoError> {
    let spec = c.spec();
    let mut remaining = budget;
    let mut best: Option<(Vec<u8>, State, bool)> = None;
    let orientations: &[bool] = if spec.is_square() { &[false, true] } else { &[false] };
    for &transpose in orientations {
        let m = if transpose {
            Matrix {
                rows: spec.cols,
                cols: spec.rows,
                cells: (0..spec.cols)
                    .flat_map(|r| (0..spec.rows).map(move |q| (r, q)))
                    .map(|(r, q)| c.at(q, r))
                    .collect(),
            }
        } else {
            Matrix { rows: spec.rows, cols: spec.cols, cells: c.cells().to_vec() }
        };
        let (string, leaf) = minimize_orientation(&m, spec.colors, &mut remaining)?;
        let better = match &best {
            None => true,
            Some((cur, _, _)) => string < *cur,
        };
        if better {
            best = Some((string, leaf, transpose));
        }
    }
    let (cells, leaf, transpose) = best.expect("at least one orientation");
    let iso = finish_iso(transpose, &leaf);
    debug_assert_eq!(
        apply_isomorphism(c, &iso).map(|out| out.cells().to_vec()).as_deref(),
        Ok(cells.as_slice()),
        "stored element must reproduce the canonical sequence"
    );
    Ok(CanonicalForm { spec, cells, iso })
}

/// One isomorphism class of a classified collection.
#[derive(Debug, Clone)]
pub struct IsoClass {
    pub canonical: CanonicalForm,
    /// Indices into the classified sequence.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub classes: Vec<IsoClass>,
}

impl Classification {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Text report: class count, sizes, and one representative per class.
    pub fn report(&self) -> String {
        let mut out = format!("{} classes\n", self.classes.len());
        for (i, class) in self.classes.iter().enumerate() {
            out.push_str(&format!("class {}: {} members\n", i + 1, class.members.len()));
            out.push_str(&class.canonical.coloring().to_text());
        }
        out
    }
}

/// Groups colorings by canonical form. Classes are ordered by canonical
/// sequence, so the report is deterministic.
pub fn classify(colorings: &[Coloring]) -> Result<Classification, IsoError> {
    let first = colorings.first().ok_or(IsoError::Empty)?;
    let spec = first.spec();
    for c in colorings {
        if c.spec() != spec {
            return Err(IsoError::MixedSpecs(spec, c.spec()));
        }
    }
    let mut by_canonical: std::collections::BTreeMap<Vec<u8>, (CanonicalForm, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for (idx, c) in colorings.iter().enumerate() {
        let form = canonical_form(c)?;
        by_canonical
            .entry(form.cells.clone())
            .or_insert_with(|| (form, Vec::new()))
            .1
            .push(idx);
    }
    let classes = by_canonical
        .into_values()
        .map(|(canonical, members)| IsoClass { canonical, members })
        .collect();
    Ok(Classification { classes })
}

/// The graph on n² vertices with (a, b) ~ (c, d) iff a = c or b = d,
/// vertex colors copied from the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredGridGraph {
    pub n: usize,
    /// Vertex (i, j) sits at index i·n + j.
    pub colors: Vec<u8>,
}

impl ColoredGridGraph {
    pub fn num_vertices(&self) -> usize {
        self.n * self.n
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let (a, b) = (u / self.n, u % self.n);
        let (c, d) = (v / self.n, v % self.n);
        a == c || b == d
    }

    pub fn num_edges(&self) -> usize {
        // Every vertex has degree 2(n−1).
        self.num_vertices() * (self.n - 1)
    }

    pub fn degree(&self, _v: usize) -> usize {
        2 * (self.n - 1)
    }
}

pub fn grid_to_graph(c: &Coloring) -> Result<ColoredGridGraph, IsoError> {
    let spec = c.spec();
    if !spec.is_square() {
        return Err(IsoError::NotSquare);
    }
    Ok(ColoredGridGraph { n: spec.rows, colors: c.cells().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{known_4x4_representatives, random_coloring, random_iso};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Explicit-orbit oracle: minimum over every group element applied
    /// outright, including color permutations.
    fn orbit_minimum(c: &Coloring) -> Vec<u8> {
        let spec = c.spec();
        let perms = |n: usize| -> Vec<Vec<usize>> {
            let mut out = vec![vec![]];
            for _ in 0..n {
                let mut grown = Vec::new();
                for p in &out {
                    for v in 0..n {
                        if !p.contains(&v) {
                            let mut q = p.clone();
                            q.push(v);
                            grown.push(q);
                        }
                    }
                }
                out = grown;
            }
            out
        };
        let row_perms = perms(spec.rows);
        let col_perms = perms(spec.cols);
        let color_perms = perms(spec.colors);
        let mut best: Option<Vec<u8>> = None;
        let transposes: &[bool] = if spec.is_square() { &[false, true] } else { &[false] };
        for &transpose in transposes {
            for rp in &row_perms {
                for cp in &col_perms {
                    for gp in &color_perms {
                        let g = IsoElement {
                            row_perm: rp.clone(),
                            col_perm: cp.clone(),
                            transpose,
                            color_perm: gp.iter().map(|&v| v as u8 + 1).collect(),
                        };
                        let cells = apply_isomorphism(c, &g).unwrap().cells().to_vec();
                        if best.as_ref().is_none_or(|b| cells < *b) {
                            best = Some(cells);
                        }
                    }
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn constant_grid_is_its_own_canonical_form() {
        let spec = GridSpec::new(3, 3, 2).unwrap();
        let c = Coloring::constant(spec, 2).unwrap();
        let form = canonical_form(&c).unwrap();
        assert_eq!(form.cells, vec![1; 9]);
    }

    #[test]
    fn known_representatives_are_pairwise_distinct() {
        let forms: Vec<_> = known_4x4_representatives()
            .iter()
            .map(|c| canonical_form(c).unwrap().cells)
            .collect();
        assert_ne!(forms[0], forms[1]);
        assert_ne!(forms[0], forms[2]);
        assert_ne!(forms[1], forms[2]);
    }

    #[test]
    fn isomorphic_colorings_share_canonical_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for base in known_4x4_representatives() {
            let form = canonical_form(&base).unwrap();
            for _ in 0..25 {
                let g = random_iso(&mut rng, base.spec());
                let moved = apply_isomorphism(&base, &g).unwrap();
                assert_eq!(canonical_form(&moved).unwrap().cells, form.cells);
            }
        }
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let spec =
                GridSpec::new(rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=3)).unwrap();
            let c = random_coloring(&mut rng, spec);
            let form = canonical_form(&c).unwrap();
            let again = canonical_form(&form.coloring()).unwrap();
            assert_eq!(form.cells, again.cells);
        }
    }

    #[test]
    fn matches_orbit_enumeration_on_small_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let spec = GridSpec::new(3, 3, 2).unwrap();
            let c = random_coloring(&mut rng, spec);
            assert_eq!(canonical_form(&c).unwrap().cells, orbit_minimum(&c), "on {}", c.to_text());
        }
        // Non-square grids exercise the no-transpose path.
        for _ in 0..20 {
            let spec = GridSpec::new(2, 3, 2).unwrap();
            let c = random_coloring(&mut rng, spec);
            assert_eq!(canonical_form(&c).unwrap().cells, orbit_minimum(&c));
        }
    }

    #[test]
    fn stored_element_reproduces_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..30 {
            let spec = GridSpec::new(4, 4, 3).unwrap();
            let c = random_coloring(&mut rng, spec);
            let form = canonical_form(&c).unwrap();
            form.iso.validate(spec).unwrap();
            let reproduced = apply_isomorphism(&c, &form.iso).unwrap();
            assert_eq!(reproduced.cells(), form.cells.as_slice());
        }
    }

    #[test]
    fn classify_basics() {
        let reps = known_4x4_representatives();
        let single = classify(&reps[..1]).unwrap();
        assert_eq!(single.class_count(), 1);

        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut copies = Vec::new();
        for _ in 0..50 {
            let g = random_iso(&mut rng, reps[0].spec());
            copies.push(apply_isomorphism(&reps[0], &g).unwrap());
        }
        let merged = classify(&copies).unwrap();
        assert_eq!(merged.class_count(), 1);

        let all = classify(&reps).unwrap();
        assert_eq!(all.class_count(), 3);
        assert!(all.report().starts_with("3 classes\n"));

        let mixed = vec![
            reps[0].clone(),
            Coloring::constant(GridSpec::new(2, 2, 2).unwrap(), 1).unwrap(),
        ];
        assert!(matches!(classify(&mixed), Err(IsoError::MixedSpecs(..))));
        assert!(matches!(classify(&[]), Err(IsoError::Empty)));
    }

    #[test]
    fn graph_conversion() {
        let spec = GridSpec::new(2, 2, 2).unwrap();
        let c = Coloring::new(spec, vec![1, 2, 2, 1]).unwrap();
        let g = grid_to_graph(&c).unwrap();
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.num_edges(), 4);
        for v in 0..4 {
            assert_eq!((0..4).filter(|&u| g.adjacent(v, u)).count(), 2);
        }
        assert_eq!(g.colors, vec![1, 2, 2, 1]);

        let spec44 = GridSpec::new(4, 4, 2).unwrap();
        let c44 = Coloring::constant(spec44, 1).unwrap();
        let g44 = grid_to_graph(&c44).unwrap();
        assert_eq!(g44.num_edges(), 48);
        let edge_pairs = (0..16)
            .flat_map(|u| (u + 1..16).map(move |v| (u, v)))
            .filter(|&(u, v)| g44.adjacent(u, v))
            .count();
        assert_eq!(edge_pairs, 48);

        let rect = Coloring::constant(GridSpec::new(2, 3, 1).unwrap(), 1).unwrap();
        assert_eq!(grid_to_graph(&rect), Err(IsoError::NotSquare));
    }

    #[test]
    fn budget_guard_fires() {
        let spec = GridSpec::new(4, 4, 2).unwrap();
        let c = Coloring::constant(spec, 1).unwrap();
        assert!(matches!(canonical_form_budgeted(&c, 1), Err(IsoError::BudgetExceeded)));
    }
}
