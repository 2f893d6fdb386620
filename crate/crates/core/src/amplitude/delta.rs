//! Momentum-conservation constraints of a contraction graph, solved over `Z_N`.

use crate::error::{Error, Result};
use crate::graphs::{ContractionGraph, ReducedLine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variable {
    /// Momentum `k_index` of line `line` (1-based), `index ∈ 0..=n̄+1`.
    Momentum { line: usize, index: usize },
    /// Transfer momentum `u_id` of a reduced line.
    Transfer { id: usize },
}

/// Geometry of the particle lines: vertex count, observable position and
/// which lines enter complex conjugated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineLayout {
    pub n_bar: usize,
    pub n: usize,
    pub conjugate: Vec<bool>,
    pub l2_observable: bool,
}

impl LineLayout {
    /// Lines `2, 4, …` are plain and lines `1, 3, …` conjugated.
    pub fn alternating(r: usize, n_bar: usize, n: usize, l2_observable: bool) -> Self {
        Self { n_bar, n, conjugate: (1..=r).map(|j| j % 2 == 1).collect(), l2_observable }
    }

    pub fn momenta_per_line(&self) -> usize {
        self.n_bar + 2
    }

    /// Coefficients of the momentum jump at vertex `pos` as `(index, coeff)` pairs.
    fn jump(&self, pos: usize, conjugate: bool) -> [(usize, i64); 2] {
        let s = if conjugate { -1 } else { 1 };
        if pos <= self.n {
            [(pos, s), (pos - 1, -s)]
        } else {
            [(pos + 1, s), (pos, -s)]
        }
    }
}

/// Linear system `Σ_v c_v k_v ≡ 0 (mod N)`, applied to each of the three
/// components, with a free/bound split from elimination with unit pivots.
#[derive(Clone, Debug)]
pub struct DeltaSystem {
    modulus: i64,
    variables: Vec<Variable>,
    rows: Vec<Vec<i64>>,
    free: Vec<usize>,
    bound: Vec<(usize, Vec<(usize, i64)>)>,
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m))
}

impl DeltaSystem {
    /// `priority[v]` orders pivot choices (lower first); `None` keeps a
    /// variable free.
    pub fn new(variables: Vec<Variable>, rows: Vec<Vec<i64>>, modulus: i64, priority: &[Option<u8>]) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::InvalidParameter(format!("modulus {modulus} must be at least 2")));
        }
        let width = variables.len();
        assert_eq!(priority.len(), width);
        let mut work: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|c| c.rem_euclid(modulus)).collect()).collect();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for ri in 0..work.len() {
            if work[ri].iter().all(|&c| c == 0) {
                continue;
            }
            let pivot = (0..width)
                .filter(|&c| priority[c].is_some() && work[ri][c] != 0 && mod_inverse(work[ri][c], modulus).is_some())
                .min_by_key(|&c| (priority[c], c));
            let col = pivot.ok_or_else(|| {
                Error::InvalidParameter("delta system has no unit pivot; constraints are not solvable in this form".into())
            })?;
            let inv = mod_inverse(work[ri][col], modulus).expect("unit");
            for c in work[ri].iter_mut() {
                *c = (*c * inv).rem_euclid(modulus);
            }
            let pivot_row = work[ri].clone();
            for (rj, row) in work.iter_mut().enumerate() {
                if rj == ri || row[col] == 0 {
                    continue;
                }
                let f = row[col];
                for (c, p) in row.iter_mut().zip(&pivot_row) {
                    *c = (*c - f * p).rem_euclid(modulus);
                }
            }
            pivots.push((ri, col));
        }
        let is_pivot: Vec<bool> = (0..width).map(|c| pivots.iter().any(|&(_, pc)| pc == c)).collect();
        let free: Vec<usize> = (0..width).filter(|&c| !is_pivot[c]).collect();
        let bound = pivots
            .iter()
            .map(|&(ri, col)| {
                let expr = free
                    .iter()
                    .enumerate()
                    .filter(|&(_, &f)| work[ri][f] != 0)
                    .map(|(slot, &f)| (slot, (-work[ri][f]).rem_euclid(modulus)))
                    .collect();
                (col, expr)
            })
            .collect();
        Ok(Self { modulus, variables, rows, free, bound })
    }

    /// Constraints of a graph: one per pair, plus `k_{n+1} = k_n` per line
    /// when the layout carries the L²-delta observable.
    pub fn for_graph(g: &ContractionGraph, layout: &LineLayout, modulus: i64) -> Result<Self> {
        if layout.conjugate.len() != g.r() || layout.n_bar != g.n_bar() || layout.n != g.n() {
            return Err(Error::InvalidParameter("line layout does not match the graph".into()));
        }
        let per = layout.momenta_per_line();
        let width = g.r() * per;
        let var = |line: usize, index: usize| (line - 1) * per + index;
        let mut rows = Vec::new();
        for &(a, b) in g.pairs() {
            let mut row = vec![0i64; width];
            for v in [a, b] {
                for (idx, c) in layout.jump(v.pos, layout.conjugate[v.line - 1]) {
                    row[var(v.line, idx)] += c;
                }
            }
            rows.push(row);
        }
        if layout.l2_observable {
            for line in 1..=g.r() {
                let mut row = vec![0i64; width];
                row[var(line, layout.n + 1)] += 1;
                row[var(line, layout.n)] -= 1;
                rows.push(row);
            }
        }
        let variables: Vec<Variable> =
            (1..=g.r()).flat_map(|line| (0..per).map(move |index| Variable::Momentum { line, index })).collect();
        let priority: Vec<Option<u8>> = variables.iter().map(|v| Some(endpoint_class(*v, layout.n_bar))).collect();
        Self::new(variables, rows, modulus, &priority)
    }

    /// Constraints of one reduced line; transfer momenta stay free.
    pub fn for_reduced_line(line: &ReducedLine, layout: &LineLayout, modulus: i64) -> Result<Self> {
        let per = layout.momenta_per_line();
        let mut ids: Vec<usize> = line.transfer_slots.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        ids.dedup();
        let width = per + ids.len();
        let conj = layout.conjugate[line.line - 1];
        let mut rows = Vec::new();
        for &(a, b) in &line.internal_edges {
            let mut row = vec![0i64; width];
            for pos in [a, b] {
                for (idx, c) in layout.jump(pos, conj) {
                    row[idx] += c;
                }
            }
            rows.push(row);
        }
        for slot in &line.transfer_slots {
            let mut row = vec![0i64; width];
            for (idx, c) in layout.jump(slot.pos, conj) {
                row[idx] += c;
            }
            let u = per + ids.binary_search(&slot.id).expect("id listed");
            row[u] += slot.sign as i64;
            rows.push(row);
        }
        if layout.l2_observable {
            let mut row = vec![0i64; width];
            row[layout.n + 1] += 1;
            row[layout.n] -= 1;
            rows.push(row);
        }
        let mut variables: Vec<Variable> = (0..per).map(|index| Variable::Momentum { line: line.line, index }).collect();
        variables.extend(ids.iter().map(|&id| Variable::Transfer { id }));
        let priority: Vec<Option<u8>> = variables
            .iter()
            .map(|v| match v {
                Variable::Transfer { .. } => None,
                m => Some(endpoint_class(*m, layout.n_bar)),
            })
            .collect();
        Self::new(variables, rows, modulus, &priority)
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn constraint_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rank(&self) -> usize {
        self.bound.len()
    }

    /// Indices of the free variables.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// Bound variables as `(variable, [(free slot, coefficient)])`.
    pub fn bound(&self) -> &[(usize, Vec<(usize, i64)>)] {
        &self.bound
    }

    /// Fills `values` (one residue triple per variable) from the free values,
    /// given in the order of [`DeltaSystem::free`].
    pub fn complete(&self, free_values: &[[i64; 3]], values: &mut [[i64; 3]]) {
        for (slot, &f) in self.free.iter().enumerate() {
            values[f] = free_values[slot];
        }
        for (col, expr) in &self.bound {
            let mut v = [0i64; 3];
            for &(slot, c) in expr {
                for (a, b) in v.iter_mut().zip(free_values[slot]) {
                    *a += c * b;
                }
            }
            values[*col] = v.map(|a| a.rem_euclid(self.modulus));
        }
    }

    /// Whether every constraint holds for `values`.
    pub fn satisfied(&self, values: &[[i64; 3]]) -> bool {
        self.rows.iter().all(|row| {
            (0..3).all(|d| row.iter().zip(values).map(|(c, v)| c * v[d]).sum::<i64>().rem_euclid(self.modulus) == 0)
        })
    }
}

/// Interior momenta are pivoted before the endpoints `k_0`, `k_{n̄+1}`, so the
/// endpoints tend to stay free and can range over the support of `φ̂₀`.
fn endpoint_class(v: Variable, n_bar: usize) -> u8 {
    match v {
        Variable::Momentum { index, .. } if index == 0 || index == n_bar + 1 => 1,
        _ => 0,
    }
}

/// `r(n̄+2) − r n̄/2 − r`, the free-momentum count with L²-delta observables.
pub fn expected_free_count(r: usize, n_bar: usize) -> usize {
    r * (n_bar + 2) - r * n_bar / 2 - r
}

/// Constraints for a graph with the default alternating layout and L²-delta observables.
pub fn build_delta_system(g: &ContractionGraph, modulus: i64) -> Result<DeltaSystem> {
    DeltaSystem::for_graph(g, &LineLayout::alternating(g.r(), g.n_bar(), g.n(), true), modulus)
}
