//! Contraction graphs: perfect matchings of the potential vertices on `r`
//! particle lines, their classification and their reduction to 1-particle lines.
//!
//! Vertices are `(line, pos)` with `line ∈ 1..=r`, `pos ∈ 1..=n̄`; the
//! observable vertex of every line sits between `pos = n` and `pos = n + 1`.

use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Default cap on `r·n̄` for enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub line: usize,
    pub pos: usize,
}

impl VertexId {
    pub fn new(line: usize, pos: usize) -> Self {
        Self { line, pos }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.pos, self.line)
    }
}

/// A perfect matching of the `r·n̄` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractionGraph {
    r: usize,
    n_bar: usize,
    n: usize,
    pairs: Vec<(VertexId, VertexId)>,
}

fn check_shape(r: usize, n_bar: usize, n: usize) -> Result<()> {
    if r == 0 || n_bar == 0 {
        return Err(Error::InvalidParameter("r and n_bar must be at least 1".into()));
    }
    if n > n_bar {
        return Err(Error::InvalidParameter(format!("n = {n} exceeds n_bar = {n_bar}")));
    }
    if (r * n_bar) % 2 == 1 {
        return Err(Error::OddVertexCount(r * n_bar));
    }
    Ok(())
}

impl ContractionGraph {
    /// Validates and canonicalizes a list of pairs.
    pub fn new(r: usize, n_bar: usize, n: usize, pairs: Vec<(VertexId, VertexId)>) -> Result<Self> {
        check_shape(r, n_bar, n)?;
        let mut seen = vec![false; r * n_bar];
        let mut canon = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            for v in [a, b] {
                if v.line == 0 || v.line > r || v.pos == 0 || v.pos > n_bar {
                    return Err(Error::InvalidParameter(format!("vertex {v} out of range")));
                }
                let idx = (v.line - 1) * n_bar + v.pos - 1;
                if seen[idx] {
                    return Err(Error::InvalidParameter(format!("vertex {v} matched twice")));
                }
                seen[idx] = true;
            }
            canon.push(if a < b { (a, b) } else { (b, a) });
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("matching does not cover every vertex".into()));
        }
        canon.sort();
        Ok(Self { r, n_bar, n, pairs: canon })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pairs `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> &[(VertexId, VertexId)] {
        &self.pairs
    }

    pub fn vertex_count(&self) -> usize {
        self.r * self.n_bar
    }

    pub fn index(&self, v: VertexId) -> usize {
        (v.line - 1) * self.n_bar + v.pos - 1
    }

    pub fn vertex(&self, index: usize) -> VertexId {
        VertexId { line: index / self.n_bar + 1, pos: index % self.n_bar + 1 }
    }

    /// `partner[index(v)] = index(w)` for every pair `{v, w}`.
    pub fn partners(&self) -> Vec<usize> {
        let mut partner = vec![0; self.vertex_count()];
        for &(a, b) in &self.pairs {
            partner[self.index(a)] = self.index(b);
            partner[self.index(b)] = self.index(a);
        }
        partner
    }

    /// The subgraph on `lines` (1-based, increasing), renumbered `1..`.
    /// Fails if a pair leaves the selection.
    pub fn restrict(&self, lines: &[usize]) -> Result<ContractionGraph> {
        let new_line = |l: usize| lines.iter().position(|&x| x == l).map(|p| p + 1);
        let mut pairs = Vec::new();
        for &(a, b) in &self.pairs {
            match (new_line(a.line), new_line(b.line)) {
                (Some(la), Some(lb)) => pairs.push((VertexId::new(la, a.pos), VertexId::new(lb, b.pos))),
                (None, None) => {}
                _ => return Err(Error::InvalidParameter("selected lines are joined to the rest of the graph".into())),
            }
        }
        ContractionGraph::new(lines.len(), self.n_bar, self.n, pairs)
    }

    /// Pairs as `(line, pos)` tuples, for display and files.
    pub fn pair_list(&self) -> String {
        self.pairs.iter().map(|(a, b)| format!("{}-{}", a, b)).collect::<Vec<_>>().join(" ")
    }
}

/// Lazy canonical enumeration: the least unmatched vertex is always paired
/// next, with partners tried in increasing order.
pub struct GraphStream {
    r: usize,
    n_bar: usize,
    n: usize,
    matched: Vec<bool>,
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

impl GraphStream {
    fn next_unmatched(&self, after: Option<usize>) -> Option<usize> {
        let start = after.map_or(0, |a| a + 1);
        (start..self.matched.len()).find(|&i| !self.matched[i])
    }

    fn fill(&mut self) {
        while let Some(u) = self.next_unmatched(None) {
            let v = self.next_unmatched(Some(u)).expect("even vertex count");
            self.matched[u] = true;
            self.matched[v] = true;
            self.stack.push((u, v));
        }
    }

    fn emit(&self) -> ContractionGraph {
        let vertex = |i: usize| VertexId { line: i / self.n_bar + 1, pos: i % self.n_bar + 1 };
        let pairs = self.stack.iter().map(|&(u, v)| (vertex(u), vertex(v))).collect();
        ContractionGraph { r: self.r, n_bar: self.n_bar, n: self.n, pairs }
    }
}

impl Iterator for GraphStream {
    type Item = ContractionGraph;

    fn next(&mut self) -> Option<ContractionGraph> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill();
            return Some(self.emit());
        }
        while let Some((u, v)) = self.stack.pop() {
            self.matched[v] = false;
            if let Some(w) = self.next_unmatched(Some(v)) {
                self.matched[w] = true;
                self.stack.push((u, w));
                self.fill();
                return Some(self.emit());
            }
            self.matched[u] = false;
        }
        self.done = true;
        None
    }
}

/// Every perfect matching of the `r·n̄` vertices, once each, with `r·n̄ ≤ 16`.
pub fn enumerate(r: usize, n_bar: usize, n: usize) -> Result<GraphStream> {
    enumerate_with_cap(r, n_bar, n, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_with_cap(r: usize, n_bar: usize, n: usize, cap: usize) -> Result<GraphStream> {
    check_shape(r, n_bar, n)?;
    if r * n_bar > cap {
        return Err(Error::TooLarge(format!("enumeration capped at r * n_bar <= {cap}, got {}", r * n_bar)));
    }
    Ok(GraphStream {
        r,
        n_bar,
        n,
        matched: vec![false; r * n_bar],
        stack: Vec::new(),
        started: false,
        done: false,
    })
}

/// `(r·n̄ - 1)!!`.
pub fn count(r: usize, n_bar: usize) -> Result<BigUint> {
    let v = r * n_bar;
    if v % 2 == 1 {
        return Err(Error::OddVertexCount(v));
    }
    let mut acc = BigUint::from(1u32);
    let mut k = v.saturating_sub(1);
    while k > 1 {
        acc *= BigUint::from(k);
        k -= 2;
    }
    let mut bound = BigUint::from(1u32) << v;
    for k in 2..=v {
        bound *= BigUint::from(k);
    }
    assert!(acc <= bound, "(rn-1)!! exceeds (rn)! 2^(rn)");
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Internal,
    Transfer,
}

/// Index pattern of a crossing or nesting pair `(i₁, i₁', i₂, i₂')`.
pub type Witness = [usize; 4];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineStructure {
    pub line: usize,
    pub simple_ladder: bool,
    pub crossing: Option<Witness>,
    pub nesting: Option<Witness>,
}

impl LineStructure {
    pub fn has_crossing(&self) -> bool {
        self.crossing.is_some()
    }

    pub fn has_nesting(&self) -> bool {
        self.nesting.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphClassification {
    /// Connectivity classes of lines (1-based), each sorted, ordered by least line.
    pub components: Vec<Vec<usize>>,
    /// Kind of each pair, in the order of [`ContractionGraph::pairs`].
    pub edge_kinds: Vec<EdgeKind>,
    pub immediate_recollisions: Vec<(VertexId, VertexId)>,
    pub is_disconnected: bool,
    pub is_non_disconnected: bool,
    pub is_two_connected: bool,
    pub lines: Vec<LineStructure>,
}

impl GraphClassification {
    pub fn is_simple(&self) -> bool {
        self.lines.iter().all(|l| l.simple_ladder)
    }

    pub fn has_crossing(&self) -> bool {
        self.lines.iter().any(|l| l.has_crossing())
    }

    pub fn has_nesting(&self) -> bool {
        self.lines.iter().any(|l| l.has_nesting())
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

fn line_structure(line: usize, n: usize, internal: &[(usize, usize)]) -> LineStructure {
    let mut crossing = None;
    let mut nesting = None;
    for &(i1, j1) in internal {
        for &(i2, j2) in internal {
            if nesting.is_none() && i1 < i2 && i2 < j2 && j2 < j1 && (j1 <= n || i1 > n) {
                nesting = Some([i1, j1, i2, j2]);
            }
            if crossing.is_none() && i1 < i2 && i2 < j1 && j1 < j2 && (j2 <= n || i1 > n) {
                crossing = Some([i1, j1, i2, j2]);
            }
        }
    }
    // immediate recollisions are judged with transfer vertices removed
    let mut internal_pos: Vec<usize> = internal.iter().flat_map(|&(a, b)| [a, b]).collect();
    internal_pos.sort_unstable();
    let rank = |p: usize| internal_pos.binary_search(&p).expect("internal vertex");
    let rung = |&(a, b): &(usize, usize)| a <= n && b > n;
    let each_ok = internal.iter().all(|e| rank(e.1) == rank(e.0) + 1 || rung(e));
    let rungs: Vec<&(usize, usize)> = internal.iter().filter(|e| rung(e)).collect();
    let rungs_ok = rungs.iter().all(|a| rungs.iter().all(|b| !(a.0 < b.0) || a.1 > b.1));
    LineStructure { line, simple_ladder: each_ok && rungs_ok, crossing, nesting }
}

pub fn classify(g: &ContractionGraph) -> GraphClassification {
    let mut parent: Vec<usize> = (0..g.r).collect();
    let mut edge_kinds = Vec::with_capacity(g.pairs.len());
    let mut immediate = Vec::new();
    let mut internal: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.r];
    let mut transfer_pos: Vec<Vec<usize>> = vec![Vec::new(); g.r];
    for &(a, b) in &g.pairs {
        if a.line == b.line {
            edge_kinds.push(EdgeKind::Internal);
            let (i, j) = (a.pos.min(b.pos), a.pos.max(b.pos));
            internal[a.line - 1].push((i, j));
            if j - i == 1 {
                immediate.push((a, b));
            }
        } else {
            edge_kinds.push(EdgeKind::Transfer);
            transfer_pos[a.line - 1].push(a.pos);
            transfer_pos[b.line - 1].push(b.pos);
            let ra = find(&mut parent, a.line - 1);
            let rb = find(&mut parent, b.line - 1);
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; g.r];
    for line in 0..g.r {
        let root = find(&mut parent, line);
        if root_slot[root] == usize::MAX {
            root_slot[root] = components.len();
            components.push(Vec::new());
        }
        components[root_slot[root]].push(line + 1);
    }
    let is_disconnected = edge_kinds.iter().all(|k| *k == EdgeKind::Internal);
    let is_two_connected = transfer_pos.iter().all(|t| !t.is_empty());
    let lines = (0..g.r).map(|j| line_structure(j + 1, g.n, &internal[j])).collect();
    GraphClassification {
        components,
        edge_kinds,
        immediate_recollisions: immediate,
        is_disconnected,
        is_non_disconnected: !is_disconnected,
        is_two_connected,
        lines,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterMode {
    Full,
    Disc,
    NonDisc,
    TwoConn,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FilterMode::Full),
            "disc" => Ok(FilterMode::Disc),
            "non_disc" | "nondisc" => Ok(FilterMode::NonDisc),
            "two_conn" | "2conn" => Ok(FilterMode::TwoConn),
            other => Err(Error::InvalidParameter(format!("unknown filter mode {other:?}"))),
        }
    }
}

impl FilterMode {
    pub fn keeps(&self, c: &GraphClassification) -> bool {
        match self {
            FilterMode::Full => true,
            FilterMode::Disc => c.is_disconnected,
            FilterMode::NonDisc => c.is_non_disconnected,
            FilterMode::TwoConn => c.is_two_connected,
        }
    }
}

pub fn filter<I>(graphs: I, mode: FilterMode) -> impl Iterator<Item = ContractionGraph>
where
    I: IntoIterator<Item = ContractionGraph>,
{
    graphs.into_iter().filter(move |g| mode.keeps(&classify(g)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransferSlot {
    pub pos: usize,
    /// Transfer id `ℓ`, 1-based.
    pub id: usize,
    /// `+1` on the first endpoint of the edge, `-1` on the second.
    pub sign: i8,
}

/// Line `j` with its internal pairs and the signed slots of its transfer pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedLine {
    pub line: usize,
    pub internal_edges: Vec<(usize, usize)>,
    pub transfer_slots: Vec<TransferSlot>,
}

/// Splits every transfer pair `ℓ` into a `+u_ℓ` slot on its first endpoint
/// and a `-u_ℓ` slot on its second; ids follow the canonical pair order.
pub fn reduce(g: &ContractionGraph) -> Vec<ReducedLine> {
    let mut lines: Vec<ReducedLine> =
        (1..=g.r).map(|line| ReducedLine { line, internal_edges: Vec::new(), transfer_slots: Vec::new() }).collect();
    let mut next_id = 1;
    for &(a, b) in &g.pairs {
        if a.line == b.line {
            lines[a.line - 1].internal_edges.push((a.pos, b.pos));
        } else {
            lines[a.line - 1].transfer_slots.push(TransferSlot { pos: a.pos, id: next_id, sign: 1 });
            lines[b.line - 1].transfer_slots.push(TransferSlot { pos: b.pos, id: next_id, sign: -1 });
            next_id += 1;
        }
    }
    for line in &mut lines {
        line.transfer_slots.sort_by_key(|s| s.pos);
    }
    lines
}

/// Inverse of [`reduce`].
pub fn reconstruct(r: usize, n_bar: usize, n: usize, lines: &[ReducedLine]) -> Result<ContractionGraph> {
    let mut pairs = Vec::new();
    let mut slots: std::collections::BTreeMap<usize, Vec<(VertexId, i8)>> = Default::default();
    for l in lines {
        for &(a, b) in &l.internal_edges {
            pairs.push((VertexId::new(l.line, a), VertexId::new(l.line, b)));
        }
        for s in &l.transfer_slots {
            slots.entry(s.id).or_default().push((VertexId::new(l.line, s.pos), s.sign));
        }
    }
    for (id, ends) in slots {
        match ends.as_slice() {
            [(a, sa), (b, sb)] if a.line != b.line && sa + sb == 0 => pairs.push((*a, *b)),
            _ => return Err(Error::InvalidParameter(format!("transfer id {id} does not join two lines with opposite signs"))),
        }
    }
    ContractionGraph::new(r, n_bar, n, pairs)
}
