//! Brute-force graph oracles shared by the graph tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use boltzgraph::graphs::ContractionGraph;

pub fn all_shapes(max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 1..=max {
        for n_bar in 1..=max {
            if r * n_bar <= max && (r * n_bar) % 2 == 0 {
                out.push((r, n_bar));
            }
        }
    }
    out
}

pub fn double_factorial(m: usize) -> u64 {
    (1..=m as u64).rev().step_by(2).product()
}

/// Every fixed-point-free involution of `0..m`, found by scanning all
/// permutations.
pub fn brute_matchings(m: usize) -> BTreeSet<Vec<(usize, usize)>> {
    fn permute(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut BTreeSet<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            let involution = prefix.iter().enumerate().all(|(i, &p)| p != i && prefix[p] == i);
            if involution {
                out.insert(prefix.iter().enumerate().filter(|(i, p)| i < p).map(|(i, &p)| (i, p)).collect());
            }
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            let i = prefix.len();
            if v != i && (v > i || prefix[v] == i) {
                prefix.push(v);
                permute(rest, prefix, out);
                prefix.pop();
            }
            rest.insert(k, v);
        }
    }
    let mut out = BTreeSet::new();
    permute(&mut (0..m).collect(), &mut Vec::new(), &mut out);
    out
}

pub fn as_index_pairs(g: &ContractionGraph) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = g.pairs().iter().map(|&(a, b)| (g.index(a), g.index(b))).collect();
    v.sort_unstable();
    v
}

pub struct Oracle {
    pub components: Vec<Vec<usize>>,
    pub disconnected: bool,
    pub two_connected: bool,
    pub recollisions: usize,
    pub simple: Vec<bool>,
    pub crossing: Vec<bool>,
    pub nesting: Vec<bool>,
}

/// The classification computed straight from the definitions.
pub fn oracle(g: &ContractionGraph) -> Oracle {
    let (r, n) = (g.r(), g.n());
    let pairs = g.pairs();
    let mut reach: Vec<BTreeSet<usize>> = (1..=r).map(|l| BTreeSet::from([l])).collect();
    loop {
        let mut changed = false;
        for &(a, b) in pairs {
            if a.line != b.line {
                let merged: BTreeSet<usize> = reach[a.line - 1].union(&reach[b.line - 1]).copied().collect();
                for l in merged.clone() {
                    if reach[l - 1] != merged {
                        reach[l - 1] = merged.clone();
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let components: Vec<Vec<usize>> =
        reach.iter().map(|s| s.iter().copied().collect::<Vec<_>>()).collect::<BTreeSet<_>>().into_iter().collect();
    let disconnected = pairs.iter().all(|(a, b)| a.line == b.line);
    let self_paired = |l: usize| pairs.iter().filter(|(a, b)| a.line == l || b.line == l).all(|(a, b)| a.line == b.line);
    let two_connected = (1..=r).all(|l| !self_paired(l));
    let recollisions = pairs.iter().filter(|(a, b)| a.line == b.line && a.pos.abs_diff(b.pos) == 1).count();
    let mut simple = Vec::new();
    let mut crossing = Vec::new();
    let mut nesting = Vec::new();
    for l in 1..=r {
        let internal: Vec<(usize, usize)> = pairs
            .iter()
            .filter(|(a, b)| a.line == l && b.line == l)
            .map(|(a, b)| (a.pos.min(b.pos), a.pos.max(b.pos)))
            .collect();
        let mut cross = false;
        let mut nest = false;
        for &(i1, i1p) in &internal {
            for &(i2, i2p) in &internal {
                if i1 < i2 && i2 < i2p && i2p < i1p && (i1p <= n || i1 > n) {
                    nest = true;
                }
                if i1 < i2 && i2 < i1p && i1p < i2p && (i2p <= n || i1 > n) {
                    cross = true;
                }
            }
        }
        // surviving vertices after deleting transfer vertices, in order
        let kept: Vec<usize> = (1..=g.n_bar()).filter(|&p| internal.iter().any(|&(a, b)| a == p || b == p)).collect();
        let adjacent = |a: usize, b: usize| kept.windows(2).any(|w| w[0] == a && w[1] == b);
        let rungs: Vec<(usize, usize)> = internal.iter().copied().filter(|&(a, b)| a <= n && n < b).collect();
        let decorations_ok = internal.iter().all(|&(a, b)| adjacent(a, b) || (a <= n && n < b));
        let ladder_ok = rungs.iter().all(|&(a, b)| rungs.iter().all(|&(c, d)| !(a < c && c < b && b < d)));
        simple.push(decorations_ok && ladder_ok);
        crossing.push(cross);
        nesting.push(nest);
    }
    Oracle { components, disconnected, two_connected, recollisions, simple, crossing, nesting }
}

