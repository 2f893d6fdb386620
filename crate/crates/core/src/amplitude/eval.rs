//! Feynman amplitudes of contraction graphs by explicit momentum sums.

use std::cell::RefCell;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use num_complex::Complex64;
use rayon::prelude::*;

use super::delta::{DeltaSystem, LineLayout, Variable};
use super::kernel::{simplex_volume, time_simplex_kernel};
use crate::error::{Error, Result};
use crate::graphs::{self, ContractionGraph, FilterMode};
use crate::lattice::{dispersion, Field, LatticeSpec, Representation};
use crate::wigner::TestFunction;

/// Largest number of summands a single evaluation may visit.
pub const MAX_TERMS: f64 = 1e9;

/// Observable vertex on each particle line.
#[derive(Clone, Debug)]
pub enum Observable {
    /// `δ(k_n − k_{n+1})` with `δ(0) = |Λ|`: the line reads `⟨φ_{n̄−n}, φ_n⟩`.
    L2Delta,
    /// The line reads `⟨J, W[φ_{n̄−n}, φ_n]⟩` with Wigner scaling `η`.
    Test { j: TestFunction, eta: f64 },
}

#[derive(Clone, Debug)]
pub struct AmplitudeSpec {
    pub lattice: LatticeSpec,
    pub lambda: f64,
    pub t: f64,
    pub observable: Observable,
}

impl AmplitudeSpec {
    pub fn new(lattice: LatticeSpec, lambda: f64, t: f64, observable: Observable) -> Result<Self> {
        if lattice.inv_rho() != 1 {
            return Err(Error::InvalidLattice("amplitudes are evaluated on the unit lattice".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        if let Observable::Test { eta, .. } = observable {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1]")));
            }
        }
        Ok(Self { lattice, lambda, t, observable })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }
}

/// Momentum-space kernel `Ĝ(k', k)` of a test-function pairing:
/// `⟨J, W[ψ, φ]⟩ = μ² Σ_{k',k} conj(ψ̂(k')) Ĝ(k', k) φ̂(k)`. Row-major in `k'`.
pub fn observable_matrix(j: &TestFunction, eta: f64, lattice: LatticeSpec) -> Result<Vec<Complex64>> {
    let len = lattice.len();
    if len > 729 {
        return Err(Error::TooLarge(format!("observable matrix needs |Λ| <= 729, got {len}")));
    }
    let tau = std::f64::consts::TAU;
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut entries: HashMap<(usize, usize), Complex64> = HashMap::new();
    for (profile, poly) in j.terms() {
        for (c, coeff) in poly.modes() {
            for y in 0..len {
                let oy = lattice.offsets(y);
                let z = lattice.wrap_index([oy[0] - c[0] as i64, oy[1] - c[1] as i64, oy[2] - c[2] as i64]);
                let oz = lattice.offsets(z);
                let mid: [f64; 3] = std::array::from_fn(|i| 0.5 * eta * (oy[i] + oz[i]) as f64);
                *entries.entry((y, z)).or_default() += coeff.conj() * profile.eval(mid);
            }
        }
    }
    let mut sorted: Vec<((usize, usize), Complex64)> = entries.into_iter().collect();
    sorted.sort_by_key(|e| e.0);
    // A(y, k) = Σ_z M(y, z) e^{2πik·z}
    let mut a = vec![Complex64::new(0.0, 0.0); len * len];
    for ((y, z), m) in sorted {
        let xz = lattice.site(z);
        for k in 0..len {
            a[y * len + k] += m * Complex64::from_polar(1.0, tau * dot(lattice.dual_point(k), xz));
        }
    }
    let mut g = vec![Complex64::new(0.0, 0.0); len * len];
    for kp in 0..len {
        let p = lattice.dual_point(kp);
        for y in 0..len {
            let phase = Complex64::from_polar(1.0, -tau * dot(p, lattice.site(y)));
            let row = &a[y * len..(y + 1) * len];
            for (gk, ak) in g[kp * len..(kp + 1) * len].iter_mut().zip(row) {
                *gk += phase * ak;
            }
        }
    }
    Ok(g)
}

/// Lattice data shared by all evaluations for one spec and initial state.
pub(crate) struct Context {
    pub lattice: LatticeSpec,
    pub side: i64,
    pub lambda: f64,
    pub t: f64,
    /// Distinct values of `e_Δ` on the dual grid and the class of each point.
    levels: Vec<f64>,
    level_of: Vec<u32>,
    /// Dual index of each momentum given as coordinates reduced mod `N`.
    site_of: Vec<u32>,
    phi0: Vec<Complex64>,
    in_support: Vec<bool>,
    support: Vec<[i64; 3]>,
    everything: Vec<[i64; 3]>,
    observable: Option<Vec<Complex64>>,
}

impl Context {
    pub fn new(spec: &AmplitudeSpec, phi0_hat: &Field) -> Result<Self> {
        phi0_hat.expect(Representation::Momentum)?;
        if phi0_hat.lattice() != spec.lattice {
            return Err(Error::LatticeMismatch);
        }
        let lattice = spec.lattice;
        let side = lattice.side() as i64;
        let energies: Vec<f64> = (0..lattice.len()).map(|k| dispersion(lattice.dual_point(k))).collect();
        let mut levels: Vec<f64> = energies.clone();
        levels.sort_by(|a, b| a.total_cmp(b));
        levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        let level_of = energies
            .iter()
            .map(|e| levels.iter().position(|l| (l - e).abs() <= 1e-12).expect("listed level") as u32)
            .collect();
        let phi0 = phi0_hat.values().to_vec();
        let peak = phi0.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let in_support: Vec<bool> = phi0.iter().map(|v| v.norm() > 1e-14 * peak).collect();
        let mut everything = Vec::with_capacity(lattice.len());
        for a in 0..side {
            for b in 0..side {
                for c in 0..side {
                    everything.push([a, b, c]);
                }
            }
        }
        let site_of = everything.iter().map(|&r| lattice.wrap_index(r) as u32).collect();
        let support = everything.iter().copied().filter(|r| in_support[lattice.wrap_index(*r)]).collect();
        let observable = match &spec.observable {
            Observable::L2Delta => None,
            Observable::Test { j, eta } => Some(observable_matrix(j, *eta, lattice)?),
        };
        Ok(Self { lattice, side, lambda: spec.lambda, t: spec.t, levels, level_of, site_of, phi0, in_support, support, everything, observable })
    }

    pub fn l2_observable(&self) -> bool {
        self.observable.is_none()
    }

    pub fn volume(&self) -> f64 {
        self.lattice.len() as f64
    }
}

/// Where the momenta of one line live among the system variables.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LineSlot {
    pub offset: usize,
    pub conjugate: bool,
}

const MAX_FACTOR_VARS: usize = 32;
const DENSE_KERNEL_LIMIT: f64 = (1u32 << 22) as f64;

/// Momentum indices of a kernel, packed into 128 bits when they fit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum KernelKey {
    Packed(u128),
    Long(Vec<u32>),
}

impl KernelKey {
    fn new(indices: &[u32]) -> Self {
        if indices.len() <= 10 && indices.iter().all(|&i| i < 1 << 12) {
            let packed = indices.iter().fold(indices.len() as u128, |acc, &i| (acc << 12) | i as u128);
            KernelKey::Packed(packed)
        } else {
            KernelKey::Long(indices.to_vec())
        }
    }
}

/// Multiplicative word hasher for the kernel cache.
#[derive(Default)]
struct FxHasher(u64);

impl Hasher for FxHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(word));
        }
    }

    fn write_u64(&mut self, word: u64) {
        self.0 = (self.0.rotate_left(5) ^ word).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
enum FactorKind {
    /// `(−iλ)^n K(k_0..k_n) φ̂₀(k_0)`.
    Phi,
    /// `conj[(−iλ)^{n̄−n} K(k_{n+1}..k_{n̄+1}) φ̂₀(k_{n̄+1})]`.
    Psi,
    /// `Ĝ(k_{n+1}, k_n)`.
    Obs,
    /// Indicator of a bound endpoint lying in the support of `φ̂₀`.
    Support,
}

#[derive(Clone, Debug)]
struct Factor {
    kind: FactorKind,
    conjugate: bool,
    /// `(−iλ)^{vertices}` for kernel factors.
    coupling: Complex64,
    vars: Vec<usize>,
    slots: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Domain {
    All,
    Support,
}

/// An ordered walk over some free slots. Each factor is multiplied in at
/// the level of its deepest slot; a level may solve its slot from a
/// support indicator instead of scanning the whole dual grid.
#[derive(Clone, Debug, Default)]
struct Plan {
    slots: Vec<usize>,
    domains: Vec<Domain>,
    factors: Vec<Vec<usize>>,
    solvers: Vec<Option<(usize, i64)>>,
}

/// Conditioning tree over inner slots: fix `slot`, multiply the factors it
/// completes, then sum each child subtree independently.
#[derive(Clone, Debug)]
struct Node {
    slot: usize,
    solver: Option<(usize, i64)>,
    factors: Vec<usize>,
    children: Vec<Node>,
}

/// Sums over the solution set of a delta system, keeping some variables as
/// output keys.
pub(crate) struct Evaluator<'a> {
    ctx: &'a Context,
    kernels: RefCell<HashMap<KernelKey, Complex64, BuildHasherDefault<FxHasher>>>,
    dense: RefCell<Vec<Vec<Complex64>>>,
}

/// Current free slots and the variables they determine; variables are kept
/// unreduced and wrapped through a table on lookup.
struct State {
    free: Vec<[i64; 3]>,
    vals: Vec<[i64; 3]>,
}

impl State {
    #[inline]
    fn set(&mut self, p: &Prepared, slot: usize, value: [i64; 3]) {
        let old = self.free[slot];
        if old == value {
            return;
        }
        let delta: [i64; 3] = std::array::from_fn(|d| value[d] - old[d]);
        for &(var, c) in &p.dependents[slot] {
            let v = &mut self.vals[var];
            for d in 0..3 {
                v[d] += c * delta[d];
            }
        }
        self.free[slot] = value;
    }
}

struct Prepared {
    modulus: i64,
    /// Each variable as `Σ c·slot`.
    deps: Vec<Vec<(usize, i64)>>,
    /// Transpose of `deps`: the variables each slot enters, with coefficients.
    dependents: Vec<Vec<(usize, i64)>>,
    /// `wrap[v + bias] = v mod N` for every value a variable can take.
    wrap: Vec<i64>,
    bias: i64,
    factors: Vec<Factor>,
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

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a Context) -> Self {
        Self { ctx, kernels: RefCell::new(HashMap::default()), dense: RefCell::new(Vec::new()) }
    }

    /// `K_t` at momentum indices; cached by energy level, which is all it
    /// depends on. Short kernels go to a dense table indexed by the levels.
    fn kernel(&self, indices: &[u32]) -> Complex64 {
        let mut buffer = [0u32; MAX_FACTOR_VARS];
        let classes = &mut buffer[..indices.len()];
        for (c, &i) in classes.iter_mut().zip(indices) {
            *c = self.ctx.level_of[i as usize];
        }
        let levels = self.ctx.levels.len();
        let arity = classes.len();
        let dense_len = (levels as f64).powi(arity as i32);
        if dense_len <= DENSE_KERNEL_LIMIT {
            let slot = classes.iter().rev().fold(0usize, |acc, &c| acc * levels + c as usize);
            let mut dense = self.dense.borrow_mut();
            if dense.len() <= arity {
                dense.resize_with(arity + 1, Vec::new);
            }
            let table = &mut dense[arity];
            if table.is_empty() {
                *table = vec![Complex64::new(f64::NAN, 0.0); dense_len as usize];
            }
            if table[slot].re.is_nan() {
                table[slot] = self.compute_kernel(classes);
            }
            return table[slot];
        }
        let key = KernelKey::new(classes);
        if let Some(k) = self.kernels.borrow().get(&key) {
            return *k;
        }
        let k = self.compute_kernel(classes);
        self.kernels.borrow_mut().insert(key, k);
        k
    }

    fn compute_kernel(&self, classes: &[u32]) -> Complex64 {
        let energies: Vec<f64> = classes.iter().map(|&c| self.ctx.levels[c as usize]).collect();
        let k = time_simplex_kernel(&energies, self.ctx.t);
        let bound = simplex_volume(classes.len() - 1, self.ctx.t);
        assert!(k.norm() <= bound * (1.0 + 1e-9) + 1e-15, "time-simplex kernel exceeds t^n/n!");
        k
    }

    #[inline]
    fn site(&self, p: &Prepared, v: [i64; 3]) -> usize {
        let s = self.ctx.side;
        let w = |a: i64| p.wrap[(a + p.bias) as usize];
        self.ctx.site_of[((w(v[0]) * s + w(v[1])) * s + w(v[2])) as usize] as usize
    }

    fn factor(&self, p: &Prepared, f: usize, state: &State) -> Complex64 {
        let factor = &p.factors[f];
        let ctx = self.ctx;
        let mut buffer = [0u32; MAX_FACTOR_VARS];
        let idx = &mut buffer[..factor.vars.len()];
        for (i, &v) in idx.iter_mut().zip(&factor.vars) {
            *i = self.site(p, state.vals[v]) as u32;
        }
        let idx = &idx[..];
        let value = match factor.kind {
            FactorKind::Phi => factor.coupling * self.kernel(idx) * ctx.phi0[idx[0] as usize],
            FactorKind::Psi => {
                let last = idx[idx.len() - 1] as usize;
                (factor.coupling * self.kernel(idx) * ctx.phi0[last]).conj()
            }
            FactorKind::Obs => {
                let g = ctx.observable.as_ref().expect("test observable");
                g[idx[1] as usize * ctx.lattice.len() + idx[0] as usize]
            }
            FactorKind::Support => {
                return if ctx.in_support[idx[0] as usize] { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            }
        };
        if factor.conjugate {
            value.conj()
        } else {
            value
        }
    }

    fn plan(&self, p: &Prepared, slots: Vec<usize>, domains: Vec<Domain>, factors: &[usize]) -> Plan {
        let level_of = |s: usize| slots.iter().position(|&x| x == s);
        let mut plan = Plan {
            factors: vec![Vec::new(); slots.len()],
            solvers: vec![None; slots.len()],
            slots: slots.clone(),
            domains,
        };
        for &f in factors {
            let level = p.factors[f].slots.iter().filter_map(|&s| level_of(s)).max().unwrap_or(0);
            plan.factors[level].push(f);
        }
        for level in 0..slots.len() {
            if plan.domains[level] != Domain::All {
                continue;
            }
            let solver = plan.factors[level].iter().find_map(|&f| {
                let factor = &p.factors[f];
                if !matches!(factor.kind, FactorKind::Support) {
                    return None;
                }
                let c = p.deps[factor.vars[0]].iter().find(|&&(s, _)| s == slots[level])?.1;
                mod_inverse(c, p.modulus).map(|inv| (f, inv))
            });
            plan.solvers[level] = solver;
        }
        plan
    }

    fn plan_size(&self, plan: &Plan) -> f64 {
        (0..plan.slots.len())
            .map(|l| match (plan.solvers[l], plan.domains[l]) {
                (Some(_), _) | (None, Domain::Support) => self.ctx.support.len() as f64,
                (None, Domain::All) => self.ctx.everything.len() as f64,
            })
            .product()
    }

    /// Splits `slots` into components linked by `factors` and builds one
    /// conditioning tree per component. Each tree branches first on a slot
    /// a support indicator can solve, otherwise on the slot shared by most
    /// factors.
    fn decompose(&self, p: &Prepared, slots: &[usize], factors: &[usize]) -> Vec<Node> {
        let open = |f: usize| -> Vec<usize> { p.factors[f].slots.iter().copied().filter(|s| slots.contains(s)).collect() };
        let mut component_of: Vec<Option<usize>> = vec![None; slots.len()];
        let mut components: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let position = |s: usize| slots.iter().position(|&x| x == s).expect("open slot");
        for start in 0..slots.len() {
            if component_of[start].is_some() {
                continue;
            }
            let id = components.len();
            component_of[start] = Some(id);
            let mut members = vec![slots[start]];
            let mut stack = vec![slots[start]];
            while let Some(s) = stack.pop() {
                for &f in factors {
                    let linked = open(f);
                    if !linked.contains(&s) {
                        continue;
                    }
                    for t in linked {
                        let i = position(t);
                        if component_of[i].is_none() {
                            component_of[i] = Some(id);
                            members.push(t);
                            stack.push(t);
                        }
                    }
                }
            }
            members.sort_unstable();
            let fs = factors.iter().copied().filter(|&f| open(f).iter().any(|s| members.contains(s))).collect();
            components.push((members, fs));
        }
        components
            .into_iter()
            .map(|(members, fs)| {
                let solvable = |s: usize| -> Option<(usize, i64)> {
                    fs.iter().find_map(|&f| {
                        let factor = &p.factors[f];
                        if !matches!(factor.kind, FactorKind::Support) || open(f) != [s] {
                            return None;
                        }
                        let c = p.deps[factor.vars[0]].iter().find(|&&(x, _)| x == s)?.1;
                        mod_inverse(c, p.modulus).map(|inv| (f, inv))
                    })
                };
                let degree = |s: usize| fs.iter().filter(|&&f| open(f).contains(&s)).count();
                let slot = members
                    .iter()
                    .copied()
                    .find(|&s| solvable(s).is_some())
                    .unwrap_or_else(|| *members.iter().max_by_key(|&&s| (degree(s), std::cmp::Reverse(s))).expect("non-empty"));
                let (ready, rest): (Vec<usize>, Vec<usize>) = fs.iter().partition(|&&f| open(f) == [slot]);
                let remaining: Vec<usize> = members.iter().copied().filter(|&s| s != slot).collect();
                Node { slot, solver: solvable(slot), factors: ready, children: self.decompose(p, &remaining, &rest) }
            })
            .collect()
    }

    fn node_size(&self, node: &Node) -> f64 {
        let domain = if node.solver.is_some() { self.ctx.support.len() } else { self.ctx.everything.len() };
        domain as f64 * (1.0 + node.children.iter().map(|c| self.node_size(c)).sum::<f64>())
    }

    fn candidates(&self, p: &Prepared, slot: usize, solver: Option<(usize, i64)>, domain: Domain, state: &State) -> Vec<[i64; 3]> {
        match (solver, domain) {
            (Some((f, inv)), _) => {
                let var = p.factors[f].vars[0];
                let c = p.deps[var].iter().find(|&&(s, _)| s == slot).expect("solver slot").1;
                let m = p.modulus;
                let rest: [i64; 3] = std::array::from_fn(|d| state.vals[var][d] - c * state.free[slot][d]);
                self.ctx
                    .support
                    .iter()
                    .map(|target| std::array::from_fn(|d| (inv * (target[d] - rest[d])).rem_euclid(m)))
                    .collect()
            }
            (None, Domain::Support) => self.ctx.support.clone(),
            (None, Domain::All) => self.ctx.everything.clone(),
        }
    }

    fn eval_node(&self, p: &Prepared, node: &Node, state: &mut State) -> Complex64 {
        let solved;
        let candidates: &[[i64; 3]] = if node.solver.is_some() {
            solved = self.candidates(p, node.slot, node.solver, Domain::All, state);
            &solved
        } else {
            &self.ctx.everything
        };
        let zero = Complex64::new(0.0, 0.0);
        let mut total = zero;
        'next: for &value in candidates {
            state.set(p, node.slot, value);
            let mut a = Complex64::new(1.0, 0.0);
            for &f in &node.factors {
                let v = self.factor(p, f, state);
                if v == zero {
                    continue 'next;
                }
                a *= v;
            }
            for child in &node.children {
                a *= self.eval_node(p, child, state);
                if a == zero {
                    continue 'next;
                }
            }
            total += a;
        }
        total
    }

    fn walk(
        &self,
        p: &Prepared,
        plan: &Plan,
        level: usize,
        state: &mut State,
        acc: Complex64,
        leaf: &mut dyn FnMut(&mut State, Complex64),
    ) {
        if level == plan.slots.len() {
            leaf(state, acc);
            return;
        }
        let slot = plan.slots[level];
        let solved;
        let candidates: &[[i64; 3]] = match (plan.solvers[level], plan.domains[level]) {
            (None, Domain::Support) => &self.ctx.support,
            (None, Domain::All) => &self.ctx.everything,
            (solver, domain) => {
                solved = self.candidates(p, slot, solver, domain, state);
                &solved
            }
        };
        'next: for &value in candidates {
            state.set(p, slot, value);
            let mut a = acc;
            for &f in &plan.factors[level] {
                let v = self.factor(p, f, state);
                if v == Complex64::new(0.0, 0.0) {
                    continue 'next;
                }
                a *= v;
            }
            self.walk(p, plan, level + 1, state, a, leaf);
        }
    }

    /// `Σ_solutions Π_lines F_j`, grouped by the values of `keys`. Variables
    /// `k_0`, `k_{n̄+1}` only range over the support of `φ̂₀`.
    ///
    /// Free endpoints and keys are walked in an outer loop; the remaining
    /// free slots split into groups that share no factor, and each group is
    /// summed on its own.
    pub fn sum(
        &mut self,
        system: &DeltaSystem,
        layout: &LineLayout,
        lines: &[LineSlot],
        keys: &[usize],
    ) -> Result<HashMap<Vec<u32>, Complex64>> {
        let ctx = self.ctx;
        let n_bar = layout.n_bar;
        let n = layout.n;
        let is_endpoint =
            |v: Variable| matches!(v, Variable::Momentum { index, .. } if index == 0 || index == n_bar + 1);
        if n_bar + 1 > MAX_FACTOR_VARS {
            return Err(Error::TooLarge(format!("n_bar = {n_bar} exceeds the kernel length limit")));
        }
        let width = system.variables().len();
        let free_slots = system.free().len();
        let mut deps: Vec<Vec<(usize, i64)>> = vec![Vec::new(); width];
        for (slot, &f) in system.free().iter().enumerate() {
            deps[f] = vec![(slot, 1)];
        }
        for (col, expr) in system.bound() {
            deps[*col] = expr.clone();
        }
        let slots_of = |vars: &[usize]| {
            let mut s: Vec<usize> = vars.iter().flat_map(|&v| deps[v].iter().map(|&(slot, _)| slot)).collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let mut factors = Vec::new();
        let per = layout.momenta_per_line();
        let minus_i_lambda = Complex64::new(0.0, -ctx.lambda);
        for line in lines {
            let mut push = |kind, vars: Vec<usize>| {
                let coupling = match kind {
                    FactorKind::Phi | FactorKind::Psi => minus_i_lambda.powu(vars.len() as u32 - 1),
                    _ => Complex64::new(1.0, 0.0),
                };
                factors.push(Factor { kind, conjugate: line.conjugate, coupling, slots: slots_of(&vars), vars });
            };
            push(FactorKind::Phi, (line.offset..=line.offset + n).collect());
            push(FactorKind::Psi, (line.offset + n + 1..line.offset + per).collect());
            if ctx.observable.is_some() {
                push(FactorKind::Obs, vec![line.offset + n, line.offset + n + 1]);
            }
        }
        for (col, _) in system.bound() {
            if is_endpoint(system.variables()[*col]) {
                factors.push(Factor {
                    kind: FactorKind::Support,
                    conjugate: false,
                    coupling: Complex64::new(1.0, 0.0),
                    slots: slots_of(&[*col]),
                    vars: vec![*col],
                });
            }
        }
        let mut dependents: Vec<Vec<(usize, i64)>> = vec![Vec::new(); free_slots];
        for (var, expr) in deps.iter().enumerate() {
            for &(slot, c) in expr {
                dependents[slot].push((var, c));
            }
        }
        let modulus = system.modulus();
        let bias = deps.iter().map(|e| e.iter().map(|(_, c)| c.abs()).sum::<i64>()).max().unwrap_or(0) * modulus;
        let wrap = (-bias..=bias).map(|a| a.rem_euclid(modulus)).collect();
        let prepared = Prepared { modulus, deps, dependents, wrap, bias, factors };

        // outer slots: free endpoints and keys
        let key_slots: Vec<usize> =
            keys.iter().map(|k| system.free().iter().position(|f| f == k).expect("keys are free variables")).collect();
        let mut outer = Vec::new();
        let mut outer_domains = Vec::new();
        let mut inner = Vec::new();
        for (slot, &f) in system.free().iter().enumerate() {
            if is_endpoint(system.variables()[f]) {
                outer.push(slot);
                outer_domains.push(Domain::Support);
            } else if key_slots.contains(&slot) {
                outer.push(slot);
                outer_domains.push(Domain::All);
            } else {
                inner.push(slot);
            }
        }
        let (outer_factors, inner_factors): (Vec<usize>, Vec<usize>) =
            (0..prepared.factors.len()).partition(|&f| prepared.factors[f].slots.iter().all(|s| !inner.contains(s)));
        let outer_plan = self.plan(&prepared, outer, outer_domains, &outer_factors);
        let tree = self.decompose(&prepared, &inner, &inner_factors);
        let terms = self.plan_size(&outer_plan) * (1.0 + tree.iter().map(|n| self.node_size(n)).sum::<f64>());
        if terms > MAX_TERMS {
            return Err(Error::TooLarge(format!("amplitude sum has {terms:.3e} terms, limit {MAX_TERMS:.0e}")));
        }

        let mut out: HashMap<Vec<u32>, Complex64> = HashMap::new();
        let mut state = State { free: vec![[0i64; 3]; free_slots], vals: vec![[0i64; 3]; width] };
        let one = Complex64::new(1.0, 0.0);
        self.walk(&prepared, &outer_plan, 0, &mut state, one, &mut |state, acc| {
            let mut total = acc;
            for node in &tree {
                total *= self.eval_node(&prepared, node, state);
                if total == Complex64::new(0.0, 0.0) {
                    return;
                }
            }
            let key: Vec<u32> = keys.iter().map(|&k| self.site(&prepared, state.vals[k]) as u32).collect();
            *out.entry(key).or_insert(Complex64::new(0.0, 0.0)) += total;
        });
        Ok(out)
    }
}

/// `μ^{#momenta} |Λ|^{#constraints}`, the measure and delta normalization.
pub(crate) fn prefactor(ctx: &Context, momenta: usize, constraints: usize) -> f64 {
    let v = ctx.volume();
    v.powi(constraints as i32 - momenta as i32)
}

/// Amplitude of `g` with an explicit line-conjugation pattern.
pub fn evaluate_amplitude_with_layout(g: &ContractionGraph, spec: &AmplitudeSpec, phi0_hat: &Field, conjugate: &[bool]) -> Result<Complex64> {
    let ctx = Context::new(spec, phi0_hat)?;
    evaluate_in_context(g, &ctx, conjugate)
}

pub(crate) fn evaluate_in_context(g: &ContractionGraph, ctx: &Context, conjugate: &[bool]) -> Result<Complex64> {
    let layout = LineLayout { n_bar: g.n_bar(), n: g.n(), conjugate: conjugate.to_vec(), l2_observable: ctx.l2_observable() };
    let system = DeltaSystem::for_graph(g, &layout, ctx.side)?;
    let per = layout.momenta_per_line();
    let lines: Vec<LineSlot> = (0..g.r()).map(|j| LineSlot { offset: j * per, conjugate: conjugate[j] }).collect();
    let sums = Evaluator::new(ctx).sum(&system, &layout, &lines, &[])?;
    let total = sums.values().copied().sum::<Complex64>();
    Ok(total * prefactor(ctx, system.variables().len(), system.constraint_count()))
}

/// Amplitude of `g`: lines `1, 3, …` enter complex conjugated, so that
/// graph sums reproduce `E[Π_j X_j]` with `X_j` conjugated on odd lines.
pub fn evaluate_amplitude(g: &ContractionGraph, spec: &AmplitudeSpec, phi0_hat: &Field) -> Result<Complex64> {
    let conjugate = LineLayout::alternating(g.r(), g.n_bar(), g.n(), true).conjugate;
    evaluate_amplitude_with_layout(g, spec, phi0_hat, &conjugate)
}

/// Sum of amplitudes over all graphs kept by `mode`.
pub fn graph_sum(r: usize, n_bar: usize, n: usize, mode: FilterMode, spec: &AmplitudeSpec, phi0_hat: &Field) -> Result<Complex64> {
    let ctx = Context::new(spec, phi0_hat)?;
    let conjugate = LineLayout::alternating(r, n_bar, n, true).conjugate;
    let graphs: Vec<ContractionGraph> = graphs::filter(graphs::enumerate(r, n_bar, n)?, mode).collect();
    let amplitudes: Vec<Complex64> =
        graphs.par_iter().map(|g| evaluate_in_context(g, &ctx, &conjugate)).collect::<Result<_>>()?;
    Ok(amplitudes.iter().sum())
}

/// Normalized single plane wave `φ̂₀ = |Λ|^{1/2} δ_{k, k₀}` on the dual grid.
pub fn single_mode(lattice: LatticeSpec, offsets: [i64; 3]) -> Field {
    let mut f = Field::zeros(lattice, Representation::Momentum);
    f.values_mut()[lattice.wrap_index(offsets)] = Complex64::new((lattice.len() as f64).sqrt(), 0.0);
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{enumerate, VertexId};
    use crate::lattice::{inverse_fourier, Fourier};
    use crate::mixture::GaussianMixture;
    use crate::wigner::{pair_bilinear, TrigPoly};

    fn spec(lambda: f64) -> AmplitudeSpec {
        AmplitudeSpec::new(LatticeSpec::unit(1).unwrap(), lambda, 1.5, Observable::L2Delta).unwrap()
    }

    #[test]
    fn ladder_matches_first_order_formula() {
        let lat = LatticeSpec::unit(1).unwrap();
        let phi0 = single_mode(lat, [1, 0, 0]);
        let g = ContractionGraph::new(1, 2, 1, vec![(VertexId::new(1, 1), VertexId::new(1, 2))]).unwrap();
        let lambda = 0.4;
        let a = evaluate_amplitude(&g, &spec(lambda), &phi0).unwrap();
        // E‖φ_1‖² = λ² μ Σ_p |K(e(k₀), e(p))|²
        let e0 = dispersion(lat.dual_point(lat.wrap_index([1, 0, 0])));
        let sum: f64 = (0..lat.len()).map(|p| time_simplex_kernel(&[e0, dispersion(lat.dual_point(p))], 1.5).norm_sqr()).sum();
        let expected = lambda * lambda * lat.dual_measure() * sum;
        assert!((a - Complex64::new(expected, 0.0)).norm() < 1e-12 * expected);
    }

    #[test]
    fn zero_coupling_kills_interacting_graphs() {
        let lat = LatticeSpec::unit(1).unwrap();
        let phi0 = single_mode(lat, [1, 0, 0]);
        let g = ContractionGraph::new(2, 1, 1, vec![(VertexId::new(1, 1), VertexId::new(2, 1))]).unwrap();
        assert_eq!(evaluate_amplitude(&g, &spec(0.0), &phi0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn lambda_homogeneity() {
        let lat = LatticeSpec::unit(1).unwrap();
        let phi0 = single_mode(lat, [1, 0, 0]);
        for g in enumerate(2, 2, 1).unwrap() {
            let a = evaluate_amplitude(&g, &spec(0.3), &phi0).unwrap();
            let b = evaluate_amplitude(&g, &spec(0.6), &phi0).unwrap();
            assert!((b - a * 16.0).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn observable_matrix_reproduces_pairing() {
        let lat = LatticeSpec::unit(1).unwrap();
        let j = TestFunction::product(GaussianMixture::centered(0.8).unwrap(), TrigPoly::cosines(&[([0, 0, 0], 1.0), ([1, 0, 0], 0.5)]));
        let g = observable_matrix(&j, 0.5, lat).unwrap();
        let f = Fourier::new(lat);
        let mk = |seed: u64| {
            let mut r = crate::rng::stream(seed, 5, 0);
            Field::from_fn(lat, Representation::Momentum, |_| {
                Complex64::new(crate::rng::standard_normal(&mut r), crate::rng::standard_normal(&mut r))
            })
        };
        let (psi_hat, phi_hat) = (mk(1), mk(2));
        let direct = pair_bilinear(&j, &inverse_fourier(&psi_hat).unwrap(), &f.inverse(&phi_hat).unwrap(), 0.5).unwrap();
        let len = lat.len();
        let mu = lat.dual_measure();
        let mut via = Complex64::new(0.0, 0.0);
        for kp in 0..len {
            for k in 0..len {
                via += psi_hat.values()[kp].conj() * g[kp * len + k] * phi_hat.values()[k];
            }
        }
        via *= mu * mu;
        assert!((via - direct).norm() < 1e-10 * direct.norm());
    }
}
