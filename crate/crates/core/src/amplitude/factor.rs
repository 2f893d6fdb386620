//! Factorization of amplitudes over reduced 1-particle lines and over
//! connected components.

use std::collections::HashMap;

use num_complex::Complex64;

use super::delta::{DeltaSystem, LineLayout, Variable};
use super::eval::{evaluate_in_context, prefactor, AmplitudeSpec, Context, Evaluator, LineSlot};
use crate::error::{Error, Result};
use crate::graphs::{classify, reduce, ContractionGraph, ReducedLine};
use crate::lattice::Field;

type Table = Vec<(Vec<u32>, Complex64)>;

/// `∫ du Π_j Amp(π_j(u^{(j)}))`: each reduced line is summed into a table
/// keyed by its transfer momenta, then the tables are joined on shared ids.
pub fn factorized_amplitude(lines: &[ReducedLine], n_bar: usize, n: usize, spec: &AmplitudeSpec, phi0_hat: &Field) -> Result<Complex64> {
    let ctx = Context::new(spec, phi0_hat)?;
    factorized_in_context(lines, n_bar, n, &ctx)
}

fn factorized_in_context(lines: &[ReducedLine], n_bar: usize, n: usize, ctx: &Context) -> Result<Complex64> {
    let r = lines.len();
    let layout = LineLayout::alternating(r, n_bar, n, ctx.l2_observable());
    let mut tables: Vec<(Vec<usize>, Table)> = Vec::with_capacity(r);
    let mut max_id = 0;
    for line in lines {
        let system = DeltaSystem::for_reduced_line(line, &layout, ctx.side)?;
        let keys: Vec<usize> = (0..system.variables().len())
            .filter(|&v| matches!(system.variables()[v], Variable::Transfer { .. }))
            .collect();
        let ids: Vec<usize> = keys
            .iter()
            .map(|&v| match system.variables()[v] {
                Variable::Transfer { id } => id,
                _ => unreachable!(),
            })
            .collect();
        max_id = ids.iter().copied().fold(max_id, usize::max);
        let slot = LineSlot { offset: 0, conjugate: layout.conjugate[line.line - 1] };
        let sums: HashMap<Vec<u32>, Complex64> = Evaluator::new(ctx).sum(&system, &layout, &[slot], &keys)?;
        let scale = prefactor(ctx, layout.momenta_per_line(), system.constraint_count());
        let mut table: Table = sums.into_iter().map(|(k, v)| (k, v * scale)).collect();
        table.sort_by(|a, b| a.0.cmp(&b.0));
        tables.push((ids, table));
    }
    let joined = join(&tables, max_id);
    let mu = 1.0 / ctx.volume();
    Ok(joined * mu.powi(max_id as i32))
}

/// Table `d` indexed by the values of the ids it shares with tables `< d`.
struct Indexed<'t> {
    ids: &'t [usize],
    shared: Vec<usize>,
    buckets: HashMap<Vec<u32>, Vec<(&'t [u32], Complex64)>>,
}

fn join(tables: &[(Vec<usize>, Table)], max_id: usize) -> Complex64 {
    let mut seen = vec![false; max_id + 1];
    let indexed: Vec<Indexed> = tables
        .iter()
        .map(|(ids, table)| {
            let shared: Vec<usize> = (0..ids.len()).filter(|&i| seen[ids[i]]).collect();
            for &id in ids {
                seen[id] = true;
            }
            let mut buckets: HashMap<Vec<u32>, Vec<(&[u32], Complex64)>> = HashMap::new();
            for (key, value) in table {
                let probe = shared.iter().map(|&i| key[i]).collect();
                buckets.entry(probe).or_default().push((&key[..], *value));
            }
            Indexed { ids, shared, buckets }
        })
        .collect();
    let mut assignment = vec![0u32; max_id + 1];
    walk(&indexed, 0, &mut assignment)
}

fn walk(tables: &[Indexed], depth: usize, assignment: &mut [u32]) -> Complex64 {
    let Some(t) = tables.get(depth) else {
        return Complex64::new(1.0, 0.0);
    };
    let probe: Vec<u32> = t.shared.iter().map(|&i| assignment[t.ids[i]]).collect();
    let Some(rows) = t.buckets.get(&probe) else {
        return Complex64::new(0.0, 0.0);
    };
    let mut total = Complex64::new(0.0, 0.0);
    for (key, value) in rows {
        for (&id, &u) in t.ids.iter().zip(key.iter()) {
            assignment[id] = u;
        }
        total += value * walk(tables, depth + 1, assignment);
    }
    total
}

fn relative(lhs: Complex64, rhs: Complex64) -> f64 {
    let scale = lhs.norm();
    if scale > 0.0 {
        (lhs - rhs).norm() / scale
    } else {
        rhs.norm()
    }
}

/// `|Amp(π) − ∫du Π_j Amp(π_j)| / |Amp(π)|` for a connected graph.
pub fn verify_factorization(g: &ContractionGraph, spec: &AmplitudeSpec, phi0_hat: &Field) -> Result<f64> {
    if classify(g).components.len() != 1 {
        return Err(Error::InvalidParameter("factorization check expects a connected graph".into()));
    }
    let ctx = Context::new(spec, phi0_hat)?;
    let conjugate = LineLayout::alternating(g.r(), g.n_bar(), g.n(), true).conjugate;
    let lhs = evaluate_in_context(g, &ctx, &conjugate)?;
    let rhs = factorized_in_context(&reduce(g), g.n_bar(), g.n(), &ctx)?;
    Ok(relative(lhs, rhs))
}

/// Relative difference between the amplitude of `g` and the product of the
/// amplitudes of its connected components (each line keeps its conjugation).
pub fn component_factorization(g: &ContractionGraph, spec: &AmplitudeSpec, phi0_hat: &Field) -> Result<f64> {
    let ctx = Context::new(spec, phi0_hat)?;
    let conjugate = LineLayout::alternating(g.r(), g.n_bar(), g.n(), true).conjugate;
    let whole = evaluate_in_context(g, &ctx, &conjugate)?;
    let mut product = Complex64::new(1.0, 0.0);
    for component in classify(g).components {
        let sub = g.restrict(&component)?;
        let conj: Vec<bool> = component.iter().map(|&l| conjugate[l - 1]).collect();
        product *= evaluate_in_context(&sub, &ctx, &conj)?;
    }
    Ok(relative(whole, product))
}
