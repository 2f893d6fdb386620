//! Graph sums against the disorder average they expand, and the factorization
//! of a connected amplitude into reduced one-particle lines.

use boltzgraph::amplitude::{graph_sum, single_mode, verify_factorization, wick_oracle, AmplitudeSpec, Observable, OracleConfig};
use boltzgraph::graphs::{classify, enumerate, FilterMode};
use boltzgraph::lattice::LatticeSpec;

fn main() -> boltzgraph::Result<()> {
    let lattice = LatticeSpec::unit(2)?;
    let spec = AmplitudeSpec::new(lattice, 1.0, 1.0, Observable::L2Delta)?;
    let phi = single_mode(lattice, [1, 0, 0]);
    for (r, n_bar) in [(1, 2), (2, 2)] {
        let sum = graph_sum(r, n_bar, n_bar / 2, FilterMode::Full, &spec, &phi)?;
        let mc = wick_oracle(r, n_bar, n_bar / 2, &spec, &phi, &OracleConfig { samples: 20_000, seed: 1, dt: 0.1 })?;
        println!("r={r} nbar={n_bar}: graph sum {:.6e}, Monte Carlo {:.6e} +- {:.1e}", sum.re, mc.estimate.value, mc.estimate.se);
    }
    let g = enumerate(2, 2, 1)?.find(|g| classify(g).components.len() == 1).expect("a connected graph");
    println!("factorization residual of {}: {:.2e}", g.pair_list(), verify_factorization(&g, &spec, &phi)?);
    Ok(())
}
