//! Evolves a WKB state under one disorder realization with each propagator and
//! checks the truncated Duhamel expansion against exact diagonalization.

use boltzgraph::dynamics::{duhamel_hierarchy, evolve, sample_disorder, HamiltonianSpec, Method};
use boltzgraph::initial::{build_wkb, WkbSpec};
use boltzgraph::lattice::LatticeSpec;

fn main() -> boltzgraph::Result<()> {
    let lattice = LatticeSpec::unit(4)?;
    let phi0 = build_wkb(&WkbSpec::plane_wave(0.5, [0.25, 0.0, 0.0], 1.0)?, lattice)?;
    let disorder = sample_disorder(lattice, 7);
    let h = HamiltonianSpec::new(0.2, &disorder)?;
    let exact = evolve(&phi0, &h, 2.0, Method::ExactDiag)?;
    for method in [Method::SplitStep { dt: 0.1 }, Method::SplitStep { dt: 0.01 }, Method::Fourth { dt: 0.1 }] {
        let phi = evolve(&phi0, &h, 2.0, method)?;
        println!("{method:?}: norm {:.14}, distance to exact {:.2e}", phi.norm(), phi.l2_diff(&exact));
    }
    let d = duhamel_hierarchy(&phi0, &h, 2.0, 4, 1e-3)?;
    for (n, term) in d.terms.iter().enumerate() {
        println!("|phi_{n}| = {:.6e}", term.norm());
    }
    println!("|R| = {:.6e}, identity error {:.2e}", d.remainder.norm(), d.total().l2_diff(&exact));
    Ok(())
}
