//! Plane-wave WKB data: the lattice state, its singularity statistic across
//! scales, and the macroscopic initial law.

use boltzgraph::initial::{build_wkb, macroscopic_initial_sampler, wkb_singularity_diagnostic, WkbSpec};
use boltzgraph::lattice::LatticeSpec;

fn main() -> boltzgraph::Result<()> {
    for eta in [0.2, 0.1, 0.05] {
        let spec = WkbSpec::plane_wave(0.4, [0.25, 0.0, 0.0], eta)?;
        let lattice = LatticeSpec::unit(spec.mass_radius().ceil() as usize + 1)?;
        let phi = build_wkb(&spec, lattice)?;
        let diag = wkb_singularity_diagnostic(&spec, lattice)?;
        println!("eta {eta:<5} L {:<3} norm {:.12} statistic {:.5e}", lattice.half_width(), phi.norm(), diag.l4_norm_sq);
    }
    let spec = WkbSpec::plane_wave(0.4, [0.25, 0.0, 0.0], 0.1)?;
    let ensemble = macroscopic_initial_sampler(&spec, 10_000, 1)?;
    let mean_x: f64 = ensemble.particles().iter().map(|p| p.x[0] * p.weight).sum();
    println!("sampled {} particles, mean X_1 {mean_x:.4}, V = {:?}", ensemble.len(), ensemble.particles()[0].v);
    Ok(())
}
