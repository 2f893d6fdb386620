//! Wigner transform of a WKB state and its pairing with a test function, both
//! through the (xi, v) field and directly from the state.

use boltzgraph::initial::{build_wkb, WkbSpec};
use boltzgraph::lattice::{Fourier, LatticeSpec};
use boltzgraph::mixture::GaussianMixture;
use boltzgraph::wigner::{pair, pair_state, wigner_fourier, TestFunction, TrigPoly};

fn main() -> boltzgraph::Result<()> {
    let lattice = LatticeSpec::unit(4)?;
    let eta = 0.5;
    let phi = build_wkb(&WkbSpec::plane_wave(0.4, [0.1, 0.0, 0.0], eta)?, lattice)?;
    let w = wigner_fourier(&Fourier::new(lattice).forward(&phi)?, None)?;
    let j = TestFunction::product(GaussianMixture::centered(0.6)?, TrigPoly::cosines(&[([1, 0, 0], 1.0)]));
    println!("mass {:.14}", w.mass());
    println!("<J, W> from the field {:.12}", pair(&j, &w, eta)?);
    println!("<J, W> from the state {:.12}", pair_state(&j, &phi, eta)?);
    Ok(())
}
