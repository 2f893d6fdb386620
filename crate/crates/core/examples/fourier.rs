//! Forward and inverse lattice transforms, Parseval, and the dispersion relation.

use boltzgraph::lattice::{dispersion, Field, Fourier, LatticeSpec, Representation};
use num_complex::Complex64;

fn main() -> boltzgraph::Result<()> {
    let lattice = LatticeSpec::unit(4)?;
    let f = Field::from_fn(lattice, Representation::Position, |x| {
        Complex64::new((-0.3 * (x[0] * x[0] + x[1] * x[1])).exp(), 0.1 * x[2])
    });
    let fourier = Fourier::new(lattice);
    let hat = fourier.forward(&f)?;
    let back = fourier.inverse(&hat)?;
    println!("sites {}  |f|^2 {:.12}  |f^|^2 {:.12}", lattice.len(), f.norm_sq(), hat.norm_sq());
    println!("roundtrip error {:.2e}", back.max_abs_diff(&f));
    for k in [[0.0; 3], [0.25, 0.0, 0.0], [0.5; 3]] {
        println!("e({k:?}) = {}", dispersion(k));
    }
    Ok(())
}
