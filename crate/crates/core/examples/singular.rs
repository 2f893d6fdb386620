//! Singular momentum integrals: the propagator L1 norm and the crossing
//! integral as the regularization shrinks.

use boltzgraph::amplitude::{crossing_integral, fit_exponent, propagator_l1};

fn main() -> boltzgraph::Result<()> {
    for eps in [1e-1, 1e-2, 1e-3] {
        println!("eps {eps:<6} L1 {:.5}  log(1/eps) {:.5}", propagator_l1(3.0, eps, 16)?, (1.0 / eps).ln());
    }
    let eps = [0.1, 0.03, 0.01];
    let mut values = Vec::new();
    for &e in &eps {
        let est = crossing_integral(e, [3.0; 3], [0.1, 0.2, 0.3], 1_000_000, 1)?;
        println!("eps {e:<5} crossing {:.4} +- {:.4} reliable {}", est.estimate.value, est.estimate.se, est.reliable);
        values.push(est.estimate.value);
    }
    println!("fitted exponent {:.3}", fit_exponent(&eps, &values));
    Ok(())
}
