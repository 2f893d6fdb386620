//! A small moment sweep: replica statistics of <J, W> against the Boltzmann
//! reference at decreasing coupling.

use boltzgraph::experiment::{compare_to_boltzmann, run_moment_sweep, ExperimentConfig};

const CONFIG: &str = "
[lattice]
L = 8
[sweep]
lambdas = 0.8, 0.7, 0.6, 0
T = 0.2
replicas = 50
[wkb]
h.widths = 0.5
eta = 0.64
[boltzmann]
particles = 5000
bins = 30
";

fn main() -> boltzgraph::Result<()> {
    let config = ExperimentConfig::parse(CONFIG)?;
    let reports = run_moment_sweep(&config)?;
    for r in &reports {
        let (m, v) = (r.mean(), r.variance());
        println!("lambda {:<4} mean {:.5} +- {:.5}  var {:.3e} +- {:.1e}", r.lambda, m.value, m.se, v.value, v.se);
    }
    let trend = compare_to_boltzmann(&reports)?;
    println!("variance decreasing {}, deviation non-increasing {}", trend.variance_strictly_decreasing, trend.deviation_non_increasing);
    Ok(())
}
