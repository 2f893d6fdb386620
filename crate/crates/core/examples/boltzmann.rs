//! Linear Boltzmann transport of the WKB limit law with the particle solver.

use boltzgraph::boltzmann::{build_rate_table, observe, run};
use boltzgraph::experiment::ExperimentConfig;
use boltzgraph::initial::macroscopic_initial_sampler;

fn main() -> boltzgraph::Result<()> {
    let config = ExperimentConfig::default();
    let rates = build_rate_table(60, 0.01, 2_000_000, 1)?;
    println!("Sigma(3.05) = {:.4}, max rate {:.4}", rates.rate(3.05), rates.max_rate());
    let mut ensemble = macroscopic_initial_sampler(&config.wkb, 20_000, 2)?;
    for step in 1..=4 {
        let out = run(&ensemble, 0.25 * step as f64, 0.05, &rates, step)?;
        let collisions: u32 = out.collisions.iter().sum();
        ensemble = out.ensemble;
        let j = observe(&config.j, &ensemble);
        println!("T {:.2}  <J,F> {:.5} +- {:.5}  collisions {collisions}", ensemble.time(), j.value, j.se);
    }
    Ok(())
}
