//! Disorder-ensemble experiments: configuration, moment sweeps against the
//! Boltzmann reference, the parameter-choice calculator and persistence.
//!
//! All results are finite-`L`, finite-`λ` trends; none of the `λ → 0`
//! limits is taken.

pub mod config;
pub mod moments;
pub mod output;
pub mod params;

pub use config::{BoltzmannConfig, EvolveConfig, ExperimentConfig};
pub use moments::{
    boltzmann_reference, check_replicas, compare_to_boltzmann, lattice_size_check, replica_samples, run_moment_sweep,
    summarize, MomentReport, MomentSummary, TrendRow, TrendSummary,
};
pub use output::{sha256_hex, write_csv, write_manifest, write_moment_reports, write_trend};
pub use params::{parameter_calculator, parameter_calculator_log, threshold_log_inv_epsilon, Inequality, ParameterChoice};
