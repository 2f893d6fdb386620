//! Per-graph Feynman amplitudes, the Wick Monte Carlo oracle, the
//! factorization check and the singular-integral estimators.

pub mod delta;
pub mod eval;
pub mod factor;
pub mod kernel;
pub mod singular;
pub mod wick;

pub use delta::{build_delta_system, DeltaSystem, LineLayout, Variable};
pub use eval::{evaluate_amplitude, graph_sum, observable_matrix, single_mode, AmplitudeSpec, Observable};
pub use factor::{component_factorization, factorized_amplitude, verify_factorization};
pub use kernel::time_simplex_kernel;
pub use singular::{a_eps_integral, crossing_integral, fit_exponent, propagator_l1, propagator_sup, MomentumProfile, SingularEstimate};
pub use wick::{wick_oracle, wick_oracle_cases, OracleConfig, WickCase, WickReport};
