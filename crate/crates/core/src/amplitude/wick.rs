//! Monte Carlo over disorder realizations as an oracle for graph sums.

use num_complex::Complex64;
use rayon::prelude::*;

use super::eval::{graph_sum, AmplitudeSpec, Observable};
use crate::dynamics::{duhamel_hierarchy, sample_disorder_replica, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::graphs::FilterMode;
use crate::lattice::{inverse_fourier, Field, LatticeSpec};
use crate::rng::{self, purpose};
use crate::stats::{mean_se, Estimate};
use crate::wigner::pair_bilinear;

/// One moment `E[Π_j X_j]` (or its truncated version) with
/// `X_j = ⟨φ_{n̄−n,t}, G φ_{n,t}⟩`, conjugated on odd lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WickCase {
    pub r: usize,
    pub n_bar: usize,
    pub n: usize,
    /// `Full` for the plain moment, `TwoConn` for `E[Π_j (X_j − E X_j)]`.
    pub mode: FilterMode,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    pub samples: usize,
    pub seed: u64,
    /// Step of the hierarchy integrator.
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct WickReport {
    pub case: WickCase,
    /// Real part of the Monte Carlo moment.
    pub estimate: Estimate,
    pub imag_estimate: f64,
    pub graph_sum: Complex64,
    pub z_score: f64,
}

impl WickReport {
    pub fn within(&self, z: f64) -> bool {
        self.z_score.abs() <= z
    }
}

/// Line observables `X(n̄, n)` for every disorder sample.
fn line_samples(pairs: &[(usize, usize)], spec: &AmplitudeSpec, phi0: &Field, config: &OracleConfig) -> Result<Vec<Vec<Complex64>>> {
    let order = pairs.iter().map(|&(n_bar, n)| n.max(n_bar - n)).max().unwrap_or(0) + 1;
    let lattice = spec.lattice;
    (0..config.samples as u64)
        .into_par_iter()
        .map(|s| {
            let disorder = sample_disorder_replica(lattice, config.seed, s);
            let h = HamiltonianSpec::new(spec.lambda, &disorder)?;
            let d = duhamel_hierarchy(phi0, &h, spec.t, order, config.dt)?;
            pairs
                .iter()
                .map(|&(n_bar, n)| {
                    let (psi, phi) = (&d.terms[n_bar - n], &d.terms[n]);
                    match &spec.observable {
                        Observable::L2Delta => psi.inner(phi),
                        Observable::Test { j, eta } => pair_bilinear(j, psi, phi, *eta),
                    }
                })
                .collect()
        })
        .collect()
}

/// Runs several cases on one shared set of disorder samples.
pub fn wick_oracle_cases(cases: &[WickCase], spec: &AmplitudeSpec, phi0_hat: &Field, config: &OracleConfig) -> Result<Vec<WickReport>> {
    if config.samples < 2 {
        return Err(Error::InvalidParameter("the oracle needs at least two samples".into()));
    }
    for c in cases {
        if !matches!(c.mode, FilterMode::Full | FilterMode::TwoConn) {
            return Err(Error::InvalidParameter("oracle cases are full or two-connected moments".into()));
        }
        if c.n > c.n_bar {
            return Err(Error::InvalidParameter("n exceeds n_bar".into()));
        }
    }
    let mut pairs: Vec<(usize, usize)> = cases.iter().map(|c| (c.n_bar, c.n)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let phi0 = inverse_fourier(phi0_hat)?;
    let samples = line_samples(&pairs, spec, &phi0, config)?;
    let m = samples.len() as f64;
    cases
        .iter()
        .map(|c| {
            let slot = pairs.binary_search(&(c.n_bar, c.n)).expect("listed");
            let mean: Complex64 = samples.iter().map(|s| s[slot]).sum::<Complex64>() / m;
            let centre = if c.mode == FilterMode::TwoConn { mean } else { Complex64::new(0.0, 0.0) };
            let values: Vec<Complex64> = samples
                .iter()
                .map(|s| {
                    let x = s[slot] - centre;
                    (1..=c.r).map(|j| if j % 2 == 1 { x.conj() } else { x }).product()
                })
                .collect();
            let re: Vec<f64> = values.iter().map(|v| v.re).collect();
            let im = values.iter().map(|v| v.im).sum::<f64>() / m;
            let estimate = mean_se(&re);
            if !(estimate.se > 0.0) {
                return Err(Error::DegenerateError);
            }
            let sum = graph_sum(c.r, c.n_bar, c.n, c.mode, spec, phi0_hat)?;
            Ok(WickReport { case: *c, estimate, imag_estimate: im, graph_sum: sum, z_score: (estimate.value - sum.re) / estimate.se })
        })
        .collect()
}

/// Graph sum over all pairings against the disorder Monte Carlo moment.
pub fn wick_oracle(r: usize, n_bar: usize, n: usize, spec: &AmplitudeSpec, phi0_hat: &Field, config: &OracleConfig) -> Result<WickReport> {
    let case = WickCase { r, n_bar, n, mode: FilterMode::Full };
    Ok(wick_oracle_cases(&[case], spec, phi0_hat, config)?.remove(0))
}

/// `V̂(k) = Σ_x e^{−2πik·x} ω(x)` at dual offsets `k`.
fn potential_hat(lattice: LatticeSpec, omega: &[f64], k: [i64; 3]) -> Complex64 {
    let p = lattice.dual_point(lattice.wrap_index(k));
    let tau = std::f64::consts::TAU;
    (0..lattice.len())
        .map(|x| {
            let s = lattice.site(x);
            Complex64::from_polar(omega[x], -tau * (p[0] * s[0] + p[1] * s[1] + p[2] * s[2]))
        })
        .sum()
}

/// Exact Gaussian moment `E[Π_i V̂(k_i)] = Σ_pairings Π |Λ| δ(k_a + k_b)`.
pub fn potential_moment_exact(lattice: LatticeSpec, ks: &[[i64; 3]]) -> f64 {
    fn rec(rest: &mut Vec<[i64; 3]>, side: i64, volume: f64) -> f64 {
        if rest.is_empty() {
            return 1.0;
        }
        let first = rest.remove(0);
        let mut total = 0.0;
        for i in 0..rest.len() {
            let other = rest[i];
            if (0..3).all(|d| (first[d] + other[d]).rem_euclid(side) == 0) {
                let taken = rest.remove(i);
                total += volume * rec(rest, side, volume);
                rest.insert(i, taken);
            }
        }
        rest.insert(0, first);
        total
    }
    let mut ks = ks.to_vec();
    rec(&mut ks, lattice.side() as i64, lattice.len() as f64)
}

/// Monte Carlo estimate of `Re E[Π_i V̂(k_i)]` over i.i.d. standard normal potentials.
pub fn potential_moment_mc(lattice: LatticeSpec, ks: &[[i64; 3]], samples: usize, seed: u64) -> Estimate {
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut r = rng::stream(seed, purpose::ORACLE, s);
            let omega: Vec<f64> = (0..lattice.len()).map(|_| rng::standard_normal(&mut r)).collect();
            ks.iter().map(|&k| potential_hat(lattice, &omega, k)).product::<Complex64>().re
        })
        .collect();
    mean_se(&values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_pair_moment() {
        let lat = LatticeSpec::unit(1).unwrap();
        assert_eq!(potential_moment_exact(lat, &[[1, 0, 0], [-1, 0, 0]]), 27.0);
        assert_eq!(potential_moment_exact(lat, &[[1, 0, 0], [1, 0, 0]]), 0.0);
        assert_eq!(potential_moment_exact(lat, &[[1, 0, 0], [0, 0, 0], [1, 1, 0]]), 0.0);
        // three pairings of four zero momenta
        assert_eq!(potential_moment_exact(lat, &[[0, 0, 0]; 4]), 3.0 * 27.0 * 27.0);
    }

    #[test]
    fn pair_moment_by_monte_carlo() {
        let lat = LatticeSpec::unit(1).unwrap();
        let ks = [[1, 0, 0], [-1, 0, 0]];
        let est = potential_moment_mc(lat, &ks, 20_000, 3);
        assert!(((est.value - potential_moment_exact(lat, &ks)) / est.se).abs() < 4.0);
    }
}
