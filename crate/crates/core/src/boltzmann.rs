//! Particle Monte Carlo for the linear Boltzmann equation
//!
//! `∂_T F + sin(2πV)·∇_X F = ∫dU 2π δ(e_Δ(U) − e_Δ(V)) [F(U) − F(V)]`
//!
//! read as a jump process: free flight with velocity `sin(2πV)`, jumps at
//! rate `Σ(e_Δ(V))` to a velocity uniform on the energy shell.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{dispersion, reduce_torus};
use crate::rng::{self, purpose};
use crate::stats::Estimate;
use crate::wigner::TestFunction;

pub const DEFAULT_SHELL_WIDTH: f64 = 0.01;

/// Proposals allowed per shell draw.
pub const REJECTION_BUDGET: usize = 10_000_000;

const BLOCK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    particles: Vec<Particle>,
    time: f64,
}

impl ParticleEnsemble {
    pub fn new(particles: Vec<Particle>, time: f64) -> Self {
        Self { particles, time }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Weighted mean of `e_Δ(V)`.
    pub fn mean_energy(&self) -> f64 {
        self.particles.iter().map(|p| p.weight * dispersion(p.v)).sum::<f64>() / self.mass()
    }
}

/// Total collision rate `Σ(e) = 2π |{e_Δ = e}|_coarea` on a grid of bins.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    centers: Vec<f64>,
    rate: Vec<f64>,
    se: Vec<f64>,
    shell_width: f64,
    samples_used: usize,
    empty_bins: Vec<usize>,
}

impl RateTable {
    /// Table with every rate zero: the collisionless dynamics.
    pub fn zero(bins: usize, shell_width: f64) -> Self {
        let centers = bin_centers(bins);
        Self { rate: vec![0.0; bins], se: vec![0.0; bins], centers, shell_width, samples_used: 0, empty_bins: Vec::new() }
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn rates(&self) -> &[f64] {
        &self.rate
    }

    pub fn standard_errors(&self) -> &[f64] {
        &self.se
    }

    pub fn shell_width(&self) -> f64 {
        self.shell_width
    }

    pub fn samples_used(&self) -> usize {
        self.samples_used
    }

    /// Bins where no sample fell in the shell (expected near `e = 0, 6`).
    pub fn empty_bins(&self) -> &[usize] {
        &self.empty_bins
    }

    pub fn max_rate(&self) -> f64 {
        self.rate.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ(e)`, linear between bin centres and pinned to zero at `e = 0, 6`.
    pub fn rate(&self, e: f64) -> f64 {
        if !(e > 0.0 && e < 6.0) {
            return 0.0;
        }
        let c = &self.centers;
        let last = c.len() - 1;
        let (x0, y0, x1, y1) = if e <= c[0] {
            (0.0, 0.0, c[0], self.rate[0])
        } else if e >= c[last] {
            (c[last], self.rate[last], 6.0, 0.0)
        } else {
            let width = 6.0 / c.len() as f64;
            let i = (((e - c[0]) / width) as usize).min(last - 1);
            (c[i], self.rate[i], c[i + 1], self.rate[i + 1])
        };
        y0 + (y1 - y0) * (e - x0) / (x1 - x0)
    }

    /// `∫₀⁶ Σ(e)/2π de` by the midpoint rule over the bins.
    pub fn total_shell_measure(&self) -> f64 {
        let width = 6.0 / self.centers.len() as f64;
        self.rate.iter().sum::<f64>() * width / std::f64::consts::TAU
    }
}

fn bin_centers(bins: usize) -> Vec<f64> {
    let width = 6.0 / bins as f64;
    (0..bins).map(|i| (i as f64 + 0.5) * width).collect()
}

/// Thin-shell estimate of `Σ` at the bin centres from uniform draws on `T³`.
pub fn build_rate_table(bins: usize, shell_width: f64, samples: usize, seed: u64) -> Result<RateTable> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least two energy bins, got {bins}")));
    }
    if !(shell_width > 0.0 && shell_width <= 0.05) {
        return Err(Error::InvalidParameter(format!("shell width {shell_width} must lie in (0, 0.05]")));
    }
    if samples < 1_000_000 {
        return Err(Error::InvalidParameter(format!("{samples} samples is below the minimum of 10^6")));
    }
    let centers = bin_centers(bins);
    let width = 6.0 / bins as f64;
    let half = 0.5 * shell_width;
    let chunk = 1 << 16;
    let chunks = samples.div_ceil(chunk);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, purpose::RATES, c as u64);
            let mut counts = vec![0u64; bins];
            for _ in 0..chunk.min(samples - c * chunk) {
                let e = dispersion(rng::torus_point(&mut r));
                // centres within δ/2 of e
                let lo = ((e - half) / width - 0.5).ceil().max(0.0) as usize;
                let hi = ((e + half) / width - 0.5).floor().min(bins as f64 - 1.0);
                if hi < 0.0 {
                    continue;
                }
                for i in lo..=hi as usize {
                    if (e - centers[i]).abs() < half {
                        counts[i] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; bins];
    for c in &counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let n = samples as f64;
    let scale = std::f64::consts::TAU / shell_width;
    let rate = total.iter().map(|&k| scale * k as f64 / n).collect();
    let se = total
        .iter()
        .map(|&k| {
            let p = k as f64 / n;
            scale * (p * (1.0 - p) / n).sqrt()
        })
        .collect();
    let empty_bins = (0..bins).filter(|&i| total[i] == 0).collect();
    Ok(RateTable { centers, rate, se, shell_width, samples_used: samples, empty_bins })
}

/// Uniform draw from `{U : |e_Δ(U) − e| < δ/2}` by rejection from `T³`.
pub fn sample_on_shell(e: f64, shell_width: f64, rng: &mut ChaCha8Rng) -> Result<[f64; 3]> {
    if !(e > 0.0 && e < 6.0) {
        return Err(Error::InvalidParameter(format!("shell energy {e} must lie in (0, 6)")));
    }
    let half = 0.5 * shell_width;
    for _ in 0..REJECTION_BUDGET {
        let u = rng::torus_point(rng);
        if (dispersion(u) - e).abs() < half {
            return Ok(u);
        }
    }
    Err(Error::RejectionBudget(REJECTION_BUDGET))
}

/// Result of [`run`] with the per-particle collision bookkeeping.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub ensemble: ParticleEnsemble,
    pub collisions: Vec<u32>,
    /// Largest `|e_Δ(V_T) − e_Δ(V_0)|` over the particles.
    pub max_energy_drift: f64,
}

fn velocity(v: [f64; 3]) -> [f64; 3] {
    v.map(|c| (std::f64::consts::TAU * c).sin())
}

fn advance(p: &mut Particle, s: f64) {
    let u = velocity(p.v);
    for i in 0..3 {
        p.x[i] += s * u[i];
    }
}

/// Evolves every particle to `T_final` (measured from the ensemble time).
///
/// Collision times come from a Poisson clock at the global maximum rate,
/// each candidate accepted with probability `Σ(e_Δ(V))/Σ_max`. Particle
/// block `b` draws from its own stream, so results do not depend on the
/// thread count.
pub fn run(ensemble: &ParticleEnsemble, t_final: f64, dt: f64, rates: &RateTable, seed: u64) -> Result<RunOutcome> {
    let horizon = t_final - ensemble.time;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time {t_final} precedes the ensemble time {}", ensemble.time)));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step dt = {dt} must be positive")));
    }
    let max_rate = rates.max_rate();
    if dt * max_rate > 0.1 {
        return Err(Error::TimeStepTooLarge(dt * max_rate));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(0.0) as usize;
    let tau = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    let half = 0.5 * rates.shell_width();
    let blocks: Vec<Result<Vec<(Particle, u32, f64)>>> = ensemble
        .particles
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, chunk)| {
            let mut r = rng::stream(seed, purpose::COLLISION, b as u64);
            chunk
                .iter()
                .map(|&start| {
                    let mut p = start;
                    let mut count = 0u32;
                    for _ in 0..steps {
                        let mut left = tau;
                        loop {
                            let wait = if max_rate > 0.0 { -rng::open_unit(&mut r).ln() / max_rate } else { f64::INFINITY };
                            if wait >= left {
                                advance(&mut p, left);
                                break;
                            }
                            advance(&mut p, wait);
                            left -= wait;
                            let e = dispersion(p.v);
                            if r.random::<f64>() * max_rate < rates.rate(e) {
                                p.v = sample_on_shell(e, rates.shell_width(), &mut r)?;
                                count += 1;
                            }
                        }
                    }
                    p.v = reduce_torus(p.v);
                    let drift = (dispersion(p.v) - dispersion(start.v)).abs();
                    assert!(
                        drift <= count as f64 * half + 1e-12,
                        "energy drift {drift} exceeds the shell ledger for {count} collisions"
                    );
                    Ok((p, count, drift))
                })
                .collect()
        })
        .collect();
    let mut particles = Vec::with_capacity(ensemble.len());
    let mut collisions = Vec::with_capacity(ensemble.len());
    let mut max_energy_drift: f64 = 0.0;
    for block in blocks {
        for (p, c, d) in block? {
            particles.push(p);
            collisions.push(c);
            max_energy_drift = max_energy_drift.max(d);
        }
    }
    Ok(RunOutcome { ensemble: ParticleEnsemble::new(particles, t_final), collisions, max_energy_drift })
}

/// `⟨J, F⟩ ≈ Σ_i w_i J(X_i, V_i)` with the standard error from the particle spread.
pub fn observe(j: &TestFunction, ensemble: &ParticleEnsemble) -> Estimate {
    let values: Vec<f64> = ensemble.particles.iter().map(|p| p.weight * j.eval(p.x, p.v)).collect();
    let n = values.len();
    let sum: f64 = values.iter().sum();
    let se = if n > 1 {
        let mean = sum / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (n as f64 * var).sqrt()
    } else {
        0.0
    };
    Estimate { value: sum, se, samples: n }
}

/// Particles with `X = 0` and velocities uniform on the shell `e_Δ = e`.
pub fn shell_ensemble(e: f64, shell_width: f64, count: usize, seed: u64) -> Result<ParticleEnsemble> {
    let mut r = rng::stream(seed, purpose::INITIAL, 1);
    let particles = (0..count)
        .map(|_| Ok(Particle { x: [0.0; 3], v: sample_on_shell(e, shell_width, &mut r)?, weight: 1.0 / count as f64 }))
        .collect::<Result<_>>()?;
    Ok(ParticleEnsemble::new(particles, 0.0))
}
