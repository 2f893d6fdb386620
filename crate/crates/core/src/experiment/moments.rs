//! Disorder-ensemble moments of `⟨J, W⟩` and their comparison with the
//! Boltzmann reference `⟨J, F_T⟩`.

use rand::Rng;
use rayon::prelude::*;

use crate::boltzmann::{build_rate_table, observe, run};
use crate::dynamics::{evolve, sample_disorder_replica, Disorder, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::initial::{build_wkb, macroscopic_initial_sampler};
use crate::lattice::LatticeSpec;
use crate::rng::{purpose, stream};
use crate::stats::Estimate;
use crate::wigner::pair_state;

use super::config::ExperimentConfig;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_REPLICAS: usize = 50;
pub const REPLICAS_PER_ORDER: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary {
    pub mean: Estimate,
    /// Unbiased sample variance.
    pub variance: Estimate,
    /// `(k, E[(s − s̄)^k])` for `k = 2..=r`.
    pub central: Vec<(usize, Estimate)>,
}

fn mean_of(xs: &[f64]) -> f64 {
    // shifted by the first sample so identical samples give it back exactly
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

fn statistics(xs: &[f64], r: usize) -> (f64, f64, Vec<f64>) {
    let n = xs.len() as f64;
    let mean = mean_of(xs);
    let mut sums = vec![0.0; r + 1];
    for x in xs {
        let d = x - mean;
        let mut p = d;
        for slot in sums.iter_mut().skip(2) {
            p *= d;
            *slot += p;
        }
    }
    let variance = if xs.len() > 1 { sums[2] / (n - 1.0) } else { 0.0 };
    let central = sums[2..].iter().map(|s| s / n).collect();
    (mean, variance, central)
}

/// Mean, variance and central moments up to `r` with bootstrap standard errors
/// (`resamples` draws of the `BOOTSTRAP` stream keyed by `seed`, `stream_id`).
pub fn summarize(samples: &[f64], r: usize, resamples: usize, seed: u64, stream_id: u64) -> Result<MomentSummary> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if r < 2 {
        return Err(Error::InvalidParameter("moment order must be at least 2".into()));
    }
    let n = samples.len();
    let (mean, variance, central) = statistics(samples, r);
    let mut boot_var = Vec::with_capacity(resamples);
    let mut boot_central = vec![Vec::with_capacity(resamples); r - 1];
    let mut rng = stream(seed, purpose::BOOTSTRAP, stream_id);
    let mut resample = vec![0.0; n];
    for _ in 0..resamples {
        for slot in resample.iter_mut() {
            *slot = samples[rng.random_range(0..n)];
        }
        let (_, v, c) = statistics(&resample, r);
        boot_var.push(v);
        for (acc, value) in boot_central.iter_mut().zip(c) {
            acc.push(value);
        }
    }
    let spread = |xs: &[f64]| -> f64 {
        if xs.len() < 2 {
            return 0.0;
        }
        let m = mean_of(xs);
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let sd = variance.sqrt();
    Ok(MomentSummary {
        mean: Estimate { value: mean, se: sd / (n as f64).sqrt(), samples: n },
        variance: Estimate { value: variance, se: spread(&boot_var), samples: n },
        central: central
            .into_iter()
            .zip(&boot_central)
            .enumerate()
            .map(|(i, (value, boot))| (i + 2, Estimate { value, se: spread(boot), samples: n }))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub lambda: f64,
    pub t_macro: f64,
    pub r: usize,
    pub eta: f64,
    /// Microscopic time `T/η`.
    pub t_micro: f64,
    pub summary: MomentSummary,
    pub boltzmann_reference: Estimate,
    pub replicas: usize,
    /// Raw `s_m`, in replica order.
    pub samples: Vec<f64>,
}

impl MomentReport {
    pub fn mean(&self) -> Estimate {
        self.summary.mean
    }

    pub fn variance(&self) -> Estimate {
        self.summary.variance
    }
}

pub fn check_replicas(replicas: usize, r: usize) -> Result<()> {
    let needed = (REPLICAS_PER_ORDER * r).max(MIN_REPLICAS);
    if replicas < needed {
        return Err(Error::InvalidParameter(format!(
            "{replicas} replicas are too few for moment order {r}; need at least {needed}"
        )));
    }
    Ok(())
}

/// `s_m = ⟨J, W_T^{(η)}⟩` for replicas `m = 0..M`. Disorder realization `m`
/// is shared by every coupling of a sweep.
pub fn replica_samples(config: &ExperimentConfig, lambda: f64) -> Result<Vec<f64>> {
    let (eta, t) = config.scaling(lambda);
    let lattice = config.lattice;
    let phi0 = build_wkb(&config.wkb.with_eta(eta)?, lattice)?;
    let method = config.evolve.method;
    let one = |disorder: &Disorder| -> Result<f64> {
        let h = HamiltonianSpec::new(lambda, disorder)?;
        let phi_t = evolve(&phi0, &h, t, method)?;
        pair_state(&config.j, &phi_t, eta)
    };
    if lambda == 0.0 {
        let free = Disorder::from_values(lattice, vec![0.0; lattice.len()])?;
        let s = one(&free)?;
        return Ok(vec![s; config.replicas]);
    }
    (0..config.replicas as u64)
        .into_par_iter()
        .map(|m| one(&sample_disorder_replica(lattice, config.seed, m)))
        .collect()
}

/// `⟨J, F_T⟩` from the particle solver started at the WKB limit law.
pub fn boltzmann_reference(config: &ExperimentConfig) -> Result<Estimate> {
    let b = &config.boltzmann;
    let ensemble = macroscopic_initial_sampler(&config.wkb, b.particles, config.seed)?;
    if config.t_macro == 0.0 {
        return Ok(observe(&config.j, &ensemble));
    }
    let rates = build_rate_table(b.bins, b.shell_width, b.rate_samples, config.seed)?;
    let outcome = run(&ensemble, config.t_macro, b.dt, &rates, config.seed)?;
    Ok(observe(&config.j, &outcome.ensemble))
}

/// One report per coupling of the grid, in grid order.
pub fn run_moment_sweep(config: &ExperimentConfig) -> Result<Vec<MomentReport>> {
    config.validate()?;
    check_replicas(config.replicas, config.r)?;
    let smallest_eta = config.lambdas.iter().map(|&l| config.scaling(l).0).fold(f64::INFINITY, f64::min);
    let probe = config.wkb.with_eta(smallest_eta)?;
    if probe.mass_radius() > config.lattice.half_width() as f64 {
        return Err(Error::SupportViolation { radius: probe.mass_radius(), half_width: config.lattice.half_width() });
    }
    let reference = boltzmann_reference(config)?;
    config
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let samples = replica_samples(config, lambda)?;
            let summary = summarize(&samples, config.r, BOOTSTRAP_RESAMPLES, config.seed, i as u64)?;
            let (eta, t_micro) = config.scaling(lambda);
            Ok(MomentReport {
                lambda,
                t_macro: config.t_macro,
                r: config.r,
                eta,
                t_micro,
                summary,
                boltzmann_reference: reference,
                replicas: samples.len(),
                samples,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendRow {
    pub lambda: f64,
    /// `|E⟨J,W⟩ − ⟨J,F_T⟩|` with the combined standard error.
    pub deviation: Estimate,
    pub variance: Estimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendSummary {
    /// Positive couplings by decreasing `λ`.
    pub rows: Vec<TrendRow>,
    /// Each deviation exceeds its predecessor by at most 3 combined SE.
    pub deviation_non_increasing: bool,
    /// Each variance drop exceeds its combined SE.
    pub variance_strictly_decreasing: bool,
    /// `Some(true)` if a `λ = 0` report is present and has variance exactly 0.
    pub zero_coupling_variance_vanishes: Option<bool>,
}

pub fn compare_to_boltzmann(reports: &[MomentReport]) -> Result<TrendSummary> {
    let mut positive: Vec<&MomentReport> = reports.iter().filter(|r| r.lambda > 0.0).collect();
    if positive.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "trend needs at least 3 positive couplings, got {}",
            positive.len()
        )));
    }
    positive.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    let rows: Vec<TrendRow> = positive
        .iter()
        .map(|r| {
            let m = r.mean();
            let b = r.boltzmann_reference;
            TrendRow {
                lambda: r.lambda,
                deviation: Estimate { value: (m.value - b.value).abs(), se: m.se.hypot(b.se), samples: m.samples },
                variance: r.variance(),
            }
        })
        .collect();
    let deviation_non_increasing = rows
        .windows(2)
        .all(|w| w[1].deviation.value <= w[0].deviation.value + 3.0 * w[0].deviation.se.hypot(w[1].deviation.se));
    let variance_strictly_decreasing =
        rows.windows(2).all(|w| w[0].variance.value - w[1].variance.value > w[0].variance.se.hypot(w[1].variance.se));
    let zero = reports.iter().find(|r| r.lambda == 0.0).map(|r| r.variance().value == 0.0);
    Ok(TrendSummary { rows, deviation_non_increasing, variance_strictly_decreasing, zero_coupling_variance_vanishes: zero })
}

/// Spot check of lattice-size effects: the mean of `⟨J, W⟩` on `Λ_L` and on
/// `Λ_{2L}` for the same coupling, as `(small, large)`.
pub fn lattice_size_check(config: &ExperimentConfig, lambda: f64) -> Result<(Estimate, Estimate)> {
    let doubled = ExperimentConfig { lattice: LatticeSpec::unit(2 * config.lattice.half_width())?, ..config.clone() };
    let small = summarize(&replica_samples(config, lambda)?, 2, 0, config.seed, 0)?;
    let large = summarize(&replica_samples(&doubled, lambda)?, 2, 0, config.seed, 0)?;
    Ok((small.mean, large.mean))
}
