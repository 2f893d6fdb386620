//! Acceptance run: one PASS/FAIL line per criterion with pinned tolerances.
//!
//! Criteria that fail are reported, not hidden; the process exits with status
//! 0 unless a criterion panics, so `cargo test` stays usable while the
//! record of which criteria hold lives in the printed lines. Set
//! `ACCEPTANCE_ONLY=3,7` to run a subset.

mod support;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use boltzgraph::amplitude::{
    a_eps_integral, crossing_integral, fit_exponent, propagator_l1, single_mode, verify_factorization, wick_oracle_cases,
    AmplitudeSpec, MomentumProfile, Observable, OracleConfig, WickCase,
};
use boltzgraph::boltzmann::{build_rate_table, observe, run, sample_on_shell, shell_ensemble};
use boltzgraph::dynamics::{duhamel_hierarchy, evolve, sample_disorder, HamiltonianSpec, Method};
use boltzgraph::experiment::{
    compare_to_boltzmann, parameter_calculator, parameter_calculator_log, run_moment_sweep, write_moment_reports,
    ExperimentConfig,
};
use boltzgraph::graphs::{classify, count, enumerate, EdgeKind, FilterMode};
use boltzgraph::initial::{build_wkb, macroscopic_initial_sampler, wkb_singularity_diagnostic, WkbSpec};
use boltzgraph::lattice::{dispersion, Field, Fourier, LatticeSpec, Representation};
use boltzgraph::rng;
use boltzgraph::stats::{chi_square_independence, chi_square_uniform, fit_through_origin, ks_two_sample, linear_fit};
use boltzgraph::wigner::wigner_fourier;
use num_bigint::BigUint;
use num_complex::Complex64;

const FOURIER_TOL: f64 = 1e-12;
const DUHAMEL_TOL: f64 = 1e-8;
const HOMOGENEITY_TOL: f64 = 1e-10;
const UNITARITY_TOL: f64 = 1e-12;
const WIGNER_TOL: f64 = 1e-12;
const WIGNER_ORACLE_TOL: f64 = 1e-10;
const WICK_Z: f64 = 3.0;
const WICK_SAMPLES: usize = 100_000;
const WICK_DT: f64 = 0.1;
const FACTOR_TOL: f64 = 1e-10;
const L1_RESIDUAL: f64 = 0.10;
const CROSSING_SLOPE: (f64, f64) = (0.5, 0.95);
const CROSSING_BUDGET: usize = 4_000_000;
const A_EPS_SLOPE_MAX: f64 = 0.95;
const SINGULARITY_SLOPE: (f64, f64) = (1.3, 1.7);
const SYMMETRY_Z: f64 = 3.0;
const LAYER_CAKE_TOL: f64 = 0.02;
/// `Σ(3)/2π` from the rate table at `δ = 0.01` and `10⁸` samples.
const SIGMA3_OVER_TAU: f64 = 0.285_346_0;
const SIGMA3_TOL: f64 = 0.01;
const HALVING_DT: f64 = 0.04;
const KS_LEVEL: f64 = 0.01;
const HALVING_Z: f64 = 3.0;
const BOLTZMANN_PARTICLES: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn test_field(lattice: LatticeSpec, repr: Representation) -> Field {
    let mut r = rng::stream(2024, 1, lattice.half_width() as u64);
    let values = (0..lattice.len()).map(|_| Complex64::new(rng::standard_normal(&mut r), rng::standard_normal(&mut r)));
    let mut f = Field::from_values(lattice, repr, values.collect()).unwrap();
    let n = f.norm();
    f.scale(Complex64::new(1.0 / n, 0.0));
    f
}

fn c1_fourier() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for half in [1, 2, 4] {
        let lat = LatticeSpec::unit(half).unwrap();
        let fourier = Fourier::new(lat);
        let f = test_field(lat, Representation::Position);
        let hat = fourier.forward(&f).unwrap();
        let back = fourier.inverse(&hat).unwrap();
        worst = worst.max(back.l2_diff(&f) / f.norm());
        worst = worst.max((hat.norm_sq() - f.norm_sq()).abs() / f.norm_sq());
        let g = test_field(lat, Representation::Momentum);
        let again = fourier.forward(&fourier.inverse(&g).unwrap()).unwrap();
        worst = worst.max(again.l2_diff(&g) / g.norm());
    }
    let t = secs(start.elapsed());
    outcome(
        worst <= FOURIER_TOL && t < 1.0,
        format!("roundtrip/Parseval at L in {{1,2,4}}: max rel err {worst:.2e} (tol {FOURIER_TOL:.0e}), {t:.3} s (limit 1 s)"),
    )
}

fn c2_dispersion() -> Outcome {
    let at_zero = dispersion([0.0; 3]);
    let at_corner = dispersion([0.5; 3]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for half in [1, 2, 4, 8] {
        for k in LatticeSpec::unit(half).unwrap().dual_points() {
            let e = dispersion(k);
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    let pass = at_zero == 0.0 && at_corner == 6.0 && lo >= 0.0 && hi <= 6.0 && 2.0 * at_corner == 12.0;
    outcome(
        pass,
        format!("e(0) = {at_zero}, e(1/2,1/2,1/2) = {at_corner}, grid range [{lo:.4}, {hi:.4}] within [0, 6], sup 2e = {}", 2.0 * at_corner),
    )
}

fn c3_duhamel() -> Outcome {
    let start = Instant::now();
    let lat = LatticeSpec::unit(4).unwrap();
    let phi0 = build_wkb(&WkbSpec::plane_wave(0.5, [0.25, 0.0, 0.0], 1.0).unwrap(), lat).unwrap();
    let disorder = sample_disorder(lat, 17);
    let (lambda, t, order, dt) = (0.2, 2.0, 4, 1e-3);
    let h = HamiltonianSpec::new(lambda, &disorder).unwrap();
    let d = duhamel_hierarchy(&phi0, &h, t, order, dt).unwrap();
    let exact = evolve(&phi0, &h, t, Method::ExactDiag).unwrap();
    let identity = d.total().l2_diff(&exact);
    let h2 = HamiltonianSpec::new(2.0 * lambda, &disorder).unwrap();
    let d2 = duhamel_hierarchy(&phi0, &h2, t, order, dt).unwrap();
    let mut homogeneity: f64 = 0.0;
    for (n, (a, b)) in d.terms.iter().zip(&d2.terms).enumerate() {
        let mut scaled = a.clone();
        scaled.scale(Complex64::new(2f64.powi(n as i32), 0.0));
        homogeneity = homogeneity.max(scaled.l2_diff(b) / b.norm().max(f64::MIN_POSITIVE));
    }
    let secs = secs(start.elapsed());
    outcome(
        identity <= DUHAMEL_TOL && homogeneity <= HOMOGENEITY_TOL && secs < 60.0,
        format!(
            "L=4 lambda=0.2 t=2 N=4 dt=1e-3: |sum + R - exact| = {identity:.2e} (tol {DUHAMEL_TOL:.0e}), \
             homogeneity {homogeneity:.2e} (tol {HOMOGENEITY_TOL:.0e}), {secs:.1} s (limit 60 s)"
        ),
    )
}

fn c4_unitarity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for half in [2, 4] {
        let lat = LatticeSpec::unit(half).unwrap();
        let f = test_field(lat, Representation::Position);
        let disorder = sample_disorder(lat, 5);
        for lambda in [0.0, 0.2, 1.0] {
            let h = HamiltonianSpec::new(lambda, &disorder).unwrap();
            for t in [0.5, 3.0] {
                for method in [Method::ExactDiag, Method::SplitStep { dt: 0.1 }, Method::SplitStep { dt: 0.01 }, Method::Fourth { dt: 0.1 }] {
                    let g = evolve(&f, &h, t, method).unwrap();
                    worst = worst.max((g.norm() - 1.0).abs());
                    runs += 1;
                }
            }
        }
    }
    outcome(worst <= UNITARITY_TOL, format!("{runs} evolutions (L, lambda, t, method): max |norm - 1| = {worst:.2e} (tol {UNITARITY_TOL:.0e})"))
}

/// `W(x, v) = 8 Σ_{y+z=2x} conj(φ(y)) φ(z) e^{2πi v·(y−z)}` by direct summation.
fn wigner_oracle(phi: &Field) -> Vec<Complex64> {
    let lat = phi.lattice();
    let half = lat.half();
    let l = lat.half_width() as i64;
    let nv = lat.len();
    let table: Vec<Complex64> = (0..nv)
        .flat_map(|v| {
            let k = lat.dual_point(v);
            (0..nv).map(move |y| {
                let s = lat.site(y);
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::TAU * (k[0] * s[0] + k[1] * s[1] + k[2] * s[2]))
            })
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); half.len() * nv];
    let mut c = vec![Complex64::new(0.0, 0.0); nv];
    for x in 0..half.len() {
        let a = half.offsets(x);
        for (y, slot) in c.iter_mut().enumerate() {
            let oy = lat.offsets(y);
            let z: [i64; 3] = std::array::from_fn(|i| a[i] - oy[i]);
            *slot = if z.iter().all(|v| v.abs() <= l) {
                phi.values()[y].conj() * phi.values()[lat.wrap_index(z)]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let xs = half.site(x);
        for v in 0..nv {
            let k = lat.dual_point(v);
            let row = &table[v * nv..(v + 1) * nv];
            let s: Complex64 = c.iter().zip(row).map(|(a, b)| a * b).sum();
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::TAU * (k[0] * xs[0] + k[1] * xs[1] + k[2] * xs[2]));
            out[x * nv + v] = 8.0 * s * phase;
        }
    }
    out
}

fn c5_wigner() -> Outcome {
    let start = Instant::now();
    let mut marginal: f64 = 0.0;
    let mut mass: f64 = 0.0;
    for half in [1, 2, 4] {
        let lat = LatticeSpec::unit(half).unwrap();
        let phi = test_field(lat, Representation::Position);
        let hat = Fourier::new(lat).forward(&phi).unwrap();
        let w = wigner_fourier(&hat, None).unwrap();
        let z = w.xi_zero();
        for v in 0..lat.len() {
            marginal = marginal.max((w.value(z, v) - hat.values()[v].norm_sqr()).norm());
        }
        mass = mass.max((w.mass() - 1.0).abs());
    }
    let lat = LatticeSpec::unit(4).unwrap();
    let phi = build_wkb(&WkbSpec::plane_wave(0.5, [0.2, -0.1, 0.05], 1.0).unwrap(), lat).unwrap();
    let w = wigner_fourier(&Fourier::new(lat).forward(&phi).unwrap(), None).unwrap();
    let mine = w.position_space();
    let oracle = wigner_oracle(&phi);
    let scale = oracle.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = mine.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    let pass = marginal <= WIGNER_TOL && mass <= WIGNER_TOL && diff <= WIGNER_ORACLE_TOL;
    outcome(
        pass,
        format!(
            "W(0,v) vs |phi(v)|^2: {marginal:.2e}, |mass - 1|: {mass:.2e} (tol {WIGNER_TOL:.0e}); \
             position-space oracle at L=4: rel {diff:.2e} (tol {WIGNER_ORACLE_TOL:.0e}), {:.1} s",
            secs(start.elapsed())
        ),
    )
}

fn c6_graphs() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut graphs_seen = 0usize;
    for (r, n_bar) in support::all_shapes(12) {
        let expected = support::double_factorial(r * n_bar - 1);
        let listed: BTreeSet<Vec<(usize, usize)>> =
            enumerate(r, n_bar, n_bar / 2).unwrap().map(|g| support::as_index_pairs(&g)).collect();
        if count(r, n_bar).unwrap() != BigUint::from(expected) || listed.len() as u64 != expected {
            problems.push(format!("count ({r},{n_bar})"));
        }
        for g in enumerate(r, n_bar, 0).unwrap() {
            let c = classify(&g);
            let isolated = (1..=r).any(|l| g.pairs().iter().filter(|(a, b)| a.line == l || b.line == l).all(|(a, b)| a.line == b.line));
            let big = c.components.iter().all(|comp| comp.len() >= 2);
            if c.is_two_connected == isolated || c.is_two_connected != big {
                problems.push(format!("2-connected {}", g.pair_list()));
            }
        }
    }
    for (r, n_bar) in support::all_shapes(8) {
        for n in 0..=n_bar {
            for g in enumerate(r, n_bar, n).unwrap() {
                graphs_seen += 1;
                let c = classify(&g);
                let o = support::oracle(&g);
                let kinds_ok = c.edge_kinds.iter().zip(g.pairs()).all(|(k, (a, b))| (*k == EdgeKind::Internal) == (a.line == b.line));
                let lines_ok = c.lines.iter().enumerate().all(|(j, l)| {
                    l.simple_ladder == o.simple[j] && l.has_crossing() == o.crossing[j] && l.has_nesting() == o.nesting[j]
                });
                let same = kinds_ok
                    && lines_ok
                    && c.components == o.components
                    && c.is_disconnected == o.disconnected
                    && c.is_two_connected == o.two_connected
                    && c.immediate_recollisions.len() == o.recollisions;
                if !same {
                    problems.push(format!("classify n={n} {}", g.pair_list()));
                }
            }
        }
    }
    let t = secs(start.elapsed());
    outcome(
        problems.is_empty() && t < 120.0,
        format!(
            "counts (r nbar - 1)!! for r*nbar <= 12, {graphs_seen} graphs classified against the brute-force oracle, \
             2-connected equivalence exhaustive; {} mismatches{}, {t:.1} s (limit 120 s)",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

fn l2_spec() -> (AmplitudeSpec, Field) {
    let lat = LatticeSpec::unit(2).unwrap();
    (AmplitudeSpec::new(lat, 1.0, 1.0, Observable::L2Delta).unwrap(), single_mode(lat, [1, 0, 0]))
}

fn c7_wick() -> Outcome {
    let start = Instant::now();
    let (spec, phi) = l2_spec();
    let cases = [(1, 2), (2, 2), (2, 4)].map(|(r, n_bar)| WickCase { r, n_bar, n: n_bar / 2, mode: FilterMode::Full });
    let config = OracleConfig { samples: WICK_SAMPLES, seed: 7, dt: WICK_DT };
    let reports = wick_oracle_cases(&cases, &spec, &phi, &config).unwrap();
    let t = secs(start.elapsed());
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("(r={}, nbar={}): sum {:.5e}, MC {:.5e} +- {:.1e}, z {:.2}", r.case.r, r.case.n_bar, r.graph_sum.re, r.estimate.value, r.estimate.se, r.z_score))
        .collect();
    outcome(
        reports.iter().all(|r| r.within(WICK_Z)) && t < 600.0,
        format!("L=2, {WICK_SAMPLES} samples, |z| <= {WICK_Z}: {}; {t:.0} s (limit 600 s)", parts.join("; ")),
    )
}

fn c8_factorization() -> Outcome {
    let start = Instant::now();
    let (spec, phi) = l2_spec();
    let mut worst: f64 = 0.0;
    let mut graphs = 0;
    let mut failures = 0;
    for (r, n_bar) in support::all_shapes(8) {
        for g in enumerate(r, n_bar, n_bar / 2).unwrap() {
            if classify(&g).components.len() != 1 {
                continue;
            }
            graphs += 1;
            match verify_factorization(&g, &spec, &phi) {
                Ok(res) => worst = worst.max(res),
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        failures == 0 && worst <= FACTOR_TOL,
        format!(
            "{graphs} connected graphs with r*nbar <= 8 at L=2: worst residual {worst:.2e} (tol {FACTOR_TOL:.0e}), {failures} evaluation errors, {:.0} s",
            secs(start.elapsed())
        ),
    )
}

fn c9_propagator() -> Outcome {
    let eps = [1e-1, 1e-2, 1e-3];
    let values: Vec<f64> = eps.iter().map(|&e| propagator_l1(3.0, e, 16).unwrap()).collect();
    let logs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let (c, residual) = fit_through_origin(&logs, &values);
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    outcome(
        residual <= L1_RESIDUAL && increasing,
        format!(
            "alpha=3: L1 norms {:.4}, {:.4}, {:.4}; fit c log(1/eps) with c = {c:.4}, relative residual {:.1}% (limit {:.0}%)",
            values[0],
            values[1],
            values[2],
            100.0 * residual,
            100.0 * L1_RESIDUAL
        ),
    )
}

fn c10_crossing() -> Outcome {
    let start = Instant::now();
    let eps = [0.1, 0.03, 0.01, 0.003];
    let mut values = Vec::new();
    let mut reliable = true;
    let mut worst_rel: f64 = 0.0;
    for &e in &eps {
        let est = crossing_integral(e, [3.0; 3], [0.1, 0.2, 0.3], CROSSING_BUDGET, 1).unwrap();
        reliable &= est.reliable;
        worst_rel = worst_rel.max(est.estimate.relative_se());
        values.push(est.estimate.value);
    }
    let slope = fit_exponent(&eps, &values);
    let mut a_values = Vec::new();
    for &e in &eps {
        let spec = WkbSpec::plane_wave(0.2, [0.25, 0.0, 0.0], e).unwrap();
        let profile = MomentumProfile::plane_wave(&spec).unwrap();
        let est = a_eps_integral(e, &profile, [1.0, 1.0], [0.0; 3], CROSSING_BUDGET, 2).unwrap();
        reliable &= est.reliable;
        worst_rel = worst_rel.max(est.estimate.relative_se());
        a_values.push(est.estimate.value);
    }
    let a_slope = fit_exponent(&eps, &a_values);
    let t = secs(start.elapsed());
    outcome(
        slope > CROSSING_SLOPE.0 && slope < CROSSING_SLOPE.1 && a_slope <= A_EPS_SLOPE_MAX && reliable && t < 1800.0,
        format!(
            "crossing exponent {slope:.3} in ({}, {}); A_eps (plane wave, eta = eps) exponent {a_slope:.3} <= {A_EPS_SLOPE_MAX}; \
             worst relative SE {:.2}% (limit 20%), {t:.0} s (limit 1800 s)",
            CROSSING_SLOPE.0,
            CROSSING_SLOPE.1,
            100.0 * worst_rel
        ),
    )
}

fn c11_singularity() -> Outcome {
    let etas = [0.2, 0.1, 0.05];
    let stats: Vec<f64> = etas
        .iter()
        .map(|&eta| {
            let spec = WkbSpec::plane_wave(0.4, [0.25, 0.0, 0.0], eta).unwrap();
            let lat = LatticeSpec::unit(spec.mass_radius().ceil() as usize + 1).unwrap();
            wkb_singularity_diagnostic(&spec, lat).unwrap().l4_norm_sq
        })
        .collect();
    let (slope, _) = linear_fit(&etas.map(f64::ln), &stats.iter().map(|s| s.ln()).collect::<Vec<_>>());
    let ratios: Vec<f64> = etas.iter().zip(&stats).map(|(e, s)| s / e.powf(0.8)).collect();
    let c = ratios[0];
    let single_constant = ratios.iter().all(|&q| q <= c);
    outcome(
        slope >= SINGULARITY_SLOPE.0 && slope <= SINGULARITY_SLOPE.1 && single_constant,
        format!(
            "plane-wave statistics {:.4e}, {:.4e}, {:.4e}: slope {slope:.4} (want 1.5 +- 0.2); stat <= {c:.4} eta^(4/5) at every eta: {single_constant}",
            stats[0], stats[1], stats[2]
        ),
    )
}

fn symmetry_class(v: [f64; 3]) -> usize {
    let signs = (v[0] < 0.0) as usize | ((v[1] < 0.0) as usize) << 1 | ((v[2] < 0.0) as usize) << 2;
    let a = v.map(f64::abs);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let order = match idx {
        [0, 1, 2] => 0,
        [0, 2, 1] => 1,
        [1, 0, 2] => 2,
        [1, 2, 0] => 3,
        [2, 0, 1] => 4,
        _ => 5,
    };
    signs * 6 + order
}

fn c12_boltzmann() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;

    let big = build_rate_table(61, 0.01, 100_000_000, 31).unwrap();
    let n = big.rates().len();
    let worst_sym = (0..n / 2)
        .map(|i| {
            let j = n - 1 - i;
            (big.rates()[i] - big.rates()[j]).abs() / big.standard_errors()[i].hypot(big.standard_errors()[j]).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    let layer = (big.total_shell_measure() - 1.0).abs();
    let sigma3 = big.rates()[30] / std::f64::consts::TAU;
    let sigma3_err = (sigma3 / SIGMA3_OVER_TAU - 1.0).abs();
    pass &= worst_sym <= SYMMETRY_Z && layer <= LAYER_CAKE_TOL && sigma3_err <= SIGMA3_TOL;
    notes.push(format!(
        "Sigma symmetry max {worst_sym:.2} SE (limit {SYMMETRY_Z}), layer-cake |int - 1| {:.2}% (limit 2%), Sigma(3)/2pi {sigma3:.5} vs {SIGMA3_OVER_TAU} ({:.2}%)",
        100.0 * layer,
        100.0 * sigma3_err
    ));

    let config = ExperimentConfig::default();
    let rates = build_rate_table(60, 0.01, 1_000_000, 32).unwrap();
    let initial = macroscopic_initial_sampler(&config.wkb, BOLTZMANN_PARTICLES, 33).unwrap();
    let out = run(&initial, 0.5, 0.05, &rates, 34).unwrap();
    let mass_exact = out.ensemble.mass() == initial.mass();
    let ledger = initial
        .particles()
        .iter()
        .zip(out.ensemble.particles())
        .zip(&out.collisions)
        .all(|((a, b), &c)| (dispersion(a.v) - dispersion(b.v)).abs() <= c as f64 * 0.005 + 1e-12);
    pass &= mass_exact && ledger;
    notes.push(format!("mass exact: {mass_exact}, energy ledger: {ledger}"));

    let shell = shell_ensemble(2.0, 0.01, BOLTZMANN_PARTICLES, 35).unwrap();
    let later = run(&shell, 5.0, 0.05, &rates, 36).unwrap().ensemble;
    let ks_p = (0..3)
        .map(|axis| {
            let a: Vec<f64> = shell.particles().iter().map(|p| p.v[axis]).collect();
            let b: Vec<f64> = later.particles().iter().map(|p| p.v[axis]).collect();
            ks_two_sample(&a, &b).1
        })
        .fold(1.0, f64::min);
    pass &= ks_p > KS_LEVEL;
    notes.push(format!("stationarity KS min p {ks_p:.3}"));

    let mut r = rng::stream(37, 12, 0);
    let draws: Vec<[f64; 3]> = (0..BOLTZMANN_PARTICLES).map(|_| sample_on_shell(2.0, 0.01, &mut r).unwrap()).collect();
    let mut counts = vec![0u64; 48];
    for v in &draws {
        counts[symmetry_class(*v)] += 1;
    }
    let sym_p = chi_square_uniform(&counts).1;
    let halved: Vec<f64> = (0..BOLTZMANN_PARTICLES).map(|_| sample_on_shell(2.0, 0.005, &mut r).unwrap()[0]).collect();
    let draw_p = ks_two_sample(&draws.iter().map(|v| v[0]).collect::<Vec<_>>(), &halved).1;
    pass &= sym_p > KS_LEVEL && draw_p > KS_LEVEL;
    notes.push(format!("48-class chi-square p {sym_p:.3}, shell-law KS (0.01 vs 0.005) p {draw_p:.3}"));

    let mut xs: Vec<f64> = initial.particles().iter().map(|p| p.x[0]).collect();
    xs.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..10).map(|d| xs[d * xs.len() / 10]).collect();
    let mut table = vec![vec![0u64; 3]; 10];
    for (p, &c) in initial.particles().iter().zip(&out.collisions) {
        table[cuts.iter().filter(|&&q| p.x[0] >= q).count()][(c as usize).min(2)] += 1;
    }
    let ind_p = chi_square_independence(&table).1;
    pass &= ind_p > KS_LEVEL;
    notes.push(format!("collisions vs X deciles chi-square p {ind_p:.3}"));

    let fine = build_rate_table(60, 0.005, 1_000_000, 32).unwrap();
    let a = observe(&config.j, &run(&initial, 0.5, HALVING_DT, &rates, 34).unwrap().ensemble);
    let b = observe(&config.j, &run(&initial, 0.5, HALVING_DT, &fine, 34).unwrap().ensemble);
    let z = a.z_against(&b);
    pass &= z.abs() <= HALVING_Z;
    notes.push(format!("delta-halving <J,F> {:.5} vs {:.5}, z {z:.2}", a.value, b.value));

    let t = secs(start.elapsed());
    pass &= t < 600.0;
    notes.push(format!("{t:.0} s (limit 600 s)"));
    outcome(pass, notes.join("; "))
}

fn c13_trends() -> Outcome {
    let start = Instant::now();
    let mut config = ExperimentConfig::default();
    config.lambdas.push(0.0);
    let reports = match run_moment_sweep(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let trend = compare_to_boltzmann(&reports).unwrap();
    let zero = trend.zero_coupling_variance_vanishes == Some(true);
    let rows: Vec<String> = trend
        .rows
        .iter()
        .map(|r| format!("lambda {}: var {:.3e} +- {:.1e}, dev {:.3e} +- {:.1e}", r.lambda, r.variance.value, r.variance.se, r.deviation.value, r.deviation.se))
        .collect();
    outcome(
        trend.variance_strictly_decreasing && trend.deviation_non_increasing && zero,
        format!(
            "T=0.5 L=32 M=200: {}; variance decreasing: {}, deviation non-increasing: {}, lambda=0 variance exactly 0: {zero}; {:.0} s",
            rows.join("; "),
            trend.variance_strictly_decreasing,
            trend.deviation_non_increasing,
            secs(start.elapsed())
        ),
    )
}

fn c14_parameters() -> Outcome {
    let small = parameter_calculator(1e-12, 2, 1.0, 1.0).unwrap();
    let tiny = parameter_calculator_log(400.0 * std::f64::consts::LN_10, 2, 1.0, 1.0).unwrap();
    let finite = tiny.inequalities.iter().all(|i| i.lhs.is_finite() && i.rhs.is_finite()) && tiny.ln_kappa.is_finite();
    let monotone = [12.0, 100.0, 400.0, 1e4, 1e8, 1e100].iter().all(|&d| {
        let ns: Vec<f64> =
            [2, 4, 6, 8, 10].iter().map(|&r| parameter_calculator_log(d * std::f64::consts::LN_10, r, 1.0, 1.0).unwrap().n).collect();
        ns.windows(2).all(|w| w[1] <= w[0])
    });
    let verdicts: Vec<String> = tiny.inequalities.iter().map(|i| format!("{}", i.holds)).collect();
    outcome(
        small.n == 0.0 && small.degenerate && finite && monotone,
        format!(
            "eps=1e-12: N = {} (degenerate {}); eps=1e-400: N = {}, ln kappa = {:.1}, verdicts [{}] all finite: {finite}; N non-increasing in r: {monotone}",
            small.n,
            small.degenerate,
            tiny.n,
            tiny.ln_kappa,
            verdicts.join(", ")
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn c15_determinism() -> Outcome {
    let config = ExperimentConfig::parse(
        "[lattice]\nL = 8\n[sweep]\nlambdas = 0.8, 0.7, 0.6, 0\nT = 0.2\nreplicas = 50\nseed = 3\n\
         [wkb]\nh.widths = 0.5\neta = 0.64\n[evolve]\ndt = 0.05\n\
         [boltzmann]\nparticles = 5000\nrate_samples = 1000000\nbins = 30\n",
    )
    .unwrap();
    let outputs: Vec<Vec<(String, Vec<u8>)>> = [1usize, 2, 1]
        .into_iter()
        .map(|threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let dir = tempfile::tempdir().unwrap();
            pool.install(|| {
                let reports = run_moment_sweep(&config).unwrap();
                write_moment_reports(dir.path(), &config, &reports).unwrap();
            });
            dir_bytes(dir.path())
        })
        .collect();
    let files = outputs[0].len();
    let bytes: usize = outputs[0].iter().map(|(_, b)| b.len()).sum();
    let same = outputs.iter().all(|o| *o == outputs[0]);
    outcome(same, format!("moment sweep rerun with 1, 2, 1 threads: {files} files, {bytes} bytes, bitwise identical: {same}"))
}

fn main() {
    let only: Option<BTreeSet<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("fourier identities", c1_fourier),
        ("dispersion", c2_dispersion),
        ("duhamel identity", c3_duhamel),
        ("unitarity", c4_unitarity),
        ("wigner identities", c5_wigner),
        ("graph engine", c6_graphs),
        ("numerical wick theorem", c7_wick),
        ("factorization lemma", c8_factorization),
        ("propagator L1 bound", c9_propagator),
        ("crossing integral", c10_crossing),
        ("singularity diagnostic", c11_singularity),
        ("boltzmann solver", c12_boltzmann),
        ("kinetic-limit trends", c13_trends),
        ("parameter calculator", c14_parameters),
        ("determinism", c15_determinism),
    ];
    let mut passed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let o = check();
        ran += 1;
        passed += o.pass as usize;
        println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {passed}/{ran} criteria passed");
}
