//! Estimators for the singular momentum integrals: the propagator L¹ norm,
//! the crossing integral and `A_ε`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::initial::WkbSpec;
use crate::lattice::{dispersion, reduce_torus, LatticeSpec};
use crate::mixture::GaussianMixture;
use crate::rng::{self, purpose};
use crate::special::{density_of_states, simpson};
use crate::stats::{linear_fit, Estimate};

use std::f64::consts::{PI, TAU};

/// Lower and upper end of the energy window integrated in `A_ε`.
pub const ALPHA_RANGE: (f64, f64) = (-1.0, 13.0);

/// Relative standard error above which an estimate is flagged.
pub const UNRELIABLE_RELATIVE_SE: f64 = 0.2;

const CHUNK: usize = 1 << 16;

/// Monte Carlo estimate together with the reliability flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularEstimate {
    pub estimate: Estimate,
    pub reliable: bool,
}

impl SingularEstimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
        let estimate = Estimate { value: mean, se: (var / n as f64).sqrt(), samples: n };
        let reliable = estimate.se <= UNRELIABLE_RELATIVE_SE * estimate.value.abs();
        Self { estimate, reliable }
    }
}

/// `∫_{T³} dk / |e_Δ(k) − α − iε|`.
///
/// The integral is taken over energies with the density of states; the
/// substitution `e = α + ε sinh s` spreads the resonance, and `resolution`
/// nodes per unit `s` put the energy spacing at the resonance at
/// `ε / resolution`, which must not exceed `ε/4`.
pub fn propagator_l1(alpha: f64, epsilon: f64, resolution: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if !(-1.0..=13.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in [-1, 13]")));
    }
    if resolution < 4 {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} gives energy spacing eps/{resolution} > eps/4 at the resonance"
        )));
    }
    let lo = ((0.0 - alpha) / epsilon).asinh();
    let hi = ((6.0 - alpha) / epsilon).asinh();
    let panels = ((hi - lo) * resolution as f64).ceil() as usize;
    Ok(simpson(|s| density_of_states(alpha + epsilon * s.sinh()), lo, hi, panels))
}

/// `max_k 1/|e_Δ(k) − α − iε|` over the dual grid of `lattice`.
pub fn propagator_sup(alpha: f64, epsilon: f64, lattice: LatticeSpec) -> f64 {
    lattice.dual_points().map(|k| 1.0 / (dispersion(k) - alpha).hypot(epsilon)).fold(0.0, f64::max)
}

/// Proposal on `T³`: half uniform, half concentrated on `{e_Δ = γ}` by
/// solving for the third coordinate and spreading it with a wrapped Cauchy
/// law of width matched to `ε`.
#[derive(Clone, Copy, Debug)]
pub struct ShellProposal {
    pub gamma: f64,
    pub epsilon: f64,
}

impl ShellProposal {
    /// Root `θ₀ ∈ (0, ½)` of `1 − cos 2πθ = c` and the Cauchy width, if the
    /// first two coordinates leave an attainable remainder `c`.
    fn root(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        let c = self.gamma - (1.0 - (TAU * p[0]).cos()) - (1.0 - (TAU * p[1]).cos());
        if !(c > 0.0 && c < 2.0) {
            return None;
        }
        let theta = (1.0 - c).acos() / TAU;
        let slope = TAU * (TAU * theta).sin();
        let width = (self.epsilon / slope).clamp(self.epsilon, 1.0);
        Some((theta, width))
    }

    fn wrapped_cauchy(x: f64, centre: f64, width: f64) -> f64 {
        let a = TAU * width;
        a.sinh() / (a.cosh() - (TAU * (x - centre)).cos())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let mut p = rng::torus_point(rng);
        if rng.random::<f64>() < 0.5 {
            return p;
        }
        if let Some((theta, width)) = self.root(p) {
            let centre = if rng.random::<f64>() < 0.5 { theta } else { -theta };
            let u = rng::open_unit(rng);
            let x = centre + width * (PI * (u - 0.5)).tan();
            p[2] = x - (x + 0.5).floor();
        }
        p
    }

    pub fn density(&self, p: [f64; 3]) -> f64 {
        let shell = match self.root(p) {
            Some((theta, width)) => {
                0.5 * (Self::wrapped_cauchy(p[2], theta, width) + Self::wrapped_cauchy(p[2], -theta, width))
            }
            None => 1.0,
        };
        0.5 + 0.5 * shell
    }
}

fn resolvent(e: f64, gamma: f64, epsilon: f64) -> f64 {
    1.0 / (e - gamma).hypot(epsilon)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Deterministic chunked Monte Carlo: chunk `c` draws from its own stream.
fn chunked(budget: usize, seed: u64, tag: u64, draw: impl Fn(&mut ChaCha8Rng) -> f64 + Sync) -> SingularEstimate {
    let chunks = budget.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, tag, c as u64);
            let n = CHUNK.min(budget - c * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let w = draw(&mut r);
                s += w;
                s2 += w * w;
            }
            (s, s2)
        })
        .collect();
    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    SingularEstimate::from_sums(sum, sum_sq, budget)
}

fn check_budget(budget: usize) -> Result<()> {
    if budget < 1_000_000 {
        return Err(Error::InvalidParameter(format!("budget {budget} is below the minimum of 10^6 samples")));
    }
    Ok(())
}

/// `∫dp dq [|e(p)−γ₁−iε| |e(q)−γ₂−iε| |e(p−q+k)−γ₃−iε|]^{-1}` by importance
/// sampling `p` and `q` on their shells.
pub fn crossing_integral(epsilon: f64, gammas: [f64; 3], k: [f64; 3], budget: usize, seed: u64) -> Result<SingularEstimate> {
    if !(1e-3..=1e-1).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in [1e-3, 1e-1]")));
    }
    check_budget(budget)?;
    let sp = ShellProposal { gamma: gammas[0], epsilon };
    let sq = ShellProposal { gamma: gammas[1], epsilon };
    Ok(chunked(budget, seed, purpose::CROSSING, |r| {
        let p = sp.sample(r);
        let q = sq.sample(r);
        let f = resolvent(dispersion(p), gammas[0], epsilon)
            * resolvent(dispersion(q), gammas[1], epsilon)
            * resolvent(dispersion(add(sub(p, q), k)), gammas[2], epsilon);
        f / (sp.density(p) * sq.density(q))
    }))
}

/// Momentum profile `|φ̂₀|` entering `A_ε`.
#[derive(Clone, Debug)]
pub enum MomentumProfile {
    /// `|φ̂₀| ≡ 1`.
    Constant,
    /// Continuum transform of a plane-wave WKB state,
    /// `φ̂₀(k) = η^{-3/2} ĥ((k − p)/η) / ‖h‖` near `p`.
    PlaneWave { envelope: GaussianMixture, p: [f64; 3], eta: f64 },
}

impl MomentumProfile {
    pub fn plane_wave(spec: &WkbSpec) -> Result<Self> {
        match spec.phase() {
            crate::initial::Phase::Linear { p } => {
                Ok(Self::PlaneWave { envelope: spec.envelope().clone(), p: *p, eta: spec.eta() })
            }
            _ => Err(Error::InvalidParameter("A_eps profiles need a plane-wave (linear phase) state".into())),
        }
    }
}

/// `∫_{α-range} dα / |e − α − iε|`.
fn alpha_integral(e: f64, epsilon: f64) -> f64 {
    ((ALPHA_RANGE.1 - e) / epsilon).asinh() + ((e - ALPHA_RANGE.0) / epsilon).asinh()
}

/// Sampler for `|φ̂₀|` of a plane wave: Gaussian components of the bound
/// `Σ|w_i| |ĝ_i|`, with exact densities.
struct ProfileSampler {
    envelope: GaussianMixture,
    p: [f64; 3],
    eta: f64,
    norm: f64,
    total_weight: f64,
}

impl ProfileSampler {
    fn new(envelope: &GaussianMixture, p: [f64; 3], eta: f64) -> Self {
        let total_weight = envelope.components().iter().map(|c| c.weight.abs()).sum();
        Self { envelope: envelope.clone(), p, eta, norm: envelope.l2_norm_sq().sqrt(), total_weight }
    }

    fn bound(&self, xi: [f64; 3]) -> f64 {
        let xi2: f64 = xi.iter().map(|v| v * v).sum();
        self.envelope
            .components()
            .iter()
            .map(|c| c.weight.abs() * (TAU * c.width * c.width).powf(1.5) * (-2.0 * PI * PI * c.width * c.width * xi2).exp())
            .sum()
    }

    fn xi(&self, k: [f64; 3]) -> [f64; 3] {
        reduce_torus(sub(k, self.p)).map(|v| v / self.eta)
    }

    fn modulus(&self, k: [f64; 3]) -> f64 {
        self.envelope.fourier(self.xi(k)).norm() / (self.eta.powf(1.5) * self.norm)
    }

    fn density(&self, k: [f64; 3]) -> f64 {
        self.bound(self.xi(k)) / (self.total_weight * self.eta.powi(3))
    }

    /// A draw, or `None` when it falls outside the fundamental cell.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<[f64; 3]> {
        let mut pick = rng.random::<f64>() * self.total_weight;
        let mut chosen = self.envelope.components()[0];
        for c in self.envelope.components() {
            chosen = *c;
            pick -= c.weight.abs();
            if pick <= 0.0 {
                break;
            }
        }
        let sd = 1.0 / (TAU * chosen.width);
        let step: [f64; 3] = std::array::from_fn(|_| self.eta * sd * rng::standard_normal(rng));
        if step.iter().any(|s| s.abs() >= 0.5) {
            return None;
        }
        Some(reduce_torus(add(self.p, step)))
    }
}

/// Monte Carlo estimate of `A_ε` with `α₁, α₂` integrated in closed form
/// over [`ALPHA_RANGE`] and fixed `β₁, β₂`.
pub fn a_eps_integral(
    epsilon: f64,
    profile: &MomentumProfile,
    betas: [f64; 2],
    k: [f64; 3],
    budget: usize,
    seed: u64,
) -> Result<SingularEstimate> {
    if !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 0.2]")));
    }
    check_budget(budget)?;
    match profile {
        MomentumProfile::Constant => {
            let sw = ShellProposal { gamma: betas[0], epsilon };
            Ok(chunked(budget, seed, purpose::CROSSING ^ 0xa5, |r| {
                let p = rng::torus_point(r);
                let q = rng::torus_point(r);
                let w = sw.sample(r);
                // w = p + u + k, so q − u = q − w + p + k
                let qu = add(sub(add(q, p), w), k);
                let f = alpha_integral(dispersion(p), epsilon)
                    * alpha_integral(dispersion(q), epsilon)
                    * resolvent(dispersion(w), betas[0], epsilon)
                    * resolvent(dispersion(qu), betas[1], epsilon);
                f / sw.density(w)
            }))
        }
        MomentumProfile::PlaneWave { envelope, p: p0, eta } => {
            if !(*eta > 0.0 && *eta <= 0.2) {
                return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 0.2]")));
            }
            let s = ProfileSampler::new(envelope, *p0, *eta);
            Ok(chunked(budget, seed, purpose::CROSSING ^ 0x5a, |r| {
                let (Some(p), Some(q), Some(w)) = (s.sample(r), s.sample(r), s.sample(r)) else {
                    return 0.0;
                };
                let qu = add(sub(add(q, p), w), k);
                let moduli = s.modulus(p) * s.modulus(q) * s.modulus(w) * s.modulus(qu);
                let f = moduli
                    * alpha_integral(dispersion(p), epsilon)
                    * alpha_integral(dispersion(q), epsilon)
                    * resolvent(dispersion(w), betas[0], epsilon)
                    * resolvent(dispersion(qu), betas[1], epsilon);
                f / (s.density(p) * s.density(q) * s.density(w))
            }))
        }
    }
}

/// Slope of `log value` against `log(1/ε)`.
pub fn fit_exponent(epsilons: &[f64], values: &[f64]) -> f64 {
    let x: Vec<f64> = epsilons.iter().map(|e| (1.0 / e).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&x, &y).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::tanh_sinh;

    #[test]
    fn shell_density_integrates_to_one() {
        let sp = ShellProposal { gamma: 3.0, epsilon: 0.01 };
        // integrate over the third coordinate on a few fixed (p1, p2)
        for (a, b) in [(0.1, 0.2), (0.3, -0.45), (0.0, 0.0)] {
            let total: f64 = [(-0.5, 0.0), (0.0, 0.5)]
                .iter()
                .map(|&(lo, hi)| {
                    let f = |x: f64| sp.density([a, b, x]);
                    // split at the roots where the density peaks
                    let mut cuts = vec![lo, hi];
                    if let Some((t, _)) = sp.root([a, b, 0.0]) {
                        for c in [t, -t] {
                            if c > lo && c < hi {
                                cuts.push(c);
                            }
                        }
                    }
                    cuts.sort_by(|x, y| x.total_cmp(y));
                    cuts.windows(2).map(|w| tanh_sinh(f, w[0], w[1], 1e-12)).sum::<f64>()
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-8, "{total}");
        }
    }

    #[test]
    fn below_spectrum_propagator_is_flat() {
        let a = propagator_l1(-1.0, 0.1, 32).unwrap();
        let b = propagator_l1(-1.0, 0.01, 32).unwrap();
        assert!((a - b).abs() < 0.1 * a);
        assert!(propagator_l1(3.0, 0.01, 2).is_err());
    }

    #[test]
    fn propagator_grows_as_epsilon_shrinks() {
        let v: Vec<f64> = [0.1, 0.03, 0.01].iter().map(|&e| propagator_l1(3.0, e, 16).unwrap()).collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
    }

    #[test]
    fn sup_on_shell_is_inverse_epsilon() {
        let lat = LatticeSpec::unit(2).unwrap();
        let alpha = dispersion(lat.dual_point(7));
        assert!((propagator_sup(alpha, 0.05, lat) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn budget_and_range_checks() {
        assert!(crossing_integral(0.5, [3.0; 3], [0.0; 3], 1_000_000, 1).is_err());
        assert!(crossing_integral(0.05, [3.0; 3], [0.0; 3], 10, 1).is_err());
    }
}
