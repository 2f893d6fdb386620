//! WKB initial states and the concentration-of-singularity diagnostic.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use crate::boltzmann::{Particle, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::lattice::{reduce_torus, Field, Fourier, LatticeSpec, Representation};
use crate::mixture::{dist_sq, GaussianMixture};
use crate::rng;

/// Envelope mass allowed outside the lattice box.
pub const TRUNCATION_TAIL: f64 = 1e-10;

/// Phase values on a regular grid, trilinearly interpolated and clamped at the edges.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTable {
    pub origin: [f64; 3],
    pub spacing: f64,
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

impl PhaseTable {
    pub fn new(origin: [f64; 3], spacing: f64, shape: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if spacing <= 0.0 || shape.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter("phase table needs spacing > 0 and at least 2 points per axis".into()));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::InvalidParameter(format!(
                "phase table has {} values, shape needs {}",
                values.len(),
                shape.iter().product::<usize>()
            )));
        }
        Ok(Self { origin, spacing, shape, values })
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..3 {
            let t = ((x[i] - self.origin[i]) / self.spacing).clamp(0.0, (self.shape[i] - 1) as f64);
            let b = (t.floor() as usize).min(self.shape[i] - 2);
            base[i] = b;
            frac[i] = t - b as f64;
        }
        let at = |a: usize, b: usize, c: usize| self.values[(a * self.shape[1] + b) * self.shape[2] + c];
        let mut acc = 0.0;
        for corner in 0..8 {
            let d = [(corner >> 2) & 1, (corner >> 1) & 1, corner & 1];
            let w: f64 = (0..3).map(|i| if d[i] == 1 { frac[i] } else { 1.0 - frac[i] }).product();
            acc += w * at(base[0] + d[0], base[1] + d[1], base[2] + d[2]);
        }
        acc
    }
}

/// Phase function `S` of the WKB state.
#[derive(Clone, Debug, PartialEq)]
pub enum Phase {
    /// `S(X) = p·X`.
    Linear { p: [f64; 3] },
    /// `S(X) = ½ X·A X + p·X` with symmetric `A`.
    Quadratic { hessian: [[f64; 3]; 3], p: [f64; 3] },
    Tabulated(PhaseTable),
}

impl Phase {
    pub fn value(&self, x: [f64; 3]) -> f64 {
        match self {
            Phase::Linear { p } => dot(*p, x),
            Phase::Quadratic { hessian, p } => {
                let ax = mat_vec(hessian, x);
                0.5 * dot(x, ax) + dot(*p, x)
            }
            Phase::Tabulated(table) => table.eval(x),
        }
    }

    /// `∇S(X)`, unavailable for tabulated phases.
    pub fn gradient(&self, x: [f64; 3]) -> Option<[f64; 3]> {
        match self {
            Phase::Linear { p } => Some(*p),
            Phase::Quadratic { hessian, p } => {
                let ax = mat_vec(hessian, x);
                Some([ax[0] + p[0], ax[1] + p[1], ax[2] + p[2]])
            }
            Phase::Tabulated(_) => None,
        }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &[[f64; 3]; 3], x: [f64; 3]) -> [f64; 3] {
    [dot(m[0], x), dot(m[1], x), dot(m[2], x)]
}

/// `φ₀(x) ∝ η^{3/2} h(ηx) e^{2πi S(ηx)/η}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WkbSpec {
    envelope: GaussianMixture,
    phase: Phase,
    eta: f64,
}

impl WkbSpec {
    pub fn new(envelope: GaussianMixture, phase: Phase, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1]")));
        }
        match &phase {
            Phase::Linear { p } if p.iter().any(|&c| !(-1.0..1.0).contains(&c)) => {
                return Err(Error::InvalidParameter("linear phase needs p in [-1, 1)^3".into()));
            }
            Phase::Quadratic { hessian, .. } => {
                for i in 0..3 {
                    for j in 0..3 {
                        if (hessian[i][j] - hessian[j][i]).abs() > 1e-12 {
                            return Err(Error::InvalidParameter("quadratic phase needs a symmetric matrix".into()));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Self { envelope, phase, eta })
    }

    /// Plane-wave state with a centered Gaussian envelope.
    pub fn plane_wave(width: f64, p: [f64; 3], eta: f64) -> Result<Self> {
        Self::new(GaussianMixture::centered(width)?, Phase::Linear { p }, eta)
    }

    pub fn envelope(&self) -> &GaussianMixture {
        &self.envelope
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.envelope.clone(), self.phase.clone(), eta)
    }

    /// Radius in lattice units outside which the state carries at most
    /// [`TRUNCATION_TAIL`] of its mass.
    pub fn mass_radius(&self) -> f64 {
        self.envelope.mass_radius(TRUNCATION_TAIL) / self.eta
    }

    pub fn is_plane_wave(&self) -> bool {
        matches!(self.phase, Phase::Linear { .. })
    }
}

/// Unit-norm WKB state on `Λ_L`.
pub fn build_wkb(spec: &WkbSpec, lattice: LatticeSpec) -> Result<Field> {
    if lattice.inv_rho() != 1 {
        return Err(Error::InvalidLattice("WKB states live on the unit lattice".into()));
    }
    let radius = spec.mass_radius();
    if radius > lattice.half_width() as f64 {
        return Err(Error::SupportViolation { radius, half_width: lattice.half_width() });
    }
    let eta = spec.eta;
    let tau = std::f64::consts::TAU;
    let mut field = Field::from_fn(lattice, Representation::Position, |x| {
        let big = [eta * x[0], eta * x[1], eta * x[2]];
        let amp = eta.powf(1.5) * spec.envelope.eval(big);
        Complex64::from_polar(amp, tau * spec.phase.value(big) / eta)
    });
    let norm = field.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("WKB state vanishes on the lattice".into()));
    }
    field.scale(Complex64::new(1.0 / norm, 0.0));
    Ok(field)
}

/// Decomposition `f = f_∞ + f_sing` attached to a diagnostic when one is known.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSplit {
    /// Sup-norm bound of the regular part.
    pub f_inf_bound: f64,
    /// Statistic of the singular part.
    pub sing_l4_norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularityDiagnostic {
    pub eta: f64,
    pub l4_norm_sq: f64,
    pub split: Option<SingularSplit>,
}

/// `‖ |f̂|^∨ ‖²_{ℓ⁴}`: moduli in momentum space, inverse transform, then
/// `(Σ_x |·|⁴)^{1/2}`.
pub fn singularity_diagnostic(phi0_hat: &Field, eta: f64) -> Result<SingularityDiagnostic> {
    phi0_hat.expect(Representation::Momentum)?;
    let lattice = phi0_hat.lattice();
    let mut values: Vec<Complex64> = phi0_hat.values().iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
    Fourier::new(lattice).inverse_values(&mut values);
    let weight = lattice.rho().powi(3);
    let fourth: f64 = values.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * weight;
    Ok(SingularityDiagnostic { eta, l4_norm_sq: fourth.sqrt(), split: None })
}

/// Diagnostic of a WKB state; plane waves carry the split `f_∞ = 0`.
pub fn wkb_singularity_diagnostic(spec: &WkbSpec, lattice: LatticeSpec) -> Result<SingularityDiagnostic> {
    let phi0 = build_wkb(spec, lattice)?;
    let phi0_hat = Fourier::new(lattice).forward(&phi0)?;
    let mut diag = singularity_diagnostic(&phi0_hat, spec.eta)?;
    if spec.is_plane_wave() {
        diag.split = Some(SingularSplit { f_inf_bound: 0.0, sing_l4_norm_sq: diag.l4_norm_sq });
    }
    Ok(diag)
}

/// Samples the macroscopic initial law: `X ~ h²/‖h‖²`, `V = ∇S(X)` on the torus.
///
/// `h²` is dominated by `(Σ|w_i| g_i)²`, a positive mixture of Gaussian
/// products that is sampled exactly and then thinned by the ratio.
pub fn macroscopic_initial_sampler(spec: &WkbSpec, count: usize, seed: u64) -> Result<ParticleEnsemble> {
    if count == 0 {
        return Err(Error::InvalidParameter("particle count must be positive".into()));
    }
    if matches!(spec.phase, Phase::Tabulated(_)) {
        return Err(Error::InvalidParameter("tabulated phases carry no gradient data".into()));
    }
    let comps = spec.envelope.components();
    let mut pairs = Vec::new();
    let mut masses = Vec::new();
    for a in comps {
        for b in comps {
            let precision = 1.0 / (a.width * a.width) + 1.0 / (b.width * b.width);
            let mut mean = [0.0; 3];
            for i in 0..3 {
                mean[i] = (a.center[i] / (a.width * a.width) + b.center[i] / (b.width * b.width)) / precision;
            }
            let mass = (a.weight * b.weight).abs()
                * crate::mixture::product_integral(&[a, b]);
            pairs.push((mean, (1.0 / precision).sqrt()));
            masses.push(mass);
        }
    }
    let chooser = WeightedIndex::new(&masses)
        .map_err(|e| Error::InvalidParameter(format!("envelope weights: {e}")))?;
    let mut rng = rng::stream(seed, rng::purpose::INITIAL, 0);
    let budget = 1000 * count;
    let mut particles = Vec::with_capacity(count);
    let mut proposals = 0usize;
    while particles.len() < count {
        proposals += 1;
        if proposals > budget {
            return Err(Error::RejectionBudget(budget));
        }
        let (mean, sd) = pairs[chooser.sample(&mut rng)];
        let x: [f64; 3] = std::array::from_fn(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            mean[i] + sd * z
        });
        let bound = spec.envelope.abs_envelope(x).powi(2);
        let accept = if bound > 0.0 { spec.envelope.eval(x).powi(2) / bound } else { 0.0 };
        if rng.random::<f64>() < accept {
            let v = reduce_torus(spec.phase.gradient(x).expect("gradient checked above"));
            particles.push(Particle { x, v, weight: 1.0 / count as f64 });
        }
    }
    Ok(ParticleEnsemble::new(particles, 0.0))
}

/// Radius around `center` containing `fraction` of the mass of `weights`
/// (one weight per lattice point).
pub fn mass_fraction_radius(points: &[[f64; 3]], weights: &[f64], center: [f64; 3], fraction: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = points.iter().zip(weights).map(|(p, &w)| (dist_sq(*p, center).sqrt(), w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (r, w) in pairs {
        acc += w;
        if acc >= fraction * total {
            return r;
        }
    }
    f64::INFINITY
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_to_unit_norm() {
        let lat = LatticeSpec::unit(16).unwrap();
        let spec = WkbSpec::plane_wave(0.5, [0.0; 3], 0.25).unwrap();
        let phi = build_wkb(&spec, lat).unwrap();
        assert!((phi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_violation_reported() {
        let lat = LatticeSpec::unit(4).unwrap();
        let spec = WkbSpec::plane_wave(1.0, [0.0; 3], 0.1).unwrap();
        assert!(matches!(build_wkb(&spec, lat), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(WkbSpec::plane_wave(1.0, [0.0; 3], 0.0).is_err());
        assert!(WkbSpec::plane_wave(1.0, [0.0; 3], 1.5).is_err());
        assert!(WkbSpec::plane_wave(1.0, [1.0, 0.0, 0.0], 0.5).is_err());
        let asym = Phase::Quadratic { hessian: [[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], p: [0.0; 3] };
        assert!(WkbSpec::new(GaussianMixture::centered(1.0).unwrap(), asym, 0.5).is_err());
    }

    #[test]
    fn tabulated_phase_interpolates_linear_data() {
        let shape = [3, 4, 5];
        let mut values = Vec::new();
        for a in 0..3 {
            for b in 0..4 {
                for c in 0..5 {
                    values.push(0.5 * a as f64 - 0.25 * b as f64 + 0.1 * c as f64);
                }
            }
        }
        let table = PhaseTable::new([0.0; 3], 0.5, shape, values).unwrap();
        let x = [0.3, 0.7, 1.1];
        let expected = (0.5 * 0.3 - 0.25 * 0.7 + 0.1 * 1.1) / 0.5;
        assert!((table.eval(x) - expected).abs() < 1e-12);
        let spec = WkbSpec::new(GaussianMixture::centered(1.0).unwrap(), Phase::Tabulated(table), 0.5).unwrap();
        assert!(macroscopic_initial_sampler(&spec, 10, 1).is_err());
    }

    #[test]
    fn single_mode_statistic() {
        let lat = LatticeSpec::unit(2).unwrap();
        let n3 = lat.len() as f64;
        let mut f = Field::zeros(lat, Representation::Momentum);
        f.values_mut()[17] = Complex64::new((n3).sqrt(), 0.0);
        assert!((f.norm_sq() - 1.0).abs() < 1e-12);
        let d = singularity_diagnostic(&f, 1.0).unwrap();
        assert!((d.l4_norm_sq - n3.powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn diagnostic_is_translation_invariant_and_quadratic() {
        let lat = LatticeSpec::unit(4).unwrap();
        let spec = WkbSpec::plane_wave(0.4, [0.0; 3], 0.8).unwrap();
        let phi = build_wkb(&spec, lat).unwrap();
        let fourier = Fourier::new(lat);
        let hat = fourier.forward(&phi).unwrap();
        let base = singularity_diagnostic(&hat, 0.2).unwrap().l4_norm_sq;
        let mut shifted = Field::zeros(lat, Representation::Momentum);
        for i in 0..lat.len() {
            let o = lat.offsets(i);
            let j = lat.wrap_index([o[0] + 2, o[1] - 1, o[2] + 3]);
            shifted.values_mut()[j] = hat.values()[i];
        }
        let moved = singularity_diagnostic(&shifted, 0.2).unwrap().l4_norm_sq;
        assert!((moved - base).abs() < 1e-12 * base);
        let mut doubled = hat.clone();
        doubled.scale(Complex64::new(0.0, 3.0));
        let scaled = singularity_diagnostic(&doubled, 0.2).unwrap().l4_norm_sq;
        assert!((scaled - 9.0 * base).abs() < 1e-12 * scaled);
    }

    #[test]
    fn sampler_constant_velocity() {
        let spec = WkbSpec::plane_wave(1.0, [0.25, -0.1, 0.6], 0.5).unwrap();
        let ens = macroscopic_initial_sampler(&spec, 500, 3).unwrap();
        for p in ens.particles() {
            assert_eq!(p.v, [0.25, -0.1, -0.4]);
        }
    }
}
