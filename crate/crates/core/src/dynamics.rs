//! Gaussian disorder, the Anderson Hamiltonian `H = e_Δ(k) + λ ω_x`, time
//! evolution and the truncated Duhamel hierarchy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{dispersion, Field, Fourier, LatticeSpec, Representation};
use crate::rng;

/// Largest lattice accepted by exact diagonalization.
pub const EXACT_DIAG_MAX_SITES: usize = 2000;

/// One i.i.d. standard normal per site.
#[derive(Clone, Debug, PartialEq)]
pub struct Disorder {
    lattice: LatticeSpec,
    omega: Vec<f64>,
    seed: u64,
    replica: u64,
}

/// Disorder realization `replica = 0` of `seed`.
pub fn sample_disorder(lattice: LatticeSpec, seed: u64) -> Disorder {
    sample_disorder_replica(lattice, seed, 0)
}

/// Site `x` takes normal draw `x` of the `(seed, disorder, replica)` stream.
pub fn sample_disorder_replica(lattice: LatticeSpec, seed: u64, replica: u64) -> Disorder {
    let mut stream = rng::stream(seed, rng::purpose::DISORDER, replica);
    let omega = (0..lattice.len()).map(|_| rng::standard_normal(&mut stream)).collect();
    Disorder { lattice, omega, seed, replica }
}

impl Disorder {
    pub fn from_values(lattice: LatticeSpec, omega: Vec<f64>) -> Result<Self> {
        if omega.len() != lattice.len() {
            return Err(Error::InvalidParameter("one disorder value per site required".into()));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("disorder values must be finite".into()));
        }
        Ok(Self { lattice, omega, seed: 0, replica: 0 })
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// `ω → -ω`.
    pub fn negated(&self) -> Self {
        Self { omega: self.omega.iter().map(|w| -w).collect(), ..self.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec<'a> {
    pub lambda: f64,
    pub disorder: &'a Disorder,
}

impl<'a> HamiltonianSpec<'a> {
    pub fn new(lambda: f64, disorder: &'a Disorder) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be finite and non-negative")));
        }
        Ok(Self { lambda, disorder })
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.disorder.lattice
    }

    fn check(&self, f: &Field) -> Result<()> {
        f.expect(Representation::Position)?;
        if f.lattice() != self.lattice() {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }
}

fn kinetic_symbol(lattice: LatticeSpec) -> Vec<f64> {
    lattice.dual_points().map(dispersion).collect()
}

/// `(Hf)(x) = (e_Δ f̂)^∨(x) + λ ω_x f(x)`.
pub fn apply_hamiltonian(f: &Field, spec: &HamiltonianSpec) -> Result<Field> {
    spec.check(f)?;
    let lattice = f.lattice();
    let fourier = Fourier::new(lattice);
    let mut values = f.values().to_vec();
    fourier.forward_values(&mut values);
    for (v, e) in values.iter_mut().zip(kinetic_symbol(lattice)) {
        *v *= e;
    }
    fourier.inverse_values(&mut values);
    for ((v, w), orig) in values.iter_mut().zip(spec.disorder.omega()).zip(f.values()) {
        *v += spec.lambda * w * orig;
    }
    Field::from_values(lattice, Representation::Position, values)
}

/// Dense position-space matrix `3δ_{xy} - ½ Σ_{|y-x|=1} δ + λ ω_x δ_{xy}` on the torus.
pub fn dense_hamiltonian(spec: &HamiltonianSpec) -> Result<DMatrix<f64>> {
    let lattice = spec.lattice();
    if lattice.inv_rho() != 1 {
        return Err(Error::InvalidLattice("dynamics runs on the unit lattice".into()));
    }
    let n = lattice.len();
    let mut h = DMatrix::zeros(n, n);
    for x in 0..n {
        h[(x, x)] += 3.0 + spec.lambda * spec.disorder.omega()[x];
        let o = lattice.offsets(x);
        for axis in 0..3 {
            for step in [-1i64, 1] {
                let mut p = o;
                p[axis] += step;
                h[(x, lattice.wrap_index(p))] -= 0.5;
            }
        }
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    ExactDiag,
    /// Strang splitting with time step `dt`.
    SplitStep { dt: f64 },
    /// Fourth-order triple-jump composition of Strang steps.
    Fourth { dt: f64 },
}

impl Method {
    fn dt(&self) -> Option<f64> {
        match self {
            Method::ExactDiag => None,
            Method::SplitStep { dt } | Method::Fourth { dt } => Some(*dt),
        }
    }
}

/// Sequence of `(potential fraction, kinetic fraction)` sub-steps of one step.
fn step_schedule(method: Method) -> Vec<(f64, f64)> {
    match method {
        Method::Fourth { .. } => {
            let c = 2f64.powf(1.0 / 3.0);
            let w1 = 1.0 / (2.0 - c);
            let w0 = -c / (2.0 - c);
            vec![(0.5 * w1, w1), (0.5 * (w1 + w0), w0), (0.5 * (w0 + w1), w1), (0.5 * w1, 0.0)]
        }
        _ => vec![(0.5, 1.0), (0.5, 0.0)],
    }
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step dt = {dt} must be positive")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be non-negative")));
    }
    Ok(((t / dt) - 1e-9).ceil().max(0.0) as usize)
}

/// Precomputed kinetic phases for one splitting scheme and step.
struct Splitting {
    fourier: Fourier,
    substeps: Vec<(f64, Vec<Complex64>)>,
    tau: f64,
    steps: usize,
}

impl Splitting {
    fn new(lattice: LatticeSpec, method: Method, t: f64) -> Result<Self> {
        let dt = method.dt().expect("splitting method");
        let steps = step_count(t, dt)?;
        let tau = if steps == 0 { 0.0 } else { t / steps as f64 };
        let symbol = kinetic_symbol(lattice);
        let substeps = step_schedule(method)
            .into_iter()
            .map(|(pot, kin)| {
                let phases = if kin == 0.0 {
                    Vec::new()
                } else {
                    symbol.iter().map(|e| Complex64::from_polar(1.0, -kin * tau * e)).collect()
                };
                (pot, phases)
            })
            .collect();
        Ok(Self { fourier: Fourier::new(lattice), substeps, tau, steps })
    }

    fn kinetic(&self, values: &mut [Complex64], phases: &[Complex64]) {
        self.fourier.transform_in_place(values, true);
        let inv = 1.0 / values.len() as f64;
        for (v, p) in values.iter_mut().zip(phases) {
            *v *= p * inv;
        }
        self.fourier.transform_in_place(values, false);
    }
}

/// Reusable propagator `e^{-itH}` for one Hamiltonian.
pub struct Propagator {
    lattice: LatticeSpec,
    lambda: f64,
    omega: Vec<f64>,
    eigen: Option<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl Propagator {
    pub fn new(spec: &HamiltonianSpec) -> Self {
        Self { lattice: spec.lattice(), lambda: spec.lambda, omega: spec.disorder.omega().to_vec(), eigen: None }
    }

    fn eigen(&mut self) -> Result<&SymmetricEigen<f64, nalgebra::Dyn>> {
        if self.eigen.is_none() {
            if self.lattice.len() > EXACT_DIAG_MAX_SITES {
                return Err(Error::TooLarge(format!(
                    "exact diagonalization needs |Λ| <= {EXACT_DIAG_MAX_SITES}, got {}",
                    self.lattice.len()
                )));
            }
            let disorder = Disorder::from_values(self.lattice, self.omega.clone())?;
            let spec = HamiltonianSpec::new(self.lambda, &disorder)?;
            self.eigen = Some(SymmetricEigen::new(dense_hamiltonian(&spec)?));
        }
        Ok(self.eigen.as_ref().expect("just computed"))
    }

    pub fn evolve(&mut self, phi0: &Field, t: f64, method: Method) -> Result<Field> {
        phi0.expect(Representation::Position)?;
        if phi0.lattice() != self.lattice {
            return Err(Error::LatticeMismatch);
        }
        match method {
            Method::ExactDiag => {
                let eig = self.eigen()?;
                let re = DVector::from_iterator(phi0.values().len(), phi0.values().iter().map(|v| v.re));
                let im = DVector::from_iterator(phi0.values().len(), phi0.values().iter().map(|v| v.im));
                let cre = eig.eigenvectors.tr_mul(&re);
                let cim = eig.eigenvectors.tr_mul(&im);
                let mut out_re = DVector::zeros(re.len());
                let mut out_im = DVector::zeros(re.len());
                let mut rot_re = DVector::zeros(re.len());
                let mut rot_im = DVector::zeros(re.len());
                for j in 0..re.len() {
                    let c = Complex64::new(cre[j], cim[j]) * Complex64::from_polar(1.0, -t * eig.eigenvalues[j]);
                    rot_re[j] = c.re;
                    rot_im[j] = c.im;
                }
                out_re.gemv(1.0, &eig.eigenvectors, &rot_re, 0.0);
                out_im.gemv(1.0, &eig.eigenvectors, &rot_im, 0.0);
                let values = out_re.iter().zip(out_im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect();
                Field::from_values(self.lattice, Representation::Position, values)
            }
            _ => {
                let split = Splitting::new(self.lattice, method, t)?;
                let mut values = phi0.values().to_vec();
                let potential: Vec<Vec<Complex64>> = split
                    .substeps
                    .iter()
                    .map(|(pot, _)| {
                        self.omega.iter().map(|w| Complex64::from_polar(1.0, -pot * split.tau * self.lambda * w)).collect()
                    })
                    .collect();
                for _ in 0..split.steps {
                    for ((_, kin), pot) in split.substeps.iter().zip(&potential) {
                        for (v, p) in values.iter_mut().zip(pot) {
                            *v *= p;
                        }
                        if !kin.is_empty() {
                            split.kinetic(&mut values, kin);
                        }
                    }
                }
                Field::from_values(self.lattice, Representation::Position, values)
            }
        }
    }
}

/// `φ_t = e^{-itH} φ₀`.
pub fn evolve(phi0: &Field, spec: &HamiltonianSpec, t: f64, method: Method) -> Result<Field> {
    spec.check(phi0)?;
    Propagator::new(spec).evolve(phi0, t, method)
}

/// Truncated Duhamel expansion `φ_t = Σ_{n<N} φ_{n,t} + R_{N,t}`.
#[derive(Clone, Debug)]
pub struct DuhamelResult {
    pub terms: Vec<Field>,
    pub remainder: Field,
    pub t: f64,
    pub order: usize,
}

impl DuhamelResult {
    /// `Σ_n φ_{n,t} + R_{N,t}`.
    pub fn total(&self) -> Field {
        let mut sum = self.remainder.clone();
        for term in &self.terms {
            sum.axpy(Complex64::new(1.0, 0.0), term).expect("same lattice");
        }
        sum
    }
}

/// `Σ_{j≥k} z^j / j!` for `z = -iθ`.
fn exp_tail(theta: f64, k: usize) -> Complex64 {
    let z = Complex64::new(0.0, -theta);
    if theta.abs() <= 2.0 {
        let mut term = Complex64::new(1.0, 0.0);
        for j in 1..=k {
            term *= z / j as f64;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut j = k;
        loop {
            sum += term;
            j += 1;
            term *= z / j as f64;
            if term.norm() <= 1e-18 * sum.norm().max(1e-300) {
                return sum;
            }
        }
    } else {
        let mut partial = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..k {
            partial += term;
            term *= z / (j + 1) as f64;
        }
        z.exp() - partial
    }
}

struct SiteFlow {
    coeffs: Vec<Complex64>,
    tails: Vec<Complex64>,
    rot: Complex64,
}

/// Integrates `φ_n' = -iH₀φ_n - iλVφ_{n-1}` for `n < N` together with the
/// remainder `R' = -iHR - iλVφ_{N-1}` under the fourth-order splitting with
/// step `dt`. The potential sub-flow of the hierarchy is solved exactly, so
/// each `φ_{n,t}` is a homogeneous degree-`n` polynomial in `λω`.
pub fn duhamel_hierarchy(phi0: &Field, spec: &HamiltonianSpec, t: f64, order: usize, dt: f64) -> Result<DuhamelResult> {
    spec.check(phi0)?;
    if order < 1 {
        return Err(Error::InvalidParameter("truncation order N must be at least 1".into()));
    }
    let lattice = phi0.lattice();
    let method = Method::Fourth { dt };
    let split = Splitting::new(lattice, method, t)?;
    let zero = Complex64::new(0.0, 0.0);
    let sites = lattice.len();
    let mut comps: Vec<Vec<Complex64>> = vec![vec![zero; sites]; order + 1];
    comps[0].copy_from_slice(phi0.values());
    // per sub-step and site: the series coefficients (−iθ)^j/j!, the tails
    // Σ_{j≥k}(−iθ)^j/j! and the full phase e^{−iθ}
    let flows: Vec<Option<Vec<SiteFlow>>> = split
        .substeps
        .iter()
        .map(|(pot, _)| {
            (*pot != 0.0).then(|| {
                spec.disorder
                    .omega()
                    .iter()
                    .map(|w| {
                        let theta = pot * split.tau * spec.lambda * w;
                        let z = Complex64::new(0.0, -theta);
                        let mut coeffs = vec![Complex64::new(1.0, 0.0); order];
                        for j in 1..order {
                            coeffs[j] = coeffs[j - 1] * z / j as f64;
                        }
                        let tails = (0..=order).map(|k| if k == 0 { zero } else { exp_tail(theta, k) }).collect();
                        SiteFlow { coeffs, tails, rot: z.exp() }
                    })
                    .collect()
            })
        })
        .collect();
    let mut old = vec![zero; order + 1];
    for _ in 0..split.steps {
        for ((_, kin), flow) in split.substeps.iter().zip(&flows) {
            if let Some(flow) = flow {
                for (x, site) in flow.iter().enumerate() {
                    for (o, c) in old.iter_mut().zip(&comps) {
                        *o = c[x];
                    }
                    for n in 0..order {
                        comps[n][x] = (0..=n).map(|m| site.coeffs[n - m] * old[m]).sum();
                    }
                    let mut r = site.rot * old[order];
                    for (m, value) in old.iter().enumerate().take(order) {
                        r += site.tails[order - m] * value;
                    }
                    comps[order][x] = r;
                }
            }
            if !kin.is_empty() {
                for c in comps.iter_mut() {
                    split.kinetic(c, kin);
                }
            }
        }
    }
    let mut fields: Vec<Field> = comps
        .into_iter()
        .map(|values| Field::from_values(lattice, Representation::Position, values))
        .collect::<Result<_>>()?;
    let remainder = fields.pop().expect("remainder component");
    Ok(DuhamelResult { terms: fields, remainder, t, order })
}
