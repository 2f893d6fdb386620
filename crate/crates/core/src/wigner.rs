//! Wigner transform in the `(ξ, v)` representation and its pairing with test functions.
//!
//! The position variable of the Wigner function lives on `Λ_{L,1/2}`, so `ξ`
//! runs over the dual grid of the half lattice (`4L+1` points per axis,
//! `ξ ∈ [-1, 1)³`) while `v` runs over `Λ*_L`. Off-grid values `φ̂(v ± ξ/2)`
//! are exact evaluations of the trigonometric polynomial `Σ_x e^{-2πikx} φ(x)`.
//!
//! Pairings use the dual measures of both grids, which puts the mass of a
//! normalized state at exactly one:
//!
//! ```text
//! ⟨J, W⟩ = ∫dξ ∫dv conj(Ĵ_η(ξ, v)) Ŵ(ξ, v),   Ĵ_η(ξ, v) = 2⁻³ Σ_{x ∈ Λ_{L,1/2}} e^{-2πiξx} J(ηx, v)
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{evaluate_off_grid, Field, Fourier, LatticeSpec, Representation};
use crate::mixture::GaussianMixture;

/// Finite trigonometric polynomial `B(V) = Σ_c a_c e^{2πi c·V}` with Hermitian
/// coefficients, so `B` is real.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    modes: Vec<([i32; 3], Complex64)>,
}

impl TrigPoly {
    pub fn new(modes: Vec<([i32; 3], Complex64)>) -> Result<Self> {
        for (c, a) in &modes {
            let neg = [-c[0], -c[1], -c[2]];
            let partner: Complex64 = modes.iter().filter(|(m, _)| *m == neg).map(|(_, b)| *b).sum();
            let own: Complex64 = modes.iter().filter(|(m, _)| m == c).map(|(_, b)| *b).sum();
            if (partner - own.conj()).norm() > 1e-12 * (1.0 + a.norm()) {
                return Err(Error::InvalidParameter(format!("coefficients of mode {c:?} are not Hermitian")));
            }
        }
        Ok(Self { modes })
    }

    pub fn constant(value: f64) -> Self {
        Self { modes: vec![([0, 0, 0], Complex64::new(value, 0.0))] }
    }

    /// `Σ_j amplitude_j cos(2π m_j·V)`.
    pub fn cosines(terms: &[([i32; 3], f64)]) -> Self {
        let mut modes = Vec::new();
        for &(m, a) in terms {
            if m == [0, 0, 0] {
                modes.push((m, Complex64::new(a, 0.0)));
            } else {
                modes.push((m, Complex64::new(0.5 * a, 0.0)));
                modes.push(([-m[0], -m[1], -m[2]], Complex64::new(0.5 * a, 0.0)));
            }
        }
        Self { modes }
    }

    pub fn modes(&self) -> &[([i32; 3], Complex64)] {
        &self.modes
    }

    pub fn eval(&self, v: [f64; 3]) -> f64 {
        let tau = std::f64::consts::TAU;
        self.modes
            .iter()
            .map(|(c, a)| {
                let phase = tau * (c[0] as f64 * v[0] + c[1] as f64 * v[1] + c[2] as f64 * v[2]);
                (a * Complex64::from_polar(1.0, phase)).re
            })
            .sum()
    }

    fn scaled(&self, s: f64) -> Self {
        Self { modes: self.modes.iter().map(|(c, a)| (*c, a * s)).collect() }
    }
}

/// Position factor of a test function term.
#[derive(Clone, Debug, PartialEq)]
pub enum XProfile {
    Constant(f64),
    Mixture(GaussianMixture),
}

impl XProfile {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            XProfile::Constant(c) => *c,
            XProfile::Mixture(m) => m.eval(x),
        }
    }
}

/// `J(X, V) = Σ_t A_t(X) B_t(V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    terms: Vec<(XProfile, TrigPoly)>,
}

impl TestFunction {
    pub fn new(terms: Vec<(XProfile, TrigPoly)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("test function needs at least one term".into()));
        }
        Ok(Self { terms })
    }

    pub fn constant(value: f64) -> Self {
        Self { terms: vec![(XProfile::Constant(1.0), TrigPoly::constant(value))] }
    }

    pub fn x_only(x: GaussianMixture) -> Self {
        Self { terms: vec![(XProfile::Mixture(x), TrigPoly::constant(1.0))] }
    }

    pub fn v_only(v: TrigPoly) -> Self {
        Self { terms: vec![(XProfile::Constant(1.0), v)] }
    }

    pub fn product(x: GaussianMixture, v: TrigPoly) -> Self {
        Self { terms: vec![(XProfile::Mixture(x), v)] }
    }

    pub fn terms(&self) -> &[(XProfile, TrigPoly)] {
        &self.terms
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|(x, v)| (x.clone(), v.scaled(s))).collect() }
    }

    pub fn plus(&self, other: &TestFunction) -> Self {
        Self { terms: self.terms.iter().chain(&other.terms).cloned().collect() }
    }

    pub fn eval(&self, x: [f64; 3], v: [f64; 3]) -> f64 {
        self.terms.iter().map(|(a, b)| a.eval(x) * b.eval(v)).sum()
    }
}

/// `Ŵ(ξ, v)` on `Λ*_{L,1/2} × Λ*_L`, stored with `ξ` slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    lattice: LatticeSpec,
    values: Vec<Complex64>,
}

impl WignerField {
    /// The base lattice `Λ_L` of the states.
    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    /// The half lattice whose dual carries `ξ`.
    pub fn xi_lattice(&self) -> LatticeSpec {
        self.lattice.half()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, xi_index: usize, v_index: usize) -> Complex64 {
        self.values[xi_index * self.lattice.len() + v_index]
    }

    pub fn xi_point(&self, xi_index: usize) -> [f64; 3] {
        self.xi_lattice().dual_point(xi_index)
    }

    pub fn v_point(&self, v_index: usize) -> [f64; 3] {
        self.lattice.dual_point(v_index)
    }

    /// Index of `ξ = 0`.
    pub fn xi_zero(&self) -> usize {
        self.xi_lattice().wrap_index([0, 0, 0])
    }

    /// `∫dv Ŵ(0, v)`.
    pub fn mass(&self) -> f64 {
        let z = self.xi_zero();
        (0..self.lattice.len()).map(|v| self.value(z, v).re).sum::<f64>() * self.lattice.dual_measure()
    }

    pub fn linear_combination(&self, a: Complex64, other: &WignerField, b: Complex64) -> Result<WignerField> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(WignerField { lattice: self.lattice, values })
    }

    /// Position-space `W(x, v)` on `Λ_{L,1/2} × Λ*_L` (x slowest), by inverse
    /// transform in `ξ`.
    pub fn position_space(&self) -> Vec<Complex64> {
        let half = self.xi_lattice();
        let fourier = Fourier::new(half);
        let nv = self.lattice.len();
        let nx = half.len();
        let mut out = vec![Complex64::new(0.0, 0.0); nx * nv];
        let mut column = vec![Complex64::new(0.0, 0.0); nx];
        for v in 0..nv {
            for (xi, slot) in column.iter_mut().enumerate() {
                *slot = self.value(xi, v);
            }
            fourier.inverse_values(&mut column);
            for (x, value) in column.iter().enumerate() {
                out[x * nv + v] = *value;
            }
        }
        out
    }
}

/// Off-grid values `φ̂(a/N + b/M)` for all `a ∈ [-L, L]³`, `b ∈ [-2L, 2L]³`.
fn shifted_transform(phi_hat: &Field) -> Result<Vec<Complex64>> {
    let lattice = phi_hat.lattice();
    let phi = Fourier::new(lattice).inverse(phi_hat)?;
    let n = lattice.side();
    let m = lattice.half().side();
    let ks: Vec<f64> = (0..n)
        .flat_map(|a| {
            (0..m).map(move |b| (a as f64 - (n / 2) as f64) / n as f64 + (b as f64 - (m / 2) as f64) / m as f64)
        })
        .collect();
    evaluate_off_grid(&phi, &ks)
}

/// `Ŵ(ξ, v) = conj(ψ̂(v - ξ/2)) φ̂(v + ξ/2)`; `psi_hat = None` means `ψ = φ`.
pub fn wigner_fourier(phi_hat: &Field, psi_hat: Option<&Field>) -> Result<WignerField> {
    phi_hat.expect(Representation::Momentum)?;
    let lattice = phi_hat.lattice();
    if lattice.inv_rho() != 1 {
        return Err(Error::InvalidLattice("Wigner transforms take states on the unit lattice".into()));
    }
    if let Some(psi) = psi_hat {
        psi.expect(Representation::Momentum)?;
        if psi.lattice() != lattice {
            return Err(Error::LatticeMismatch);
        }
    }
    let table_phi = shifted_transform(phi_hat)?;
    let table_psi = match psi_hat {
        Some(psi) => shifted_transform(psi)?,
        None => table_phi.clone(),
    };
    let n = lattice.side();
    let half = lattice.half();
    let m = half.side();
    let s = n * m;
    let index = |a: [usize; 3], b: [usize; 3]| ((a[0] * m + b[0]) * s + a[1] * m + b[1]) * s + a[2] * m + b[2];
    let mut values = Vec::with_capacity(half.len() * lattice.len());
    for xi in 0..half.len() {
        let b = half.coords(xi);
        let nb = b.map(|c| m - 1 - c);
        for v in 0..lattice.len() {
            let a = lattice.coords(v);
            values.push(table_psi[index(a, nb)].conj() * table_phi[index(a, b)]);
        }
    }
    Ok(WignerField { lattice, values })
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eta = {eta} must be positive")))
    }
}

fn real_part(value: Complex64) -> Result<f64> {
    if value.im.abs() > 1e-10 * value.re.abs().max(1.0) {
        Err(Error::ImaginaryPairing { real: value.re, imag: value.im })
    } else {
        Ok(value.re)
    }
}

/// `⟨J, W⟩` in the `(ξ, v)` representation, keeping the imaginary part.
pub fn pair_complex(j: &TestFunction, w: &WignerField, eta: f64) -> Result<Complex64> {
    check_eta(eta)?;
    let lattice = w.lattice;
    let half = lattice.half();
    let fourier = Fourier::new(half);
    let nv = lattice.len();
    let v_points: Vec<[f64; 3]> = lattice.dual_points().collect();
    let mut jhat = vec![Complex64::new(0.0, 0.0); half.len() * nv];
    for (a, b) in j.terms() {
        let mut ahat: Vec<Complex64> =
            half.sites().map(|x| Complex64::new(a.eval([eta * x[0], eta * x[1], eta * x[2]]), 0.0)).collect();
        fourier.forward_values(&mut ahat);
        let bv: Vec<f64> = v_points.iter().map(|&v| b.eval(v)).collect();
        for (xi, ah) in ahat.iter().enumerate() {
            for (v, bb) in bv.iter().enumerate() {
                jhat[xi * nv + v] += ah * bb;
            }
        }
    }
    let sum: Complex64 = jhat.iter().zip(&w.values).map(|(a, b)| a.conj() * b).sum();
    Ok(sum * half.dual_measure() * lattice.dual_measure())
}

/// `⟨J, W⟩`, checking that the imaginary part is negligible.
pub fn pair(j: &TestFunction, w: &WignerField, eta: f64) -> Result<f64> {
    real_part(pair_complex(j, w, eta)?)
}

/// `⟨J, W_{ψ,φ}⟩` directly from position-space states, without forming `Ŵ`:
///
/// ```text
/// Σ_t Σ_c conj(a_c) Σ_y conj(A_t(η(y+z)/2)) conj(ψ(y)) φ(z),   z ≡ y - c on the torus
/// ```
pub fn pair_bilinear(j: &TestFunction, psi: &Field, phi: &Field, eta: f64) -> Result<Complex64> {
    check_eta(eta)?;
    psi.expect(Representation::Position)?;
    phi.expect(Representation::Position)?;
    let lattice = phi.lattice();
    if psi.lattice() != lattice {
        return Err(Error::LatticeMismatch);
    }
    if lattice.inv_rho() != 1 {
        return Err(Error::InvalidLattice("pairings take states on the unit lattice".into()));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (a, b) in j.terms() {
        for (c, coeff) in b.modes() {
            let mut inner = Complex64::new(0.0, 0.0);
            for y in 0..lattice.len() {
                let oy = lattice.offsets(y);
                let z = lattice.wrap_index([oy[0] - c[0] as i64, oy[1] - c[1] as i64, oy[2] - c[2] as i64]);
                let oz = lattice.offsets(z);
                let mid: [f64; 3] = std::array::from_fn(|i| 0.5 * eta * (oy[i] + oz[i]) as f64);
                inner += a.eval(mid) * psi.values()[y].conj() * phi.values()[z];
            }
            total += coeff.conj() * inner;
        }
    }
    Ok(total)
}

/// `⟨J, W_φ⟩` for a single state.
pub fn pair_state(j: &TestFunction, phi: &Field, eta: f64) -> Result<f64> {
    real_part(pair_bilinear(j, phi, phi, eta)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_support() {
        let lat = LatticeSpec::unit(2).unwrap();
        let k0 = 40;
        let mut f = Field::zeros(lat, Representation::Momentum);
        f.values_mut()[k0] = Complex64::new((lat.len() as f64).sqrt(), 0.0);
        let w = wigner_fourier(&f, None).unwrap();
        let z = w.xi_zero();
        let peak = lat.len() as f64;
        for v in 0..lat.len() {
            let expected = if v == k0 { peak } else { 0.0 };
            assert!((w.value(z, v).norm() - expected).abs() < 1e-9);
        }
        // off the ξ = 0 slice the off-grid transform is a Dirichlet kernel,
        // bounded by its peak
        assert!(w.values().iter().all(|x| x.norm() <= peak * (1.0 + 1e-12)));
        assert!((w.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_coefficients_required() {
        let bad = TrigPoly::new(vec![([1, 0, 0], Complex64::new(1.0, 0.0))]);
        assert!(bad.is_err());
        let good = TrigPoly::new(vec![
            ([1, 0, 0], Complex64::new(0.5, 0.25)),
            ([-1, 0, 0], Complex64::new(0.5, -0.25)),
        ]);
        assert!(good.is_ok());
        let c = TrigPoly::cosines(&[([0, 1, 0], 2.0), ([0, 0, 0], 0.5)]);
        let v = [0.1, 0.2, 0.3];
        assert!((c.eval(v) - (0.5 + 2.0 * (std::f64::consts::TAU * 0.2).cos())).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_eta() {
        let lat = LatticeSpec::unit(1).unwrap();
        let f = Field::delta(lat, Representation::Position, 0);
        assert!(pair_state(&TestFunction::constant(1.0), &f, 0.0).is_err());
    }
}
