//! Torus lattice geometry, discrete Fourier transforms and the lattice
//! dispersion relation.
//!
//! Sites of `Λ_{L,ρ} = ρ Λ_{L/ρ}` are the points `ρ a` with integer
//! `a ∈ {-L/ρ, ..., L/ρ}³`, stored row-major over the shifted cube
//! `{0, ..., 2L/ρ}³` (first coordinate slowest). With `n = 2L/ρ + 1` points per
//! axis the dual grid is `k = b / (ρ n)`, `b ∈ {-L/ρ, ..., L/ρ}³`, stored the
//! same way. It lies in `ρ⁻¹ [-1/2, 1/2)³`.
//!
//! Transforms follow
//!
//! ```text
//! f̂(k)  = ρ³ Σ_x e^{-2πi k·x} f(x)
//! g^∨(x) = ∫ dk g(k) e^{2πi k·x},   ∫ dk := (ρ³ |Λ_{L,ρ}|)⁻¹ Σ_k
//! ```
//!
//! which makes the pair an exact inversion, and gives Parseval in the form
//! `ρ³ Σ_x |f|² = ∫ dk |f̂|²`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Magic bytes of the binary field container.
pub const FIELD_MAGIC: &[u8; 4] = b"BGF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    half_width: usize,
    inv_rho: usize,
}

impl LatticeSpec {
    /// Builds `Λ_{L,ρ}` with `ρ = 1 / inv_rho`.
    pub fn new(half_width: usize, inv_rho: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidLattice("L must be at least 1".into()));
        }
        if inv_rho == 0 {
            return Err(Error::InvalidLattice("1/rho must be a positive integer".into()));
        }
        let side = 2 * half_width * inv_rho + 1;
        if side > 1 << 10 {
            return Err(Error::InvalidLattice(format!("{side} points per axis is too many")));
        }
        Ok(Self { half_width, inv_rho })
    }

    /// `Λ_L` (ρ = 1).
    pub fn unit(half_width: usize) -> Result<Self> {
        Self::new(half_width, 1)
    }

    /// `Λ_{L,1/2}`, the half lattice carrying the Wigner position variable.
    pub fn half(&self) -> Self {
        Self { half_width: self.half_width, inv_rho: 2 * self.inv_rho }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn inv_rho(&self) -> usize {
        self.inv_rho
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.inv_rho as f64
    }

    /// Points per axis, `2L/ρ + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width * self.inv_rho + 1
    }

    /// Largest integer offset along an axis, `L/ρ`.
    pub fn offset(&self) -> i64 {
        (self.half_width * self.inv_rho) as i64
    }

    /// `|Λ_{L,ρ}|`; the dual grid has the same cardinality.
    pub fn len(&self) -> usize {
        self.side().pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Weight of one dual point under `∫ dk`.
    pub fn dual_measure(&self) -> f64 {
        1.0 / (self.rho().powi(3) * self.len() as f64)
    }

    pub fn index(&self, coords: [usize; 3]) -> usize {
        let n = self.side();
        (coords[0] * n + coords[1]) * n + coords[2]
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let n = self.side();
        [index / (n * n), (index / n) % n, index % n]
    }

    /// Integer offsets `a ∈ {-L/ρ..L/ρ}³` of a site (or dual point) index.
    pub fn offsets(&self, index: usize) -> [i64; 3] {
        let c = self.coords(index);
        let o = self.offset();
        [c[0] as i64 - o, c[1] as i64 - o, c[2] as i64 - o]
    }

    /// Index of the point with the given integer offsets, reduced on the torus.
    pub fn wrap_index(&self, offsets: [i64; 3]) -> usize {
        let n = self.side() as i64;
        let o = self.offset();
        let c = offsets.map(|a| (a + o).rem_euclid(n) as usize);
        self.index(c)
    }

    /// Position of a site, `ρ a`.
    pub fn site(&self, index: usize) -> [f64; 3] {
        let rho = self.rho();
        self.offsets(index).map(|a| rho * a as f64)
    }

    /// Dual point `b / (ρ n)`.
    pub fn dual_point(&self, index: usize) -> [f64; 3] {
        let scale = 1.0 / (self.rho() * self.side() as f64);
        self.offsets(index).map(|b| scale * b as f64)
    }

    pub fn sites(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    pub fn dual_points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |i| self.dual_point(i))
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inv_rho == 1 {
            write!(f, "Λ_{}", self.half_width)
        } else {
            write!(f, "Λ_{{{},1/{}}}", self.half_width, self.inv_rho)
        }
    }
}

/// Lattice dispersion `e_Δ(k) = Σ_i (1 − cos 2π k_i) = 2 Σ_i sin²(π k_i)`, in `[0, 6]`.
#[inline]
pub fn dispersion(k: [f64; 3]) -> f64 {
    k.iter().map(|&ki| 2.0 * (std::f64::consts::PI * ki).sin().powi(2)).sum()
}

/// Group velocity `∇e_Δ / 2π = sin(2πk)`, the free-flight velocity.
#[inline]
pub fn group_velocity(k: [f64; 3]) -> [f64; 3] {
    k.map(|ki| (2.0 * std::f64::consts::PI * ki).sin())
}

/// Reduces a momentum to the fundamental cell `[-1/2, 1/2)³`.
#[inline]
pub fn reduce_torus(k: [f64; 3]) -> [f64; 3] {
    k.map(|ki| ki - (ki + 0.5).floor())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Position => "position",
            Representation::Momentum => "momentum",
        }
    }
}

/// Complex function on a lattice or on its dual.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    lattice: LatticeSpec,
    repr: Representation,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(lattice: LatticeSpec, repr: Representation) -> Self {
        Self { lattice, repr, values: vec![Complex64::new(0.0, 0.0); lattice.len()] }
    }

    pub fn from_values(lattice: LatticeSpec, repr: Representation, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a lattice of {} points",
                values.len(),
                lattice.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self { lattice, repr, values })
    }

    pub fn from_fn(lattice: LatticeSpec, repr: Representation, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let values = (0..lattice.len())
            .map(|i| match repr {
                Representation::Position => f(lattice.site(i)),
                Representation::Momentum => f(lattice.dual_point(i)),
            })
            .collect();
        Self { lattice, repr, values }
    }

    /// Indicator of a single site or dual point.
    pub fn delta(lattice: LatticeSpec, repr: Representation, index: usize) -> Self {
        let mut field = Self::zeros(lattice, repr);
        field.values[index] = Complex64::new(1.0, 0.0);
        field
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn expect(&self, repr: Representation) -> Result<()> {
        if self.repr == repr {
            Ok(())
        } else {
            Err(Error::Representation { expected: repr.name(), found: self.repr.name() })
        }
    }

    /// Squared norm under the natural measure of the representation:
    /// `ρ³ Σ_x |f|²` or `∫ dk |f̂|²`.
    pub fn norm_sq(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        match self.repr {
            Representation::Position => self.lattice.rho().powi(3) * sum,
            Representation::Momentum => self.lattice.dual_measure() * sum,
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product `⟨self, other⟩` (antilinear in `self`) under the same measure as [`Field::norm_sq`].
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        other.expect(self.repr)?;
        let sum: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        let weight = match self.repr {
            Representation::Position => self.lattice.rho().powi(3),
            Representation::Momentum => self.lattice.dual_measure(),
        };
        Ok(sum * weight)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&mut self, factor: Complex64, other: &Field) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        other.expect(self.repr)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Largest `|f|` difference, for tests and diagnostics.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Plain (unweighted) ℓ² distance between value arrays.
    pub fn l2_diff(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Plain (unweighted) ℓ² norm of the value array.
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(FIELD_MAGIC)?;
        w.write_u32::<LittleEndian>(self.lattice.half_width as u32)?;
        w.write_u32::<LittleEndian>(1)?;
        w.write_u32::<LittleEndian>(self.lattice.inv_rho as u32)?;
        w.write_u8(match self.repr {
            Representation::Position => 0,
            Representation::Momentum => 1,
        })?;
        w.write_all(&[0u8; 3])?;
        for v in &self.values {
            w.write_f64::<LittleEndian>(v.re)?;
            w.write_f64::<LittleEndian>(v.im)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let half_width = r.read_u32::<LittleEndian>()? as usize;
        let num = r.read_u32::<LittleEndian>()? as usize;
        let den = r.read_u32::<LittleEndian>()? as usize;
        if num != 1 {
            return Err(Error::Format(format!("rho = {num}/{den} is not of the form 1/n")));
        }
        let repr = match r.read_u8()? {
            0 => Representation::Position,
            1 => Representation::Momentum,
            other => return Err(Error::Format(format!("unknown representation flag {other}"))),
        };
        let mut reserved = [0u8; 3];
        r.read_exact(&mut reserved)?;
        let lattice = LatticeSpec::new(half_width, den)?;
        let mut values = Vec::with_capacity(lattice.len());
        for _ in 0..lattice.len() {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            values.push(Complex64::new(re, im));
        }
        Field::from_values(lattice, repr, values)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

/// Cached plans for the centered 3D transform on one lattice.
///
/// Offsets `-A..A` are mapped to FFT bins `a mod n`, so the centered sum
/// `Σ_a e^{∓2πi a b / n}` is a plain DFT after a cyclic roll.
#[derive(Clone)]
pub struct Fourier {
    lattice: LatticeSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("lattice", &self.lattice).finish()
    }
}

impl Fourier {
    pub fn new(lattice: LatticeSpec) -> Self {
        type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);
        thread_local! {
            static PLANS: RefCell<HashMap<usize, Plans>> = RefCell::new(HashMap::new());
        }
        let n = lattice.side();
        let (forward, inverse) = PLANS.with(|plans| {
            plans
                .borrow_mut()
                .entry(n)
                .or_insert_with(|| {
                    let mut planner = FftPlanner::new();
                    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
                })
                .clone()
        });
        Self { lattice, forward, inverse }
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    /// In-place unnormalized centered transform along all three axes.
    pub fn transform_in_place(&self, values: &mut [Complex64], forward: bool) {
        let n = self.lattice.side();
        let shift = (n - 1) / 2;
        let fft = if forward { &self.forward } else { &self.inverse };
        let mut lines = vec![Complex64::new(0.0, 0.0); values.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let roll: Vec<usize> = (0..n).map(|s| (s + shift) % n).collect();
        let strides = [n * n, n, 1];
        for (axis, &stride) in strides.iter().enumerate() {
            let (a, b) = match axis {
                0 => (strides[1], strides[2]),
                1 => (strides[0], strides[2]),
                _ => (strides[0], strides[1]),
            };
            // gather every line along `axis` into a contiguous batch
            for i in 0..n {
                for j in 0..n {
                    let base = i * a + j * b;
                    let row = (i * n + j) * n;
                    for (slot, &c) in roll.iter().enumerate() {
                        lines[row + slot] = values[base + c * stride];
                    }
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for i in 0..n {
                for j in 0..n {
                    let base = i * a + j * b;
                    let row = (i * n + j) * n;
                    for (slot, &c) in roll.iter().enumerate() {
                        values[base + c * stride] = lines[row + slot];
                    }
                }
            }
        }
    }

    pub fn forward(&self, field: &Field) -> Result<Field> {
        field.expect(Representation::Position)?;
        if field.lattice != self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let mut values = field.values.clone();
        self.forward_values(&mut values);
        Ok(Field { lattice: self.lattice, repr: Representation::Momentum, values })
    }

    pub fn inverse(&self, field: &Field) -> Result<Field> {
        field.expect(Representation::Momentum)?;
        if field.lattice != self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let mut values = field.values.clone();
        self.inverse_values(&mut values);
        Ok(Field { lattice: self.lattice, repr: Representation::Position, values })
    }

    /// `f ↦ f̂` on a raw value array.
    pub fn forward_values(&self, values: &mut [Complex64]) {
        self.transform_in_place(values, true);
        let scale = self.lattice.rho().powi(3);
        if scale != 1.0 {
            values.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// `g ↦ g^∨` on a raw value array.
    pub fn inverse_values(&self, values: &mut [Complex64]) {
        self.transform_in_place(values, false);
        let scale = self.lattice.dual_measure();
        values.iter_mut().for_each(|v| *v *= scale);
    }
}

/// `f̂` with a freshly planned transform.
pub fn forward_fourier(field: &Field) -> Result<Field> {
    Fourier::new(field.lattice).forward(field)
}

/// `g^∨` with a freshly planned transform.
pub fn inverse_fourier(field: &Field) -> Result<Field> {
    Fourier::new(field.lattice).inverse(field)
}

/// Evaluates `Σ_x f(x) e^{-2πi k·x}` (the ρ = 1 transform as a trigonometric
/// polynomial) on the tensor grid `ks × ks × ks`, separably.
pub fn evaluate_off_grid(field: &Field, ks: &[f64]) -> Result<Vec<Complex64>> {
    field.expect(Representation::Position)?;
    let lattice = field.lattice();
    let n = lattice.side();
    let m = ks.len();
    let rho = lattice.rho();
    let weight = rho.powi(3);
    // phase[p][a] = e^{-2πi k_p x_a}
    let phase: Vec<Complex64> = ks
        .iter()
        .flat_map(|&k| {
            (0..n).map(move |a| {
                let x = rho * (a as f64 - lattice.offset() as f64);
                Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k * x)
            })
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    // contract axis 3, then 2, then 1
    let mut stage1 = vec![zero; n * n * m];
    for ab in 0..n * n {
        let row = &field.values[ab * n..(ab + 1) * n];
        for p in 0..m {
            let ph = &phase[p * n..(p + 1) * n];
            stage1[ab * m + p] = row.iter().zip(ph).map(|(v, e)| v * e).sum();
        }
    }
    let mut stage2 = vec![zero; n * m * m];
    for a in 0..n {
        for q in 0..m {
            let ph = &phase[q * n..(q + 1) * n];
            for p in 0..m {
                let mut acc = zero;
                for (b, e) in ph.iter().enumerate() {
                    acc += stage1[(a * n + b) * m + p] * e;
                }
                stage2[(a * m + q) * m + p] = acc;
            }
        }
    }
    let mut out = vec![zero; m * m * m];
    for s in 0..m {
        let ph = &phase[s * n..(s + 1) * n];
        for qp in 0..m * m {
            let mut acc = zero;
            for (a, e) in ph.iter().enumerate() {
                acc += stage2[a * m * m + qp] * e;
            }
            out[s * m * m + qp] = acc * weight;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        assert_eq!(LatticeSpec::new(1, 1).unwrap().len(), 27);
        assert_eq!(LatticeSpec::new(4, 1).unwrap().len(), 729);
        assert_eq!(LatticeSpec::new(4, 2).unwrap().len(), 4913);
        assert!(LatticeSpec::new(0, 1).is_err());
        assert!(LatticeSpec::new(3, 0).is_err());
    }

    #[test]
    fn index_roundtrip_and_wrap() {
        let lat = LatticeSpec::new(2, 2).unwrap();
        for i in 0..lat.len() {
            assert_eq!(lat.index(lat.coords(i)), i);
            assert_eq!(lat.wrap_index(lat.offsets(i)), i);
            let o = lat.offsets(i);
            let n = lat.side() as i64;
            assert_eq!(lat.wrap_index([o[0] + n, o[1] - n, o[2]]), i);
        }
        // sites on the half lattice are spaced by 1/2
        assert_eq!(lat.site(lat.wrap_index([1, 0, -3])), [0.5, 0.0, -1.5]);
    }

    #[test]
    fn dual_grid_inside_cell() {
        for lat in [LatticeSpec::new(3, 1).unwrap(), LatticeSpec::new(3, 2).unwrap()] {
            let bound = 0.5 / lat.rho();
            for k in lat.dual_points() {
                assert!(k.iter().all(|&c| (-bound..bound).contains(&c)));
            }
        }
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion([0.0; 3]), 0.0);
        assert!((dispersion([0.5; 3]) - 6.0).abs() < 1e-15);
        let k = [0.1, -0.3, 0.27];
        let alt: f64 = k.iter().map(|&c| 1.0 - (2.0 * std::f64::consts::PI * c).cos()).sum();
        assert!((dispersion(k) - alt).abs() < 1e-14);
    }

    #[test]
    fn representation_mismatch_rejected() {
        let lat = LatticeSpec::unit(1).unwrap();
        let f = Field::zeros(lat, Representation::Momentum);
        assert!(forward_fourier(&f).is_err());
        let g = Field::zeros(lat, Representation::Position);
        assert!(inverse_fourier(&g).is_err());
    }

    #[test]
    fn off_grid_matches_grid_transform() {
        let lat = LatticeSpec::unit(2).unwrap();
        let f = Field::from_fn(lat, Representation::Position, |x| {
            Complex64::new(x[0] + 0.3 * x[1], x[2] - 0.1 * x[0] * x[1])
        });
        let fhat = forward_fourier(&f).unwrap();
        let ks: Vec<f64> = (-2..=2).map(|b| b as f64 / 5.0).collect();
        let off = evaluate_off_grid(&f, &ks).unwrap();
        assert!(off.iter().zip(fhat.values()).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn field_container_roundtrip() {
        let lat = LatticeSpec::new(1, 2).unwrap();
        let f = Field::from_fn(lat, Representation::Momentum, |k| Complex64::new(k[0], k[1] * k[2]));
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"BGF1");
        assert_eq!(buf.len(), 20 + 16 * lat.len());
        let g = Field::read_from(buf.as_slice()).unwrap();
        assert_eq!(f, g);
        buf[0] = b'X';
        assert!(Field::read_from(buf.as_slice()).is_err());
    }
}
