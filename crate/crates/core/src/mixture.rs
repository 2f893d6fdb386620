//! Isotropic Gaussian mixtures on ℝ³.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub center: [f64; 3],
    pub width: f64,
    pub weight: f64,
}

impl Gaussian {
    #[inline]
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let r2 = dist_sq(x, self.center);
        self.weight * (-0.5 * r2 / (self.width * self.width)).exp()
    }
}

/// `h(X) = Σ_i w_i exp(-|X - c_i|² / (2 σ_i²))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    components: Vec<Gaussian>,
}

#[inline]
pub(crate) fn dist_sq(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

impl GaussianMixture {
    pub fn new(components: Vec<Gaussian>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("Gaussian mixture needs at least one component".into()));
        }
        for c in &components {
            if !(c.width > 0.0 && c.width.is_finite()) {
                return Err(Error::InvalidParameter(format!("component width {} must be positive", c.width)));
            }
            if !c.weight.is_finite() || c.center.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("component parameters must be finite".into()));
            }
        }
        let mixture = Self { components };
        if mixture.l2_norm_sq() <= 0.0 {
            return Err(Error::InvalidParameter("envelope is identically zero".into()));
        }
        Ok(mixture)
    }

    /// Mixture from parallel lists of centers, widths and weights.
    pub fn from_lists(centers: &[[f64; 3]], widths: &[f64], weights: &[f64]) -> Result<Self> {
        if centers.len() != widths.len() || centers.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "mixture lists differ in length: {} centers, {} widths, {} weights",
                centers.len(),
                widths.len(),
                weights.len()
            )));
        }
        let components = centers
            .iter()
            .zip(widths)
            .zip(weights)
            .map(|((&center, &width), &weight)| Gaussian { center, width, weight })
            .collect();
        Self::new(components)
    }

    /// Single centered Gaussian of unit weight.
    pub fn centered(width: f64) -> Result<Self> {
        Self::new(vec![Gaussian { center: [0.0; 3], width, weight: 1.0 }])
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    #[inline]
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.components.iter().map(|c| c.eval(x)).sum()
    }

    /// `Σ_i |w_i| g_i(X)`, a pointwise bound for `|h|`.
    #[inline]
    pub fn abs_envelope(&self, x: [f64; 3]) -> f64 {
        self.components.iter().map(|c| c.eval(x).abs()).sum()
    }

    /// `∫ h²`.
    pub fn l2_norm_sq(&self) -> f64 {
        let mut total = 0.0;
        for a in &self.components {
            for b in &self.components {
                total += a.weight * b.weight * product_integral(&[a, b]);
            }
        }
        total
    }

    /// `∫ f h²` for another mixture `f`.
    pub fn integrate_against_square(&self, f: &GaussianMixture) -> f64 {
        let mut total = 0.0;
        for a in &self.components {
            for b in &self.components {
                for c in &f.components {
                    total += a.weight * b.weight * c.weight * product_integral(&[a, b, c]);
                }
            }
        }
        total
    }

    /// Radius of a ball around the origin outside which `h²` carries at most
    /// `tail` of its mass, from the per-component χ₃ tail.
    pub fn mass_radius(&self, tail: f64) -> f64 {
        let q = chi3_quantile(tail);
        self.components
            .iter()
            .map(|c| c.center.iter().map(|v| v * v).sum::<f64>().sqrt() + q * c.width / std::f64::consts::SQRT_2)
            .fold(0.0, f64::max)
    }

    /// Continuum Fourier transform `∫ h(X) e^{-2πi ξ·X} dX`.
    pub fn fourier(&self, xi: [f64; 3]) -> num_complex::Complex64 {
        let pi = std::f64::consts::PI;
        let xi2: f64 = xi.iter().map(|v| v * v).sum();
        self.components
            .iter()
            .map(|c| {
                let amp = c.weight * (2.0 * pi * c.width * c.width).powf(1.5) * (-2.0 * pi * pi * c.width * c.width * xi2).exp();
                let phase = -2.0 * pi * (0..3).map(|i| c.center[i] * xi[i]).sum::<f64>();
                num_complex::Complex64::from_polar(amp, phase)
            })
            .sum()
    }
}

/// `∫ Π_a exp(-|X - c_a|² / (2σ_a²)) dX` over ℝ³.
pub fn product_integral(factors: &[&Gaussian]) -> f64 {
    let precision: f64 = factors.iter().map(|g| 1.0 / (g.width * g.width)).sum();
    let mut mean = [0.0; 3];
    let mut quad = 0.0;
    for g in factors {
        let p = 1.0 / (g.width * g.width);
        for i in 0..3 {
            mean[i] += p * g.center[i];
        }
        quad += p * g.center.iter().map(|v| v * v).sum::<f64>();
    }
    let m2: f64 = mean.iter().map(|v| v * v).sum::<f64>() / precision;
    (2.0 * std::f64::consts::PI / precision).powf(1.5) * (-0.5 * (quad - m2)).exp()
}

/// `P(|Z| > r) = erfc(r/√2) + √(2/π) r e^{-r²/2}` for a standard normal in ℝ³.
pub fn chi3_survival(r: f64) -> f64 {
    statrs::function::erf::erfc(r / std::f64::consts::SQRT_2)
        + (2.0 / std::f64::consts::PI).sqrt() * r * (-0.5 * r * r).exp()
}

fn chi3_quantile(tail: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi3_survival(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
