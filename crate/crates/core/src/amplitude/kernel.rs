//! Time-simplex integrals `∫_{Σs_j = t} e^{-iΣ s_j e_j}` as divided differences.

use num_complex::Complex64;

/// `tⁿ/n!`, the volume of the time simplex for `n + 1` energies.
pub fn simplex_volume(n: usize, t: f64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * t / k as f64)
}

/// `∫ ds δ(Σ_{j=0}^n s_j - t) e^{-i Σ_j s_j e_j}` over `s_j ≥ 0`.
///
/// Equals `iⁿ f[e_0, …, e_n]` for `f(z) = e^{-itz}`. The divided difference
/// is read off the top-right entry of `f` applied to the bidiagonal matrix
/// with the energies on the diagonal, which is uniform in how close the
/// energies are.
pub fn time_simplex_kernel(energies: &[f64], t: f64) -> Complex64 {
    assert!(!energies.is_empty(), "at least one energy");
    let n = energies.len() - 1;
    if n == 0 {
        return Complex64::from_polar(1.0, -t * energies[0]);
    }
    let m = energies.len();
    let shift = energies.iter().sum::<f64>() / m as f64;
    let spread = energies.iter().map(|e| (e - shift).abs()).fold(0.0, f64::max) + 1.0;
    let mut squarings = 0;
    let mut scale = t;
    while scale * spread > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    // B = -i·scale·(A - shift)
    let mut b = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        b[i * m + i] = Complex64::new(0.0, -scale * (energies[i] - shift));
        if i + 1 < m {
            b[i * m + i + 1] = Complex64::new(0.0, -scale);
        }
    }
    let mut exp = identity(m);
    let mut term = identity(m);
    for k in 1..=24 {
        term = upper_mul(&term, &b, m);
        let inv = 1.0 / k as f64;
        for v in term.iter_mut() {
            *v *= inv;
        }
        for (e, v) in exp.iter_mut().zip(&term) {
            *e += v;
        }
    }
    for _ in 0..squarings {
        exp = upper_mul(&exp, &exp, m);
    }
    let dd = exp[m - 1] * Complex64::from_polar(1.0, -t * shift);
    dd * Complex64::new(0.0, 1.0).powu(n as u32)
}

fn identity(m: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        v[i * m + i] = Complex64::new(1.0, 0.0);
    }
    v
}

fn upper_mul(a: &[Complex64], b: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for k in i..m {
            let aik = a[i * m + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..m {
                out[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                loop {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        let w = 2.0 / ((1.0 - x * x) * dp * dp);
                        return (x, w);
                    }
                }
            })
            .collect()
    }

    /// `K(e_0..e_n; t) = ∫_0^t ds e^{-i s e_n} K(e_0..e_{n-1}; t - s)` by nested quadrature.
    fn nested(energies: &[f64], t: f64, rule: &[(f64, f64)]) -> Complex64 {
        let (last, rest) = energies.split_last().unwrap();
        if rest.is_empty() {
            return Complex64::from_polar(1.0, -t * last);
        }
        rule.iter()
            .map(|&(x, w)| {
                let s = 0.5 * t * (x + 1.0);
                0.5 * t * w * Complex64::from_polar(1.0, -s * last) * nested(rest, t - s, rule)
            })
            .sum()
    }

    #[test]
    fn degenerate_energies() {
        let t = 1.7;
        for n in 0..6 {
            let e = vec![2.3; n + 1];
            let k = time_simplex_kernel(&e, t);
            let expected = Complex64::from_polar(simplex_volume(n, t), -2.3 * t);
            assert!((k - expected).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn two_energies() {
        let (e0, e1, t) = (0.4, 2.9, 1.3);
        let expected = (Complex64::from_polar(1.0, -e0 * t) - Complex64::from_polar(1.0, -e1 * t)) / Complex64::new(0.0, e1 - e0);
        assert!((time_simplex_kernel(&[e0, e1], t) - expected).norm() < 1e-14);
    }

    #[test]
    fn matches_nested_quadrature() {
        let rule = gauss_legendre(40);
        let e = [0.37, 4.12, 2.5, 5.81];
        let t = 1.5;
        let q = nested(&e, t, &rule);
        assert!((time_simplex_kernel(&e, t) - q).norm() < 1e-12);
        // near-degenerate pair
        let e = [1.0, 1.0 + 1e-7, 3.2];
        assert!((time_simplex_kernel(&e, 2.0) - nested(&e, 2.0, &rule)).norm() < 1e-12);
    }

    #[test]
    fn symmetric_and_bounded() {
        let e = [0.1, 5.9, 3.3, 3.3000001, 2.0];
        let a = time_simplex_kernel(&e, 3.0);
        let b = time_simplex_kernel(&[3.3000001, 2.0, 0.1, 3.3, 5.9], 3.0);
        assert!((a - b).norm() < 1e-13);
        assert!(a.norm() <= simplex_volume(4, 3.0));
    }
}
