//! Small statistics toolkit: means with standard errors, fits and
//! goodness-of-fit tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn relative_se(&self) -> f64 {
        self.se / self.value.abs()
    }

    /// `(a - b) / sqrt(se_a² + se_b²)`.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        (self.value - other.value) / self.se.hypot(other.se)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { value: f64::NAN, se: f64::NAN, samples: 0 };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Estimate { value: mean, se: (var / n as f64).sqrt(), samples: n }
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares `y = c·x` and the relative residual `‖y − c x‖ / ‖y‖`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let c = sxy / sxx;
    let res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    (c, res / norm)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_survival(lambda))
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square test of counts against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (counts.len() - 1) as f64;
    let p = ChiSquared::new(dof).expect("positive dof").sf(stat);
    (stat, p)
}

/// Pearson chi-square test of independence on a contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> (f64, f64) {
    let rows = table.len();
    let cols = table[0].len();
    let total: f64 = table.iter().flatten().map(|&c| c as f64).sum();
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().map(|&c| c as f64).sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c] as f64).sum()).collect();
    let mut stat = 0.0;
    let mut used_rows = 0;
    let used_cols = col_sums.iter().filter(|&&c| c > 0.0).count();
    for r in 0..rows {
        if row_sums[r] == 0.0 {
            continue;
        }
        used_rows += 1;
        for c in 0..cols {
            if col_sums[c] == 0.0 {
                continue;
            }
            let e = row_sums[r] * col_sums[c] / total;
            stat += (table[r][c] as f64 - e).powi(2) / e;
        }
    }
    let dof = ((used_rows.max(2) - 1) * (used_cols.max(2) - 1)) as f64;
    (stat, ChiSquared::new(dof).expect("positive dof").sf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let e = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0];
        let y = [3.0, 5.0, 7.0];
        let (s, i) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (i - 1.0).abs() < 1e-14);
        let (c, res) = fit_through_origin(&x, &[2.0, 4.0, 6.0]);
        assert!((c - 2.0).abs() < 1e-14 && res < 1e-14);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert_eq!(d, 0.0);
        assert!(p > 0.99);
        let b: Vec<f64> = a.iter().map(|x| x + 0.2).collect();
        assert!(ks_two_sample(&a, &b).1 < 1e-10);
    }

    #[test]
    fn chi_square_of_exact_counts() {
        let (stat, p) = chi_square_uniform(&[100, 100, 100]);
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }
}
