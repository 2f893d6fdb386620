//! Quadrature, the complete elliptic integral and the density of states of `e_Δ`.

use std::f64::consts::{FRAC_PI_2, PI};

/// Complete elliptic integral of the first kind `K(m)`, parameter `m ∈ [0, 1)`,
/// via the arithmetic-geometric mean.
pub fn elliptic_k(m: f64) -> f64 {
    elliptic_k_complementary(1.0 - m.clamp(0.0, 1.0))
}

/// `K(1 - m₁)`, accurate as the complementary parameter `m₁ → 0`.
pub fn elliptic_k_complementary(m1: f64) -> f64 {
    let mut a = 1.0f64;
    let mut b = m1.clamp(0.0, 1.0).sqrt();
    if b == 0.0 {
        return f64::INFINITY;
    }
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    FRAC_PI_2 / a
}

/// Tanh-sinh quadrature of `f` over `[a, b]`. Integrable endpoint
/// singularities are fine; `f` is never evaluated at the endpoints.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let width = b - a;
    let t_max = 4.0;
    // the pair of nodes at parameter t > 0 and their common weight
    let pair = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let gap = width / ((2.0 * u).exp() + 1.0);
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // nodes that round onto an endpoint are dropped
        let left = if a + gap > a { f(a + gap) } else { 0.0 };
        let right = if b - gap < b { f(b - gap) } else { 0.0 };
        w * (left + right)
    };
    let mut h = 1.0;
    let mut sum = FRAC_PI_2 * f(a + 0.5 * width);
    let mut j = 1;
    while j as f64 * h <= t_max {
        sum += pair(j as f64 * h);
        j += 1;
    }
    let mut estimate = 0.5 * width * h * sum;
    for _ in 0..12 {
        h *= 0.5;
        let mut j = 1;
        while j as f64 * h <= t_max {
            sum += pair(j as f64 * h);
            j += 2;
        }
        let next = 0.5 * width * h * sum;
        let converged = (next - estimate).abs() <= rel_tol * next.abs().max(1e-300);
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// Composite Simpson rule with at least `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Density of `Σ_{i=1,2} (1 - cos 2πk_i)` for `k` uniform on `T²`.
pub fn dos_2d(s: f64) -> f64 {
    if !(s > 0.0 && s < 4.0) {
        return 0.0;
    }
    let d = s - 2.0;
    elliptic_k_complementary((0.25 * d * d).max(f64::MIN_POSITIVE)) / (PI * PI)
}

/// Density of states `g(e)` of `e_Δ` on `T³`: `∫ dk δ(e_Δ(k) - e)`.
pub fn density_of_states(e: f64) -> f64 {
    if !(e > 0.0 && e < 6.0) {
        return 0.0;
    }
    // third axis x = 1 - cos φ, φ uniform on [0, π]; the integrand
    // dos_2d(e - x) jumps at e - x ∈ {0, 4} and has a log peak at e - x = 2
    let mut cuts = vec![0.0, PI];
    for c in [1.0 - e, 3.0 - e, 5.0 - e] {
        if c > -1.0 && c < 1.0 {
            cuts.push(c.acos());
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let integrand = |phi: f64| dos_2d(e - 1.0 + phi.cos());
    let total: f64 = cuts.windows(2).map(|w| tanh_sinh(integrand, w[0], w[1], 1e-10)).sum();
    total / PI
}
