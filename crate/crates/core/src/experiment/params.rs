//! Parameter choice `N`, `κ` as functions of `ε`, with the bound
//! inequalities checked in the log domain.
//!
//! Everything is expressed through `ℓ = ln(1/ε)`, so `ε = 10⁻⁴⁰⁰` is as easy
//! to handle as `ε = 10⁻¹²`. The factor `λ²/ε` equals `T` under `ε = λ²/T`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// One inequality `lhs < rhs` (or `≤`) between log-domain quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub holds: bool,
}

impl Inequality {
    fn new(label: &'static str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let holds = if strict { lhs < rhs } else { lhs <= rhs };
        Self { label, lhs, rhs, strict, holds }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterChoice {
    /// `ln(1/ε)`.
    pub log_inv_epsilon: f64,
    pub r: usize,
    pub c: f64,
    pub t_macro: f64,
    /// `N` as a float: it exceeds `u64` long before `ℓ` overflows.
    pub n: f64,
    pub ln_kappa: f64,
    pub inequalities: Vec<Inequality>,
    /// `N = 0`: every inequality is vacuous or violated.
    pub degenerate: bool,
}

impl ParameterChoice {
    pub fn epsilon(&self) -> f64 {
        (-self.log_inv_epsilon).exp()
    }

    pub fn log10_epsilon(&self) -> f64 {
        -self.log_inv_epsilon / std::f64::consts::LN_10
    }

    pub fn all_hold(&self) -> bool {
        self.inequalities.iter().all(|i| i.holds)
    }

    fn holds(&self, labels: &[&str]) -> bool {
        self.inequalities.iter().filter(|i| labels.contains(&i.label)).all(|i| i.holds)
    }
}

/// Labels of the inequalities, in display order.
pub const LABELS: [&str; 6] = [
    "eps^(-1/70r) < N^N",
    "N^N < eps^(-1/100r)",
    "(4N)^(4N) < eps^(-1/20r)",
    "(c r T log(1/eps))^(4N) < eps^(-1/50r)",
    "(c T)^(4N) / sqrt(N!) < eps^(1/25r)",
    "kappa^(-2N) <= eps^3",
];

/// The two halves of the first chain require `ℓ/70r < N ln N < ℓ/100r`, which
/// no `N` satisfies; thresholds are searched over the remaining four plus the
/// upper half.
pub const THRESHOLD_LABELS: [&str; 5] = [LABELS[1], LABELS[2], LABELS[3], LABELS[4], LABELS[5]];

fn n_ln_n(n: f64) -> f64 {
    if n > 0.0 {
        n * n.ln()
    } else {
        0.0
    }
}

/// `ln ⌈ℓ^{150 r}⌉`.
fn ln_kappa(l: f64, r: usize) -> f64 {
    let exponent = 150.0 * r as f64 * l.ln();
    if exponent < 700.0 {
        exponent.exp().ceil().ln()
    } else {
        exponent
    }
}

/// Evaluates the parameter choice at `ln(1/ε) = log_inv_epsilon`.
pub fn parameter_calculator_log(log_inv_epsilon: f64, r: usize, c: f64, t_macro: f64) -> Result<ParameterChoice> {
    let l = log_inv_epsilon;
    if !(l > std::f64::consts::E && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < eps < e^-e, got ln(1/eps) = {l}")));
    }
    if r < 2 || r % 2 != 0 {
        return Err(Error::InvalidParameter(format!("moment order {r} must be even and >= 2")));
    }
    if !(c > 0.0 && t_macro > 0.0) {
        return Err(Error::InvalidParameter("c and T must be positive".into()));
    }
    let rf = r as f64;
    let n = (l / (100.0 * rf * l.ln())).floor();
    let lk = ln_kappa(l, r);
    let ln_n_fact = ln_gamma(n + 1.0);
    let inequalities = vec![
        Inequality::new(LABELS[0], l / (70.0 * rf), n_ln_n(n), true),
        Inequality::new(LABELS[1], n_ln_n(n), l / (100.0 * rf), true),
        Inequality::new(LABELS[2], 4.0 * n_ln_n(n) + 4.0 * n * 4f64.ln(), l / (20.0 * rf), true),
        Inequality::new(LABELS[3], 4.0 * n * (c * rf * t_macro * l).ln(), l / (50.0 * rf), true),
        Inequality::new(LABELS[4], 4.0 * n * (c * t_macro).ln() - 0.5 * ln_n_fact, -l / (25.0 * rf), true),
        Inequality::new(LABELS[5], -2.0 * n * lk, -3.0 * l, false),
    ];
    Ok(ParameterChoice { log_inv_epsilon: l, r, c, t_macro, n, ln_kappa: lk, inequalities, degenerate: n == 0.0 })
}

/// [`parameter_calculator_log`] for an `ε` representable as a float.
pub fn parameter_calculator(epsilon: f64, r: usize, c: f64, t_macro: f64) -> Result<ParameterChoice> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {epsilon} must be positive")));
    }
    parameter_calculator_log(-epsilon.ln(), r, c, t_macro)
}

/// Smallest `ln(1/ε)` in `(e, 10³⁰⁰]` from which on the [`THRESHOLD_LABELS`]
/// inequalities hold with `N ≥ 1`, located on a logarithmic grid and refined
/// by bisection. `None` when they fail somewhere on the tail of the grid.
pub fn threshold_log_inv_epsilon(r: usize, c: f64, t_macro: f64) -> Result<Option<f64>> {
    let ok = |l: f64| -> Result<bool> {
        let p = parameter_calculator_log(l, r, c, t_macro)?;
        Ok(!p.degenerate && p.holds(&THRESHOLD_LABELS))
    };
    let grid: Vec<f64> = (0..=3000).map(|i| 3.0 * 10f64.powf(i as f64 * 0.1)).take_while(|l| *l <= 1e300).collect();
    let mut verdicts = Vec::with_capacity(grid.len());
    for &l in &grid {
        verdicts.push(ok(l)?);
    }
    let Some(last_bad) = verdicts.iter().rposition(|v| !v) else {
        return Ok(Some(grid[0]));
    };
    if last_bad + 1 == grid.len() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (grid[last_bad], grid[last_bad + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
