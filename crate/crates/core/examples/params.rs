//! The truncation order and cutoff as functions of epsilon, with the bound
//! inequalities checked in the log domain.

use boltzgraph::experiment::{parameter_calculator_log, threshold_log_inv_epsilon};

fn main() -> boltzgraph::Result<()> {
    for log10 in [12.0, 400.0, 1e4, 1e8] {
        let p = parameter_calculator_log(log10 * std::f64::consts::LN_10, 2, 1.0, 1.0)?;
        let verdicts: Vec<&str> = p.inequalities.iter().map(|i| if i.holds { "y" } else { "n" }).collect();
        println!("eps = 1e-{log10:<6} N = {:<12} ln kappa = {:<12.4e} holds [{}]", p.n, p.ln_kappa, verdicts.join(" "));
    }
    match threshold_log_inv_epsilon(2, 1.0, 1.0)? {
        Some(l) => println!("all checked inequalities hold from ln(1/eps) = {l:.4e} on"),
        None => println!("no threshold up to ln(1/eps) = 1e300"),
    }
    Ok(())
}
