//! Special functions shared by the ELBO and the Wishart densities.

use std::f64::consts::PI;

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Multivariate log-gamma `ln Γ_p(x)`; `None` when `x ≤ (p−1)/2`.
pub fn ln_mv_gamma(p: usize, x: f64) -> Option<f64> {
    if x <= (p as f64 - 1.0) / 2.0 {
        return None;
    }
    let base = p as f64 * (p as f64 - 1.0) / 4.0 * PI.ln();
    Some(base + (1..=p).map(|j| ln_gamma(x + (1.0 - j as f64) / 2.0)).sum::<f64>())
}

/// `Σ_j ψ((ν + 1 − j)/2)` for `j = 1..=p`.
pub fn mv_digamma(p: usize, nu: f64) -> f64 {
    (1..=p).map(|j| digamma((nu + 1.0 - j as f64) / 2.0)).sum()
}
