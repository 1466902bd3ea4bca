//! Log-gamma, digamma and the log multivariate beta function.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// `ln B(x) = Σ ln Γ(x_i) − ln Γ(Σ x_i)`.
pub fn ln_multivariate_beta(x: &[f64]) -> f64 {
    let (sum, acc) = x.iter().fold((0.0, 0.0), |(s, a), &v| (s + v, a + ln_gamma(v)));
    acc - ln_gamma(sum)
}

/// `ln Γ(x + n) − ln Γ(x)`, the log rising factorial.
pub fn ln_rising(x: f64, n: u32) -> f64 {
    if n < 8 {
        (0..n).map(|j| (x + j as f64).ln()).sum()
    } else {
        ln_gamma(x + n as f64) - ln_gamma(x)
    }
}
