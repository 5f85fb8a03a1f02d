//! Log-gamma, digamma and trigamma.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Trigamma function ψ'(x) for x > 0.
///
/// Recurrence up to x ≥ 10, then the asymptotic expansion
/// 1/x + 1/(2x²) + Σ B_{2k}/x^{2k+1}.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli numbers B2..B12
    const B: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let series = inv2 * B.iter().rev().fold(0.0, |acc, b| b + inv2 * acc);
    acc + inv + 0.5 * inv2 + inv * series
}
