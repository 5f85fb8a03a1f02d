//! Shape-parameter estimation with the Mahalanobis forms held fixed.

use super::config::EmConfig;
use crate::ggd::log_norm_const;
use crate::special::{digamma, trigamma};

/// Weighted log-likelihood as a function of the shape alone:
/// `Σ_i α_i [log C_p(β) - ½ δ_i^β]` (terms constant in β dropped).
pub fn shape_objective(beta: f64, deltas: &[f64], alphas: &[f64], p: usize) -> f64 {
    let lc = log_norm_const(p, beta).unwrap_or(f64::NAN);
    deltas
        .iter()
        .zip(alphas)
        .filter(|(_, &a)| a != 0.0)
        .map(|(&d, &a)| a * (lc - 0.5 * d.powf(beta)))
        .sum()
}

/// First and second derivatives of [`shape_objective`] in β.
///
/// `g(β) = Σ α_i [1/β + p/(2β²) (ψ(p/(2β)) + log 2) - ½ δ_i^β log δ_i]`.
pub fn beta_score(beta: f64, deltas: &[f64], alphas: &[f64], p: usize) -> (f64, f64) {
    let pf = p as f64;
    let a = pf / (2.0 * beta);
    let b2 = beta * beta;
    let psi = digamma(a) + std::f64::consts::LN_2;
    let const_g = 1.0 / beta + pf / (2.0 * b2) * psi;
    let const_gp = -1.0 / b2 - pf / (b2 * beta) * psi - (pf * pf) / (4.0 * b2 * b2) * trigamma(a);
    let mut alpha_sum = 0.0;
    let mut data_g = 0.0;
    let mut data_gp = 0.0;
    for (&d, &w) in deltas.iter().zip(alphas) {
        if w == 0.0 {
            continue;
        }
        let ld = d.ln();
        let dp = d.powf(beta);
        alpha_sum += w;
        data_g += w * dp * ld;
        data_gp += w * dp * ld * ld;
    }
    (
        alpha_sum * const_g - 0.5 * data_g,
        alpha_sum * const_gp - 0.5 * data_gp,
    )
}

/// Safeguarded Newton-Raphson for the shape parameter.
///
/// Iterates stay inside `config.beta_bounds`. A Newton step is rejected when the
/// curvature is non-negative, when it leaves the current sign-change bracket, or
/// when it does not shrink `|g|`; the iterate then bisects the bracket. Without a
/// sign change inside the bounds the better boundary is returned.
pub fn newton_update_beta(
    deltas: &[f64],
    alphas: &[f64],
    p: usize,
    beta_init: f64,
    config: &EmConfig,
) -> f64 {
    if let Some(b) = config.fix_beta {
        return b;
    }
    let (lo, hi) = config.beta_bounds;
    if lo == hi {
        return lo;
    }
    let score = |b: f64| beta_score(b, deltas, alphas, p);
    let g_lo = score(lo).0;
    let g_hi = score(hi).0;
    if !g_lo.is_finite() || !g_hi.is_finite() {
        return config.clamp_beta(beta_init);
    }
    match (g_lo > 0.0, g_hi < 0.0) {
        (true, true) => {}
        (true, false) => return hi,
        (false, true) => return lo,
        (false, false) => {
            // g(lo) <= 0 <= g(hi): a minimum inside, the maximum sits on a boundary.
            let f_lo = shape_objective(lo, deltas, alphas, p);
            let f_hi = shape_objective(hi, deltas, alphas, p);
            return if f_lo >= f_hi { lo } else { hi };
        }
    }

    // g(a) > 0 > g(c)
    let (mut a, mut c) = (lo, hi);
    let mut beta = config.clamp_beta(beta_init);
    let (mut g, mut gp) = score(beta);
    for _ in 0..config.newton_iters {
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            a = beta;
        } else {
            c = beta;
        }
        if c - a <= 1e-12 * beta {
            break;
        }
        let mut next = None;
        if gp < 0.0 {
            let cand = beta - g / gp;
            if cand > a && cand < c {
                let (g_new, gp_new) = score(cand);
                if g_new.abs() < g.abs() {
                    next = Some((cand, g_new, gp_new));
                }
            }
        }
        let (nb, ng, ngp) = next.unwrap_or_else(|| {
            let mid = 0.5 * (a + c);
            let (gm, gpm) = score(mid);
            (mid, gm, gpm)
        });
        let step = (nb - beta).abs();
        beta = nb;
        g = ng;
        gp = ngp;
        if step <= 1e-13 * beta {
            break;
        }
    }
    config.clamp_beta(beta)
}
