//! Log-domain helpers for probability vectors.

use std::f64::consts::LN_2;

/// `ln(sum(exp(xs)))`, stable for arbitrarily negative inputs.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Log-sum-exp restricted to the given indices.
pub fn log_sum_exp_over(xs: &[f64], indices: impl IntoIterator<Item = usize>) -> f64 {
    let picked: Vec<f64> = indices.into_iter().map(|i| xs[i]).collect();
    log_sum_exp(&picked)
}

/// Log-sum-exp over every index except `skip`.
pub fn log_sum_exp_except(xs: &[f64], skip: usize) -> f64 {
    let max = xs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, &x)| (x - max).exp())
        .sum();
    max + sum.ln()
}

/// Subtracts the log-normaliser in place; returns it.
pub fn normalize_log(xs: &mut [f64]) -> f64 {
    let lse = log_sum_exp(xs);
    for x in xs.iter_mut() {
        *x -= lse;
    }
    lse
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Converts a log-probability vector to the linear domain.
pub fn to_linear(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| x.exp()).collect()
}

/// Converts a probability vector to the log domain (zeros map to `-inf`).
pub fn to_log(ps: &[f64]) -> Vec<f64> {
    ps.iter().map(|p| p.ln()).collect()
}
