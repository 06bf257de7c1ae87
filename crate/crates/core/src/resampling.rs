//! Weight utilities shared by the filters: normalization in log space,
//! effective sample size and systematic resampling.

use rand::Rng;

/// `ln(sum(exp(xs)))`, evaluated in index order. Returns `-inf` for an empty
/// slice or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Turns log-weights into normalized linear weights in place and returns the
/// log of the total mass, or `None` if the largest log-weight is not finite.
pub fn normalize_log_weights(log_w: &mut [f64]) -> Option<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut sum = 0.0;
    for w in log_w.iter_mut() {
        *w = (*w - max).exp();
        sum += *w;
    }
    for w in log_w.iter_mut() {
        *w /= sum;
    }
    Some(max + sum.ln())
}

/// `1 / sum(w^2)` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: `n` indices drawn against the cumulative weights
/// with a single uniform offset. Output indices are non-decreasing.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    assert!(!weights.is_empty(), "cannot resample an empty set");
    let total: f64 = weights.iter().sum();
    let step = total / n as f64;
    let mut target = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut idx = 0;
    let mut cum = weights[0];
    let last = weights.len() - 1;
    for _ in 0..n {
        while cum <= target && idx < last {
            idx += 1;
            cum += weights[idx];
        }
        out.push(idx);
        target += step;
    }
    out
}
