//! Log-space arithmetic and summary statistics.

use rand::{Rng, RngCore};

/// `ln(sum(exp(x)))` without overflow. Empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights into probabilities.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_weights);
    log_weights.iter().map(|&w| (w - z).exp()).collect()
}

/// Index drawn with probability proportional to `exp(log_weights[i])`.
pub fn sample_log_categorical(log_weights: &[f64], rng: &mut dyn RngCore) -> usize {
    assert!(!log_weights.is_empty(), "cannot sample from an empty support");
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|&w| (w - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding can leave u just above the last bucket
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
///
/// The standard error of a single observation is reported as 0.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}
