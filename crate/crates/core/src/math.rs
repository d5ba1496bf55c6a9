//! Log-space special functions.

use rand::Rng;

pub use libm::{exp, log};

/// Natural log of the Gamma function for positive arguments.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Natural log of the Beta function.
#[inline]
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln(n!)`.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln(n! / (n - k)!)`, the number of injective maps of `k` items into `n` slots.
pub fn ln_falling_factorial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(n - k)
}

/// `ln(sum(exp(v)))` with max subtraction.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + log(sum)
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
///
/// Uses the cumulative-sum inverse method after max subtraction. Returns the
/// chosen index together with its normalized log probability.
pub fn sample_log_weights<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> (usize, f64) {
    debug_assert!(!log_weights.is_empty());
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for &w in log_weights {
        total += exp(w - max);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = log_weights.len() - 1;
    for (i, &w) in log_weights.iter().enumerate() {
        acc += exp(w - max);
        if target < acc {
            chosen = i;
            break;
        }
    }
    (chosen, log_weights[chosen] - max - log(total))
}

/// Log probability of choosing index `i` among two log weights.
#[inline]
pub fn log_choice2(chosen: f64, other: f64) -> f64 {
    // -ln(1 + exp(other - chosen)), stable for both signs
    let d = other - chosen;
    if d > 0.0 {
        -d - libm::log1p(exp(-d))
    } else {
        -libm::log1p(exp(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert!((ln_factorial(5) - log(120.0)).abs() < 1e-12);
        assert!((ln_falling_factorial(5, 2) - log(20.0)).abs() < 1e-12);
        assert_eq!(ln_falling_factorial(4, 0), 0.0);
    }

    #[test]
    fn log_choice2_matches_direct() {
        for &(a, b) in &[(0.0, 0.0), (-3.0, 2.0), (700.0, -700.0), (-1e3, -1e3 + 1.0)] {
            let direct = a - log_sum_exp(&[a, b]);
            assert!((log_choice2(a, b) - direct).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - log(2.0)).abs() < 1e-15);
    }
}
