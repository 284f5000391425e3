use crate::error::{Error, Result};

/// Two-sided one-sample Kolmogorov-Smirnov distance between the empirical
/// CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("KS statistic needs at least one sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic critical value `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`; about
/// `1.95 / sqrt(n)` at `alpha = 0.001`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point() {
        assert_eq!(ks_statistic(&[0.5], |x| x).unwrap(), 0.5);
    }

    #[test]
    fn constant_samples() {
        assert!(ks_statistic(&[0.3; 100], |x| x).unwrap() >= 0.5);
        assert!(ks_statistic(&[0.9; 100], |x| x).unwrap() >= 0.5);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn uniform_draws_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.95 / (n as f64).sqrt(), "d = {d}");
    }

    #[test]
    fn critical_value_at_one_in_a_thousand() {
        let c = ks_critical_value(1, 0.001);
        assert!((c - 1.95).abs() < 0.01, "{c}");
    }
}
