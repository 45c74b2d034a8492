use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n: usize,
    /// Every paired difference was zero; the statistic is reported as 0.
    pub degenerate: bool,
}

/// Two-sided paired t-test of `a` against `b`.
///
/// Identical samples give `p = 1` with the degenerate flag set. Differences
/// that are all equal and nonzero have zero variance and give an infinite
/// statistic with `p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Degenerate(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("need at least 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    if d.iter().all(|&x| x == 0.0) {
        return Ok(TTest {
            statistic: 0.0,
            p_value: 1.0,
            n,
            degenerate: true,
        });
    }
    let (mean, sd) = mean_std(&d);
    let se = sd / (n as f64).sqrt();
    // relative test so float noise in a constant shift still reads as zero spread
    if se <= 1e-12 * mean.abs() {
        return Ok(TTest {
            statistic: f64::INFINITY.copysign(mean),
            p_value: 0.0,
            n,
            degenerate: false,
        });
    }
    let t = mean / se;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::Degenerate(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(TTest {
        statistic: t,
        p_value: p,
        n,
        degenerate: false,
    })
}

/// Mean and sample standard deviation; the deviation is 0 below two values.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.1, 0.2, 0.3];
        let t = paired_t_test(&a, &a).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(t.degenerate);
    }

    #[test]
    fn constant_shift() {
        let b: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 0.05).collect();
        let t = paired_t_test(&a, &b).unwrap();
        assert!(t.p_value < 1e-6);
    }

    #[test]
    fn swap_symmetry() {
        let a = [0.3, 0.5, 0.2, 0.9, 0.4];
        let b = [0.1, 0.6, 0.1, 0.5, 0.2];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
    }

    #[test]
    fn known_value() {
        // d = [1, 2, 3]: mean 2, sd 1, t = 2 * sqrt(3) with 2 degrees of freedom
        let t = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((t.statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // two-sided p for t2 = 3.4641: 1 - t/sqrt(t^2 + 2)
        let want = 1.0 - t.statistic / (t.statistic.powi(2) + 2.0).sqrt();
        assert!((t.p_value - want).abs() < 1e-9, "{} vs {want}", t.p_value);
    }

    #[test]
    fn bad_lengths() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_err());
    }
}
