use serde::{Deserialize, Serialize};

use super::{ExperimentError, TrialRecord};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64, ExperimentError> {
    if pred.len() != truth.len() {
        return Err(ExperimentError::Shape(format!(
            "prediction has {} samples, truth {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(ExperimentError::Shape(
            "cannot score an empty prediction".into(),
        ));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p) * (t - p)).sum();
    Ok(sum / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean_mse: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Sample variance (n - 1 denominator).
    pub variance: f64,
    pub n_trials: usize,
}

/// Mean, sample variance and `mean ± 1.96 sd / sqrt(n)` over a set of MSEs.
///
/// Values are sorted first so the result does not depend on input order, and
/// accumulated relative to the minimum so a constant sample gives exactly
/// that constant with zero variance.
pub fn summarize_values(values: &[f64]) -> Result<SummaryStats, ExperimentError> {
    let n = values.len();
    if n < 2 {
        return Err(ExperimentError::Statistics(format!(
            "need at least 2 trials to summarize, got {n}"
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ExperimentError::Statistics(format!("non-finite mse {bad}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let base = sorted[0];
    let mean = base + sorted.iter().map(|v| v - base).sum::<f64>() / n as f64;
    let variance = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let half = Z_95 * variance.sqrt() / (n as f64).sqrt();
    Ok(SummaryStats {
        mean_mse: mean,
        ci95_low: mean - half,
        ci95_high: mean + half,
        variance,
        n_trials: n,
    })
}

pub fn summarize(records: &[TrialRecord]) -> Result<SummaryStats, ExperimentError> {
    let values: Vec<f64> = records.iter().map(|r| r.mse).collect();
    summarize_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0; 7], &[0.0; 7]).unwrap(), 1.0);
        assert!((mse(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            mse(&[1.0], &[1.0, 2.0]),
            Err(ExperimentError::Shape(_))
        ));
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn constant_sample() {
        let s = summarize_values(&[0.1; 50]).unwrap();
        assert_eq!(s.mean_mse, 0.1);
        assert_eq!(s.variance, 0.0);
        assert_eq!((s.ci95_low, s.ci95_high), (0.1, 0.1));
    }

    #[test]
    fn two_point_sample() {
        let s = summarize_values(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean_mse, 1.0);
        assert_eq!(s.variance, 2.0);
        assert!((s.ci95_low - (1.0 - 1.96)).abs() < 1e-15);
        assert!((s.ci95_high - (1.0 + 1.96)).abs() < 1e-15);
    }

    #[test]
    fn too_few_records() {
        assert!(matches!(
            summarize_values(&[1.0]),
            Err(ExperimentError::Statistics(_))
        ));
        assert!(summarize_values(&[1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn order_does_not_matter(mut v in prop::collection::vec(0.0f64..10.0, 2..60), seed in any::<u64>()) {
            let a = summarize_values(&v).unwrap();
            let k = (seed % v.len() as u64) as usize;
            v.rotate_left(k);
            v.reverse();
            let b = summarize_values(&v).unwrap();
            prop_assert_eq!(a.clone(), b);
            prop_assert!(a.ci95_low <= a.mean_mse && a.mean_mse <= a.ci95_high);
            prop_assert!(a.variance >= 0.0);
        }
    }
}
