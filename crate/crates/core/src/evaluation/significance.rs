//! Paired t-tests with Bonferroni correction.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
    pub corrected_alpha: f64,
    pub significant: bool,
}

/// Two-sided paired t-test on `a - b`, judged at `alpha / n_comparisons`.
pub fn paired_t_test(a: &[f64], b: &[f64], n_comparisons: usize, alpha: f64) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples { needed: 2, got: n });
    }
    if n_comparisons == 0 {
        return Err(EvalError::Invalid("n_comparisons must be at least 1".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / (var.sqrt() / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
        (t, (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
    };
    let corrected_alpha = alpha / n_comparisons as f64;
    Ok(TTestResult {
        t_statistic: t,
        p_value: p,
        df,
        corrected_alpha,
        significant: p < corrected_alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// The best model on a user-level metric and its test against each other model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComparison {
    pub best: usize,
    pub means: Vec<f64>,
    /// `None` at the best model's own position.
    pub tests: Vec<Option<TTestResult>>,
}

impl MetricComparison {
    /// The best model's difference is significant against every other model.
    pub fn best_is_significant(&self) -> bool {
        self.tests.iter().flatten().all(|t| t.significant) && self.tests.iter().flatten().count() > 0
    }
}

/// Picks the best of `values` (one per-user vector per model, aligned by user) by mean
/// and tests it against each other model with Bonferroni divisor `models - 1`.
/// Ties on the mean go to the lower model index.
pub fn compare_user_metric(values: &[Vec<f64>], direction: Direction, alpha: f64) -> Result<MetricComparison> {
    if values.len() < 2 {
        return Err(EvalError::TooFewSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let means: Vec<f64> = values
        .iter()
        .map(|v| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 })
        .collect();
    let mut best = 0;
    for (i, &m) in means.iter().enumerate().skip(1) {
        let better = match direction {
            Direction::HigherIsBetter => m > means[best],
            Direction::LowerIsBetter => m < means[best],
        };
        if better {
            best = i;
        }
    }
    let n_comparisons = values.len() - 1;
    let tests = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i == best {
                Ok(None)
            } else {
                paired_t_test(&values[best], v, n_comparisons, alpha).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    Ok(MetricComparison { best, means, tests })
}
