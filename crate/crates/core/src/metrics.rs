//! Confusion matrix and the derived binary classification metrics, with
//! spam as the positive class.

use crate::dataset::Label;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("predictions ({predictions}) and labels ({labels}) differ in length")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("{0} is undefined for this confusion matrix (zero denominator)")]
    Undefined(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Spam, Label::Spam) => self.tp += 1,
            (Label::Normal, Label::Normal) => self.tn += 1,
            (Label::Spam, Label::Normal) => self.fp += 1,
            (Label::Normal, Label::Spam) => self.fn_ += 1,
        }
    }

    /// `(TP + TN) / (TP + TN + FP + FN)`
    pub fn accuracy(&self) -> Result<f64, MetricsError> {
        ratio(self.tp + self.tn, self.total(), "accuracy")
    }

    /// `TP / (TP + FN)`
    pub fn recall(&self) -> Result<f64, MetricsError> {
        ratio(self.tp, self.tp + self.fn_, "recall")
    }

    /// `TP / (TP + FP)`
    pub fn precision(&self) -> Result<f64, MetricsError> {
        ratio(self.tp, self.tp + self.fp, "precision")
    }

    /// Harmonic mean of precision and recall.
    pub fn f1(&self) -> Result<f64, MetricsError> {
        let p = self.precision()?;
        let r = self.recall()?;
        if p + r == 0.0 {
            return Err(MetricsError::Undefined("f1"));
        }
        Ok(2.0 * p * r / (p + r))
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            tp: self.tp,
            tn: self.tn,
            fp: self.fp,
            fn_: self.fn_,
            accuracy: self.accuracy().ok(),
            recall: self.recall().ok(),
            precision: self.precision().ok(),
            f1: self.f1().ok(),
        }
    }
}

fn ratio(num: u64, den: u64, name: &'static str) -> Result<f64, MetricsError> {
    if den == 0 {
        return Err(MetricsError::Undefined(name));
    }
    Ok(num as f64 / den as f64)
}

/// Tallies paired predictions and ground-truth labels.
pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predictions.iter().zip(labels) {
        cm.record(p, a);
    }
    Ok(cm)
}

/// Serializable metrics; undefined ratios are `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

/// Percentage with two decimals, or `n/a`.
pub fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", v * 100.0))
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "                 predicted normal  predicted spam")?;
        writeln!(f, "actual normal    {:>16}  {:>14}", self.tn, self.fp)?;
        writeln!(f, "actual spam      {:>16}  {:>14}", self.fn_, self.tp)?;
        writeln!(f)?;
        writeln!(f, "accuracy   {:>8}", percent(self.accuracy))?;
        writeln!(f, "recall     {:>8}", percent(self.recall))?;
        writeln!(f, "precision  {:>8}", percent(self.precision))?;
        write!(f, "f1         {:>8}", percent(self.f1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::*;

    fn reported() -> ConfusionMatrix {
        ConfusionMatrix::new(820, 790, 30, 37)
    }

    #[test]
    fn published_matrix_values() {
        let cm = reported();
        assert_eq!(cm.total(), 1677);
        assert_eq!(cm.recall().unwrap(), 820.0 / 857.0);
        assert_eq!(percent(cm.recall().ok()), "95.68%");
        assert_eq!(cm.accuracy().unwrap(), 1610.0 / 1677.0);
        assert_eq!(percent(cm.accuracy().ok()), "96.00%");
        assert_eq!(percent(cm.precision().ok()), "96.47%");
    }

    #[test]
    fn counting_cases() {
        let cm = confusion(&[Spam, Normal, Spam], &[Spam, Normal, Spam]).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        assert_eq!(cm.f1().unwrap(), 1.0);
        assert_eq!(cm.accuracy().unwrap(), 1.0);
        let cm = confusion(&[Normal; 5], &[Spam; 5]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(0, 0, 0, 5));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            confusion(&[Spam], &[]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert_eq!(confusion(&[], &[]), Err(MetricsError::Empty));
        let all_normal = ConfusionMatrix::new(0, 4, 0, 0);
        assert_eq!(all_normal.recall(), Err(MetricsError::Undefined("recall")));
        assert_eq!(
            all_normal.precision(),
            Err(MetricsError::Undefined("precision"))
        );
        let misses = ConfusionMatrix::new(0, 1, 1, 1);
        assert_eq!(misses.f1(), Err(MetricsError::Undefined("f1")));
    }

    #[test]
    fn f1_equals_common_value() {
        // precision = recall = 0.8
        let cm = ConfusionMatrix::new(8, 5, 2, 2);
        assert!((cm.f1().unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn report_json_keys() {
        let v = serde_json::to_value(reported().report()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "accuracy",
                "f1",
                "fn",
                "fp",
                "precision",
                "recall",
                "tn",
                "tp"
            ]
        );
    }

    fn label() -> impl Strategy<Value = Label> {
        prop_oneof![Just(Spam), Just(Normal)]
    }

    proptest! {
        #[test]
        fn matches_naive_count_and_bounds(pairs in prop::collection::vec((label(), label()), 1..200)) {
            let (p, a): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let cm = confusion(&p, &a).unwrap();
            let count = |pp, aa| pairs.iter().filter(|&&(x, y)| x == pp && y == aa).count() as u64;
            prop_assert_eq!(cm, ConfusionMatrix::new(count(Spam, Spam), count(Normal, Normal), count(Spam, Normal), count(Normal, Spam)));
            prop_assert_eq!(cm.total() as usize, pairs.len());

            let mut rev = pairs.clone();
            rev.reverse();
            let (rp, ra): (Vec<_>, Vec<_>) = rev.into_iter().unzip();
            prop_assert_eq!(confusion(&rp, &ra).unwrap(), cm);

            for m in [cm.accuracy(), cm.recall(), cm.precision(), cm.f1()].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&m));
            }
            if let (Ok(p), Ok(r), Ok(f)) = (cm.precision(), cm.recall(), cm.f1()) {
                prop_assert!(f <= p.max(r) + 1e-12 && f >= p.min(r) - 1e-12);
            }
        }
    }
}
