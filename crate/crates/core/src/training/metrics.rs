use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-vs-rest confusion counts for a single class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassCounts>,
}

impl Metrics {
    /// Macro averages over all `n_classes`; a class never predicted and never
    /// true contributes 0 to each average.
    pub fn from_predictions(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Validation(format!(
                "{} labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() || n_classes == 0 {
            return Err(Error::Validation("cannot score an empty test set".into()));
        }
        if let Some(&bad) = truth.iter().chain(pred).find(|&&c| c >= n_classes) {
            return Err(Error::Index {
                what: "class",
                index: bad,
                len: n_classes,
            });
        }
        let n = truth.len();
        let mut per_class = vec![ClassCounts::default(); n_classes];
        for (&t, &p) in truth.iter().zip(pred) {
            if t == p {
                per_class[t].tp += 1;
            } else {
                per_class[p].fp += 1;
                per_class[t].fn_ += 1;
            }
        }
        for c in &mut per_class {
            c.tn = n - c.tp - c.fp - c.fn_;
        }
        let mean = |f: fn(&ClassCounts) -> f64| per_class.iter().map(f).sum::<f64>() / n_classes as f64;
        let correct: usize = per_class.iter().map(|c| c.tp).sum();
        Ok(Self {
            precision: mean(ClassCounts::precision),
            recall: mean(ClassCounts::recall),
            f1: mean(ClassCounts::f1),
            accuracy: correct as f64 / n as f64,
            per_class,
        })
    }
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Arithmetic means over runs plus the spread of F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_std: f64,
    pub accuracy: f64,
}

impl Summary {
    pub fn over<'a>(runs: impl IntoIterator<Item = &'a Metrics>) -> Self {
        let runs: Vec<&Metrics> = runs.into_iter().collect();
        let n = runs.len().max(1) as f64;
        let mean = |f: fn(&Metrics) -> f64| runs.iter().map(|m| f(m)).sum::<f64>() / n;
        let f1s: Vec<f64> = runs.iter().map(|m| m.f1).collect();
        Self {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            f1_std: sample_std(&f1s),
            accuracy: mean(|m| m.accuracy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    #[test]
    fn hand_counted_example() {
        // truth [A, A, B], predicted [A, B, B]
        let m = Metrics::from_predictions(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert!((m.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.75);
        assert_eq!(m.per_class[0], ClassCounts { tp: 1, fp: 0, fn_: 1, tn: 1 });
        assert_eq!(m.per_class[1], ClassCounts { tp: 1, fp: 1, fn_: 0, tn: 1 });
    }

    #[test]
    fn perfect_predictions_score_one() {
        let m = Metrics::from_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn absent_class_counts_as_zero() {
        let m = Metrics::from_predictions(&[0, 1], &[0, 1], 3).unwrap();
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(Metrics::from_predictions(&[], &[], 2).is_err());
        assert!(Metrics::from_predictions(&[0], &[0, 1], 2).is_err());
        assert!(Metrics::from_predictions(&[0], &[2], 2).is_err());
    }

    #[test]
    fn uniform_random_baseline_is_near_chance() {
        let (k, n) = (8usize, 4000usize);
        let mut rng = SeededRng::new(3);
        let truth: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let m = Metrics::from_predictions(&truth, &pred, k).unwrap();
        let p = 1.0 / k as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((m.accuracy - p).abs() < 3.0 * sigma, "{}", m.accuracy);
    }

    #[test]
    fn std_and_summary() {
        assert_eq!(sample_std(&[0.3]), 0.0);
        assert!((sample_std(&[0.6, 0.7]) - 0.070710678).abs() < 1e-8);
        let a = Metrics::from_predictions(&[0, 1], &[0, 1], 2).unwrap();
        let b = Metrics::from_predictions(&[0, 1], &[1, 0], 2).unwrap();
        let s = Summary::over([&a, &b]);
        assert_eq!((s.f1, s.accuracy), (0.5, 0.5));
        assert!((s.f1_std - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
