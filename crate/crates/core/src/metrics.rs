//! Confusion matrix, per-class precision/recall/F1/support, one-vs-rest ROC
//! curves and trapezoidal AUC.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const NUM_CLASSES: usize = 7;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("predictions ({preds}) and truths ({truths}) differ in length")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("label {0} outside 0..{NUM_CLASSES}")]
    LabelOutOfRange(usize),
    #[error("ROC for class {0} is undefined: truths need both positives and negatives")]
    UndefinedCurve(usize),
    #[error("invalid score {0}")]
    InvalidScore(f64),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    /// Fraction on the diagonal; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }
}

pub fn confusion(preds: &[usize], truths: &[usize]) -> Result<ConfusionMatrix, MetricsError> {
    if preds.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truths) {
        if p >= NUM_CLASSES {
            return Err(MetricsError::LabelOutOfRange(p));
        }
        if t >= NUM_CLASSES {
            return Err(MetricsError::LabelOutOfRange(t));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when precision or recall had a zero denominator and was reported
    /// as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<ClassStats>,
    pub macro_avg: AverageStats,
    /// Support-weighted average, the one comparable to a "Total / Avg" row.
    pub weighted_avg: AverageStats,
    pub accuracy: f64,
}

pub fn class_report(cm: &ConfusionMatrix) -> ClassReport {
    let total = cm.total();
    let classes: Vec<ClassStats> = (0..NUM_CLASSES)
        .map(|c| {
            let tp = cm.counts[c][c];
            let pred = cm.predicted(c);
            let support = cm.support(c);
            let precision = if pred == 0 { 0.0 } else { tp as f64 / pred as f64 };
            let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
            ClassStats {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support,
                zero_division: pred == 0 || support == 0,
            }
        })
        .collect();
    let n = NUM_CLASSES as f64;
    let macro_avg = AverageStats {
        precision: classes.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: classes.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: classes.iter().map(|s| s.f1).sum::<f64>() / n,
        support: total,
    };
    let weighted = |f: fn(&ClassStats) -> f64| -> f64 {
        if total == 0 {
            0.0
        } else {
            classes.iter().map(|s| f(s) * s.support as f64).sum::<f64>() / total as f64
        }
    };
    let weighted_avg = AverageStats {
        precision: weighted(|s| s.precision),
        recall: weighted(|s| s.recall),
        f1: weighted(|s| s.f1),
        support: total,
    };
    ClassReport {
        classes,
        macro_avg,
        weighted_avg,
        accuracy: cm.accuracy(),
    }
}

impl ClassReport {
    /// Fixed-width text table with two-decimal statistics.
    pub fn to_table(&self, names: &[&str]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>12} {:>9} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1-score", "support");
        for (c, st) in self.classes.iter().enumerate() {
            let name = names.get(c).copied().unwrap_or("?");
            let _ = writeln!(
                s,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                format!("{c} {name}"),
                st.precision,
                st.recall,
                st.f1,
                st.support
            );
        }
        for (label, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                label, a.precision, a.recall, a.f1, a.support
            );
        }
        let _ = writeln!(s, "{:>12} {:>9.4}", "accuracy", self.accuracy);
        s
    }
}

/// One-vs-rest ROC curve from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: usize,
    /// `(fpr, tpr)` pairs, both non-decreasing.
    pub points: Vec<(f64, f64)>,
    /// Score threshold reached at each point after the origin.
    pub thresholds: Vec<f64>,
    /// Cumulative `(false positives, true positives)` behind each point.
    pub counts: Vec<(u64, u64)>,
    pub positives: u64,
    pub negatives: u64,
}

impl RocCurve {
    /// `class,fpr,tpr` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,fpr,tpr\n");
        for (fpr, tpr) in &self.points {
            let _ = writeln!(s, "{},{},{}", self.class, fpr, tpr);
        }
        s
    }
}

/// Sweeps thresholds over the distinct scores in descending order; tied
/// scores enter the curve as one step.
pub fn roc_curve(scores: &[f64], truths: &[usize], class: usize) -> Result<RocCurve, MetricsError> {
    if scores.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: scores.len(),
            truths: truths.len(),
        });
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(MetricsError::InvalidScore(s));
    }
    let positives = truths.iter().filter(|&&t| t == class).count();
    let negatives = truths.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::UndefinedCurve(class));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut counts = vec![(0, 0)];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truths[order[i]] == class {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        counts.push((fp as u64, tp as u64));
        thresholds.push(threshold);
    }
    Ok(RocCurve {
        class,
        points,
        thresholds,
        counts,
        positives: positives as u64,
        negatives: negatives as u64,
    })
}

/// Trapezoidal area under the curve, accumulated in integer counts and
/// divided once.
pub fn auc(curve: &RocCurve) -> f64 {
    let twice: u128 = curve
        .counts
        .windows(2)
        .map(|w| u128::from(w[1].0 - w[0].0) * u128::from(w[0].1 + w[1].1))
        .sum();
    twice as f64 / (2 * u128::from(curve.positives) * u128::from(curve.negatives)) as f64
}
