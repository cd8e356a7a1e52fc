//! Confusion matrix and the scores derived from it.

use std::fmt::Write as _;

use log::warn;

use crate::augment::check_simplex_row;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// `K×K` counts, rows are true classes and columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix {
            k,
            counts: rows.concat(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.k + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth * self.k..(truth + 1) * self.k]
            .iter()
            .sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, pred)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k).map(<[u64]>::to_vec).collect()
    }

    /// Elementwise sum of two matrices over the same classes.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.k != self.k {
            return Err(Error::Dimension(format!(
                "cannot merge {0}×{0} with {1}×{1} confusion matrix",
                self.k, other.k
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

fn check_rows(preds: &Tensor, labels: &Tensor) -> Result<()> {
    if preds.ndim() != 2 || preds.shape() != labels.shape() {
        return Err(Error::Dimension(format!(
            "predictions {:?} and labels {:?} must both be B×K",
            preds.shape(),
            labels.shape()
        )));
    }
    for row in preds.rows().chain(labels.rows()) {
        check_simplex_row(row, SIMPLEX_TOLERANCE)?;
    }
    Ok(())
}

/// Count argmax predictions against argmax labels.
pub fn build_confusion(preds: &Tensor, labels: &Tensor) -> Result<ConfusionMatrix> {
    check_rows(preds, labels)?;
    let mut cm = ConfusionMatrix::new(preds.shape()[1]);
    for (p, y) in preds.rows().zip(labels.rows()) {
        cm.add(argmax(y), argmax(p));
    }
    Ok(cm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Max-softmax confidence split by prediction correctness. Empty groups are `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfidenceStats {
    pub mean_correct: Option<f64>,
    pub median_correct: Option<f64>,
    pub mean_wrong: Option<f64>,
    pub median_wrong: Option<f64>,
    pub n_correct: usize,
    pub n_wrong: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// Mean over classes of the row-normalised diagonal (macro recall).
    pub average_accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassStats>,
    pub confidence: ConfidenceStats,
    /// Classes with no evaluation samples; they count as recall 0.
    pub absent_classes: Vec<usize>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_median(mut v: Vec<f64>) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    (Some(mean), Some(median))
}

/// Scores derived from the counts alone; confidence is left empty.
pub fn scores_from_confusion(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Argument("confusion matrix is empty".into()));
    }
    let k = cm.num_classes();
    let mut per_class = Vec::with_capacity(k);
    let mut absent = Vec::new();
    for c in 0..k {
        let tp = cm.get(c, c);
        let support = cm.row_sum(c);
        if support == 0 {
            absent.push(c);
        }
        let precision = ratio(tp, cm.col_sum(c));
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassStats {
            precision,
            recall,
            f1,
            support,
        });
    }
    if !absent.is_empty() {
        warn!("classes {absent:?} have no evaluation samples; counted as recall 0");
    }
    Ok(MetricsReport {
        accuracy: ratio(cm.trace(), total),
        average_accuracy: per_class.iter().map(|s| s.recall).sum::<f64>() / k as f64,
        macro_f1: per_class.iter().map(|s| s.f1).sum::<f64>() / k as f64,
        per_class,
        confidence: ConfidenceStats::default(),
        absent_classes: absent,
        confusion: cm.clone(),
    })
}

/// Full report: count-derived scores plus confidence statistics from `probs`.
pub fn compute_report(
    cm: &ConfusionMatrix,
    probs: &Tensor,
    labels: &Tensor,
) -> Result<MetricsReport> {
    check_rows(probs, labels)?;
    if probs.shape()[1] != cm.num_classes() || probs.shape()[0] as u64 != cm.total() {
        return Err(Error::Argument(format!(
            "confusion matrix ({} classes, {} samples) does not match predictions {:?}",
            cm.num_classes(),
            cm.total(),
            probs.shape()
        )));
    }
    let mut report = scores_from_confusion(cm)?;
    let mut correct = Vec::new();
    let mut wrong = Vec::new();
    for (p, y) in probs.rows().zip(labels.rows()) {
        let pred = argmax(p);
        if pred == argmax(y) {
            correct.push(p[pred]);
        } else {
            wrong.push(p[pred]);
        }
    }
    let (n_correct, n_wrong) = (correct.len(), wrong.len());
    let (mean_correct, median_correct) = mean_median(correct);
    let (mean_wrong, median_wrong) = mean_median(wrong);
    report.confidence = ConfidenceStats {
        mean_correct,
        median_correct,
        mean_wrong,
        median_wrong,
        n_correct,
        n_wrong,
    };
    Ok(report)
}

/// Convenience: confusion matrix and report in one call.
pub fn evaluate(probs: &Tensor, labels: &Tensor) -> Result<MetricsReport> {
    let cm = build_confusion(probs, labels)?;
    compute_report(&cm, probs, labels)
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn opt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), pct)
}

impl MetricsReport {
    /// Long-format CSV: `section,name,value` rows.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut s = String::from("section,name,value\n");
        let _ = writeln!(s, "overall,accuracy,{}", self.accuracy);
        let _ = writeln!(s, "overall,average_accuracy,{}", self.average_accuracy);
        let _ = writeln!(s, "overall,macro_f1,{}", self.macro_f1);
        let c = &self.confidence;
        for (name, v) in [
            ("mean_correct", c.mean_correct),
            ("mean_wrong", c.mean_wrong),
            ("median_correct", c.median_correct),
            ("median_wrong", c.median_wrong),
        ] {
            let _ = writeln!(
                s,
                "confidence,{name},{}",
                v.map_or(String::new(), |v| v.to_string())
            );
        }
        let _ = writeln!(s, "confidence,n_correct,{}", c.n_correct);
        let _ = writeln!(s, "confidence,n_wrong,{}", c.n_wrong);
        for (i, st) in self.per_class.iter().enumerate() {
            let name = class_label(class_names, i);
            let _ = writeln!(s, "class:{name},precision,{}", st.precision);
            let _ = writeln!(s, "class:{name},recall,{}", st.recall);
            let _ = writeln!(s, "class:{name},f1,{}", st.f1);
            let _ = writeln!(s, "class:{name},support,{}", st.support);
        }
        s
    }

    /// Aligned text: overall scores, per-class table, confidence grid and
    /// the confusion matrix. Scores are percentages.
    pub fn to_table(&self, class_names: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Accuracy  F1-score  Aver. Acc.");
        let _ = writeln!(
            s,
            "{:>8}  {:>8}  {:>10}\n",
            pct(self.accuracy),
            pct(self.macro_f1),
            pct(self.average_accuracy)
        );
        let width = (0..self.per_class.len())
            .map(|i| class_label(class_names, i).len())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>7}  {:>8}  {:>7}",
            "Class", "Precision", "Recall", "F1-score", "Samples"
        );
        for (i, st) in self.per_class.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9}  {:>7}  {:>8}  {:>7}",
                class_label(class_names, i),
                pct(st.precision),
                pct(st.recall),
                pct(st.f1),
                st.support
            );
        }
        let c = &self.confidence;
        let _ = writeln!(s, "\nConfidence   mean             median");
        let _ = writeln!(s, "             correct  wrong   correct  wrong");
        let _ = writeln!(
            s,
            "             {:>7}  {:>5}   {:>7}  {:>5}",
            opt_pct(c.mean_correct),
            opt_pct(c.mean_wrong),
            opt_pct(c.median_correct),
            opt_pct(c.median_wrong)
        );
        let _ = writeln!(s, "\nConfusion (rows = true, columns = predicted)");
        for row in self.confusion.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        if !self.absent_classes.is_empty() {
            let _ = writeln!(
                s,
                "\nwarning: no samples for classes {:?} (counted as recall 0)",
                self.absent_classes
            );
        }
        s
    }
}

fn class_label(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| format!("class{i}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[&[f64]]) -> Tensor {
        let k = v[0].len();
        Tensor::new(vec![v.len(), k], v.concat()).unwrap()
    }

    #[test]
    fn hand_case() {
        // truths 0,0,1,1 ; predictions 0,1,1,1
        let labels = rows(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let preds = rows(&[&[0.9, 0.1], &[0.3, 0.7], &[0.2, 0.8], &[0.4, 0.6]]);
        let cm = build_confusion(&preds, &labels).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 1], vec![0, 2]]);
        let r = compute_report(&cm, &preds, &labels).unwrap();
        assert!((r.accuracy - 0.75).abs() < 1e-12);
        assert!((r.average_accuracy - 0.75).abs() < 1e-12);
        assert!((r.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class[1].f1 - 0.8).abs() < 1e-12);
        assert!((r.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(r.confidence.n_correct, 3);
        assert_eq!(r.confidence.mean_wrong, Some(0.7));
        assert_eq!(r.confidence.median_correct, Some(0.8));
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let labels = rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        let cm = build_confusion(&labels, &labels).unwrap();
        assert_eq!(cm.trace(), 3);
        let r = scores_from_confusion(&cm).unwrap();
        assert_eq!(
            (r.accuracy, r.average_accuracy, r.macro_f1),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn all_predicted_zero_fills_one_column() {
        let labels = rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let preds = rows(&[&[1.0, 0.0, 0.0][..]; 3]);
        let cm = build_confusion(&preds, &labels).unwrap();
        for t in 0..3 {
            assert_eq!(cm.get(t, 0), 1);
            assert_eq!(cm.get(t, 1) + cm.get(t, 2), 0);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[0.25, 0.25, 0.5, 0.5]), 2);
        assert_eq!(argmax(&[1.0 / 3.0; 3]), 0);
    }

    #[test]
    fn errors() {
        let cm = ConfusionMatrix::new(3);
        assert!(matches!(
            scores_from_confusion(&cm),
            Err(Error::Argument(_))
        ));
        let bad = rows(&[&[0.5, 0.6]]);
        let ok = rows(&[&[1.0, 0.0]]);
        assert!(matches!(
            build_confusion(&bad, &ok),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn absent_class_counts_as_zero_recall() {
        let cm =
            ConfusionMatrix::from_counts(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 0]]).unwrap();
        let r = scores_from_confusion(&cm).unwrap();
        assert_eq!(r.absent_classes, vec![2]);
        assert!((r.average_accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn table_has_one_row_per_class() {
        let cm = ConfusionMatrix::from_counts(&[vec![1, 1], vec![0, 2]]).unwrap();
        let r = scores_from_confusion(&cm).unwrap();
        let names = vec!["happy".to_string(), "sad".to_string()];
        let t = r.to_table(&names);
        assert!(t.contains("happy") && t.contains("sad"));
        assert!(t.contains("75.00"));
        let csv = r.to_csv(&names);
        assert_eq!(csv.lines().filter(|l| l.contains(",support,")).count(), 2);
    }
}
