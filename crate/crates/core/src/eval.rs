//! Binary classification metrics with `Hate` as the positive class.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// True-class support.
    pub fn support(&self, class: Label) -> u64 {
        match class {
            Label::Hate => self.tp + self.fn_,
            Label::NonHate => self.tn + self.fp,
        }
    }
}

pub fn confusion(pred: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p, t) {
            (Label::Hate, Label::Hate) => cm.tp += 1,
            (Label::Hate, Label::NonHate) => cm.fp += 1,
            (Label::NonHate, Label::Hate) => cm.fn_ += 1,
            (Label::NonHate, Label::NonHate) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    PerClass(Label),
    /// Per-class values averaged with true-class supports as weights.
    Weighted,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_prf(cm: &ConfusionMatrix, class: Label) -> Prf {
    let (tp, fp, fn_) = match class {
        Label::Hate => (cm.tp, cm.fp, cm.fn_),
        Label::NonHate => (cm.tn, cm.fn_, cm.fp),
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

/// Precision, recall and F1. Zero denominators give 0.
pub fn prf(cm: &ConfusionMatrix, averaging: Averaging) -> Result<Prf> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("confusion matrix is empty".into()));
    }
    Ok(match averaging {
        Averaging::PerClass(class) => class_prf(cm, class),
        Averaging::Weighted => {
            let h = class_prf(cm, Label::Hate);
            let n = class_prf(cm, Label::NonHate);
            let wh = cm.support(Label::Hate) as f64 / total as f64;
            let wn = cm.support(Label::NonHate) as f64 / total as f64;
            Prf {
                precision: wh * h.precision + wn * n.precision,
                recall: wh * h.recall + wn * n.recall,
                f1: wh * h.f1 + wn * n.f1,
            }
        }
    })
}

/// Area under the ROC curve as the probability that a random `Hate` example
/// outscores a random `NonHate` one, ties counting one half.
pub fn roc_auc(scores: &[f64], truth: &[Label]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Range(format!("score {s} is not a number")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Walk tie groups in ascending score order; `twice` counts concordant
    // pairs twice plus tied pairs once, so it stays an exact integer.
    let mut neg_below = 0u64;
    let mut twice = 0u128;
    let (mut n_pos, mut n_neg) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            match truth[order[j]] {
                Label::Hate => pos += 1,
                Label::NonHate => neg += 1,
            }
            j += 1;
        }
        twice += 2 * pos as u128 * neg_below as u128 + pos as u128 * neg as u128;
        neg_below += neg;
        n_pos += pos;
        n_neg += neg;
        i = j;
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MissingClass(if n_pos == 0 { "hate" } else { "nonhate" }));
    }
    Ok(twice as f64 / (2 * n_pos as u128 * n_neg as u128) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub examples: u64,
    pub threshold: f64,
    pub hate: ClassMetrics,
    pub non_hate: ClassMetrics,
    pub weighted: Prf,
    pub accuracy: f64,
    /// Absent when the evaluated set has a single class.
    pub auc: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_scores(scores: &[f64], truth: &[Label], threshold: f64) -> Result<Self> {
        let pred: Vec<Label> = scores
            .iter()
            .map(|&s| decide(s, threshold))
            .collect();
        let cm = confusion(&pred, truth)?;
        let auc = match roc_auc(scores, truth) {
            Ok(a) => Some(a),
            Err(Error::MissingClass(c)) => {
                log::warn!("AUC omitted: no {c} examples in the evaluated set");
                None
            }
            Err(e) => return Err(e),
        };
        let class = |label| -> Result<ClassMetrics> {
            let p = prf(&cm, Averaging::PerClass(label))?;
            Ok(ClassMetrics {
                precision: p.precision,
                recall: p.recall,
                f1: p.f1,
                support: cm.support(label),
            })
        };
        Ok(Self {
            examples: cm.total(),
            threshold,
            hate: class(Label::Hate)?,
            non_hate: class(Label::NonHate)?,
            weighted: prf(&cm, Averaging::Weighted)?,
            accuracy: ratio(cm.tp + cm.tn, cm.total()),
            auc,
            confusion: cm,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Plain-text rendering: the P / R / F1 columns plus the confusion matrix.
    pub fn render_table(&self, name: &str) -> String {
        let auc = self
            .auc
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".to_string());
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24} {:>7} {:>7} {:>10} {:>13} {:>8} {:>7}",
            "model", "P", "R", "F1(hate)", "F1(non-hate)", "F1", "AUC"
        );
        let _ = writeln!(
            s,
            "{:<24} {:>7.4} {:>7.4} {:>10.4} {:>13.4} {:>8.4} {:>7}",
            name,
            self.weighted.precision,
            self.weighted.recall,
            self.hate.f1,
            self.non_hate.f1,
            self.weighted.f1,
            auc
        );
        let c = &self.confusion;
        let _ = writeln!(s);
        let _ = writeln!(s, "confusion matrix (rows: true, cols: predicted)");
        let _ = writeln!(s, "{:<10} {:>9} {:>9}", "", "hate", "non-hate");
        let _ = writeln!(s, "{:<10} {:>9} {:>9}", "hate", c.tp, c.fn_);
        let _ = writeln!(s, "{:<10} {:>9} {:>9}", "non-hate", c.fp, c.tn);
        let _ = writeln!(
            s,
            "accuracy {:.4}  support hate={} non-hate={}",
            self.accuracy, self.hate.support, self.non_hate.support
        );
        s
    }
}

/// `Hate` iff `probability >= threshold`.
pub fn decide(probability: f64, threshold: f64) -> Label {
    if probability >= threshold {
        Label::Hate
    } else {
        Label::NonHate
    }
}

#[derive(Serialize, Deserialize)]
struct PredictionRow {
    id: String,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    id: String,
    label: String,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes an `id,score` file.
pub fn write_predictions(path: &Path, ids: &[String], scores: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for (id, &score) in ids.iter().zip(scores) {
        w.serialize(PredictionRow {
            id: id.clone(),
            score,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes an `id,label` file.
pub fn write_labels(path: &Path, ids: &[String], labels: &[Label]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for (id, label) in ids.iter().zip(labels) {
        w.serialize(LabelRow {
            id: id.clone(),
            label: label.to_string(),
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .map_err(|e| csv_error(path, e))
}

/// Scores an external `id,score` file against an `id,label` file. Rows are
/// evaluated in the labels file's order.
pub fn score_external(predictions: &Path, labels: &Path, threshold: f64) -> Result<MetricsReport> {
    let preds: Vec<PredictionRow> = read_csv(predictions)?;
    let truth: Vec<LabelRow> = read_csv(labels)?;
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(preds.len());
    for p in &preds {
        if !(0.0..=1.0).contains(&p.score) {
            return Err(Error::Range(format!("score {} for id {} is outside [0, 1]", p.score, p.id)));
        }
        if by_id.insert(p.id.as_str(), p.score).is_some() {
            return Err(Error::Alignment(format!("duplicate prediction id {}", p.id)));
        }
    }
    let label_ids: std::collections::HashSet<&str> = truth.iter().map(|t| t.id.as_str()).collect();
    if let Some(extra) = preds.iter().find(|p| !label_ids.contains(p.id.as_str())) {
        return Err(Error::Alignment(format!("prediction id {} has no label", extra.id)));
    }
    let mut scores = Vec::with_capacity(truth.len());
    let mut labels_vec = Vec::with_capacity(truth.len());
    for t in &truth {
        let s = by_id
            .get(t.id.as_str())
            .ok_or_else(|| Error::Alignment(format!("label id {} has no prediction", t.id)))?;
        scores.push(*s);
        labels_vec.push(t.label.parse::<Label>()?);
    }
    MetricsReport::from_scores(&scores, &labels_vec, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Hate as H, NonHate as N};

    #[test]
    fn hand_counted_confusion() {
        let cm = confusion(&[H, H, N, N], &[H, N, N, N]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, fp: 1, fn_: 0, tn: 2 });
        let perfect = confusion(&[H, N], &[H, N]).unwrap();
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
        let inverted = confusion(&[N, H], &[H, N]).unwrap();
        assert_eq!((inverted.tp, inverted.tn), (0, 0));
        assert!(confusion(&[H], &[H, N]).is_err());
    }

    #[test]
    fn hand_computed_prf() {
        let cm = confusion(&[H, H, N, N], &[H, N, N, N]).unwrap();
        let h = prf(&cm, Averaging::PerClass(H)).unwrap();
        let n = prf(&cm, Averaging::PerClass(N)).unwrap();
        let w = prf(&cm, Averaging::Weighted).unwrap();
        assert!((h.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((n.f1 - 0.8).abs() < 1e-12);
        assert!((w.f1 - (2.0 / 3.0 + 3.0 * 0.8) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators() {
        let cm = confusion(&[N, N, N], &[N, N, N]).unwrap();
        let h = prf(&cm, Averaging::PerClass(H)).unwrap();
        assert_eq!(h, Prf::default());
        let w = prf(&cm, Averaging::Weighted).unwrap();
        assert_eq!(w, prf(&cm, Averaging::PerClass(N)).unwrap());
        assert!(prf(&ConfusionMatrix::default(), Averaging::Weighted).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.4, 0.35], &[H, H, N, N]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 5], &[H, N, H, N, N]).unwrap(), 0.5);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[H, H]), Err(Error::MissingClass(_))));
    }

    #[test]
    fn constant_predictor_report() {
        let truth = [H, N, N, H, N];
        let r = MetricsReport::from_scores(&[0.5; 5], &truth, 0.5).unwrap();
        assert_eq!(r.hate.recall, 1.0);
        assert!((r.hate.precision - 0.4).abs() < 1e-12);
        assert_eq!(r.auc, Some(0.5));
    }

    #[test]
    fn single_class_report_omits_auc() {
        let r = MetricsReport::from_scores(&[0.9, 0.2], &[H, H], 0.5).unwrap();
        assert_eq!(r.auc, None);
        assert!(r.render_table("x").contains("n/a"));
    }

    #[test]
    fn external_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        let l = dir.path().join("labels.csv");
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        write_predictions(&p, &ids, &[0.9, 0.1, 0.6]).unwrap();
        write_labels(&l, &ids, &[H, N, N]).unwrap();
        let r = score_external(&p, &l, 0.5).unwrap();
        assert_eq!(r, MetricsReport::from_scores(&[0.9, 0.1, 0.6], &[H, N, N], 0.5).unwrap());

        fs::write(&p, "id,score\na,0.9\nb,0.1\nz,0.6\n").unwrap();
        assert!(matches!(score_external(&p, &l, 0.5), Err(Error::Alignment(_))));
        fs::write(&p, "id,score\na,1.3\nb,0.1\nc,0.6\n").unwrap();
        assert!(matches!(score_external(&p, &l, 0.5), Err(Error::Range(_))));
    }
}
