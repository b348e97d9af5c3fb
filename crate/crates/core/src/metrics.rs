//! Confusion matrices, per-class precision/recall/F1 and their text, CSV and
//! heatmap renderings.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{ModelError, TrainedModel};
use crate::dataset::Dataset;

/// Rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Error)]
pub enum MatrixCsvError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let n = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_labels(class_names: Vec<String>, y_true: &[usize], y_pred: &[usize]) -> Self {
        assert_eq!(y_true.len(), y_pred.len(), "label lists differ in length");
        let mut m = ConfusionMatrix::new(class_names);
        for (&t, &p) in y_true.iter().zip(y_pred) {
            m.record(t, p);
        }
        m
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn column_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    /// Adds the counts of a matrix over the same classes (e.g. another shard).
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), ModelError> {
        if self.class_names != other.class_names {
            return Err(ModelError::LabelSpaceMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn report(&self) -> ClassReport {
        let classes = (0..self.n_classes())
            .map(|c| {
                let tp = self.counts[c][c];
                let precision = ratio(tp, self.column_sum(c));
                let recall = ratio(tp, self.row_sum(c));
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    name: self.class_names[c].clone(),
                    precision,
                    recall,
                    f1,
                    support: self.row_sum(c),
                }
            })
            .collect();
        ClassReport {
            classes,
            accuracy: self.accuracy(),
            total: self.total(),
        }
    }

    /// Header row and column carry the class names; the corner cell is `true\pred`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![r"true\pred".to_string()];
        header.extend(self.class_names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, MatrixCsvError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut records = r.records();
        let bad = |line: usize, message: String| MatrixCsvError::Parse { line, message };
        let header = match records.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(bad(1, e.to_string())),
            None => return Err(bad(1, "missing header".into())),
        };
        let class_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut m = ConfusionMatrix::new(class_names);
        let mut seen = 0;
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| bad(line, e.to_string()))?;
            if seen >= m.n_classes() || rec.len() != m.n_classes() + 1 {
                return Err(bad(line, "unexpected row shape".into()));
            }
            if rec[0] != m.class_names[seen] {
                return Err(bad(line, format!("row label `{}` does not match header", &rec[0])));
            }
            for (j, cell) in rec.iter().skip(1).enumerate() {
                m.counts[seen][j] = cell
                    .trim()
                    .parse()
                    .map_err(|_| bad(line, format!("`{cell}` is not a count")))?;
            }
            seen += 1;
        }
        if seen != m.n_classes() {
            return Err(bad(seen + 2, "missing rows".into()));
        }
        Ok(m)
    }

    /// Binary greyscale PGM, one `cell_px`-square block per cell. Darkness is
    /// the count's share of its true-class row.
    pub fn write_pgm(&self, cell_px: usize, mut out: impl io::Write) -> io::Result<()> {
        let n = self.n_classes();
        let side = (n * cell_px).max(1);
        write!(out, "P5\n{side} {side}\n255\n")?;
        let mut pixels = vec![255u8; side * side];
        for r in 0..n {
            let total = self.row_sum(r);
            for c in 0..n {
                let share = ratio(self.counts[r][c], total);
                let shade = (255.0 * (1.0 - share)).round() as u8;
                for py in r * cell_px..(r + 1) * cell_px {
                    pixels[py * side + c * cell_px..py * side + (c + 1) * cell_px].fill(shade);
                }
            }
        }
        out.write_all(&pixels)
    }
}

/// Scores `model` on every sample of `test_set`.
pub fn evaluate(model: &TrainedModel, test_set: &Dataset) -> Result<(ConfusionMatrix, ClassReport), ModelError> {
    if model.class_names != test_set.class_names {
        return Err(ModelError::LabelSpaceMismatch);
    }
    let mut m = ConfusionMatrix::new(model.class_names.clone());
    for s in &test_set.samples {
        let p = model.predict(&s.features)?;
        m.record(s.label, p.label);
    }
    let report = m.report();
    Ok((m, report))
}

pub fn report_csv(report: &ClassReport) -> String {
    let mut out = String::from("class,precision,recall,f1,support\n");
    for c in &report.classes {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record([
            c.name.clone(),
            c.precision.to_string(),
            c.recall.to_string(),
            c.f1.to_string(),
            c.support.to_string(),
        ])
        .expect("in-memory write");
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("utf-8"));
    }
    out
}

pub fn report_text(report: &ClassReport) -> String {
    let width = report
        .classes
        .iter()
        .map(|c| c.name.chars().count())
        .chain(["accuracy".len()])
        .max()
        .unwrap_or(8);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}", "class", "precision", "recall", "f1-score", "support");
    if report.classes.is_empty() {
        return out;
    }
    for c in &report.classes {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.3}  {:>9.3}  {:>9.3}  {:>7}",
            c.name, c.precision, c.recall, c.f1, c.support
        );
    }
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.3}  {:>7}", "accuracy", "", "", report.accuracy, report.total);
    out
}

pub fn matrix_text(matrix: &ConfusionMatrix) -> String {
    let width = matrix
        .class_names
        .iter()
        .map(|c| c.chars().count())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut out = format!("{:<width$}", "");
    for name in &matrix.class_names {
        let _ = write!(out, "  {name:>width$}");
    }
    out.push('\n');
    for (name, row) in matrix.class_names.iter().zip(&matrix.counts) {
        let _ = write!(out, "{name:<width$}");
        for v in row {
            let _ = write!(out, "  {v:>width$}");
        }
        out.push('\n');
    }
    out
}

/// Report followed by the confusion matrix, separated by a blank line. With
/// no classes only the report header is produced.
pub fn render_report(report: &ClassReport, matrix: &ConfusionMatrix, format: Format) -> String {
    let (head, body) = match format {
        Format::Text => (report_text(report), matrix_text(matrix)),
        Format::Csv => (report_csv(report), matrix.to_csv()),
    };
    if report.classes.is_empty() {
        return head;
    }
    format!("{head}\n{body}")
}
