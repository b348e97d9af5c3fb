//! Labeled feature datasets: CSV schema, seeded splitting and a synthetic
//! mudra generator built on the canonical hand templates in
//! `data/mudra_templates.json`.
//!
//! CSV layout (UTF-8, LF):
//!
//! ```text
//! hand,Pataaka,Mudrakhya,Prana,Pallava,Tripataka
//! Prana,synth:Prana:0:R,171.2,...
//! ```
//!
//! The header names the kind and the ordered class list; each row carries the
//! label name, a provenance id and one angle per joint of the kind's topology.

use std::collections::BTreeMap;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{extract_features, FeatureVector};
use crate::skeleton::{Handedness, Kind, Landmark, LandmarkFrame};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}: expected {expected} columns, found {found}")]
    Schema {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("class `{0}` has too few samples")]
    TooFewSamples(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: usize,
    pub label_name: String,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: Kind,
    pub class_names: Vec<String>,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(kind: Kind, class_names: Vec<String>) -> Self {
        Dataset {
            kind,
            class_names,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_length(&self) -> usize {
        self.kind.feature_length()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Appends a sample, resolving its label name against the class list.
    pub fn push(
        &mut self,
        label_name: &str,
        source_id: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), DatasetError> {
        let label = self.class_index(label_name).ok_or_else(|| {
            DatasetError::InvalidArgument(format!("unknown class `{label_name}`"))
        })?;
        if values.len() != self.feature_length() {
            return Err(DatasetError::InvalidArgument(format!(
                "expected {} features, got {}",
                self.feature_length(),
                values.len()
            )));
        }
        self.samples.push(LabeledSample {
            features: FeatureVector::new(self.kind, values),
            label,
            label_name: label_name.to_string(),
            source_id: source_id.into(),
        });
        Ok(())
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.features.values.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// New dataset sharing kind and classes, holding `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            kind: self.kind,
            class_names: self.class_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Samples of a single class, keeping the full class list.
    pub fn restrict_to_class(&self, name: &str) -> Option<Dataset> {
        let label = self.class_index(name)?;
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.samples[i].label == label).collect();
        Some(self.subset(&idx))
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> DatasetError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => DatasetError::Parse {
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_dataset(file, path)
}

pub fn read_dataset(reader: impl io::Read, path: &Path) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => {
            return Err(DatasetError::Parse {
                line: 1,
                column: 1,
                message: "missing header".into(),
            })
        }
    };
    let kind: Kind = header
        .get(0)
        .unwrap_or("")
        .parse()
        .map_err(|message| DatasetError::Parse {
            line: 1,
            column: 1,
            message,
        })?;
    let class_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if let Some(pos) = class_names.iter().position(|c| c.is_empty()) {
        return Err(DatasetError::Parse {
            line: 1,
            column: pos + 2,
            message: "empty class name".into(),
        });
    }
    let mut dataset = Dataset::new(kind, class_names);
    let n_features = kind.feature_length();

    for record in records {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != n_features + 2 {
            return Err(DatasetError::Schema {
                line,
                expected: n_features + 2,
                found: record.len(),
            });
        }
        let label_name = &record[0];
        let label = dataset.class_index(label_name).ok_or_else(|| DatasetError::Parse {
            line,
            column: 1,
            message: format!("label `{label_name}` is not in the header class list"),
        })?;
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(i, field)| {
                field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DatasetError::Parse {
                        line,
                        column: i + 3,
                        message: format!("invalid number `{field}`"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        dataset.samples.push(LabeledSample {
            features: FeatureVector::new(kind, values),
            label,
            label_name: label_name.to_string(),
            source_id: record[1].to_string(),
        });
    }
    Ok(dataset)
}

/// Writes the dataset CSV. Values use the shortest decimal form that parses
/// back to the same `f64`, so a save/load cycle is lossless.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    write_dataset(dataset, file).map_err(|e| csv_err(path, e))
}

pub fn write_dataset(dataset: &Dataset, writer: impl io::Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = vec![dataset.kind.as_str().to_string()];
    header.extend(dataset.class_names.iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(dataset.feature_length() + 2);
    for s in &dataset.samples {
        row.clear();
        row.push(s.label_name.clone());
        row.push(s.source_id.clone());
        row.extend(s.features.values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 42,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..SplitSpec::default()
        }
    }
}

fn indices_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class
}

/// Seeded train/test partition. Both halves keep the original sample order.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; dataset.len()];

    if spec.stratified {
        let by_class = indices_by_class(&dataset.labels(), dataset.n_classes());
        for (c, mut idx) in by_class.into_iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            if idx.len() < 2 {
                return Err(DatasetError::TooFewSamples(dataset.class_names[c].clone()));
            }
            let n_train = (idx.len() as f64 * spec.train_fraction).round() as usize;
            let n_train = n_train.clamp(1, idx.len() - 1);
            idx.shuffle(&mut rng);
            for &i in &idx[..n_train] {
                in_train[i] = true;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..dataset.len()).collect();
        idx.shuffle(&mut rng);
        let n_train = (dataset.len() as f64 * spec.train_fraction).round() as usize;
        for &i in &idx[..n_train.min(idx.len())] {
            in_train[i] = true;
        }
    }

    let (train, test): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| in_train[i]);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Assigns each sample a fold in `0..k` so that every class is spread as
/// evenly as possible across folds.
pub fn stratified_folds(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::InvalidArgument("need at least 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; dataset.len()];
    let mut offset = 0;
    for (c, mut idx) in indices_by_class(&dataset.labels(), dataset.n_classes())
        .into_iter()
        .enumerate()
    {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            return Err(DatasetError::TooFewSamples(dataset.class_names[c].clone()));
        }
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[i] = (j + offset) % k;
        }
        // rotate the start so small classes do not all pile into fold 0
        offset += 1;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Deserialize)]
pub struct MudraTemplate {
    pub name: String,
    pub description: String,
    pub landmarks: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
struct TemplateFile {
    templates: Vec<MudraTemplate>,
}

/// The five canonical mudra templates shipped in `data/mudra_templates.json`.
pub fn mudra_templates() -> &'static [MudraTemplate] {
    static TEMPLATES: OnceLock<Vec<MudraTemplate>> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        let file: TemplateFile =
            serde_json::from_str(include_str!("../data/mudra_templates.json"))
                .expect("bundled mudra templates are valid JSON");
        file.templates
    })
}

pub fn mudra_names() -> Vec<String> {
    mudra_templates().iter().map(|t| t.name.clone()).collect()
}

/// Finger chains expressed as a wrist-relative base direction plus relative
/// turns between consecutive bones; jitter is applied in this angle space.
#[derive(Debug, Clone, PartialEq)]
pub struct HandKinematics {
    pub wrist: (f64, f64),
    /// Per finger: base direction (degrees, y up) then three relative turns.
    pub angles: [[f64; 4]; 5],
    pub lengths: [[f64; 4]; 5],
}

impl HandKinematics {
    pub fn from_landmarks(points: &[[f64; 2]]) -> Self {
        let wrist = (points[0][0], points[0][1]);
        let mut angles = [[0.0; 4]; 5];
        let mut lengths = [[0.0; 4]; 5];
        for f in 0..5 {
            let chain = [0, 1 + 4 * f, 2 + 4 * f, 3 + 4 * f, 4 + 4 * f];
            let mut prev_dir = 0.0;
            for s in 0..4 {
                let (p, q) = (points[chain[s]], points[chain[s + 1]]);
                let (dx, dy) = (q[0] - p[0], p[1] - q[1]); // y up
                let dir = dy.atan2(dx).to_degrees();
                lengths[f][s] = dx.hypot(dy);
                angles[f][s] = if s == 0 { dir } else { wrap_deg(dir - prev_dir) };
                prev_dir = dir;
            }
        }
        HandKinematics {
            wrist,
            angles,
            lengths,
        }
    }

    pub fn landmarks(&self, angles: &[[f64; 4]; 5]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(21);
        out.push(self.wrist);
        for f in 0..5 {
            let (mut x, mut y) = self.wrist;
            let mut dir = 0.0;
            for s in 0..4 {
                dir = if s == 0 { angles[f][0] } else { dir + angles[f][s] };
                let r = dir.to_radians();
                x += self.lengths[f][s] * r.cos();
                y -= self.lengths[f][s] * r.sin();
                out.push((x, y));
            }
        }
        out
    }
}

impl HandKinematics {
    /// Fully confident frame for the given chain angles.
    pub fn frame(&self, angles: &[[f64; 4]; 5]) -> LandmarkFrame {
        let landmarks = self
            .landmarks(angles)
            .into_iter()
            .map(|(x, y)| Landmark::at(x, y))
            .collect();
        LandmarkFrame {
            kind: Kind::Hand,
            handedness: Handedness::Right,
            landmarks,
            timestamp_ms: 0,
        }
    }
}

fn wrap_deg(mut d: f64) -> f64 {
    while d > 180.0 {
        d -= 360.0;
    }
    while d <= -180.0 {
        d += 360.0;
    }
    d
}

/// One synthetic hand frame: the template's joint angles jittered by
/// `noise_deg` (Gaussian σ, degrees), optionally mirrored into a left hand.
pub fn synth_hand_frame(
    template: &MudraTemplate,
    noise_deg: f64,
    mirrored: bool,
    rng: &mut impl rand::Rng,
) -> LandmarkFrame {
    let kin = HandKinematics::from_landmarks(&template.landmarks);
    let normal = Normal::new(0.0, noise_deg.max(0.0)).expect("finite σ");
    let mut angles = kin.angles;
    for finger in angles.iter_mut() {
        for a in finger.iter_mut() {
            *a += normal.sample(rng);
        }
    }
    let landmarks = kin
        .landmarks(&angles)
        .into_iter()
        .map(|(x, y)| Landmark::at(if mirrored { 1.0 - x } else { x }, y))
        .collect();
    LandmarkFrame {
        kind: Kind::Hand,
        handedness: if mirrored {
            Handedness::Left
        } else {
            Handedness::Right
        },
        landmarks,
        timestamp_ms: 0,
    }
}

/// Synthetic stand-in for a mudra image dataset: `per_class` samples of each
/// canonical template, the second half of every class mirrored into left
/// hands.
pub fn synth_mudra_dataset(
    per_class: usize,
    noise_deg: f64,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    if per_class < 2 {
        return Err(DatasetError::InvalidArgument("per_class must be at least 2".into()));
    }
    if !(noise_deg >= 0.0 && noise_deg.is_finite()) {
        return Err(DatasetError::InvalidArgument("noise must be finite and non-negative".into()));
    }
    let topology = Kind::Hand.topology();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dataset = Dataset::new(Kind::Hand, mudra_names());
    for template in mudra_templates() {
        for i in 0..per_class {
            let mirrored = i >= per_class / 2;
            let frame = synth_hand_frame(template, noise_deg, mirrored, &mut rng);
            let fv = extract_features(&frame, topology, 0.0).map_err(|e| {
                DatasetError::InvalidArgument(format!("synthetic frame rejected: {e}"))
            })?;
            let hand = if mirrored { 'L' } else { 'R' };
            dataset.push(&template.name, format!("synth:{}:{i}:{hand}", template.name), fv.values)?;
        }
    }
    Ok(dataset)
}

/// A recorded practice session: `frames` consecutive hand frames of one
/// mudra at `fps`, timestamps starting at 0.
pub fn synth_recording(
    mudra: &str,
    frames: usize,
    fps: f64,
    noise_deg: f64,
    seed: u64,
) -> Result<Vec<LandmarkFrame>, DatasetError> {
    let template = mudra_templates()
        .iter()
        .find(|t| t.name.eq_ignore_ascii_case(mudra))
        .ok_or_else(|| DatasetError::InvalidArgument(format!("unknown mudra `{mudra}`")))?;
    if fps.is_nan() || fps <= 0.0 {
        return Err(DatasetError::InvalidArgument("fps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..frames)
        .map(|i| {
            let mut f = synth_hand_frame(template, noise_deg, false, &mut rng);
            f.timestamp_ms = (i as f64 * 1000.0 / fps).round() as i64;
            f
        })
        .collect())
}

/// Writes frames as JSON lines, one [`LandmarkFrame`] per line.
pub fn save_recording(frames: &[LandmarkFrame], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::new();
    for f in frames {
        out.push_str(&serde_json::to_string(f).expect("frames always serialize"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err)
}

/// Reads a JSON-lines recording written by [`save_recording`] (blank lines
/// are ignored).
pub fn load_recording(path: impl AsRef<Path>) -> Result<Vec<LandmarkFrame>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::Parse {
                line: i as u64 + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Per-class sample counts keyed by class name.
pub fn class_summary(dataset: &Dataset) -> BTreeMap<String, usize> {
    dataset
        .class_names
        .iter()
        .cloned()
        .zip(dataset.class_counts())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<Dataset, DatasetError> {
        read_dataset(Cursor::new(text.as_bytes()), Path::new("mem.csv"))
    }

    fn hand_row(label: &str, id: usize) -> String {
        let vals: Vec<String> = (0..19).map(|j| format!("{}.5", 100 + j + id)).collect();
        format!("{label},row{id},{}\n", vals.join(","))
    }

    #[test]
    fn loads_well_formed_csv() {
        let mut text = "hand,A,B\n".to_string();
        for i in 0..10 {
            text += &hand_row(if i % 2 == 0 { "A" } else { "B" }, i);
        }
        let d = parse(&text).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d.kind, Kind::Hand);
        assert_eq!(d.samples[3].label, 1);
        assert_eq!(d.samples[3].source_id, "row3");
        assert_eq!(d.samples[0].features.values[0], 100.5);
    }

    #[test]
    fn wrong_column_count_is_schema_error() {
        let vals: Vec<String> = (0..18).map(|j| j.to_string()).collect();
        let text = format!("hand,A\nA,r0,{}\n", vals.join(","));
        match parse(&text) {
            Err(DatasetError::Schema { line, expected, found }) => {
                assert_eq!((line, expected, found), (2, 21, 20));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_parse_error() {
        let text = format!("hand,A\n{}", hand_row("Z", 0));
        assert!(matches!(parse(&text), Err(DatasetError::Parse { line: 2, column: 1, .. })));
    }

    #[test]
    fn bad_number_reports_column() {
        let mut row = hand_row("A", 0);
        row = row.replacen("100.5", "abc", 1);
        let text = format!("hand,A\n{row}");
        assert!(matches!(parse(&text), Err(DatasetError::Parse { line: 2, column: 3, .. })));
    }

    #[test]
    fn empty_dataset_writes_header_only() {
        let d = Dataset::new(Kind::Body, vec!["Tree".into(), "Warrior".into()]);
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "body,Tree,Warrior\n");
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), d);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let d = Dataset::new(Kind::Hand, vec!["A".into()]);
        let err = save_dataset(&d, "/nonexistent-dir/x/y.csv").unwrap_err();
        assert!(matches!(err, DatasetError::Io { .. }));
    }

    #[test]
    fn synth_counts_and_names() {
        let d = synth_mudra_dataset(500, 6.0, 7).unwrap();
        assert_eq!(d.len(), 2500);
        assert_eq!(d.class_names, ["Pataaka", "Mudrakhya", "Prana", "Pallava", "Tripataka"]);
        assert_eq!(d.class_counts(), vec![500; 5]);
        assert!(synth_mudra_dataset(1, 6.0, 7).is_err());
    }

    #[test]
    fn synth_without_noise_is_constant_per_class() {
        let d = synth_mudra_dataset(6, 0.0, 1).unwrap();
        for c in 0..5 {
            let rows: Vec<_> = d.samples.iter().filter(|s| s.label == c).collect();
            let first = &rows[0].features.values;
            for r in &rows {
                // right and left hands differ only by reflection
                for (a, b) in first.iter().zip(&r.features.values) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn mirrored_frame_matches_unmirrored_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = &mudra_templates()[2];
        let right = synth_hand_frame(t, 0.0, false, &mut rng);
        let left = synth_hand_frame(t, 0.0, true, &mut rng);
        let topo = Kind::Hand.topology();
        let fr = extract_features(&right, topo, 0.0).unwrap();
        let fl = extract_features(&left, topo, 0.0).unwrap();
        for (a, b) in fr.values.iter().zip(&fl.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(left.handedness, Handedness::Left);
    }

    #[test]
    fn template_reconstruction_is_exact_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in mudra_templates() {
            let f = synth_hand_frame(t, 0.0, false, &mut rng);
            for (lm, p) in f.landmarks.iter().zip(&t.landmarks) {
                assert!((lm.x - p[0]).abs() < 1e-12 && (lm.y - p[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recording_timestamps() {
        let rec = synth_recording("prana", 4, 10.0, 3.0, 1).unwrap();
        let ts: Vec<i64> = rec.iter().map(|f| f.timestamp_ms).collect();
        assert_eq!(ts, vec![0, 100, 200, 300]);
        assert!(synth_recording("nope", 4, 10.0, 3.0, 1).is_err());
    }

    #[test]
    fn split_counts() {
        let d = synth_mudra_dataset(500, 6.0, 42).unwrap();
        let (train, test) = split(&d, &SplitSpec::with_seed(42)).unwrap();
        assert_eq!((train.len(), test.len()), (2000, 500));
        assert_eq!(train.class_counts(), vec![400; 5]);
        assert_eq!(test.class_counts(), vec![100; 5]);
        let again = split(&d, &SplitSpec::with_seed(42)).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, test);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let mut d = Dataset::new(Kind::Body, vec!["a".into(), "b".into()]);
        for i in 0..4 {
            d.push("a", format!("{i}"), vec![1.0; 8]).unwrap();
        }
        d.push("b", "solo", vec![2.0; 8]).unwrap();
        assert!(matches!(split(&d, &SplitSpec::default()), Err(DatasetError::TooFewSamples(c)) if c == "b"));
        assert!(split(&d, &SplitSpec { train_fraction: 1.0, ..SplitSpec::default() }).is_err());
    }

    #[test]
    fn folds_are_stratified() {
        let d = synth_mudra_dataset(10, 6.0, 42).unwrap();
        let folds = stratified_folds(&d, 5, 9).unwrap();
        for c in 0..5 {
            let mut per_fold = [0; 5];
            for (s, f) in d.samples.iter().zip(&folds) {
                if s.label == c {
                    per_fold[*f] += 1;
                }
            }
            assert_eq!(per_fold, [2; 5]);
        }
    }
}
