//! Dataset ingestion, binary label collapsing, balanced combining and
//! deterministic train/validation/test splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary target. `Hate` is the positive class everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Hate,
    #[serde(alias = "non-hate", alias = "non_hate")]
    NonHate,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hate => "hate",
            Label::NonHate => "nonhate",
        }
    }

    /// 1.0 for `Hate`, 0.0 for `NonHate`.
    pub fn target(self) -> f64 {
        match self {
            Label::Hate => 1.0,
            Label::NonHate => 0.0,
        }
    }

    pub fn inverted(self) -> Label {
        match self {
            Label::Hate => Label::NonHate,
            Label::NonHate => Label::Hate,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hate" | "1" => Ok(Label::Hate),
            "nonhate" | "non-hate" | "non_hate" | "0" => Ok(Label::NonHate),
            other => Err(Error::Schema(format!("not a binary label: {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub raw_label: String,
    /// Set by [`collapse_labels`].
    pub binary_label: Option<Label>,
}

/// Column layout of a source CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    /// Prefix for generated example ids; keeps ids unique after combining.
    pub name: String,
    pub text_column: String,
    pub label_column: String,
}

impl DatasetSchema {
    pub fn new(name: &str, text_column: &str, label_column: &str) -> Self {
        Self {
            name: name.to_string(),
            text_column: text_column.to_string(),
            label_column: label_column.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub examples: Vec<LabeledExample>,
    /// Rows dropped because their text was empty after trimming.
    pub skipped_empty: usize,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::io(path, io);
        }
        unreachable!("is_io_error implies an Io kind");
    }
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
        Error::Schema(format!(
            "{}: no column named {name:?} (header: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        ))
    })
}

/// Reads a headered UTF-8 CSV file. Ids are `<name>-<row>` with 1-based data
/// row numbers, so they depend only on row order.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let text_idx = column_index(&headers, &schema.text_column, path)?;
    let label_idx = column_index(&headers, &schema.label_column, path)?;

    let mut examples = Vec::new();
    let mut skipped_empty = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let text = record.get(text_idx).unwrap_or("");
        if text.trim().is_empty() {
            skipped_empty += 1;
            continue;
        }
        let raw_label = record
            .get(label_idx)
            .ok_or_else(|| Error::Schema(format!("{}: row {} has no label field", path.display(), row + 1)))?;
        examples.push(LabeledExample {
            id: format!("{}-{:06}", schema.name, row + 1),
            text: text.to_string(),
            raw_label: raw_label.trim().to_string(),
            binary_label: None,
        });
    }
    if skipped_empty > 0 {
        log::info!("{}: skipped {skipped_empty} rows with empty text", path.display());
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no usable rows", path.display())));
    }
    Ok(LoadedDataset {
        examples,
        skipped_empty,
    })
}

/// Total function from a dataset's raw labels to the binary target.
/// Keys are matched case-insensitively after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, Label>", into = "BTreeMap<String, Label>")]
pub struct LabelMapping {
    entries: BTreeMap<String, Label>,
}

impl TryFrom<BTreeMap<String, Label>> for LabelMapping {
    type Error = Error;

    fn try_from(raw: BTreeMap<String, Label>) -> Result<Self> {
        Self::from_pairs(raw)
    }
}

impl From<LabelMapping> for BTreeMap<String, Label> {
    fn from(m: LabelMapping) -> Self {
        m.entries
    }
}

impl LabelMapping {
    pub fn from_pairs<K: AsRef<str>>(pairs: impl IntoIterator<Item = (K, Label)>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (key, label) in pairs {
            let key = key.as_ref().trim().to_lowercase();
            match entries.insert(key.clone(), label) {
                Some(prev) if prev != label => {
                    return Err(Error::InvalidConfig(format!(
                        "raw label {key:?} maps to both {prev} and {label}"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { entries })
    }

    /// Davidson et al.: hate speech and offensive language collapse to `Hate`.
    /// The public file stores the class as 0/1/2 in its `class` column.
    pub fn davidson() -> Self {
        Self::from_pairs([
            ("hate speech", Label::Hate),
            ("hate_speech", Label::Hate),
            ("offensive", Label::Hate),
            ("offensive language", Label::Hate),
            ("offensive_language", Label::Hate),
            ("neither", Label::NonHate),
            ("0", Label::Hate),
            ("1", Label::Hate),
            ("2", Label::NonHate),
        ])
        .expect("static mapping is consistent")
    }

    /// Waseem / Waseem-Hovy: racism, sexism (and both) are `Hate`.
    pub fn waseem() -> Self {
        Self::from_pairs([
            ("racism", Label::Hate),
            ("racist", Label::Hate),
            ("sexism", Label::Hate),
            ("sexist", Label::Hate),
            ("both", Label::Hate),
            ("neither", Label::NonHate),
            ("none", Label::NonHate),
        ])
        .expect("static mapping is consistent")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "davidson" => Some(Self::davidson()),
            "waseem" | "waseem-hovy" => Some(Self::waseem()),
            _ => None,
        }
    }

    /// Parses a `raw_label = "hate"` key/value file.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: BTreeMap<String, Label> =
            toml::from_str(s).map_err(|e| Error::InvalidConfig(format!("label mapping: {e}")))?;
        Self::from_pairs(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn get(&self, raw_label: &str) -> Option<Label> {
        self.entries.get(&raw_label.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub hate: usize,
    pub non_hate: usize,
    pub total: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "hate={} nonhate={} total={}", self.hate, self.non_hate, self.total)
    }
}

/// Per-class counts of a collapsed dataset.
pub fn stats(dataset: &[LabeledExample]) -> DatasetStats {
    let hate = dataset
        .iter()
        .filter(|e| e.binary_label == Some(Label::Hate))
        .count();
    let non_hate = dataset
        .iter()
        .filter(|e| e.binary_label == Some(Label::NonHate))
        .count();
    DatasetStats {
        hate,
        non_hate,
        total: dataset.len(),
    }
}

pub fn collapse_labels(
    examples: Vec<LabeledExample>,
    mapping: &LabelMapping,
) -> Result<(Vec<LabeledExample>, DatasetStats)> {
    let mut out = examples;
    for ex in out.iter_mut() {
        let label = mapping
            .get(&ex.raw_label)
            .ok_or_else(|| Error::UnmappedLabel(ex.raw_label.clone()))?;
        ex.binary_label = Some(label);
    }
    let st = stats(&out);
    Ok((out, st))
}

fn require_collapsed(ex: &LabeledExample) -> Result<Label> {
    ex.binary_label
        .ok_or_else(|| Error::Schema(format!("example {} has no binary label; collapse first", ex.id)))
}

/// Merges collapsed datasets and subsamples both classes, without replacement,
/// down to the minority-class count of the union (optionally capped lower).
/// Selected examples keep their order in the union.
pub fn combine_balanced(
    datasets: &[Vec<LabeledExample>],
    seed: u64,
    per_class_cap: Option<usize>,
) -> Result<Vec<LabeledExample>> {
    if datasets.is_empty() {
        return Err(Error::EmptyInput("no datasets to combine".into()));
    }
    let union: Vec<&LabeledExample> = datasets.iter().flatten().collect();
    let mut seen = HashSet::with_capacity(union.len());
    let mut hate = Vec::new();
    let mut non_hate = Vec::new();
    for (i, ex) in union.iter().enumerate() {
        if !seen.insert(ex.id.as_str()) {
            return Err(Error::Schema(format!("duplicate example id {} across datasets", ex.id)));
        }
        match require_collapsed(ex)? {
            Label::Hate => hate.push(i),
            Label::NonHate => non_hate.push(i),
        }
    }
    if hate.is_empty() {
        return Err(Error::MissingClass("hate"));
    }
    if non_hate.is_empty() {
        return Err(Error::MissingClass("nonhate"));
    }
    let mut per_class = hate.len().min(non_hate.len());
    if let Some(cap) = per_class_cap {
        per_class = per_class.min(cap);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(2 * per_class);
    for pool in [&hate, &non_hate] {
        let picks = rand::seq::index::sample(&mut rng, pool.len(), per_class);
        chosen.extend(picks.into_iter().map(|j| pool[j]));
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| union[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidConfig(format!("split ratios must be positive: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Part sizes for a stratum of `n` items: train and validation rounded to
    /// nearest, test takes the remainder.
    pub fn part_sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = ((n as f64) * self.train).round() as usize;
        let train = train.min(n);
        let validation = (((n as f64) * self.validation).round() as usize).min(n - train);
        (train, validation, n - train - validation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub stratified: bool,
}

pub fn split(
    dataset: &[LabeledExample],
    ratios: SplitRatios,
    seed: u64,
    stratified: bool,
) -> Result<SplitBundle> {
    ratios.validate()?;
    if dataset.len() < 3 {
        return Err(Error::EmptyInput(format!(
            "cannot split {} examples into three parts",
            dataset.len()
        )));
    }
    let strata: Vec<Vec<usize>> = if stratified {
        let mut hate = Vec::new();
        let mut non_hate = Vec::new();
        for (i, ex) in dataset.iter().enumerate() {
            match require_collapsed(ex)? {
                Label::Hate => hate.push(i),
                Label::NonHate => non_hate.push(i),
            }
        }
        vec![hate, non_hate]
    } else {
        vec![(0..dataset.len()).collect()]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        let (n_train, n_val, _) = ratios.part_sizes(stratum.len());
        parts[0].extend_from_slice(&stratum[..n_train]);
        parts[1].extend_from_slice(&stratum[n_train..n_train + n_val]);
        parts[2].extend_from_slice(&stratum[n_train + n_val..]);
    }
    let [train, validation, test] = parts.map(|mut idx| {
        idx.sort_unstable();
        idx.into_iter().map(|i| dataset[i].clone()).collect::<Vec<_>>()
    });
    Ok(SplitBundle {
        train,
        validation,
        test,
        ratios,
        seed,
        stratified,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleRow {
    id: String,
    text: String,
    raw_label: String,
    label: Option<Label>,
}

/// Writes examples as `id,text,raw_label,label`.
pub fn write_examples(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for ex in examples {
        w.serialize(ExampleRow {
            id: ex.id.clone(),
            text: ex.text.clone(),
            raw_label: ex.raw_label.clone(),
            label: ex.binary_label,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file produced by [`write_examples`].
pub fn read_examples(path: &Path) -> Result<Vec<LabeledExample>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize::<ExampleRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        out.push(LabeledExample {
            id: row.id,
            text: row.text,
            raw_label: row.raw_label,
            binary_label: row.label,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub stratified: bool,
    pub train: DatasetStats,
    pub validation: DatasetStats,
    pub test: DatasetStats,
}

pub const SPLIT_FILES: [&str; 3] = ["train.csv", "validation.csv", "test.csv"];
pub const SPLIT_SIDECAR: &str = "split.json";

/// Writes `train.csv`, `validation.csv`, `test.csv` and the `split.json` sidecar.
pub fn write_split(dir: &Path, bundle: &SplitBundle) -> Result<SplitManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, part) in SPLIT_FILES
        .iter()
        .zip([&bundle.train, &bundle.validation, &bundle.test])
    {
        write_examples(&dir.join(name), part)?;
    }
    let manifest = SplitManifest {
        seed: bundle.seed,
        ratios: bundle.ratios,
        stratified: bundle.stratified,
        train: stats(&bundle.train),
        validation: stats(&bundle.validation),
        test: stats(&bundle.test),
    };
    let sidecar = dir.join(SPLIT_SIDECAR);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(manifest)
}

pub fn read_split(dir: &Path) -> Result<SplitBundle> {
    let sidecar: PathBuf = dir.join(SPLIT_SIDECAR);
    let raw = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let manifest: SplitManifest = serde_json::from_str(&raw)?;
    let [train, validation, test] = SPLIT_FILES.map(|f| read_examples(&dir.join(f)));
    Ok(SplitBundle {
        train: train?,
        validation: validation?,
        test: test?,
        ratios: manifest.ratios,
        seed: manifest.seed,
        stratified: manifest.stratified,
    })
}
