//! Run configuration: one TOML file drives every verb.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hatescan::corpus::DatasetSchema;
use hatescan::embed::CbowConfig;
use hatescan::explain::LimeConfig;
use hatescan::{Error, Label, LabelMapping, ModelConfig, Result, SplitRatios};
use serde::{Deserialize, Serialize};

pub const OUTPUT_ROOT_ENV: &str = "HATESCAN_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Run name; the run directory defaults to `$HATESCAN_OUTPUT_ROOT/<name>`.
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitSettings,
    #[serde(default)]
    pub embeddings: EmbeddingSettings,
    #[serde(default)]
    pub cbow: CbowConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub lime: LimeConfig,
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
}

fn default_name() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub text_column: String,
    pub label_column: String,
    /// Built-in mapping: `davidson` or `waseem`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<String>,
    /// Key/value file mapping raw labels to `hate` / `nonhate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, Label>>,
}

impl DatasetSpec {
    pub fn schema(&self) -> DatasetSchema {
        DatasetSchema::new(&self.name, &self.text_column, &self.label_column)
    }

    pub fn label_mapping(&self) -> Result<LabelMapping> {
        match (&self.mapping, &self.mapping_file, &self.labels) {
            (Some(preset), None, None) => LabelMapping::preset(preset).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "dataset {}: unknown mapping preset {preset:?} (davidson, waseem)",
                    self.name
                ))
            }),
            (None, Some(path), None) => LabelMapping::load(path),
            (None, None, Some(pairs)) => LabelMapping::from_pairs(pairs.iter().map(|(k, v)| (k, *v))),
            _ => Err(Error::InvalidConfig(format!(
                "dataset {}: give exactly one of mapping, mapping_file, labels",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    /// Keep every example.
    #[default]
    Concat,
    /// Subsample both classes to the minority count.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSettings {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub stratified: bool,
    pub seed: u64,
    pub combine: Combine,
    pub combine_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class_cap: Option<usize>,
}

impl Default for SplitSettings {
    fn default() -> Self {
        let r = SplitRatios::default();
        Self {
            train: r.train,
            validation: r.validation,
            test: r.test,
            stratified: true,
            seed: 1,
            combine: Combine::Concat,
            combine_seed: 1,
            per_class_cap: None,
        }
    }
}

impl SplitSettings {
    pub fn ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.train,
            validation: self.validation,
            test: self.test,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSettings {
    /// Extra plain-text files (one sentence per line) added to the training split.
    pub extra_corpus: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            output_dir: None,
            split: SplitSettings::default(),
            embeddings: EmbeddingSettings::default(),
            cbow: CbowConfig::default(),
            model: ModelConfig::default(),
            lime: LimeConfig::default(),
            datasets: Vec::new(),
        }
    }
}

/// A parsed configuration together with the `--set` overrides applied to it.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub overrides: Vec<String>,
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(Self {
            config,
            overrides: overrides.to_vec(),
        })
    }

    /// The effective configuration as written into the run directory.
    pub fn to_toml(&self) -> Result<String> {
        let body = toml::to_string_pretty(&self.config)
            .map_err(|e| Error::InvalidConfig(format!("cannot serialize config: {e}")))?;
        let mut out = String::new();
        for o in &self.overrides {
            out.push_str(&format!("# override: {o}\n"));
        }
        out.push_str(&body);
        Ok(out)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidConfig(format!("invalid run name {:?}", self.name)));
        }
        self.split.ratios().validate()?;
        self.cbow.validate()?;
        self.model.validate()?;
        self.lime.validate()?;
        let mut names = std::collections::BTreeSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate dataset name {:?}", d.name)));
            }
        }
        Ok(())
    }

    /// Run directory: explicit flag, then `output_dir`, then the output root
    /// (`$HATESCAN_OUTPUT_ROOT` or `runs`) joined with the run name.
    pub fn run_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output_dir {
            return p.clone();
        }
        output_root().join(&self.name)
    }
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Applies `dotted.key=value`. The value is read as a TOML literal when it
/// parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidConfig(format!("invalid override key {key:?}")));
    }
    let mut slot: &mut toml::Value = table
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for part in &parts[1..] {
        slot = match slot {
            toml::Value::Table(t) => t
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| {
                    Error::InvalidConfig(format!("override {key:?}: {part:?} is not an index"))
                })?;
                let len = items.len();
                items.get_mut(idx).ok_or_else(|| {
                    Error::InvalidConfig(format!("override {key:?}: index {idx} out of {len}"))
                })?
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "override {key:?}: {part:?} is inside a scalar"
                )))
            }
        };
    }
    *slot = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"

[split]
seed = 7
combine = "balanced"

[model]
hidden = 16
embedding_dim = 8

[cbow]
dim = 8

[[dataset]]
name = "davidson"
path = "data/labeled_data.csv"
text_column = "tweet"
label_column = "class"
mapping = "davidson"
"#;

    #[test]
    fn parses_and_round_trips() {
        let loaded = LoadedConfig::parse(SAMPLE, &[]).unwrap();
        assert_eq!(loaded.config.name, "demo");
        assert_eq!(loaded.config.split.combine, Combine::Balanced);
        assert_eq!(loaded.config.model.hidden, 16);
        let text = loaded.to_toml().unwrap();
        let again = LoadedConfig::parse(&text, &[]).unwrap();
        assert_eq!(again.config, loaded.config);
        assert_eq!(again.to_toml().unwrap(), text);
    }

    #[test]
    fn overrides_take_precedence_and_are_recorded() {
        let sets = vec![
            "model.hidden=32".to_string(),
            "model.dense1_activation=relu".to_string(),
            "dataset.0.path=/tmp/other.csv".to_string(),
            "lime.seed = 9".to_string(),
        ];
        let loaded = LoadedConfig::parse(SAMPLE, &sets).unwrap();
        assert_eq!(loaded.config.model.hidden, 32);
        assert_eq!(loaded.config.model.dense1_activation, hatescan::Activation::Relu);
        assert_eq!(loaded.config.datasets[0].path, PathBuf::from("/tmp/other.csv"));
        assert_eq!(loaded.config.lime.seed, 9);
        let text = loaded.to_toml().unwrap();
        assert!(text.starts_with("# override: model.hidden=32\n"));
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(LoadedConfig::parse("unknown_key = 1", &[]).is_err());
        assert!(LoadedConfig::parse("[model]\nhiden = 3", &[]).is_err());
        assert!(LoadedConfig::parse("", &["model.hidden".into()]).is_err());
        assert!(LoadedConfig::parse("", &["dataset.3.path=x".into()]).is_err());
        assert!(LoadedConfig::parse("[split]\ntrain = 0.9", &[]).is_err());
        assert!(LoadedConfig::parse("[model.pipeline]\nstopwords = [\"not\"]", &[]).is_err());
    }

    #[test]
    fn mapping_sources_are_exclusive() {
        let mut spec = LoadedConfig::parse(SAMPLE, &[]).unwrap().config.datasets[0].clone();
        assert!(spec.label_mapping().is_ok());
        spec.labels = Some(BTreeMap::from([("x".to_string(), Label::Hate)]));
        assert!(spec.label_mapping().is_err());
        spec.mapping = None;
        assert_eq!(spec.label_mapping().unwrap().get("x"), Some(Label::Hate));
    }

    #[test]
    fn shipped_config_parses() {
        let text = include_str!("../../../configs/combined.toml");
        let loaded = LoadedConfig::parse(text, &[]).unwrap();
        assert_eq!(loaded.config.datasets.len(), 3);
        for d in &loaded.config.datasets {
            d.label_mapping().unwrap();
        }
    }

    #[test]
    fn run_dir_precedence() {
        let mut c = RunConfig::default();
        assert!(c.run_dir(None).ends_with("run"));
        c.output_dir = Some(PathBuf::from("/x/y"));
        assert_eq!(c.run_dir(None), PathBuf::from("/x/y"));
        assert_eq!(c.run_dir(Some(Path::new("/z"))), PathBuf::from("/z"));
    }
}
