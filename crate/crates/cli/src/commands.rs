//! Verb implementations. Every verb validates its inputs before touching the
//! run directory; `dry_run` stops right after validation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hatescan::classifier::{self, Classifier};
use hatescan::corpus::{self, DatasetStats, LabeledExample, SplitBundle};
use hatescan::embed::{self, EmbeddingMatrix};
use hatescan::eval::{self, MetricsReport};
use hatescan::explain;
use hatescan::neural::Activation;
use hatescan::textprep::{preprocess, TokenSequence};
use hatescan::{Error, Result};
use serde::Serialize;

use crate::config::{Combine, LoadedConfig};

pub const PREPARED: &str = "prepared";
pub const EMBEDDINGS: &str = "embeddings";
pub const MODELS: &str = "models";
pub const REPORTS: &str = "reports";
pub const EXPLANATIONS: &str = "explanations";

pub const VECTORS_FILE: &str = "vectors.txt";
pub const EMBED_LOG_FILE: &str = "training.log";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.json";
pub const CONFIG_COPY: &str = "config.toml";

/// A loaded config together with the run directory it resolves to.
pub struct Run {
    pub loaded: LoadedConfig,
    pub dir: PathBuf,
    pub dry_run: bool,
}

impl Run {
    pub fn new(loaded: LoadedConfig, output_dir: Option<&Path>, dry_run: bool) -> Self {
        let dir = loaded.config.run_dir(output_dir);
        Self {
            loaded,
            dir,
            dry_run,
        }
    }

    fn sub(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Creates `sub` under the run directory and records the effective config.
    fn prepare_output(&self, sub: &str) -> Result<PathBuf> {
        let path = self.sub(sub);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        let copy = self.dir.join(CONFIG_COPY);
        fs::write(&copy, self.loaded.to_toml()?).map_err(|e| Error::io(&copy, e))?;
        Ok(path)
    }

    fn read_split(&self) -> Result<SplitBundle> {
        corpus::read_split(&self.sub(PREPARED))
    }

    fn split_exists(&self) -> Result<()> {
        require_file(&self.sub(PREPARED).join(corpus::SPLIT_SIDECAR))?;
        for f in corpus::SPLIT_FILES {
            require_file(&self.sub(PREPARED).join(f))?;
        }
        Ok(())
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

#[derive(Debug, Serialize)]
struct SourceStats {
    name: String,
    path: PathBuf,
    rows: usize,
    skipped_empty: usize,
    counts: DatasetStats,
}

#[derive(Debug, Serialize)]
struct PrepareStats {
    sources: Vec<SourceStats>,
    combine: Combine,
    combined: DatasetStats,
    train: DatasetStats,
    validation: DatasetStats,
    test: DatasetStats,
}

pub fn prepare(run: &Run) -> Result<()> {
    let cfg = &run.loaded.config;
    if cfg.datasets.is_empty() {
        return Err(Error::InvalidConfig("no [[dataset]] entries".into()));
    }
    let mut mappings = Vec::with_capacity(cfg.datasets.len());
    for d in &cfg.datasets {
        require_file(&d.path)?;
        mappings.push(d.label_mapping()?);
    }
    if run.dry_run {
        return Ok(());
    }

    let mut sources = Vec::new();
    let mut collapsed = Vec::new();
    for (d, mapping) in cfg.datasets.iter().zip(&mappings) {
        let loaded = corpus::load_dataset(&d.path, &d.schema())?;
        let (examples, counts) = corpus::collapse_labels(loaded.examples, mapping)?;
        log::info!("{}: {counts} (skipped {} empty)", d.name, loaded.skipped_empty);
        sources.push(SourceStats {
            name: d.name.clone(),
            path: d.path.clone(),
            rows: counts.total + loaded.skipped_empty,
            skipped_empty: loaded.skipped_empty,
            counts,
        });
        collapsed.push(examples);
    }
    let combined: Vec<LabeledExample> = match cfg.split.combine {
        Combine::Concat => collapsed.into_iter().flatten().collect(),
        Combine::Balanced => {
            corpus::combine_balanced(&collapsed, cfg.split.combine_seed, cfg.split.per_class_cap)?
        }
    };
    let bundle = corpus::split(&combined, cfg.split.ratios(), cfg.split.seed, cfg.split.stratified)?;

    let dir = run.prepare_output(PREPARED)?;
    let manifest = corpus::write_split(&dir, &bundle)?;
    let stats = PrepareStats {
        sources,
        combine: cfg.split.combine,
        combined: corpus::stats(&combined),
        train: manifest.train,
        validation: manifest.validation,
        test: manifest.test,
    };
    write_json(&dir.join("stats.json"), &stats)?;
    println!(
        "prepared {} examples ({}) -> train {}, validation {}, test {}",
        stats.combined.total, stats.combined, stats.train.total, stats.validation.total, stats.test.total
    );
    Ok(())
}

/// Training split plus the configured extra corpora, tokenized with the
/// model's pipeline.
fn embedding_corpus(run: &Run, train: &[LabeledExample]) -> Result<Vec<TokenSequence>> {
    let pipeline = &run.loaded.config.model.pipeline;
    let mut out: Vec<TokenSequence> = train.iter().map(|e| preprocess(&e.text, pipeline)).collect();
    for path in &run.loaded.config.embeddings.extra_corpus {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        out.extend(text.lines().map(|l| preprocess(l, pipeline)));
    }
    Ok(out)
}

pub fn embed_train(run: &Run) -> Result<()> {
    run.split_exists()?;
    for p in &run.loaded.config.embeddings.extra_corpus {
        require_file(p)?;
    }
    if run.dry_run {
        return Ok(());
    }
    let bundle = run.read_split()?;
    let corpus = embedding_corpus(run, &bundle.train)?;
    let model = embed::train_cbow(&corpus, &run.loaded.config.cbow)?;
    let dir = run.prepare_output(EMBEDDINGS)?;
    model.embeddings.save_text(&dir.join(VECTORS_FILE))?;
    write_text(&dir.join(EMBED_LOG_FILE), &model.log_lines())?;
    println!(
        "trained {} vectors of dimension {} -> {}",
        model.embeddings.rows(),
        model.embeddings.dim(),
        dir.join(VECTORS_FILE).display()
    );
    Ok(())
}

pub fn embed_nearest(embeddings: &Path, word: &str, k: usize, dry_run: bool) -> Result<()> {
    require_file(embeddings)?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if dry_run {
        return Ok(());
    }
    let matrix = EmbeddingMatrix::load_text(embeddings)?;
    for n in matrix.nearest(word, k)? {
        println!("{}\t{:.6}", n.token, n.cosine);
    }
    Ok(())
}

fn load_embeddings(run: &Run, explicit: Option<&Path>) -> Result<EmbeddingMatrix> {
    let path = explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run.sub(EMBEDDINGS).join(VECTORS_FILE));
    EmbeddingMatrix::load_text(&path)
}

fn embeddings_path(run: &Run, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run.sub(EMBEDDINGS).join(VECTORS_FILE))
}

pub fn train(run: &Run, embeddings: Option<&Path>) -> Result<()> {
    run.split_exists()?;
    require_file(&embeddings_path(run, embeddings))?;
    if run.dry_run {
        return Ok(());
    }
    let bundle = run.read_split()?;
    let matrix = load_embeddings(run, embeddings)?;
    let model = classifier::build(&run.loaded.config.model, &matrix)?;
    let outcome = classifier::train(&model, &bundle)?;
    let dir = run.prepare_output(MODELS)?;
    outcome.best.save(&dir.join(CHECKPOINT_FILE))?;
    write_json(&dir.join(HISTORY_FILE), &outcome.history)?;
    let sel = &outcome.history.records[outcome.history.selected_epoch - 1];
    println!(
        "selected epoch {} (validation loss {:.5}, weighted F1 {:.4}) -> {}",
        sel.epoch,
        sel.validation_loss,
        sel.validation_weighted_f1,
        dir.join(CHECKPOINT_FILE).display()
    );
    Ok(())
}

fn checkpoint_path(run: &Run, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run.sub(MODELS).join(CHECKPOINT_FILE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitPart {
    fn name(self) -> &'static str {
        match self {
            SplitPart::Train => "train",
            SplitPart::Validation => "validation",
            SplitPart::Test => "test",
        }
    }

    fn select(self, bundle: &SplitBundle) -> &[LabeledExample] {
        match self {
            SplitPart::Train => &bundle.train,
            SplitPart::Validation => &bundle.validation,
            SplitPart::Test => &bundle.test,
        }
    }
}

fn write_report(dir: &Path, stem: &str, title: &str, report: &MetricsReport) -> Result<()> {
    write_text(&dir.join(format!("{stem}_metrics.json")), &(report.to_json()? + "\n"))?;
    let table = report.render_table(title);
    write_text(&dir.join(format!("{stem}_metrics.txt")), &table)?;
    print!("{table}");
    Ok(())
}

pub fn evaluate(run: &Run, checkpoint: Option<&Path>, part: SplitPart) -> Result<()> {
    let ckpt = checkpoint_path(run, checkpoint);
    require_file(&ckpt)?;
    run.split_exists()?;
    if run.dry_run {
        return Ok(());
    }
    let model = Classifier::load(&ckpt)?;
    let bundle = run.read_split()?;
    let examples = part.select(&bundle);
    let (probs, report) = classifier::report(&model, examples)?;
    let dir = run.prepare_output(REPORTS)?;
    let ids: Vec<String> = examples.iter().map(|e| e.id.clone()).collect();
    eval::write_predictions(&dir.join(format!("{}_predictions.csv", part.name())), &ids, &probs)?;
    write_report(&dir, part.name(), part.name(), &report)
}

/// Scores external `id,score` predictions against `id,label` labels. Without
/// a config the report is written next to the predictions file.
pub fn evaluate_external(
    run: Option<&Run>,
    predictions: &Path,
    labels: &Path,
    threshold: f64,
    dry_run: bool,
) -> Result<()> {
    require_file(predictions)?;
    require_file(labels)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold {threshold} is outside [0, 1]")));
    }
    if dry_run {
        return Ok(());
    }
    let report = eval::score_external(predictions, labels, threshold)?;
    let dir = match run {
        Some(run) => run.prepare_output(REPORTS)?,
        None => predictions
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    write_report(&dir, "external", "external", &report)
}

pub fn explain(run: &Run, checkpoint: Option<&Path>, text: &str, name: &str) -> Result<()> {
    let ckpt = checkpoint_path(run, checkpoint);
    require_file(&ckpt)?;
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(Error::InvalidConfig(format!("invalid explanation name {name:?}")));
    }
    if run.dry_run {
        return Ok(());
    }
    let model = Classifier::load(&ckpt)?;
    let predictor = |texts: &[String]| model.predict(texts);
    let explanation = explain::explain(&predictor, text, &model.config().pipeline, &run.loaded.config.lime)?;
    let dir = run.prepare_output(EXPLANATIONS)?;
    write_text(&dir.join(format!("{name}.json")), &(explanation.to_json()? + "\n"))?;
    write_text(&dir.join(format!("{name}.html")), &explanation.to_html(text))?;
    println!("p(hate) = {:.4}", explanation.prediction);
    for w in &explanation.weights {
        println!("{:>+9.4}  {}", w.weight, w.token);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    activation: Activation,
    selected_epoch: usize,
    validation_loss: f64,
    validation_weighted_f1: f64,
    test_weighted_f1: f64,
    test_auc: Option<f64>,
}

pub fn sweep_activation(run: &Run, embeddings: Option<&Path>) -> Result<()> {
    run.split_exists()?;
    require_file(&embeddings_path(run, embeddings))?;
    if run.dry_run {
        return Ok(());
    }
    let bundle = run.read_split()?;
    let matrix = load_embeddings(run, embeddings)?;
    let mut rows = Vec::with_capacity(Activation::ALL.len());
    for activation in Activation::ALL {
        let mut config = run.loaded.config.model.clone();
        config.dense1_activation = activation;
        let model = classifier::build(&config, &matrix)?;
        let outcome = classifier::train(&model, &bundle)?;
        let sel = outcome.history.records[outcome.history.selected_epoch - 1];
        let (_, test) = classifier::report(&outcome.best, &bundle.test)?;
        rows.push(SweepRow {
            activation,
            selected_epoch: sel.epoch,
            validation_loss: sel.validation_loss,
            validation_weighted_f1: sel.validation_weighted_f1,
            test_weighted_f1: test.weighted.f1,
            test_auc: test.auc,
        });
    }
    let mut table = format!(
        "{:<10} {:>6} {:>10} {:>10} {:>10} {:>8}\n",
        "dense1", "epoch", "val_loss", "val_wF1", "test_wF1", "test_AUC"
    );
    for r in &rows {
        let auc = r.test_auc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(
            table,
            "{:<10} {:>6} {:>10.5} {:>10.4} {:>10.4} {:>8}",
            serde_json::to_value(r.activation)?.as_str().unwrap_or_default(),
            r.selected_epoch,
            r.validation_loss,
            r.validation_weighted_f1,
            r.test_weighted_f1,
            auc
        );
    }
    let dir = run.prepare_output(REPORTS)?;
    write_text(&dir.join("activation_sweep.txt"), &table)?;
    write_json(&dir.join("activation_sweep.json"), &rows)?;
    print!("{table}");
    Ok(())
}
