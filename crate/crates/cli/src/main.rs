//! `hatescan`: config-driven hate-speech classification runs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hatescan::{Error, ErrorKind};

use commands::{Run, SplitPart};
use config::LoadedConfig;

const EXIT_IO: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "hatescan", version, about = "Binary hate-speech classification toolkit")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set model.hidden=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run directory; overrides `output_dir` and `$HATESCAN_OUTPUT_ROOT`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Validate inputs without writing anything.
    #[arg(long)]
    dry_run: bool,
}

impl RunArgs {
    fn open(&self) -> Result<Run, Error> {
        let loaded = LoadedConfig::load(&self.config, &self.set)?;
        Ok(Run::new(loaded, self.output_dir.as_deref(), self.dry_run))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load, collapse, combine and split the configured datasets.
    Prepare(RunArgs),
    /// Train CBOW embeddings on the training split.
    EmbedTrain(RunArgs),
    /// Print the nearest neighbours of a word.
    EmbedNearest {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Word-vector file.
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Train the classifier and write a checkpoint.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Word-vector file (default: the run's embeddings).
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Score a checkpoint on a split, or external predictions against labels.
    Evaluate {
        #[arg(short, long, required_unless_present = "predictions")]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        dry_run: bool,
        /// Checkpoint (default: the run's model).
        #[arg(long, conflicts_with = "predictions")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SplitPart::Test, conflicts_with = "predictions")]
        split: SplitPart,
        /// `id,score` file to score instead of a checkpoint.
        #[arg(long, requires = "labels")]
        predictions: Option<PathBuf>,
        /// `id,label` file.
        #[arg(long, requires = "predictions")]
        labels: Option<PathBuf>,
        /// Decision threshold for external predictions.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Explain one prediction with LIME.
    Explain {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        text: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Output file stem under explanations/.
        #[arg(long, default_value = "explanation")]
        name: String,
    },
    /// Train once per dense-layer activation and compare.
    SweepActivation {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Prepare(args) => commands::prepare(&args.open()?),
        Command::EmbedTrain(args) => commands::embed_train(&args.open()?),
        Command::EmbedNearest {
            word,
            k,
            embeddings,
            dry_run,
        } => commands::embed_nearest(&embeddings, &word, k, dry_run),
        Command::Train { run, embeddings } => commands::train(&run.open()?, embeddings.as_deref()),
        Command::Evaluate {
            config,
            set,
            output_dir,
            dry_run,
            checkpoint,
            split,
            predictions,
            labels,
            threshold,
        } => {
            let run = match &config {
                Some(path) => Some(Run::new(
                    LoadedConfig::load(path, &set)?,
                    output_dir.as_deref(),
                    dry_run,
                )),
                None => None,
            };
            match (predictions, labels, run) {
                (Some(p), Some(l), run) => {
                    commands::evaluate_external(run.as_ref(), &p, &l, threshold, dry_run)
                }
                (_, _, Some(run)) => commands::evaluate(&run, checkpoint.as_deref(), split),
                _ => Err(Error::InvalidConfig("evaluate needs --config or --predictions/--labels".into())),
            }
        }
        Command::Explain {
            run,
            text,
            checkpoint,
            name,
        } => commands::explain(&run.open()?, checkpoint.as_deref(), &text, &name),
        Command::SweepActivation { run, embeddings } => {
            commands::sweep_activation(&run.open()?, embeddings.as_deref())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Numeric => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
