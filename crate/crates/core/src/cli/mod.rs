//! The `ferkit` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 partial success (some
//! inputs skipped, or no face found for `predict`).

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, RunConfig, THREADS_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ferkit", version, about = "Facial expression recognition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Crop faces, expand each into five variants and write a training corpus.
    Preprocess {
        /// JSON-lines manifest of images, labels and landmarks.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for variant images and the corpus index.
        #[arg(long)]
        out: PathBuf,
        /// Width of the written variants.
        #[arg(long, default_value_t = crate::data::INPUT_WIDTH)]
        width: usize,
        /// Height of the written variants.
        #[arg(long, default_value_t = crate::data::INPUT_HEIGHT)]
        height: usize,
    },
    /// Train the classifier on a preprocessed corpus.
    Train(TrainArgs),
    /// Score a weight file against a preprocessed corpus.
    Evaluate {
        #[arg(long)]
        weights: PathBuf,
        /// Corpus directory or its index file.
        #[arg(long)]
        data: PathBuf,
        /// Metrics JSON path; per-class ROC CSVs are written beside it.
        #[arg(long)]
        report: PathBuf,
    },
    /// Classify the face in one image.
    Predict {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// JSON file with 68 `[x, y]` pairs, or a manifest-style object with a
        /// `landmarks` field.
        #[arg(long)]
        landmarks: PathBuf,
        /// Directory for the cropped face and a prediction summary.
        #[arg(long)]
        annotate: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory or its index file.
    #[arg(long)]
    data: PathBuf,
    /// Output weight file.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shuffle: Option<bool>,
    #[arg(long)]
    threads: Option<usize>,
    /// History CSV path (default: `<weights stem>_history.csv`).
    #[arg(long)]
    history: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_FAILURE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Preprocess {
            manifest,
            out: dir,
            width,
            height,
        } => commands::preprocess(&manifest, &dir, width, height, out, err),
        Command::Train(args) => commands::train(args, out),
        Command::Evaluate { weights, data, report } => commands::evaluate(&weights, &data, &report, out),
        Command::Predict {
            weights,
            image,
            landmarks,
            annotate,
        } => commands::predict(&weights, &image, &landmarks, annotate.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "ferkit: {e}");
            e.exit_code()
        }
    }
}
