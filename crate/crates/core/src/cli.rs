//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 other data error, 2 usage or config error,
//! 3 malformed input, 4 validation mismatch, 5 I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, AxisFlips, DatasetError, GenerationConfig};
use crate::discretize::ThresholdConfig;
use crate::evaluate::{self, EvalError, GoldSet, DEFAULT_CALIBRATION_BINS};
use crate::oracle::{self, ValidationError};
use crate::skeleton::{angle_triplet, catalog, joint_display_name, DescriptorKind, TOTAL_TARGETS};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DATA: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;
pub const EXIT_IO: u8 = 5;

const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "handvqa",
    version,
    about = "Hand-pose multiple-choice question generation and scoring"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// TOML file supplying any option; explicit flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores). Never changes output bytes.
    #[arg(short = 'j', long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ThresholdArgs {
    /// Three increasing angle cuts in degrees, e.g. 105,150,170.
    #[arg(long, value_parser = parse_cuts::<3>, value_name = "DEG,DEG,DEG")]
    pub angle_cuts: Option<[f64; 3]>,
    /// Two increasing distance cuts, e.g. 0.1,0.3.
    #[arg(long, value_parser = parse_cuts::<2>, value_name = "D,D")]
    pub distance_cuts: Option<[f64; 2]>,
    /// Half-width of the aligned band for relative positions.
    #[arg(long)]
    pub relpos_band: Option<f64>,
}

fn parse_cuts<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

impl ThresholdArgs {
    fn is_set(&self) -> bool {
        self.angle_cuts.is_some() || self.distance_cuts.is_some() || self.relpos_band.is_some()
    }

    fn apply(&self, base: ThresholdConfig) -> ThresholdConfig {
        let mut t = base;
        if let Some(c) = self.angle_cuts {
            t.angle_cuts = c;
        }
        if let Some(c) = self.distance_cuts {
            t.distance_cuts = c;
        }
        if let Some(b) = self.relpos_band {
            t.relpos_band = b;
        }
        t
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a question dataset from a pose manifest.
    Generate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples_per_type: Option<usize>,
        /// Do not replace aligned or degenerate targets with unused ones.
        #[arg(long)]
        no_resample: bool,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Re-answer every question from the manifest joints; nonzero exit on any mismatch.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Score a prediction file against a gold dataset.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        calibration_bins: Option<usize>,
        /// Write all tables as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Uniform random-guess baseline on a gold dataset.
    Baseline {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Ground-truth label frequencies per descriptor kind.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Dump the compiled-in descriptor catalogs.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

/// Values a config file may supply. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub samples_per_type: Option<usize>,
    pub resample_on_aligned: Option<bool>,
    pub thresholds: Option<ThresholdConfig>,
    pub axis_flips: Option<AxisFlips>,
    pub jobs: Option<usize>,
    pub calibration_bins: Option<usize>,
    pub trials: Option<usize>,
    pub verbose: Option<u8>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} mismatching question(s)")]
    Mismatch(usize),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Io(_) => EXIT_IO,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Io(e.to_string()),
            DatasetError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            DatasetError::Parse { .. } | DatasetError::DuplicateImageId { .. } | DatasetError::MissingHeader => {
                CliError::Parse(e.to_string())
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } => CliError::Io(e.to_string()),
            EvalError::Parse { .. } => CliError::Parse(e.to_string()),
            EvalError::Dataset(d) => d.into(),
            EvalError::NoBins => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::Dataset(d) => d.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("value serializes"));
}

fn catalog_dump(json: bool) {
    if json {
        let mut map = serde_json::Map::new();
        for kind in DescriptorKind::ALL {
            map.insert(
                kind.as_str().into(),
                serde_json::to_value(catalog(kind)).expect("catalog serializes"),
            );
        }
        map.insert("total".into(), TOTAL_TARGETS.into());
        print_json(&map);
        return;
    }
    for kind in DescriptorKind::ALL {
        let targets = catalog(kind);
        println!("{kind} ({})", targets.len());
        for t in targets {
            match t.object {
                None => {
                    let tr = angle_triplet(t.subject).expect("angle catalog joint");
                    println!(
                        "  {:<12} {} > {} > {}  \"{}\"",
                        t.subject.to_string(),
                        tr.prev,
                        tr.center,
                        tr.next,
                        joint_display_name(t.subject)
                    );
                }
                Some(o) => println!("  {} vs. {}", t.subject, o),
            }
        }
    }
    println!("total {TOTAL_TARGETS}");
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(0);
    let verbosity = if cli.verbose > 0 {
        cli.verbose
    } else {
        file.verbose.unwrap_or(0)
    };
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match cli.command {
        Command::Generate {
            manifest,
            out,
            seed,
            samples_per_type,
            no_resample,
            thresholds,
        } => {
            let defaults = GenerationConfig::default();
            let cfg = GenerationConfig {
                seed: seed.or(file.seed).unwrap_or(defaults.seed),
                per_type_samples: samples_per_type
                    .or(file.samples_per_type)
                    .unwrap_or(defaults.per_type_samples),
                thresholds: thresholds.apply(file.thresholds.unwrap_or(defaults.thresholds)),
                axis_flips: file.axis_flips.unwrap_or_default(),
                resample_on_aligned: if no_resample {
                    false
                } else {
                    file.resample_on_aligned.unwrap_or(defaults.resample_on_aligned)
                },
            };
            log::info!("generating with {cfg:?}");
            let summary = dataset::generate_dataset(&manifest, &cfg, &out, jobs)?;
            print_json(&summary);
            Ok(())
        }
        Command::Validate {
            manifest,
            dataset,
            report,
            thresholds,
        } => {
            let override_cfg = if thresholds.is_set() || file.thresholds.is_some() {
                let reader = dataset::read_dataset(&dataset)?;
                let base = file.thresholds.unwrap_or(reader.header.config.thresholds);
                let t = thresholds.apply(base);
                t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                Some(t)
            } else {
                None
            };
            let result = oracle::validate_dataset(&manifest, &dataset, override_cfg.as_ref(), jobs)?;
            if let Some(path) = report {
                write_json(&path, &result)?;
            }
            println!(
                "checked {} questions: {} mismatches, {} skipped",
                result.total,
                result.mismatches.len(),
                result.skipped.len()
            );
            for m in &result.mismatches {
                println!(
                    "mismatch {} stored={} oracle={}",
                    m.question_id,
                    m.expected_category.map_or("<invalid>", |c| c.label()),
                    m.oracle_category
                );
            }
            for s in &result.skipped {
                println!("skipped {}: {}", s.question_id, s.reason);
            }
            if result.is_consistent() {
                Ok(())
            } else {
                Err(CliError::Mismatch(result.mismatches.len()))
            }
        }
        Command::Score {
            gold,
            pred,
            calibration_bins,
            report,
        } => {
            let gold = GoldSet::load(&gold)?;
            let predictions = evaluate::read_predictions(&pred)?;
            let bins = calibration_bins.or(file.calibration_bins);
            // Without an explicit bin count, calibrate only when every
            // prediction carries a confidence.
            let bins = bins.or_else(|| {
                (!predictions.is_empty() && predictions.iter().all(|p| p.confidence.is_some()))
                    .then_some(DEFAULT_CALIBRATION_BINS)
            });
            let metrics = evaluate::score(&gold, &predictions, bins)?;
            if let Some(path) = report {
                write_json(&path, &metrics)?;
            }
            print!("{metrics}");
            Ok(())
        }
        Command::Baseline {
            gold,
            seed,
            trials,
            report,
        } => {
            let gold = GoldSet::load(&gold)?;
            let trials = trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let seed = seed.or(file.seed).unwrap_or(dataset::DEFAULT_SEED);
            let metrics = evaluate::random_baseline(&gold, seed, trials);
            if let Some(path) = report {
                write_json(&path, &metrics)?;
            }
            print!("{metrics}");
            Ok(())
        }
        Command::Stats { dataset, json } => {
            let stats = dataset::label_stats(dataset::read_dataset(&dataset)?)?;
            if json {
                print_json(&stats);
            } else {
                print!("{stats}");
                println!("total     {}", stats.total);
            }
            Ok(())
        }
        Command::Catalog { json } => {
            catalog_dump(json);
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run_from(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_flags_override() {
        let cli = Cli::try_parse_from([
            "handvqa",
            "generate",
            "--manifest",
            "m",
            "--out",
            "o",
            "--angle-cuts",
            "100,140,160",
            "--relpos-band",
            "0.2",
        ])
        .unwrap();
        let Command::Generate { thresholds, .. } = cli.command else {
            panic!("wrong subcommand");
        };
        let t = thresholds.apply(ThresholdConfig::default());
        assert_eq!(t.angle_cuts, [100.0, 140.0, 160.0]);
        assert_eq!(t.distance_cuts, [0.1, 0.3]);
        assert_eq!(t.relpos_band, 0.2);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_from(["handvqa", "catalog", "--bogus"]), EXIT_USAGE);
        assert_eq!(run_from(["handvqa", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn config_file_fields() {
        let cfg: RunConfig =
            toml::from_str("seed = 9\nsamples_per_type = 3\n[thresholds]\nrelpos_band = 0.2\n[axis_flips]\ny = true\n")
                .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.thresholds.unwrap().relpos_band, 0.2);
        assert_eq!(cfg.thresholds.unwrap().angle_cuts, [105.0, 150.0, 170.0]);
        assert!(cfg.axis_flips.unwrap().y);
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
    }
}
