//! Command-line front end shared by the `aset` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::active_set::{Mode, RunConfig, RunTrace};
use crate::error::Error;
use crate::eval::{split, Protocol};
use crate::filters::SamplerConfig;
use crate::io::{read_cube, read_labels, write_class_map, write_cube, write_labels};
use crate::model::Classifier;
use crate::synth::{generate, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ASET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "aset", version, about = "Active-set spatial feature learning for spectral images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Shallow,
    Hier,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic scene (cube.json, cube.raw, labels.txt).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 16)]
        bands: usize,
        #[arg(long, default_value_t = 96)]
        height: usize,
        #[arg(long, default_value_t = 96)]
        width: usize,
        /// Number of confuser pairs (classes sharing a mean spectrum).
        #[arg(long, default_value_t = 1)]
        confusers: usize,
        /// Use the variant that needs composed filters to separate the pair.
        #[arg(long)]
        hierarchical: bool,
        /// Add an auxiliary band that is constant per region.
        #[arg(long)]
        height_band: bool,
    },
    /// Learn a model (model.txt, trace.tsv).
    Train {
        #[arg(long)]
        cube: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Shallow)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[arg(long, default_value_t = 1.1)]
        gamma0: f64,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        /// Exclusion window around training pixels for the test set.
        #[arg(long, default_value_t = 3)]
        window: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hierarchical mode only: never filter previously accepted features.
        #[arg(long)]
        band_inputs_only: bool,
        /// Input bands per minibatch (default: min(20, band count)).
        #[arg(long)]
        bands_per_minibatch: Option<usize>,
    },
    /// Classify every pixel of a cube (labels.raw, proba_<c>.raw).
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cube: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a model and its trace (report.txt).
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        top_k: usize,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Format { .. } | Error::Json(_) | Error::Csv(_) | Error::UnknownBand(_) => EXIT_IO,
        Error::Infeasible(_) | Error::MissingClass(_) => EXIT_INFEASIBLE,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Configures the global thread pool from `ASET_THREADS`, if set.
pub fn init_threads() -> Result<(), String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

fn out_dir(dir: &Path) -> crate::Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Runs one command; messages for the user go to stdout.
pub fn execute(command: Command) -> crate::Result<()> {
    match command {
        Command::Synth {
            out,
            seed,
            classes,
            bands,
            height,
            width,
            confusers,
            hierarchical,
            height_band,
        } => {
            let base = if hierarchical {
                SceneSpec::hierarchical()
            } else {
                SceneSpec::default()
            };
            if 2 * confusers > classes {
                return Err(Error::Infeasible(format!(
                    "{confusers} confuser pairs need at least {} classes",
                    2 * confusers
                )));
            }
            // pairs use the highest class ids: (C-2, C-1), (C-4, C-3), ...
            let confuser_pairs = (0..confusers)
                .map(|k| (classes - 2 * k - 2, classes - 2 * k - 1))
                .collect();
            let spec = SceneSpec {
                height,
                width,
                classes,
                bands,
                confuser_pairs,
                height_band,
                seed,
                ..base
            };
            let scene = generate(&spec)?;
            out_dir(&out)?;
            write_cube(&scene.cube, out.join("cube.json"))?;
            write_labels(&scene.samples, out.join("labels.txt"))?;
            println!(
                "wrote {}x{}x{} cube and {} labels to {}",
                height,
                width,
                scene.cube.band_count(),
                scene.samples.len(),
                out.display()
            );
        }
        Command::Train {
            cube,
            labels,
            out,
            mode,
            lambda,
            gamma0,
            iters,
            per_class,
            window,
            seed,
            band_inputs_only,
            bands_per_minibatch,
        } => {
            let cube = read_cube(&cube)?;
            let samples = read_labels(&labels, None)?;
            let pool = cube.original_ids().len();
            let config = RunConfig {
                mode: match mode {
                    ModeArg::Shallow => Mode::Shallow,
                    ModeArg::Hier => Mode::Hierarchical,
                },
                lambda,
                gamma0,
                max_iterations: iters,
                seed,
                sampler: SamplerConfig {
                    bands_per_minibatch: bands_per_minibatch.unwrap_or(pool.min(20)),
                    allow_derived_inputs: !band_inputs_only,
                    ..SamplerConfig::default()
                },
                ..RunConfig::default()
            };
            let (train, test) = split(&samples, Protocol { per_class, window }, seed)?;
            let outcome = crate::active_set::run(&cube, &train, &config, Some(&test))?;
            out_dir(&out)?;
            outcome.classifier()?.save(out.join("model.txt"))?;
            outcome
                .trace
                .write_tsv(fs::File::create(out.join("trace.tsv"))?)?;
            match outcome.final_kappa() {
                Some(k) => println!("final kappa: {k:.4}"),
                None => println!("final kappa: n/a (empty test set)"),
            }
            println!("active features: {}", outcome.state.features());
        }
        Command::Classify { model, cube, out } => {
            let model = Classifier::load(&model)?;
            let cube = read_cube(&cube)?;
            let map = model.classify(&cube)?;
            write_class_map(&map, &out)?;
            println!(
                "classified {} pixels into {} classes; outputs in {}",
                map.labels.len(),
                map.proba.ncols(),
                out.display()
            );
        }
        Command::Report {
            model,
            trace,
            out,
            top_k,
        } => {
            let model = Classifier::load(&model)?;
            let trace_path = trace;
            let text = crate::io::read_text(&trace_path)?;
            let trace = RunTrace::read_tsv(text.as_bytes())
                .map_err(|e| Error::format(&trace_path, e.to_string()))?;
            let text = crate::report::render(&model, &trace, top_k);
            out_dir(&out)?;
            fs::write(out.join("report.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
