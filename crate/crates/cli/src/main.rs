use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use codegrain::design::DEFAULT_DENSE_CAP;
use codegrain::spectra::DEFAULT_MIN_TAIL;
use codegrain::stays::CorpusFormat;
use codegrain::synthetic::GeneratorConfig;
use codegrain_cli::config::load_generator_config;
use codegrain_cli::manifest::RunManifest;
use codegrain_cli::*;

#[derive(Parser)]
#[command(name = "codegrain", version, about = "Granularity and ridge experiments on diagnosis-code cost models")]
struct Cli {
    /// Worker threads for replicate and grid parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for CorpusFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => CorpusFormat::Csv,
            Format::Json => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Corpus file (JSON lines or CSV).
    #[arg(long)]
    input: PathBuf,
    /// Corpus format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Drop records that fail validation instead of aborting.
    #[arg(long)]
    skip_invalid: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

impl InputArgs {
    fn options(&self) -> InputOptions {
        InputOptions {
            path: self.input.clone(),
            format: self.format.map(Into::into),
            skip_invalid: self.skip_invalid,
        }
    }
}

#[derive(Args)]
struct PenaltyArgs {
    /// Raw ridge penalty (repeatable).
    #[arg(long = "lambda")]
    lambda: Vec<f64>,
    /// Penalty per training row, lambda / n_train (repeatable).
    #[arg(long = "lambda-per-n")]
    lambda_per_n: Vec<f64>,
}

impl PenaltyArgs {
    fn specs(&self) -> Vec<LambdaSpec> {
        let mut v: Vec<LambdaSpec> = self.lambda.iter().map(|&l| LambdaSpec::Raw(l)).collect();
        v.extend(self.lambda_per_n.iter().map(|&c| LambdaSpec::PerN(c)));
        if v.is_empty() {
            v.push(LambdaSpec::Raw(0.0));
        }
        v
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Leave the intercept out of the ridge penalty.
    #[arg(long)]
    free_intercept: bool,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl SolverArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            penalize_intercept: !self.free_intercept,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus and its ground truth.
    Gen {
        /// Flat `key = value` generator config; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output corpus format.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Set the noise level for this population R^2.
        #[arg(long)]
        calibrate_r2: Option<f64>,
    },
    /// Cost by diagnosis count and vocabulary sizes per level.
    Summarize {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Fit and score one model per granularity level.
    SweepGranularity {
        #[command(flatten)]
        input: InputArgs,
        /// Levels (repeatable; default 2..=7).
        #[arg(long = "level")]
        levels: Vec<usize>,
        #[arg(long = "lambda", default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        lambda_per_n: Option<f64>,
        #[arg(long, default_value_t = 0.8)]
        train_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Ridge fits over a (lambda, train ratio) grid.
    SweepLambda {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 7)]
        level: usize,
        #[command(flatten)]
        penalty: PenaltyArgs,
        /// Training fractions (repeatable; default 0.8).
        #[arg(long = "train-ratio")]
        train_ratio: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Coefficient consistency over resampled fits.
    Consistency {
        #[command(flatten)]
        input: InputArgs,
        /// Levels (repeatable; default 7).
        #[arg(long = "level")]
        levels: Vec<usize>,
        #[command(flatten)]
        penalty: PenaltyArgs,
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        #[arg(long, default_value_t = 0.8)]
        train_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rank the intercept along with the code coefficients.
        #[arg(long)]
        include_intercept: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Hessian diagonal histograms, power-law fits, spectra and identity checks.
    Spectrum {
        #[command(flatten)]
        input: InputArgs,
        /// Levels (repeatable; default 7).
        #[arg(long = "level")]
        levels: Vec<usize>,
        /// Largest dimension for dense spectra.
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
        cap: usize,
        /// Fixed power-law cutoff instead of a KS scan.
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MIN_TAIL)]
        min_tail: usize,
        /// One bin per distinct value instead of powers of two.
        #[arg(long)]
        linear_bins: bool,
    },
}

fn run(command: Command) -> Result<RunManifest, CliError> {
    match command {
        Command::Gen {
            config,
            out_dir,
            seed,
            format,
            calibrate_r2,
        } => {
            let mut cfg = match &config {
                Some(path) => load_generator_config(path)?,
                None => GeneratorConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cmd_gen(&GenArgs {
                config: cfg,
                config_source: config,
                out_dir,
                format: format.into(),
                calibrate_r2,
            })
        }
        Command::Summarize { input } => cmd_summarize(&input.options(), &input.out_dir),
        Command::SweepGranularity {
            input,
            levels,
            lambda,
            lambda_per_n,
            train_ratio,
            seed,
            solver,
        } => cmd_sweep_granularity(&GranularityArgs {
            input: input.options(),
            out_dir: input.out_dir.clone(),
            levels: if levels.is_empty() { (2..=7).collect() } else { levels },
            lambda: lambda_per_n.map_or(LambdaSpec::Raw(lambda), LambdaSpec::PerN),
            train_ratio,
            seed,
            fit: solver.options(),
        }),
        Command::SweepLambda {
            input,
            level,
            penalty,
            train_ratio,
            seed,
            solver,
        } => cmd_sweep_lambda(&LambdaArgs {
            input: input.options(),
            out_dir: input.out_dir.clone(),
            level,
            lambdas: penalty.specs(),
            train_ratios: if train_ratio.is_empty() { vec![0.8] } else { train_ratio },
            seed,
            fit: solver.options(),
        }),
        Command::Consistency {
            input,
            levels,
            penalty,
            replicates,
            train_ratio,
            seed,
            include_intercept,
            solver,
        } => cmd_consistency(&ConsistencyArgs {
            input: input.options(),
            out_dir: input.out_dir.clone(),
            levels: if levels.is_empty() { vec![7] } else { levels },
            lambdas: penalty.specs(),
            replicates,
            train_ratio,
            seed,
            fit: solver.options(),
            include_intercept,
        }),
        Command::Spectrum {
            input,
            levels,
            cap,
            x_min,
            min_tail,
            linear_bins,
        } => cmd_spectrum(&SpectrumArgs {
            input: input.options(),
            out_dir: input.out_dir.clone(),
            levels: if levels.is_empty() { vec![7] } else { levels },
            cap,
            x_min,
            min_tail,
            log_binning: !linear_bins,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    match run(cli.command) {
        Ok(manifest) => {
            for v in manifest.verifications.iter().filter(|v| !v.passed) {
                eprintln!("verification failed: {} ({})", v.name, v.detail);
            }
            println!(
                "{}: {} outputs, {} verifications, {}",
                manifest.subcommand,
                manifest.outputs.len(),
                manifest.verifications.len(),
                if manifest.all_verifications_passed { "all passed" } else { "FAILED" }
            );
            if manifest.all_verifications_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFICATION_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
