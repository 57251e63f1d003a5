//! Subcommand implementations. Each takes plain arguments, writes into its
//! output directory and returns the manifest it wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use codegrain::codes::{build_merge_map, build_vocabulary, check_level, CodeVocabulary, MIN_LEVEL};
use codegrain::consistency::{run_ensemble_with_vocabulary, EnsembleSpec};
use codegrain::design::{
    build, diagonal_histogram, hessian_summary, log_log_slope_from, write_histogram_csv, SparseDesignMatrix,
};
use codegrain::regression::{effective_dimension_bound, fit, predict, r2_score, FitConfig};
use codegrain::spectra::{
    augmented_spectrum, fit_power_law, verify_merge_trace, verify_inverse_trace_with_cap, DenseSymmetric, PowerLawEstimator,
    PowerLawFit, XminSelection, TRACE_TOLERANCE,
};
use codegrain::stays::{load_corpus, split, summarize, CorpusFormat, InvalidRecordPolicy, StayCorpus};
use codegrain::synthetic::{calibrate_noise, generate, GeneratorConfig};

use crate::manifest::{OutputSet, RunManifest};
use crate::svg::{chart, ChartKind, Series};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct InputOptions {
    pub path: PathBuf,
    /// Overrides the extension-based guess.
    pub format: Option<CorpusFormat>,
    pub skip_invalid: bool,
}

impl InputOptions {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        InputOptions {
            path: path.into(),
            format: None,
            skip_invalid: false,
        }
    }

    fn load(&self, out: &mut OutputSet) -> Result<StayCorpus, CliError> {
        let format = self.format.unwrap_or_else(|| CorpusFormat::from_path(&self.path));
        let policy = if self.skip_invalid {
            InvalidRecordPolicy::Skip
        } else {
            InvalidRecordPolicy::Reject
        };
        let loaded = load_corpus(&self.path, format, policy)?;
        if loaded.skipped > 0 {
            log::warn!("skipped {} invalid records in {}", loaded.skipped, self.path.display());
        }
        out.config("input", self.path.display());
        out.config("input_format", format!("{format:?}").to_lowercase());
        out.config("skipped_records", loaded.skipped);
        Ok(loaded.corpus)
    }
}

/// A penalty given either directly or per training row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Raw(f64),
    PerN(f64),
}

impl LambdaSpec {
    /// `(lambda, lambda / n_train)`
    pub fn resolve(self, n_train: usize) -> (f64, f64) {
        let n = n_train.max(1) as f64;
        match self {
            LambdaSpec::Raw(l) => (l, l / n),
            LambdaSpec::PerN(c) => (c * n, c),
        }
    }

    fn validate(self) -> Result<(), CliError> {
        let v = match self {
            LambdaSpec::Raw(v) | LambdaSpec::PerN(v) => v,
        };
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(CliError::Arguments(format!("penalties must be >= 0, got {v}")))
        }
    }
}

/// Fit settings shared by the sweeps.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub penalize_intercept: bool,
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        let d = FitConfig::default();
        FitOptions {
            penalize_intercept: d.penalize_intercept,
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
        }
    }
}

impl FitOptions {
    fn config(&self, lambda: f64) -> FitConfig {
        FitConfig {
            lambda,
            penalize_intercept: self.penalize_intercept,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..FitConfig::default()
        }
    }

    fn echo(&self, out: &mut OutputSet) {
        out.config("penalize_intercept", self.penalize_intercept);
        out.config("tolerance", self.tolerance);
        out.config(
            "max_iterations",
            self.max_iterations.map_or("10*(p+1)".to_string(), |m| m.to_string()),
        );
    }
}

fn csv_header(name: &str, columns: &str) -> String {
    format!("# codegrain {name} v1\n{columns}\n")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

fn check_levels(levels: &[usize]) -> Result<Vec<usize>, CliError> {
    if levels.is_empty() {
        return Err(CliError::Arguments("at least one level is required".into()));
    }
    let mut out = levels.to_vec();
    for &l in &out {
        check_level(l)?;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn rows(x: &SparseDesignMatrix, idx: &[usize], y: &[f64]) -> (SparseDesignMatrix, Vec<f64>) {
    (x.select_rows(idx), idx.iter().map(|&i| y[i]).collect())
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Clone)]
pub struct GenArgs {
    pub config: GeneratorConfig,
    pub config_source: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub format: CorpusFormat,
    /// Replace `noise_sigma` by the value that gives this population R^2.
    pub calibrate_r2: Option<f64>,
}

pub fn cmd_gen(args: &GenArgs) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(&args.out_dir)?;
    let mut cfg = args.config.clone();
    cfg.validate()?;
    if let Some(r2) = args.calibrate_r2 {
        cfg.noise_sigma = calibrate_noise(&cfg, r2)?;
        out.config("calibrate_r2", r2);
    }
    for (k, v) in cfg.key_values() {
        out.config(k, v);
    }
    let (corpus, truth) = generate(&cfg)?;
    let name = match args.format {
        CorpusFormat::Jsonl => "corpus.jsonl",
        CorpusFormat::Csv => "corpus.csv",
    };
    out.config("output_format", format!("{:?}", args.format).to_lowercase());
    match args.format {
        CorpusFormat::Jsonl => corpus.write_jsonl(&out.path(name))?,
        CorpusFormat::Csv => corpus.write_csv(&out.path(name))?,
    }
    out.register(name)?;
    let mut text = Vec::new();
    truth.write_json(&mut text).map_err(|e| CliError::Io(e.to_string()))?;
    text.push(b'\n');
    out.write("ground_truth.json", &text)?;

    let reloaded = load_corpus(&out.path(name), args.format, InvalidRecordPolicy::Reject)?.corpus;
    out.verify(
        "corpus_round_trip",
        reloaded.len() == corpus.len()
            && reloaded
                .records()
                .iter()
                .zip(corpus.records())
                .all(|(a, b)| a.codes == b.codes && (a.log_cost - b.log_cost).abs() <= 1e-9),
        format!("{} stays reloaded", reloaded.len()),
    );
    let max_d = corpus.records().iter().map(|r| r.diagnosis_count()).max().unwrap_or(0);
    out.verify("codes_per_stay_cap", max_d <= cfg.d_max, format!("max D = {max_d}"));
    let inputs: Vec<&Path> = args.config_source.iter().map(|p| p.as_path()).collect();
    out.finish("gen", Some(cfg.seed), &inputs, started)
}

// ---------------------------------------------------------------- summarize

#[derive(Debug, Clone, Serialize)]
struct LevelCount {
    level: usize,
    p: usize,
    trace: u64,
    mean_eigenvalue: f64,
}

pub fn cmd_summarize(input: &InputOptions, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(out_dir)?;
    let corpus = input.load(&mut out)?;
    let summary = summarize(&corpus);
    let mut csv = csv_header("summary", "codes_per_stay,stays,mean_cost,mean_log_cost");
    for b in &summary.buckets {
        let _ = writeln!(csv, "{},{},{},{}", b.codes_per_stay, b.stays, b.mean_cost, b.mean_log_cost);
    }
    out.write("summary.csv", csv.as_bytes())?;

    let levels: Vec<LevelCount> = (MIN_LEVEL..=7)
        .map(|level| -> Result<LevelCount, CliError> {
            let vocab = build_vocabulary(&corpus, level)?;
            let h = hessian_summary(&build(&corpus, &vocab)?);
            Ok(LevelCount {
                level,
                p: h.p,
                trace: h.trace,
                mean_eigenvalue: h.mean_eigenvalue,
            })
        })
        .collect::<Result<_, _>>()?;
    out.write_json(
        "summary.json",
        &serde_json::json!({ "corpus": summary, "levels": levels }),
    )?;
    let series = Series {
        name: "mean log10 cost".into(),
        points: summary
            .buckets
            .iter()
            .map(|b| (b.codes_per_stay as f64, b.mean_log_cost))
            .collect(),
    };
    let svg = chart(ChartKind::Line, "Cost by diagnosis count", "codes per stay", "mean log10 cost", &[series]);
    out.write("summary.svg", svg.as_bytes())?;
    let total: usize = summary.buckets.iter().map(|b| b.stays).sum();
    out.verify("bucket_counts", total == corpus.len(), format!("{total} of {} stays", corpus.len()));
    out.finish("summarize", None, &[input.path.as_path()], started)
}

// ---------------------------------------------------------------- sweep-granularity

#[derive(Debug, Clone)]
pub struct GranularityArgs {
    pub input: InputOptions,
    pub out_dir: PathBuf,
    pub levels: Vec<usize>,
    pub lambda: LambdaSpec,
    pub train_ratio: f64,
    pub seed: u64,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct GranularityRow {
    pub level: usize,
    pub p: usize,
    pub n: usize,
    pub trace: u64,
    pub mean_eigenvalue: f64,
    pub lambda: f64,
    pub lambda_per_n: f64,
    pub train_r2: f64,
    pub test_r2: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn cmd_sweep_granularity(args: &GranularityArgs) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(&args.out_dir)?;
    let corpus = args.input.load(&mut out)?;
    let levels = check_levels(&args.levels)?;
    args.lambda.validate()?;
    out.config("levels", format!("{levels:?}"));
    out.config("train_ratio", args.train_ratio);
    out.config("seed", args.seed);
    args.fit.echo(&mut out);

    let s = split(corpus.len(), args.train_ratio, args.seed)?;
    let (lambda, lambda_per_n) = args.lambda.resolve(s.train.len());
    out.config("lambda", lambda);
    out.config("lambda_per_n", lambda_per_n);
    let y = corpus.outcomes();

    let mut table = Vec::new();
    let mut designs: Vec<(CodeVocabulary, SparseDesignMatrix)> = Vec::new();
    for &level in &levels {
        let vocab = build_vocabulary(&corpus, level)?;
        let x = build(&corpus, &vocab)?;
        let h = hessian_summary(&x);
        let (x_tr, y_tr) = rows(&x, &s.train, &y);
        let (x_te, y_te) = rows(&x, &s.test, &y);
        let f = fit(&x_tr, &y_tr, &args.fit.config(lambda))?;
        table.push(GranularityRow {
            level,
            p: h.p,
            n: h.n,
            trace: h.trace,
            mean_eigenvalue: h.mean_eigenvalue,
            lambda,
            lambda_per_n,
            train_r2: r2_score(&y_tr, &predict(&f, &x_tr)?)?,
            test_r2: r2_score(&y_te, &predict(&f, &x_te)?)?,
            iterations: f.iterations,
            converged: f.converged,
        });
        designs.push((vocab, x));
    }

    let mut csv = csv_header(
        "granularity",
        "level,p,n,trace,mean_eigenvalue,lambda,lambda_per_n,train_r2,test_r2,iterations,converged",
    );
    for r in &table {
        let _ = writeln!(
            csv,
            "{},{},{},{},{:e},{},{},{},{},{},{}",
            r.level, r.p, r.n, r.trace, r.mean_eigenvalue, r.lambda, r.lambda_per_n, r.train_r2, r.test_r2, r.iterations, r.converged
        );
    }
    out.write("granularity.csv", csv.as_bytes())?;

    let mut merges = Vec::new();
    for pair in designs.windows(2) {
        let (coarse, fine) = (&pair[0], &pair[1]);
        let q = build_merge_map(&fine.0, coarse.0.level())?;
        let report = verify_merge_trace(&fine.1, &q)?;
        out.verify(
            &format!("merge_trace_l{}_to_l{}", report.from_level, report.to_level),
            report.passed,
            format!("trace {} -> {}, delta {}, pair mass {}", report.trace_before, report.trace_after, report.delta, report.merged_pair_mass),
        );
        merges.push(report);
    }
    out.write_json("merge_trace.json", &merges)?;
    out.verify(
        "fits_converged",
        table.iter().all(|r| r.converged),
        format!("{} of {} converged", table.iter().filter(|r| r.converged).count(), table.len()),
    );

    let series = |name: &str, f: fn(&GranularityRow) -> f64| Series {
        name: name.into(),
        points: table.iter().map(|r| (r.level as f64, f(r))).collect(),
    };
    let svg = chart(
        ChartKind::Line,
        "Scores by granularity",
        "level",
        "R^2",
        &[series("train", |r| r.train_r2), series("test", |r| r.test_r2)],
    );
    out.write("granularity.svg", svg.as_bytes())?;
    out.finish("sweep-granularity", Some(args.seed), &[args.input.path.as_path()], started)
}

// ---------------------------------------------------------------- sweep-lambda

#[derive(Debug, Clone)]
pub struct LambdaArgs {
    pub input: InputOptions,
    pub out_dir: PathBuf,
    pub level: usize,
    pub lambdas: Vec<LambdaSpec>,
    pub train_ratios: Vec<f64>,
    pub seed: u64,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaRow {
    pub train_ratio: f64,
    pub n_train: usize,
    pub lambda: f64,
    pub lambda_per_n: f64,
    pub p: usize,
    /// Mean eigenvalue of the augmented training Hessian over `n_train`.
    pub mean_eigenvalue: f64,
    pub rho_b: f64,
    pub train_r2: f64,
    pub test_r2: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn lambda_grid(args: &LambdaArgs, corpus: &StayCorpus) -> Result<Vec<LambdaRow>, CliError> {
    if args.lambdas.is_empty() || args.train_ratios.is_empty() {
        return Err(CliError::Arguments("lambda and train-ratio grids must be non-empty".into()));
    }
    for l in &args.lambdas {
        l.validate()?;
    }
    check_level(args.level)?;
    let vocab = build_vocabulary(corpus, args.level)?;
    let x = build(corpus, &vocab)?;
    let y = corpus.outcomes();
    let mut table = Vec::new();
    for &ratio in &args.train_ratios {
        let s = split(corpus.len(), ratio, args.seed)?;
        let n_train = s.train.len();
        let (x_tr, y_tr) = rows(&x, &s.train, &y);
        let (x_te, y_te) = rows(&x, &s.test, &y);
        let s_bar = hessian_summary(&x_tr).augmented_mean_eigenvalue();
        let mut lambdas: Vec<(f64, f64)> = args.lambdas.iter().map(|l| l.resolve(n_train)).collect();
        lambdas.sort_by(|a, b| a.0.total_cmp(&b.0));
        lambdas.dedup();
        // cells run in parallel; collect keeps grid order
        let cells: Vec<Result<LambdaRow, CliError>> = lambdas
            .par_iter()
            .map(|&(lambda, lambda_per_n)| {
                let f = fit(&x_tr, &y_tr, &args.fit.config(lambda))?;
                Ok(LambdaRow {
                    train_ratio: ratio,
                    n_train,
                    lambda,
                    lambda_per_n,
                    p: x_tr.n_cols(),
                    mean_eigenvalue: s_bar,
                    rho_b: effective_dimension_bound(x_tr.n_cols() + 1, s_bar, lambda, n_train),
                    train_r2: r2_score(&y_tr, &predict(&f, &x_tr)?)?,
                    test_r2: r2_score(&y_te, &predict(&f, &x_te)?)?,
                    iterations: f.iterations,
                    converged: f.converged,
                })
            })
            .collect();
        for c in cells {
            table.push(c?);
        }
    }
    Ok(table)
}

pub fn cmd_sweep_lambda(args: &LambdaArgs) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(&args.out_dir)?;
    let corpus = args.input.load(&mut out)?;
    out.config("level", args.level);
    out.config("lambdas", format!("{:?}", args.lambdas));
    out.config("train_ratios", format!("{:?}", args.train_ratios));
    out.config("seed", args.seed);
    args.fit.echo(&mut out);
    let table = lambda_grid(args, &corpus)?;

    let mut csv = csv_header(
        "lambda_sweep",
        "train_ratio,n_train,lambda,lambda_per_n,p,mean_eigenvalue,rho_b,train_r2,test_r2,iterations,converged",
    );
    for r in &table {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{:e},{},{},{},{},{}",
            r.train_ratio,
            r.n_train,
            r.lambda,
            r.lambda_per_n,
            r.p,
            r.mean_eigenvalue,
            r.rho_b,
            r.train_r2,
            r.test_r2,
            r.iterations,
            r.converged
        );
    }
    out.write("lambda_sweep.csv", csv.as_bytes())?;

    let mut ratios: Vec<f64> = table.iter().map(|r| r.train_ratio).collect();
    ratios.dedup();
    for (name, pick) in [("test", (|r: &LambdaRow| r.test_r2) as fn(&LambdaRow) -> f64), ("train", |r| r.train_r2)] {
        let series: Vec<Series> = ratios
            .iter()
            .map(|&ratio| Series {
                name: format!("ratio {ratio}"),
                points: table
                    .iter()
                    .filter(|r| r.train_ratio == ratio)
                    .map(|r| (r.rho_b, pick(r)))
                    .collect(),
            })
            .collect();
        let svg = chart(
            ChartKind::Scatter,
            &format!("{name} R^2 against the effective dimension bound"),
            "rho_B",
            &format!("{name} R^2"),
            &series,
        );
        out.write(&format!("{name}_r2_vs_rho_b.svg"), svg.as_bytes())?;
    }
    out.verify(
        "fits_converged",
        table.iter().all(|r| r.converged),
        format!("{} of {} converged", table.iter().filter(|r| r.converged).count(), table.len()),
    );
    out.finish("sweep-lambda", Some(args.seed), &[args.input.path.as_path()], started)
}

// ---------------------------------------------------------------- consistency

#[derive(Debug, Clone)]
pub struct ConsistencyArgs {
    pub input: InputOptions,
    pub out_dir: PathBuf,
    pub levels: Vec<usize>,
    pub lambdas: Vec<LambdaSpec>,
    pub replicates: usize,
    pub train_ratio: f64,
    pub seed: u64,
    pub fit: FitOptions,
    pub include_intercept: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRow {
    pub level: usize,
    pub lambda: f64,
    pub lambda_per_n: f64,
    pub replicates: usize,
    pub p: usize,
    pub eta: f64,
    pub mean_train_r2: f64,
    pub mean_test_r2: f64,
    pub converged: bool,
}

pub fn cmd_consistency(args: &ConsistencyArgs) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(&args.out_dir)?;
    let corpus = args.input.load(&mut out)?;
    let levels = check_levels(&args.levels)?;
    if args.lambdas.is_empty() {
        return Err(CliError::Arguments("at least one penalty is required".into()));
    }
    for l in &args.lambdas {
        l.validate()?;
    }
    out.config("levels", format!("{levels:?}"));
    out.config("lambdas", format!("{:?}", args.lambdas));
    out.config("replicates", args.replicates);
    out.config("train_ratio", args.train_ratio);
    out.config("seed", args.seed);
    out.config("include_intercept", args.include_intercept);
    args.fit.echo(&mut out);

    let n_train = split(corpus.len(), args.train_ratio, args.seed)?.train.len();
    let mut lambdas: Vec<(f64, f64)> = args.lambdas.iter().map(|l| l.resolve(n_train)).collect();
    lambdas.sort_by(|a, b| a.0.total_cmp(&b.0));
    lambdas.dedup();

    let mut table = Vec::new();
    for &level in &levels {
        let vocab = build_vocabulary(&corpus, level)?;
        for (k, &(lambda, lambda_per_n)) in lambdas.iter().enumerate() {
            let spec = EnsembleSpec {
                replicates: args.replicates,
                train_ratio: args.train_ratio,
                base_seed: args.seed,
                fit: args.fit.config(lambda),
                level,
                include_intercept: args.include_intercept,
            };
            let report = run_ensemble_with_vocabulary(&corpus, &vocab, &spec)?;
            let stem = format!("l{level}_lam{k}");
            let mut json = Vec::new();
            report.write_json(&mut json).map_err(|e| CliError::Io(e.to_string()))?;
            json.push(b'\n');
            out.write(&format!("consistency_{stem}.json"), &json)?;
            let mut coef = Vec::new();
            report.write_coefficients_csv(&mut coef)?;
            out.write(&format!("coefficients_{stem}.csv"), &coef)?;
            let pair = Series {
                name: "replicates 0, 1".into(),
                points: report.coefficients[0]
                    .iter()
                    .zip(&report.coefficients[1])
                    .map(|(&a, &b)| (a, b))
                    .collect(),
            };
            let svg = chart(
                ChartKind::Scatter,
                &format!("Coefficients, level {level}, lambda/n {lambda_per_n:.3e}"),
                "replicate 0",
                "replicate 1",
                &[pair],
            );
            out.write(&format!("scatter_{stem}.svg"), svg.as_bytes())?;

            let n = report.replicates.len() as f64;
            let expected_pairs = args.replicates * (args.replicates - 1) / 2;
            out.verify(
                &format!("eta_range_{stem}"),
                (-1.0..=1.0).contains(&report.eta) && report.pairwise.len() == expected_pairs,
                format!("eta {:.6} over {} pairs", report.eta, report.pairwise.len()),
            );
            out.verify(
                &format!("fits_converged_{stem}"),
                report.all_converged(),
                format!("{} replicates", report.replicates.len()),
            );
            table.push(ConsistencyRow {
                level,
                lambda,
                lambda_per_n,
                replicates: report.replicates.len(),
                p: report.p,
                eta: report.eta,
                mean_train_r2: report.replicates.iter().map(|r| r.train_r2).sum::<f64>() / n,
                mean_test_r2: report.replicates.iter().map(|r| r.test_r2).sum::<f64>() / n,
                converged: report.all_converged(),
            });
        }
    }

    let mut csv = csv_header(
        "consistency",
        "level,lambda,lambda_per_n,replicates,p,eta,mean_train_r2,mean_test_r2,converged",
    );
    for r in &table {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.level, r.lambda, r.lambda_per_n, r.replicates, r.p, r.eta, r.mean_train_r2, r.mean_test_r2, r.converged
        );
    }
    out.write("consistency.csv", csv.as_bytes())?;

    let svg = if lambdas.len() > 1 {
        let series: Vec<Series> = levels
            .iter()
            .map(|&l| Series {
                name: format!("level {l}"),
                points: table
                    .iter()
                    .filter(|r| r.level == l)
                    .map(|r| (r.lambda_per_n, r.eta))
                    .collect(),
            })
            .collect();
        chart(ChartKind::Line, "Consistency against penalty", "lambda / n_train", "eta", &series)
    } else {
        let series = Series {
            name: "eta".into(),
            points: table.iter().map(|r| (r.level as f64, r.eta)).collect(),
        };
        chart(ChartKind::Line, "Consistency against granularity", "level", "eta", &[series])
    };
    out.write("eta.svg", svg.as_bytes())?;
    out.finish("consistency", Some(args.seed), &[args.input.path.as_path()], started)
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone)]
pub struct SpectrumArgs {
    pub input: InputOptions,
    pub out_dir: PathBuf,
    pub levels: Vec<usize>,
    pub cap: usize,
    /// Fixed power-law cutoff; `None` scans for it.
    pub x_min: Option<f64>,
    pub min_tail: usize,
    pub log_binning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub level: usize,
    pub p: usize,
    pub trace: u64,
    pub mean_eigenvalue: f64,
    pub power_law: Option<PowerLawFit>,
    pub histogram_slope: Option<f64>,
    pub rank: Option<usize>,
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputSet::new(&args.out_dir)?;
    let corpus = args.input.load(&mut out)?;
    let levels = check_levels(&args.levels)?;
    out.config("levels", format!("{levels:?}"));
    out.config("cap", args.cap);
    out.config("x_min", args.x_min.map_or("ks_scan".to_string(), |x| x.to_string()));
    out.config("min_tail", args.min_tail);
    out.config("log_binning", args.log_binning);

    let mut table = Vec::new();
    let mut histogram_series = Vec::new();
    for &level in &levels {
        let vocab = build_vocabulary(&corpus, level)?;
        let x = build(&corpus, &vocab)?;
        let h = hessian_summary(&x);

        let bins = diagonal_histogram(&h, args.log_binning);
        let mut buf = Vec::new();
        write_histogram_csv(&bins, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        out.write(&format!("histogram_l{level}.csv"), &buf)?;
        let counted: usize = bins.iter().map(|b| b.count).sum();
        out.verify(
            &format!("histogram_conservation_l{level}"),
            counted == h.p,
            format!("{counted} of {} columns binned", h.p),
        );
        histogram_series.push(Series {
            name: format!("level {level}"),
            points: bins
                .iter()
                .filter(|b| b.bin_low > 0.0)
                .map(|b| {
                    let center = (b.bin_low * (b.bin_high - 1.0).max(b.bin_low)).sqrt();
                    (center.log10(), (b.count as f64 / (b.bin_high - b.bin_low)).log10())
                })
                .collect(),
        });

        let diag: Vec<f64> = h.diagonal.iter().map(|&d| d as f64).collect();
        let selection = match args.x_min {
            Some(x) => XminSelection::Fixed(x),
            None => XminSelection::KsScan {
                min_tail: args.min_tail,
            },
        };
        let power_law = match fit_power_law(&diag, selection, PowerLawEstimator::Discrete) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("level {level}: no power-law fit: {e}");
                None
            }
        };
        let histogram_slope = log_log_slope_from(&bins, power_law.as_ref().map_or(0.0, |f| f.x_min));
        out.write_json(&format!("powerlaw_l{level}.json"), &serde_json::json!({
            "level": level,
            "fit": power_law,
            "histogram_slope_above_x_min": histogram_slope,
        }))?;

        let mut rank = None;
        if h.p < args.cap {
            let spectrum = augmented_spectrum(&x, args.cap)?;
            let mut buf = Vec::new();
            spectrum.write_csv(&mut buf)?;
            out.write(&format!("spectrum_l{level}.csv"), &buf)?;
            out.verify(
                &format!("trace_identity_l{level}"),
                spectrum.trace_check <= TRACE_TOLERANCE,
                format!("relative gap {:e}", spectrum.trace_check),
            );
            rank = Some(spectrum.rank());
            if spectrum.rank() == spectrum.dim {
                let gram = DenseSymmetric::from_rows(&x.augmented_gram(args.cap)?)?;
                let report = verify_inverse_trace_with_cap(&gram, args.cap)?;
                out.verify(
                    &format!("inverse_trace_l{level}"),
                    report.passed,
                    format!("S_V {:e}, S_I {:e}, 1/trace {:e}", report.s_v, report.s_i, report.lower_bound),
                );
                out.write_json(&format!("inverse_trace_l{level}.json"), &report)?;
            } else {
                log::info!("level {level}: Hessian is singular, variance sum check skipped");
            }
        }

        if level > MIN_LEVEL {
            let q = build_merge_map(&vocab, level - 1)?;
            let report = verify_merge_trace(&x, &q)?;
            out.verify(
                &format!("merge_trace_l{level}_to_l{}", level - 1),
                report.passed,
                format!("trace {} -> {}, delta {}", report.trace_before, report.trace_after, report.delta),
            );
            out.write_json(&format!("merge_trace_l{level}_to_l{}.json", level - 1), &report)?;
        }
        table.push(SpectrumRow {
            level,
            p: h.p,
            trace: h.trace,
            mean_eigenvalue: h.mean_eigenvalue,
            power_law,
            histogram_slope,
            rank,
        });
    }

    let mut csv = csv_header(
        "spectrum_summary",
        "level,p,trace,mean_eigenvalue,alpha_hat,x_min,n_tail,histogram_slope,rank",
    );
    for r in &table {
        let _ = writeln!(
            csv,
            "{},{},{},{:e},{},{},{},{},{}",
            r.level,
            r.p,
            r.trace,
            r.mean_eigenvalue,
            fmt_opt(r.power_law.as_ref().map(|f| f.alpha_hat)),
            fmt_opt(r.power_law.as_ref().map(|f| f.x_min)),
            r.power_law.as_ref().map_or(String::new(), |f| f.n_tail.to_string()),
            fmt_opt(r.histogram_slope),
            r.rank.map_or(String::new(), |k| k.to_string())
        );
    }
    out.write("spectrum_summary.csv", csv.as_bytes())?;
    let svg = chart(
        ChartKind::Line,
        "Hessian diagonal histograms",
        "log10 diagonal entry",
        "log10 density",
        &histogram_series,
    );
    out.write("histograms.svg", svg.as_bytes())?;
    out.finish("spectrum", None, &[args.input.path.as_path()], started)
}
