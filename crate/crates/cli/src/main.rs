//! `vqc`: dataset generation, training, landscape slices and Hessian spectra
//! for the variational classifiers in `vqc-core`.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use vqc_core::ansatz::{Classifier, EncodedSample, ModelKind, ModelSpec};
use vqc_core::dataio::{
    dataset_to_csv, gen_parity_dataset, gen_synthetic_tabular, load_csv, read_params, read_trace,
    spectra_of, write_atomic, write_params, write_slice, write_spectrum, write_trace, ArtifactFormat, Dataset,
    LabelColumn, SpectrumRecord,
};
use vqc_core::objective::{ClassifierObjective, Objective};
use vqc_core::spectra::{self, classify_stationary, descent_path_overlay, landscape_slice, DEFAULT_ZERO_BAND};
use vqc_core::trainer::{init_params, train_ahlr, train_gd, AhlrConfig, GdConfig, TrainingTrace};

#[derive(Parser, Debug)]
#[command(name = "vqc", version, about = "Variational quantum classifier experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a dataset CSV (parity table, synthetic tabular data, or a re-validated CSV).
    GenData(GenDataArgs),
    /// Train a model and write its trace, spectra and final parameters.
    Train(TrainArgs),
    /// Evaluate the loss on a grid over two parameters.
    Landscape(LandscapeArgs),
    /// Hessian spectrum and stationary-point verdict at a parameter vector.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenDataArgs {
    /// All sixteen four-bit inputs with XOR labels.
    #[arg(long, conflicts_with_all = ["synthetic", "csv"], required_unless_present_any = ["synthetic", "csv"])]
    parity: bool,
    /// Number of synthetic eight-feature samples.
    #[arg(long, value_name = "N", requires = "seed", conflicts_with = "csv")]
    synthetic: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Existing CSV to validate and normalise.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Label column of `--csv`, by header name or 0-based index.
    #[arg(long, value_name = "COL", default_value = "label")]
    label: String,
    /// The `--csv` file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(short, long, value_name = "PATH")]
    output: PathBuf,
}

/// Model and dataset selection shared by the training and analysis commands.
#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    #[arg(long, value_parser = parse_model)]
    #[serde(serialize_with = "serialize_display")]
    model: ModelKind,
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Label column, by header name or 0-based index.
    #[arg(long, value_name = "COL", default_value = "label")]
    label: String,
    /// Held-out fraction; defaults to 0.2 for tabular8 and no split for parity4.
    #[arg(long, value_name = "F")]
    test_frac: Option<f64>,
    #[arg(long, value_name = "S", default_value_t = 0)]
    split_seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Optimizer {
    Gd,
    Ahlr,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Optimizer::Gd)]
    opt: Optimizer,
    /// Fixed learning rate for `gd`.
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    /// Strictly decreasing learning-rate set for `ahlr`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.25, 0.1, 0.05, 0.01])]
    lr_set: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Parameter initialisation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Log the Hessian spectrum every K iterations (0 = off).
    #[arg(long, value_name = "K", default_value_t = 0)]
    spectrum_every: usize,
    /// Decision threshold on the measured expectation.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    threshold: f64,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 1e-4)]
    plateau_tol: f64,
    /// Negative-eigenvalue count at or above which `ahlr` restarts.
    #[arg(long, default_value_t = 2)]
    neg_threshold: usize,
    /// Eigenvalues below minus this value count as negative.
    #[arg(long, default_value_t = 1e-6)]
    neg_cut: f64,
    #[arg(long, default_value_t = 3)]
    max_restarts: usize,
    #[arg(short, long, value_name = "DIR")]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct LandscapeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// JSON array of trained parameters; all but the two axes stay frozen.
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    axes: Vec<usize>,
    #[arg(long, value_name = "G", default_value_t = 50)]
    grid: usize,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true,
          default_values_t = [-PI, PI])]
    range: Vec<f64>,
    /// Trace (`.csv` or `.json`) whose iterates are projected onto the axes.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[arg(short, long, value_name = "DIR")]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    /// Eigenvalues within this distance of zero count as flat.
    #[arg(long, default_value_t = DEFAULT_ZERO_BAND)]
    zero_band: f64,
    #[arg(short, long, value_name = "DIR")]
    output: PathBuf,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: vqc_core::Error| e.to_string())
}

fn serialize_display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<vqc_core::Error> for Failure {
    fn from(e: vqc_core::Error) -> Self {
        Self {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    argv: Vec<String>,
    config: Value,
    seed: Option<u64>,
    artifacts: Vec<String>,
    duration_secs: f64,
    version: &'static str,
    result: Value,
}

struct Run {
    command: &'static str,
    started: Instant,
    artifacts: Vec<String>,
}

impl Run {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            started: Instant::now(),
            artifacts: Vec::new(),
        }
    }

    fn wrote(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }

    fn finish(self, manifest_path: &Path, config: &impl Serialize, seed: Option<u64>, result: Value) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            config: serde_json::to_value(config).map_err(|e| Failure::input(e.to_string()))?,
            seed,
            artifacts: self.artifacts,
            duration_secs: self.started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION"),
            result,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::input(e.to_string()))?;
        write_atomic(manifest_path, text.as_bytes())?;
        Ok(())
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))
}

fn gen_data(args: &GenDataArgs) -> CliResult<()> {
    let mut run = Run::new("gen-data");
    let ds = if args.parity {
        gen_parity_dataset()
    } else if let Some(n) = args.synthetic {
        gen_synthetic_tabular(n, args.seed.expect("clap enforces --seed"))?
    } else if let Some(path) = &args.csv {
        let label: LabelColumn = args.label.parse()?;
        load_csv(path, &label, !args.no_header)?
    } else {
        return Err(Failure::input("one of --parity, --synthetic or --csv is required"));
    };
    if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_atomic(&args.output, dataset_to_csv(&ds).as_bytes())?;
    run.wrote(&args.output);
    let positives = ds.labels.iter().filter(|&&l| l == 1).count();
    println!(
        "wrote {} rows x {} features to {} ({positives} positive)",
        ds.len(),
        ds.n_features(),
        args.output.display()
    );
    let stem = args
        .output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let manifest = args.output.with_file_name(format!("{stem}.manifest.json"));
    let result = json!({ "rows": ds.len(), "features": ds.feature_names, "positives": positives });
    run.finish(&manifest, args, args.seed, result)
}

/// Data prepared for one model: training samples, optional held-out samples.
struct Prepared {
    classifier: Classifier,
    train: Vec<EncodedSample>,
    test: Vec<EncodedSample>,
}

fn prepare(args: &ModelArgs, threshold: f64) -> CliResult<Prepared> {
    let label: LabelColumn = args.label.parse()?;
    let ds = load_csv(&args.data, &label, true)?;
    let spec = ModelSpec::for_kind(args.model).with_threshold(threshold);
    ds.check_compatible(&spec)?;
    let test_frac = args.test_frac.unwrap_or(match args.model {
        ModelKind::Parity4 => 0.0,
        ModelKind::Tabular8 => 0.2,
    });
    let (train, test) = if test_frac == 0.0 {
        (ds.encode(&spec)?, Vec::new())
    } else {
        let (train, test): (Dataset, Dataset) = ds.shuffle_split(test_frac, args.split_seed)?;
        // Held-out rows are scaled with the training range, as at deployment.
        (train.encode(&spec)?, test.encode_with(&spec, &train.stats)?)
    };
    Ok(Prepared {
        classifier: Classifier::new(spec),
        train,
        test,
    })
}

fn accuracy_count(clf: &Classifier, params: &[f64], samples: &[EncodedSample]) -> CliResult<usize> {
    if samples.is_empty() {
        return Ok(0);
    }
    Ok((clf.accuracy(params, samples)? * samples.len() as f64).round() as usize)
}

fn spectrum_records(trace: &TrainingTrace) -> Vec<SpectrumRecord> {
    spectra_of(trace)
}

fn train(args: &TrainArgs) -> CliResult<()> {
    let mut run = Run::new("train");
    let data = prepare(&args.model, args.threshold)?;
    let objective = ClassifierObjective::new(&data.classifier, &data.train)?;
    let start = init_params(data.classifier.spec(), args.seed);
    let trace = match args.opt {
        Optimizer::Gd => train_gd(
            &objective,
            start,
            &GdConfig {
                learning_rate: args.lr,
                max_iters: args.iters,
                seed: args.seed,
                log_spectrum_every: args.spectrum_every,
                ..GdConfig::default()
            },
        )?,
        Optimizer::Ahlr => train_ahlr(
            &objective,
            start,
            &AhlrConfig {
                lr_set: args.lr_set.clone(),
                patience: args.patience,
                plateau_tol: args.plateau_tol,
                neg_eig_threshold: args.neg_threshold,
                neg_eig_cut: args.neg_cut,
                max_restarts: args.max_restarts,
                max_iters: args.iters,
                log_spectrum_every: args.spectrum_every,
            },
        )?,
    };

    create_dir(&args.output)?;
    let trace_path = args.output.join("trace.csv");
    write_trace(&trace, &trace_path, ArtifactFormat::Csv)?;
    run.wrote(&trace_path);
    let spectra = spectrum_records(&trace);
    if !spectra.is_empty() {
        let p = args.output.join("spectrum.csv");
        write_spectrum(&spectra, &p, ArtifactFormat::Csv)?;
        run.wrote(&p);
    }
    let final_params = trace.final_params().expect("at least one record");
    let params_path = args.output.join("params.json");
    write_params(final_params, &params_path)?;
    run.wrote(&params_path);

    let final_cost = trace.final_cost().expect("at least one record");
    let train_ok = accuracy_count(&data.classifier, final_params, &data.train)?;
    let test_ok = accuracy_count(&data.classifier, final_params, &data.test)?;
    println!("final cost {final_cost:.6e} after {} iterations", trace.records.len());
    println!("train accuracy {train_ok}/{}", data.train.len());
    if !data.test.is_empty() {
        println!("test accuracy {test_ok}/{}", data.test.len());
    }
    if matches!(args.opt, Optimizer::Ahlr) {
        println!(
            "ahlr: {} rate decreases, {} restarts, outcome {:?}",
            trace.lr_decreases(),
            trace.restarts(),
            trace.outcome
        );
    }
    let result = json!({
        "final_cost": final_cost,
        "iterations": trace.records.len(),
        "train_correct": train_ok,
        "train_size": data.train.len(),
        "test_correct": test_ok,
        "test_size": data.test.len(),
        "outcome": trace.outcome,
        "events": trace.events,
    });
    run.finish(&args.output.join("manifest.json"), args, Some(args.seed), result)
}

fn load_params_for(path: &Path, n_params: usize) -> CliResult<Vec<f64>> {
    let params = read_params(path)?;
    if params.len() != n_params {
        return Err(Failure::input(format!(
            "{} holds {} parameters, the model has {n_params}",
            path.display(),
            params.len()
        )));
    }
    Ok(params)
}

fn landscape(args: &LandscapeArgs) -> CliResult<()> {
    let mut run = Run::new("landscape");
    let data = prepare(&args.model, 0.0)?;
    let n_params = data.classifier.spec().n_params;
    let (i, j) = (args.axes[0], args.axes[1]);
    if i == j {
        return Err(Failure::input(format!("axes must differ, got {i} twice")));
    }
    if i >= n_params || j >= n_params {
        return Err(Failure::input(format!("axes ({i}, {j}) out of range for {n_params} parameters")));
    }
    let frozen = load_params_for(&args.params, n_params)?;
    let path = match &args.trace {
        Some(p) => Some(descent_path_overlay(&read_trace(p, ArtifactFormat::from_path(p)?)?, i, j)?),
        None => None,
    };
    let objective = ClassifierObjective::new(&data.classifier, &data.train)?;
    let slice = landscape_slice(&objective, &frozen, i, j, args.grid, (args.range[0], args.range[1]))?;

    create_dir(&args.output)?;
    let slice_path = args.output.join("slice.csv");
    write_slice(&slice, &slice_path, ArtifactFormat::Csv)?;
    run.wrote(&slice_path);
    if let Some(points) = &path {
        let mut text = String::from("iter,theta_i,theta_j,cost\n");
        for p in points {
            text.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", p.iter, p.theta_i, p.theta_j, p.cost));
        }
        let p = args.output.join("path.csv");
        write_atomic(&p, text.as_bytes())?;
        run.wrote(&p);
    }
    let cells = slice.grid.iter().flatten();
    let (lo, hi) = cells.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!(
        "{0}x{0} slice over axes ({i}, {j}): loss in [{lo:.6}, {hi:.6}]",
        args.grid
    );
    let result = json!({ "min": lo, "max": hi, "path_points": path.as_ref().map(Vec::len) });
    run.finish(&args.output.join("manifest.json"), args, None, result)
}

fn spectrum(args: &SpectrumArgs) -> CliResult<()> {
    let mut run = Run::new("spectrum");
    let data = prepare(&args.model, 0.0)?;
    let params = load_params_for(&args.params, data.classifier.spec().n_params)?;
    let objective = ClassifierObjective::new(&data.classifier, &data.train)?;
    let h = objective.hessian(&params)?;
    let s = spectra::eig_symmetric_with_band(&h, args.zero_band)?;
    let verdict = classify_stationary(&s.eigenvalues, args.zero_band)?;

    create_dir(&args.output)?;
    let p = args.output.join("spectrum.csv");
    let records = [SpectrumRecord {
        iter: 0,
        eigenvalues: s.eigenvalues.clone(),
    }];
    write_spectrum(&records, &p, ArtifactFormat::Csv)?;
    run.wrote(&p);

    let cost = objective.cost(&params)?;
    let gradient_norm = objective.gradient(&params)?.norm();
    for (rank, v) in s.eigenvalues.iter().enumerate() {
        println!("{rank:>3} {v:+.6e}");
    }
    println!(
        "negative {} zero {} positive {} (band {:e})",
        s.n_negative, s.n_zero, s.n_positive, args.zero_band
    );
    println!("cost {cost:.6e}, gradient norm {gradient_norm:.3e}");
    println!("verdict {}", verdict.as_str());
    let result = json!({
        "cost": cost,
        "gradient_norm": gradient_norm,
        "n_negative": s.n_negative,
        "n_zero": s.n_zero,
        "n_positive": s.n_positive,
        "verdict": verdict.as_str(),
    });
    run.finish(&args.output.join("manifest.json"), args, None, result)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Landscape(a) => landscape(a),
        Command::Spectrum(a) => spectrum(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
