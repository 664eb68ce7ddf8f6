//! Command-line front end: fit, impute, correlate, simulate, bench.
//!
//! Exit codes: 0 success (including partial correlate results), 1
//! computation failure (error JSON on stdout), 2 usage error.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use censcorr::harness::{
    benchmark_runtime, load_csv, load_signs, run_experiment, synth_generate, synth_signs,
    Dataset, ExperimentConfig, BENCH_GRID,
};
use censcorr::report;
use censcorr_core::correlation::{
    naive_pcc, tobit_pcc, CorrConfig, PairedCensoredData, SignLabel,
};
use censcorr_core::linalg::Mat;
use censcorr_core::tobit::{fit_censored_regression, FitSettings, PriorKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "censcorr", version, about = "Correlation estimation from left-censored data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Sym,
    Asym,
}

impl From<PriorArg> for PriorKind {
    fn from(p: PriorArg) -> PriorKind {
        match p {
            PriorArg::Sym => PriorKind::Symmetric,
            PriorArg::Asym => PriorKind::Asymmetric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct OutputArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with a header row; all non-target columns become features.
    #[arg(long)]
    input: PathBuf,
    /// Target column name.
    #[arg(long)]
    target: String,
    /// Detection limit: target values strictly below are treated as
    /// censored. Omit for fully observed data.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value = "sym")]
    prior: PriorArg,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Sign-knowledge sidecar JSON {variable: "positive"|"negative"|"unknown"}.
    #[arg(long)]
    signs: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    input: PathBuf,
    /// The two target columns, comma separated: A,B.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    /// Detection limit for the first target.
    #[arg(long)]
    theta_a: Option<f64>,
    /// Detection limit for the second target.
    #[arg(long)]
    theta_b: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    signs: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// CSV input; omit to use a synthetic dataset.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic generator parameters n,d,rho (used when --input is
    /// absent; defaults to 2000,8,0.5).
    #[arg(long, value_delimiter = ',')]
    synthetic: Option<Vec<String>>,
    /// Restrict to one ordered pair A,B; default is all ordered pairs.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    #[arg(long, default_value_t = 50)]
    n_sub: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    signs: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on parallel worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Feature count of the synthetic timing instances.
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Sample sizes to time, comma separated; defaults to the standard
    /// grid 10..1000.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// EM iteration budget per fit.
    #[arg(long, default_value_t = 30)]
    iters: usize,
    /// Timed samples per cell.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Tobit regression for one censored target column.
    Fit(FitArgs),
    /// Fit and emit the completed (imputed) target series.
    Impute(FitArgs),
    /// Estimate the correlation of two censored columns three ways.
    Correlate(CorrelateArgs),
    /// Run the repeated-subsample censoring experiment.
    Simulate(SimulateArgs),
    /// Time symmetric vs asymmetric fits over a grid of sample sizes.
    Bench(BenchArgs),
}

/// Flag-shape problems are usage errors (exit 2), matching clap's own
/// behavior for missing flags.
fn usage_error(message: &str) -> ! {
    eprintln!("error: {message}");
    std::process::exit(2);
}

fn effective_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("CENSCORR_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), String> {
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn signs_or_default(path: &Option<PathBuf>) -> Result<HashMap<String, SignLabel>, String> {
    match path {
        Some(p) => load_signs(p).map_err(|e| e.to_string()),
        None => Ok(HashMap::new()),
    }
}

/// A finite stand-in detection limit below every observed value, used
/// when no limit is supplied (fully observed data).
fn below_all(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min) - 1.0
}

/// Splits a dataset into the target column (with visibility under
/// `theta`) and the remaining columns as a feature matrix.
fn split_target(
    ds: &Dataset,
    target: &str,
    theta: Option<f64>,
) -> Result<(Mat, Vec<f64>, Vec<bool>, f64, Vec<String>), String> {
    let jt = ds
        .column_index(target)
        .ok_or_else(|| format!("column {target:?} not found"))?;
    let y = ds.column(jt);
    let theta = theta.unwrap_or_else(|| below_all(&y));
    let visible: Vec<bool> = y.iter().map(|&v| v >= theta).collect();
    let feature_cols: Vec<usize> = (0..ds.p()).filter(|&j| j != jt).collect();
    let mut x = Mat::zeros(ds.n(), feature_cols.len());
    for i in 0..ds.n() {
        for (c, &j) in feature_cols.iter().enumerate() {
            x.set(i, c, ds.values.get(i, j));
        }
    }
    let names = feature_cols.iter().map(|&j| ds.names[j].clone()).collect();
    Ok((x, y, visible, theta, names))
}

fn fit_settings(
    prior: PriorArg,
    lambda: f64,
    feature_names: &[String],
    signs: &HashMap<String, SignLabel>,
    seed: u64,
) -> FitSettings {
    let mut i_pos = Vec::new();
    let mut i_neg = Vec::new();
    for (j, name) in feature_names.iter().enumerate() {
        match signs.get(name) {
            Some(SignLabel::Positive) => i_pos.push(j),
            Some(SignLabel::Negative) => i_neg.push(j),
            _ => {}
        }
    }
    let mut settings = FitSettings {
        prior_kind: prior.into(),
        lambda,
        i_pos,
        i_neg,
        ..FitSettings::default()
    };
    settings.em.seed = seed;
    settings
}

fn cmd_fit(args: &FitArgs, impute: bool) -> Result<(), String> {
    let loaded = load_csv(&args.input, std::slice::from_ref(&args.target))
        .map_err(|e| e.to_string())?;
    if loaded.dropped_rows > 0 {
        eprintln!("dropped {} rows with blank cells", loaded.dropped_rows);
    }
    let signs = signs_or_default(&args.signs)?;
    let (x, y, visible, theta, feature_names) =
        split_target(&loaded.dataset, &args.target, args.theta)?;
    let settings = fit_settings(
        args.prior,
        args.lambda,
        &feature_names,
        &signs,
        effective_seed(args.seed),
    );
    let model =
        fit_censored_regression(&x, &y, &visible, theta, &settings).map_err(|e| e.to_string())?;
    let text = if impute {
        let completed = model
            .impute_series(&x, &y, &visible, theta)
            .map_err(|e| e.to_string())?;
        serde_json::to_string_pretty(&json!({
            "target": args.target,
            "theta": theta,
            "completed": completed,
        }))
        .unwrap()
    } else {
        serde_json::to_string_pretty(&model).unwrap()
    };
    emit(&args.out, &text)
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<(), String> {
    if args.targets.len() != 2 {
        usage_error("--targets requires exactly two column names: A,B");
    }
    let loaded = load_csv(&args.input, &args.targets).map_err(|e| e.to_string())?;
    let ds = &loaded.dataset;
    let signs = signs_or_default(&args.signs)?;
    let (var_a, var_b) = (&args.targets[0], &args.targets[1]);
    let ja = ds.column_index(var_a).ok_or("first target missing")?;
    let jb = ds.column_index(var_b).ok_or("second target missing")?;
    let y_a = ds.column(ja);
    let y_b = ds.column(jb);
    let theta_a = args.theta_a.unwrap_or_else(|| below_all(&y_a));
    let theta_b = args.theta_b.unwrap_or_else(|| below_all(&y_b));
    let side_cols: Vec<usize> = (0..ds.p()).filter(|&j| j != ja && j != jb).collect();
    let mut side_info = Mat::zeros(ds.n(), side_cols.len());
    for i in 0..ds.n() {
        for (c, &j) in side_cols.iter().enumerate() {
            side_info.set(i, c, ds.values.get(i, j));
        }
    }
    let data = PairedCensoredData {
        vis_a: y_a.iter().map(|&v| v >= theta_a).collect(),
        vis_b: y_b.iter().map(|&v| v >= theta_b).collect(),
        y_a,
        theta_a,
        y_b,
        theta_b,
        side_signs: side_cols
            .iter()
            .map(|&j| *signs.get(&ds.names[j]).unwrap_or(&SignLabel::Unknown))
            .collect(),
        sign_b: *signs.get(var_b).unwrap_or(&SignLabel::Unknown),
        side_info,
    };
    let config = CorrConfig {
        lambda: args.lambda,
        ..CorrConfig::default()
    };

    // partial results are valid output; failed estimators are marked
    // unavailable instead of aborting
    let mut estimates = Vec::new();
    let mut record = |name: &str, result: Result<serde_json::Value, String>| match result {
        Ok(mut v) => {
            v["available"] = json!(true);
            estimates.push(v);
        }
        Err(e) => estimates.push(json!({
            "method": name,
            "available": false,
            "error": e,
        })),
    };
    record(
        "naive",
        naive_pcc(&data)
            .map(|e| serde_json::to_value(&e).unwrap())
            .map_err(|e| e.to_string()),
    );
    for (name, kind) in [
        ("sym_tobit", PriorKind::Symmetric),
        ("asym_tobit", PriorKind::Asymmetric),
    ] {
        record(
            name,
            tobit_pcc(&data, kind, &config)
                .map(|e| serde_json::to_value(&e).unwrap())
                .map_err(|e| e.to_string()),
        );
    }
    emit(
        &args.out,
        &serde_json::to_string_pretty(&json!({ "estimates": estimates })).unwrap(),
    )
}

fn simulate_dataset(args: &SimulateArgs, seed: u64) -> Result<(Dataset, bool), String> {
    match &args.input {
        Some(path) => {
            let required: Vec<String> = args.targets.clone().unwrap_or_default();
            let loaded = load_csv(path, &required).map_err(|e| e.to_string())?;
            if loaded.dropped_rows > 0 {
                eprintln!("dropped {} rows with blank cells", loaded.dropped_rows);
            }
            Ok((loaded.dataset, false))
        }
        None => {
            let (n, d, rho) = match &args.synthetic {
                Some(parts) => {
                    let n = parts[0].parse().map_err(|_| "bad synthetic n")?;
                    let d = parts[1].parse().map_err(|_| "bad synthetic d")?;
                    let rho = parts[2].parse().map_err(|_| "bad synthetic rho")?;
                    (n, d, rho)
                }
                None => (2000, 8, 0.5),
            };
            let ds = synth_generate(d, n, rho, seed).map_err(|e| e.to_string())?;
            Ok((ds, true))
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), String> {
    if args.targets.as_ref().is_some_and(|t| t.len() != 2) {
        usage_error("--targets requires exactly two column names: A,B");
    }
    if args.synthetic.as_ref().is_some_and(|s| s.len() != 3) {
        usage_error("--synthetic requires n,d,rho");
    }
    let seed = effective_seed(args.seed);
    let (ds, synthetic) = simulate_dataset(args, seed ^ 0x5f5f)?;
    let signs = if synthetic {
        synth_signs(&ds)
    } else {
        signs_or_default(&args.signs)?
    };
    let pairs: Vec<(String, String)> = match &args.targets {
        Some(t) => vec![(t[0].clone(), t[1].clone())],
        None => {
            let mut v = Vec::new();
            for a in &ds.names {
                for b in &ds.names {
                    if a != b {
                        v.push((a.clone(), b.clone()));
                    }
                }
            }
            v
        }
    };
    let cfg = ExperimentConfig {
        n_sub: args.n_sub,
        trials: args.trials,
        negative_ratio: args.ratio,
        base_seed: seed,
        lambda: args.lambda,
    };
    let rep = run_experiment(&ds, &pairs, &cfg, &signs, args.jobs).map_err(|e| e.to_string())?;
    let text = match args.out.format {
        Format::Json => serde_json::to_string_pretty(&rep).unwrap(),
        Format::Table => report::experiment_table(&rep),
    };
    emit(&args.out, &text)
}

fn cmd_bench(args: &BenchArgs) -> Result<(), String> {
    let ns = args.ns.clone().unwrap_or_else(|| BENCH_GRID.to_vec());
    let rep = benchmark_runtime(&ns, args.d, args.iters, args.repeats, effective_seed(args.seed))
        .map_err(|e| e.to_string())?;
    let text = match args.out.format {
        Format::Json => serde_json::to_string_pretty(&rep).unwrap(),
        Format::Table => report::bench_table(&rep),
    };
    emit(&args.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args, false),
        Command::Impute(args) => cmd_fit(args, true),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            println!(
                "{}",
                serde_json::to_string(&json!({ "error": message })).unwrap()
            );
            ExitCode::FAILURE
        }
    }
}
