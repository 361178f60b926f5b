//! `mrar` command-line tool.

mod config;
mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Table;

use mrar::eval::{run_benchmark, score};
use mrar::ingest::{load_aras, load_canonical, load_casas, split_by_days, write_canonical, SplitSpec};
use mrar::model::{train_model, Hyperparams, TrainDetail};
use mrar::tables::{Block, TableFile};
use mrar::{Dataset, Exec, Model, ModelKind};

use config::{merge, read_table, set_key, RunConfig, SynthSpec};

/// Error reported as one `error: kind=... message="..."` line.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn context(self, what: &str) -> Self {
        Self { message: format!("{what}: {}", self.message), ..self }
    }

    fn line(&self) -> String {
        format!("error: kind={} message={:?}", self.kind, self.message)
    }
}

impl From<mrar::Error> for Failure {
    fn from(e: mrar::Error) -> Self {
        Self::new(e.kind(), e.detail())
    }
}

const WORKERS_VAR: &str = "MRAR_WORKERS";

#[derive(Parser)]
#[command(name = "mrar", version, about = "Multi-resident activity recognition benchmarks")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw corpus to the canonical day-file format.
    Ingest {
        #[arg(long)]
        format: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// ARAS house (A or B).
        #[arg(long)]
        house: Option<String>,
    },
    /// Sample a synthetic multi-resident corpus in canonical format.
    Synth {
        #[command(flatten)]
        spec: SynthSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model and save it together with its symbol table.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Write per-step predictions as TSV.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Run the model × dataset matrix and write the reports.
    Benchmark(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "canonical")]
    format: String,
    #[arg(long)]
    house: Option<String>,
    /// Day counts `train,val,test`; without it every day is used.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model name as in the report, e.g. HMM, fCRF, mRNN_lstm.
    #[arg(long)]
    model: String,
    /// Override the label encoding (combined or separate).
    #[arg(long)]
    encoding: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Base configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Further configuration files (typically `[data.NAME]` sections),
    /// merged after `--config`.
    #[arg(long)]
    data: Vec<PathBuf>,
    /// Same as `--set run.models=...`.
    #[arg(long)]
    models: Option<String>,
    /// Same as `--set run.out=...`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Same as `--set run.repeats=...`.
    #[arg(long)]
    repeats: Option<usize>,
    /// Same as `--set run.seed=...`.
    #[arg(long)]
    seed: Option<u64>,
    /// Set any config key, e.g. `--set grid.max_expansions=0`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::new("io", format!("{}: {e}", path.display()))
}

fn workers() -> Result<usize, Failure> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Failure::config(format!("{WORKERS_VAR} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[cfg(feature = "parallel")]
fn init_pool(n: usize) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new("io", format!("cannot start worker pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_: usize) -> Result<(), Failure> {
    Ok(())
}

fn load(format: &str, path: &Path, house: Option<&str>) -> Result<(Dataset, String), Failure> {
    if !path.exists() {
        return Err(Failure::config(format!("data path {} does not exist", path.display())));
    }
    Ok(match format {
        "casas" => (load_casas(path)?, "timebase=event source=casas".into()),
        "aras" => {
            let house = house.ok_or_else(|| Failure::config("ARAS data needs --house"))?.parse()?;
            let ds = load_aras(path, house)?;
            (ds, format!("timebase=1hz source=aras-{}", house.tag()))
        }
        "canonical" => (load_canonical(path)?, "source=canonical".into()),
        other => return Err(Failure::config(format!("unknown format {other:?} (casas, aras, canonical)"))),
    })
}

fn cmd_ingest(format: &str, input: &Path, out: &Path, house: Option<&str>) -> Result<(), Failure> {
    let (ds, provenance) = load(format, input, house)?;
    write_canonical(&ds, out, &provenance)?;
    println!(
        "days={} steps={} residents={} sizes={:?} symbols={}",
        ds.len(),
        ds.total_steps(),
        ds.label_space.residents(),
        ds.label_space.sizes(),
        ds.codec.len()
    );
    Ok(())
}

fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<(), Failure> {
    let cfg = spec.generator()?;
    let ds = mrar::ingest::generate_synthetic(&cfg)?;
    write_canonical(&ds, out, &format!("timebase=step source=synthetic seed={}", spec.seed))?;
    let mut tables = TableFile::new("synth");
    tables.set("sizes", mrar::tables::join_usize(&cfg.sizes)).set("symbols", cfg.symbols).set("noise", cfg.noise);
    for (m, (p, a)) in cfg.priors.iter().zip(&cfg.transitions).enumerate() {
        tables.push(&format!("prior.{}", m + 1), Block::vector(p));
        tables.push(&format!("transition.{}", m + 1), Block::matrix(a));
    }
    tables.push("emission", Block::matrix(&cfg.emission));
    tables.write(&out.join("generator.tables"))?;
    println!("days={} steps={}", ds.len(), ds.total_steps());
    Ok(())
}

/// Loads data and picks the parts named by `--split`: (fit, validation,
/// held-out). Without a split all days are used for everything.
fn data_parts(args: &DataArgs) -> Result<(Dataset, Option<Dataset>, Dataset), Failure> {
    let (ds, _) = load(&args.format, &args.data, args.house.as_deref())?;
    match &args.split {
        Some(s) => {
            let (train, val, test) = split_by_days(&ds, SplitSpec::parse(s)?)?;
            let val = (!val.is_empty()).then_some(val);
            Ok((train, val, test))
        }
        None => Ok((ds.clone(), None, ds)),
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let mut kind: ModelKind = args.model.parse()?;
    if let Some(enc) = &args.encoding {
        kind = ModelKind::new(kind.family, enc.parse()?)?;
    }
    let d = Hyperparams::default();
    let hp = Hyperparams {
        alpha: args.alpha.unwrap_or(d.alpha),
        hidden: args.hidden.unwrap_or(d.hidden),
        learning_rate: args.learning_rate.unwrap_or(d.learning_rate),
        seed: args.seed.unwrap_or(d.seed),
        max_iter: args.max_iter.unwrap_or(d.max_iter),
        max_epochs: args.max_epochs.unwrap_or(d.max_epochs),
        patience: args.patience.unwrap_or(d.patience),
        ..d
    };
    let (train, val, _) = data_parts(&args.data)?;
    let val = match (&val, kind.is_rnn()) {
        (Some(v), _) => Some(v),
        (None, true) => return Err(Failure::config("recurrent models need --split with at least one validation day")),
        (None, false) => None,
    };
    let (model, detail) = train_model(kind, &hp, &train, val, Exec::Parallel)?;
    match detail {
        TrainDetail::Counts => log::info!("counted {} training days", train.len()),
        TrainDetail::Lbfgs(r) => log::info!("L-BFGS: {r:?}"),
        TrainDetail::Epochs(t) => log::info!("stopped after {} epochs, best {}", t.epochs.len(), t.best_epoch),
    }
    model.save(&train.codec, &args.out)?;
    println!("model={} days={} out={}", kind.name(), train.len(), args.out.display());
    Ok(())
}

fn cmd_evaluate(model_path: &Path, data: &DataArgs, predictions: Option<&Path>) -> Result<(), Failure> {
    let (model, codec) = Model::load(model_path)?;
    let (_, _, test) = data_parts(data)?;
    let test = test.with_codec(codec)?;
    let preds = model.predict_dataset(&test, Exec::Parallel)?;
    let residents = test.label_space.residents();
    let s = score(&preds, &test.instances, residents)?;
    let mut line = format!("model={} days={} steps={}", model.kind().name(), test.len(), test.total_steps());
    for (m, a) in s.residents.iter().enumerate() {
        write!(line, " accuracy_r{}={a:.6}", m + 1).unwrap();
    }
    write!(line, " accuracy_all={:.6}", s.all).unwrap();
    println!("{line}");
    if let Some(path) = predictions {
        let mut out = String::from("day\tstep\ttruth\tpredicted\n");
        for (inst, pred) in test.instances.iter().zip(&preds.predictions) {
            for (t, (a, p)) in inst.activities.iter().zip(pred).enumerate() {
                let join = |f: &mrar::ActivityFrame| mrar::tables::join_usize(&f.0);
                writeln!(out, "{}\t{t}\t{}\t{}", inst.day_id, join(a), join(p)).unwrap();
            }
        }
        std::fs::write(path, out).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Builds the effective config table: files in order, then flags.
fn effective_table(args: &BenchArgs) -> Result<Table, Failure> {
    if args.config.is_none() && args.data.is_empty() {
        return Err(Failure::config("benchmark needs --config or --data"));
    }
    let mut table = Table::new();
    for path in args.config.iter().chain(&args.data) {
        merge(&mut table, read_table(path)?);
    }
    if let Some(m) = &args.models {
        set_key(&mut table, &format!("run.models={m:?}"))?;
    }
    if let Some(o) = &args.out {
        set_key(&mut table, &format!("run.out={:?}", o.to_string_lossy()))?;
    }
    if let Some(r) = args.repeats {
        set_key(&mut table, &format!("run.repeats={r}"))?;
    }
    if let Some(s) = args.seed {
        set_key(&mut table, &format!("run.seed={s}"))?;
    }
    for s in &args.set {
        set_key(&mut table, s)?;
    }
    Ok(table)
}

/// Returns whether every row completed.
fn cmd_benchmark(args: &BenchArgs, workers: usize) -> Result<bool, Failure> {
    let table = effective_table(args)?;
    let rendered = toml::to_string(&table).map_err(|e| Failure::config(e.to_string()))?;
    let cfg = RunConfig::from_table(table)?;
    let plan = cfg.plan()?;
    let datasets = cfg.datasets()?;
    let manifest = manifest::render(&rendered, &cfg, workers)?;
    let report = run_benchmark(&plan, &datasets)?;

    let out = &cfg.run.out;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let files = [
        ("report.txt", report.to_text()),
        ("report.csv", report.accuracy_csv()),
        ("timing.csv", report.timing_csv()),
        ("summary.json", report.to_json()),
        ("manifest.txt", manifest),
    ];
    for (name, text) in &files {
        let path = out.join(name);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    print!("{}", files[0].1);
    let failed: Vec<String> = report.rows.iter().filter(|r| r.scores.is_none()).map(|r| format!("{}/{}", r.model, r.dataset)).collect();
    if !failed.is_empty() {
        eprintln!("{}", Failure::new("partial", format!("{} rows failed: {}", failed.len(), failed.join(", "))).line());
    }
    Ok(report.all_completed())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let workers = workers()?;
    init_pool(workers)?;
    match &cli.command {
        Command::Ingest { format, input, out, house } => cmd_ingest(format, input, out, house.as_deref()).map(|_| true),
        Command::Synth { spec, out } => cmd_synth(spec, out).map(|_| true),
        Command::Train(args) => cmd_train(args).map(|_| true),
        Command::Evaluate { model, data, predictions } => {
            cmd_evaluate(model, data, predictions.as_deref()).map(|_| true)
        }
        Command::Benchmark(args) => cmd_benchmark(args, workers),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", Failure::new("usage", first).line());
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(2)
        }
    }
}
