//! The `comply` command-line tool.
//!
//! Every subcommand writes a `key=value` manifest next to its outputs
//! (`<out>.manifest`, or `manifest.txt` inside `--out-dir`). Subcommands that
//! only print results send the manifest to stderr.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical abort,
//! 4 toy check failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::Error;
use crate::eval::{self, Hasher, PairClassDataset, StsDataset, Task, Variant};
use crate::hasher::{self, ProductForm};
use crate::model::{self, Mode, ModelMeta};
use crate::toy::{self, ToyConfig};
use crate::trainer::{self, Corpus, Optimizer, Start, TrainConfig};
use crate::vocab::{self, Vocabulary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "comply", version, about = "Complex-valued winner-take-all sentence hashing")]
pub struct Cli {
    /// Worker threads for training, hashing and evaluation.
    #[arg(long, global = true, env = "COMPLY_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: u32,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count words in a corpus and write a vocabulary TSV.
    BuildVocab(BuildVocabArgs),
    /// Train a Comply or FlyVec model.
    Train(TrainArgs),
    /// Hash every line of a text file.
    Hash(HashArgs),
    /// Score a model on an STS or pair-classification TSV.
    Eval(EvalArgs),
    /// Run the four-neuron two-sentence demonstration.
    Toy(ToyArgs),
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Comply,
    Flyvec,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Comply => Mode::Complex,
            ModeArg::Flyvec => Mode::RealFlyVec,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Plain-text corpus, one sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Defaults to comply, or to the checkpoint's mode with --resume.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of neurons.
    #[arg(long = "K", default_value_t = 400)]
    pub neurons: usize,
    /// Length of the learning-rate schedule.
    #[arg(long, default_value_t = 15)]
    pub epochs: usize,
    /// Stop after this many epochs of the schedule.
    #[arg(long)]
    pub run_epochs: Option<usize>,
    #[arg(long, default_value_t = 4e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    /// Sliding-window length; required with --mode flyvec.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 64)]
    pub max_len: usize,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch trace CSV; defaults to `<out>.trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Comply,
    Complym,
    Flyvec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProductFormArg {
    PerPosition,
    Aggregate,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Comply)]
    pub variant: VariantArg,
    /// ComplyM score composition.
    #[arg(long, value_enum, default_value_t = ProductFormArg::PerPosition)]
    pub product_form: ProductFormArg,
    #[arg(long, default_value_t = 64)]
    pub max_len: usize,
}

impl ModelArgs {
    fn variant(&self) -> Variant {
        match self.variant {
            VariantArg::Comply => Variant::Comply,
            VariantArg::Complym => Variant::ComplyM(match self.product_form {
                ProductFormArg::PerPosition => ProductForm::PerPosition,
                ProductFormArg::Aggregate => ProductForm::Aggregate,
            }),
            VariantArg::Flyvec => Variant::FlyVec,
        }
    }

    fn describe(&self, m: &mut Manifest) {
        m.path("model", &self.model);
        m.path("vocab", &self.vocab);
        m.push("variant", self.variant().name());
        m.push("max_len", self.max_len);
    }
}

#[derive(Debug, Args)]
pub struct HashArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Text file, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Hash dump; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Sts,
    Pc,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("length").required(true).args(["k", "sweep"])))]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long)]
    pub data: PathBuf,
    /// Single hash length.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated hash lengths, e.g. "1,2,4".
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = ToyConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = ToyConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = ToyConfig::default().lr0)]
    pub lr: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{source}; last good weights written to {}", path.display())]
    NumericAbort { path: PathBuf, source: Error },
    #[error("toy checks failed:\n{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::NumericAbort { .. } => EXIT_NUMERIC,
            CliError::ChecksFailed(_) => EXIT_CHECK,
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Ordered `key=value` record of one invocation.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn new(subcommand: &str, threads: u32) -> Self {
        let mut m = Manifest::default();
        m.push("subcommand", subcommand);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("threads", threads);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn path(&mut self, key: &str, p: &Path) {
        self.push(key, p.display());
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    fn write_next_to(&self, output: &Path) -> CliResult {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest");
        write_file(Path::new(&name), self.render())
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads as usize)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::BuildVocab(a) => cmd_build_vocab(a, cli.threads),
        Command::Train(a) => cmd_train(a, cli.threads),
        Command::Hash(a) => cmd_hash(a, cli.threads),
        Command::Eval(a) => cmd_eval(a, cli.threads),
        Command::Toy(a) => cmd_toy(a, cli.threads),
    })
}

fn cmd_build_vocab(a: &BuildVocabArgs, threads: u32) -> CliResult {
    let max_size = usize::try_from(a.max_size).unwrap_or(usize::MAX);
    let v = vocab::build_vocab(&a.corpus, max_size)?;
    v.save(&a.out)?;
    let tokens: u64 = v.frequencies().counts().iter().sum();
    println!("Nvoc={} tokens={}", v.len(), tokens);

    let mut m = Manifest::new("build-vocab", threads);
    m.path("corpus", &a.corpus);
    m.path("out", &a.out);
    m.push("max_size", a.max_size);
    m.push("nvoc", v.len());
    m.push("tokens", tokens);
    m.write_next_to(&a.out)
}

fn cmd_train(a: &TrainArgs, threads: u32) -> CliResult {
    let vocab = Vocabulary::load(&a.vocab)?;
    let corpus = Corpus::from_text_file(&a.corpus, &vocab, a.max_len)?;
    let optimizer = match a.optimizer {
        OptimizerArg::Sgd => Optimizer::Sgd,
        OptimizerArg::Adam => Optimizer::adam(),
    };
    let config = TrainConfig {
        epochs: a.epochs,
        run_epochs: a.run_epochs,
        lr0: a.lr,
        batch_size: a.batch_size,
        window: a.window,
        max_sentence_len: a.max_len,
        seed: a.seed,
        optimizer,
        threads: threads as usize,
    };

    let (mode, start) = match &a.resume {
        Some(path) => {
            let (weights, meta) = model::load_model(path)?;
            if let Some(m) = a.mode {
                if Mode::from(m) != weights.mode() {
                    return Err(Error::ModeMismatch {
                        expected: Mode::from(m).name(),
                        found: weights.mode().name(),
                    }
                    .into());
                }
            }
            (weights.mode(), Start::Resume { weights, meta })
        }
        None => {
            let mode = a.mode.map_or(Mode::Complex, Mode::from);
            if mode == Mode::RealFlyVec && a.window.is_none() {
                return Err(CliError::Usage("--mode flyvec requires --window".into()));
            }
            (mode, Start::Fresh { neurons: a.neurons })
        }
    };

    let out = match trainer::train(&corpus, &vocab, &config, mode, start) {
        Ok(out) => out,
        Err(Error::NonFinite { epoch, step, last_good }) => {
            let path = with_suffix(&a.out, ".last-good");
            let meta = ModelMeta {
                seed: a.seed,
                trained_epochs: epoch as u32,
                vocab_hash: vocab.checksum(),
            };
            model::save_model(&last_good, &meta, &path)?;
            return Err(CliError::NumericAbort {
                path,
                source: Error::NonFinite { epoch, step, last_good },
            });
        }
        Err(e) => return Err(e.into()),
    };

    model::save_model(&out.weights, &out.meta, &a.out)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| with_suffix(&a.out, ".trace.csv"));
    out.trace.write_csv(&trace_path)?;
    if let Some(last) = out.trace.epochs.last() {
        println!(
            "epoch {} mean_energy {:.6} distinct_winners {}",
            last.epoch, last.mean_energy, last.distinct_winners
        );
    }

    let mut m = Manifest::new("train", threads);
    m.path("corpus", &a.corpus);
    m.path("vocab", &a.vocab);
    m.push("mode", mode.name());
    m.push("K", out.weights.neurons());
    m.push("nvoc", vocab.len());
    m.push("epochs", config.epochs);
    m.push(
        "run_epochs",
        config.run_epochs.map_or("all".to_string(), |n| n.to_string()),
    );
    m.push("trained_epochs", out.meta.trained_epochs);
    m.push("lr", config.lr0);
    m.push("batch_size", config.batch_size);
    m.push("window", config.window.map_or("none".to_string(), |w| w.to_string()));
    m.push("seed", config.seed);
    m.push(
        "optimizer",
        match a.optimizer {
            OptimizerArg::Sgd => "sgd",
            OptimizerArg::Adam => "adam",
        },
    );
    m.push("max_len", config.max_sentence_len);
    m.push("sentences", corpus.len());
    m.push("dropped_sentences", corpus.dropped());
    if let Some(r) = &a.resume {
        m.path("resume", r);
    }
    m.path("out", &a.out);
    m.path("trace", &trace_path);
    m.write_next_to(&a.out)
}

fn load_for_hashing(a: &ModelArgs) -> CliResult<(model::ComplexWeights, Vocabulary)> {
    let (w, meta) = model::load_model(&a.model)?;
    let vocab = Vocabulary::load(&a.vocab)?;
    if vocab.checksum() != meta.vocab_hash {
        return Err(Error::VocabMismatch.into());
    }
    let expected = match a.variant() {
        Variant::FlyVec => Mode::RealFlyVec,
        _ => Mode::Complex,
    };
    if w.mode() != expected {
        return Err(Error::ModeMismatch {
            expected: expected.name(),
            found: w.mode().name(),
        }
        .into());
    }
    Ok((w, vocab))
}

fn cmd_hash(a: &HashArgs, threads: u32) -> CliResult {
    let (w, vocab) = load_for_hashing(&a.model)?;
    if a.k == 0 || a.k > w.neurons() {
        return Err(Error::HashLengthOutOfRange {
            k: a.k,
            neurons: w.neurons(),
        }
        .into());
    }
    let hasher = Hasher {
        max_len: a.model.max_len,
        ..Hasher::new(&w, &vocab, a.model.variant())
    };
    let text = read_file(&a.input)?;
    let lines: Vec<&str> = text.lines().collect();
    let codes: Vec<_> = lines.par_iter().map(|l| hasher.hash(l, a.k)).collect();

    let mut dump = String::new();
    let mut skipped = 0usize;
    for (i, code) in codes.into_iter().enumerate() {
        match code {
            Ok(c) => {
                dump.push_str(&hasher::dump_line(i, &c));
                dump.push('\n');
            }
            Err(Error::EmptyEncoding) => {
                skipped += 1;
                eprintln!("line {i}: no in-vocabulary word, skipped");
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut m = Manifest::new("hash", threads);
    a.model.describe(&mut m);
    m.path("input", &a.input);
    m.push("k", a.k);
    m.push("lines", lines.len());
    m.push("skipped", skipped);
    match &a.out {
        Some(out) => {
            write_file(out, &dump)?;
            m.path("out", out);
            m.write_next_to(out)
        }
        None => {
            print!("{dump}");
            let _ = io::stdout().flush();
            eprint!("{}", m.render());
            Ok(())
        }
    }
}

fn cmd_eval(a: &EvalArgs, threads: u32) -> CliResult {
    let (w, vocab) = load_for_hashing(&a.model)?;
    let hasher = Hasher {
        max_len: a.model.max_len,
        ..Hasher::new(&w, &vocab, a.model.variant())
    };
    let (sts, pc);
    let task = match a.task {
        TaskArg::Sts => {
            sts = StsDataset::load(&a.data)?;
            Task::Sts(&sts)
        }
        TaskArg::Pc => {
            pc = PairClassDataset::load(&a.data)?;
            Task::PairClass(&pc)
        }
    };
    let metric_name = match a.task {
        TaskArg::Sts => "spearman",
        TaskArg::Pc => "average_precision",
    };

    let mut m = Manifest::new("eval", threads);
    a.model.describe(&mut m);
    m.push("task", metric_name);
    m.path("data", &a.data);

    if let Some(ks) = &a.sweep {
        let res = eval::sweep_hash_length(&hasher, task, ks, a.folds, a.seed)?;
        let csv = res.to_csv();
        let sel = &res.selection;
        let mut summary = format!(
            "best_k={} selection_{metric_name}={:.6}",
            sel.best_k, sel.selection_metric
        );
        if let (Some(mean), Some(std)) = (sel.test_mean, sel.test_std) {
            let _ = write!(summary, " test_mean={mean:.6} test_std={std:.6}");
        }
        eprintln!("{summary}");
        for p in &res.points {
            eprintln!("k={} mean={:.6} std={:.6}", p.k, p.mean, p.std);
        }
        m.push("sweep", ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
        m.push("folds", a.folds);
        m.push("seed", a.seed);
        m.push("dropped_pairs", res.dropped);
        m.push("best_k", sel.best_k);
        match &a.out {
            Some(out) => {
                write_file(out, &csv)?;
                m.path("out", out);
                m.write_next_to(out)
            }
            None => {
                print!("{csv}");
                eprint!("{}", m.render());
                Ok(())
            }
        }
    } else {
        let k = a.k.expect("clap requires --k or --sweep");
        let report = match task {
            Task::Sts(ds) => eval::eval_sts(&hasher, ds, k)?,
            Task::PairClass(ds) => eval::eval_pair_classification(&hasher, ds, k)?,
        };
        println!(
            "{metric_name}={} used={} dropped={}",
            report.metric, report.used, report.dropped
        );
        m.push("k", k);
        m.push("dropped_pairs", report.dropped);
        m.push(metric_name, report.metric);
        match &a.out {
            Some(out) => {
                write_file(out, format!("{metric_name}={}\n", report.metric))?;
                m.path("out", out);
                m.write_next_to(out)
            }
            None => {
                eprint!("{}", m.render());
                Ok(())
            }
        }
    }
}

fn cmd_toy(a: &ToyArgs, threads: u32) -> CliResult {
    let config = ToyConfig {
        seed: a.seed,
        epochs: a.epochs,
        lr0: a.lr,
        ..ToyConfig::default()
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    let vocab = toy::toy_vocab();
    let report = toy::run(&config)?;
    let dir = &a.out_dir;
    write_file(&dir.join("init_weights.csv"), toy::weights_csv(&report.initial, &vocab))?;
    write_file(
        &dir.join("final_weights.csv"),
        toy::weights_csv(&report.trained.weights, &vocab),
    )?;
    vocab.save(dir.join("vocab.tsv"))?;
    model::save_model(&report.trained.weights, &report.trained.meta, dir.join("model.cply"))?;
    let rendered = report.render();
    write_file(&dir.join("report.txt"), &rendered)?;
    print!("{rendered}");

    let mut m = Manifest::new("toy", threads);
    m.push("K", config.neurons);
    m.push("seed", config.seed);
    m.push("epochs", config.epochs);
    m.push("lr", config.lr0);
    m.push("batch_size", config.batch_size);
    m.push("optimizer", "sgd");
    m.path("out_dir", dir);
    m.push("passed", report.passed());
    write_file(&dir.join("manifest.txt"), m.render())?;

    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(rendered))
    }
}
