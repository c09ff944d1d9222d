//! `pulda`: train, check and demonstrate the topic-model samplers.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 failed check.

mod commands;
mod config;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl From<pulda_core::Error> for Failure {
    fn from(e: pulda_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "pulda", version, about = "Pólya urn LDA and its partially collapsed and collapsed counterparts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a topic model to a UCI bag-of-words corpus.
    Train(Common),
    /// Sample a corpus from the LDA generative process and write it in UCI format.
    Synth(SynthArgs),
    /// Check the Poisson Pólya urn against the Dirichlet it approximates.
    PpuCheck(PpuCheckArgs),
    /// Compare collapsed and uncollapsed Gibbs sampling on a bivariate T target.
    Tdemo(TdemoArgs),
    /// Score the topics of a snapshot by co-occurrence coherence.
    EvalCoherence(CoherenceArgs),
}

/// Options shared by every subcommand. Each may also come from `--config`.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// UCI docword file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// UCI vocabulary file, one word per line.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Drop words occurring fewer times than this [default: 10].
    #[arg(long)]
    pub rare_limit: Option<u64>,
    /// Number of topics.
    #[arg(short = 'K', long = "topics")]
    pub topics: Option<usize>,
    /// Symmetric document-topic prior [default: 0.1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Symmetric topic-word prior [default: 0.01].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// pu, pc or collapsed [default: pu].
    #[arg(long)]
    pub sampler: Option<String>,
    /// Output directory; nothing is written anywhere else.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest count served by the Poisson alias cache [default: 100].
    #[arg(short = 'L', long = "cache-limit")]
    pub cache_limit: Option<usize>,
    /// Write zeros in the timing columns so the metrics file depends only on the seed.
    #[arg(long)]
    pub no_timings: bool,
    /// Words per topic in top-word lists and coherence [default: 10].
    #[arg(short = 'M', long)]
    pub top: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    vocab_size: usize,
    #[arg(long, default_value_t = 500)]
    docs: usize,
    #[arg(long, default_value_t = 100)]
    doc_len: usize,
}

#[derive(Args, Debug)]
struct PpuCheckArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TdemoArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated correlations.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0.9,0.99,0.999")]
    rho: Vec<f64>,
}

#[derive(Args, Debug)]
struct CoherenceArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot directory written by `train`.
    #[arg(long)]
    snapshot: PathBuf,
}

fn run() -> Result<(), Failure> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Err(Failure::Usage(String::new()))
            } else {
                Ok(())
            };
        }
    };
    match cli.command {
        Command::Train(c) => train::train(&c),
        Command::Synth(a) => commands::synth(&a.common, a.vocab_size, a.docs, a.doc_len),
        Command::PpuCheck(a) => commands::ppu_check(&a.common),
        Command::Tdemo(a) => commands::tdemo(&a.common, &a.rho),
        Command::EvalCoherence(a) => commands::eval_coherence(&a.common, &a.snapshot),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) if m.is_empty() => {}
                Failure::Usage(m) => eprintln!("error: {m}\n\nRun `pulda --help` for usage."),
                Failure::Data(m) => eprintln!("data error: {m}"),
                Failure::Check(m) => eprintln!("check failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
