use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_psr::moments::EstimationMode;
use spectral_psr::Error;

mod commands;

#[derive(Parser)]
#[command(
    name = "spectral-psr",
    version,
    about = "Learn and run predictive-state models of discrete sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a corpus from an HMM parameter file.
    Gen(GenArgs),
    /// Learn a model from a corpus, a moments file, or exact HMM moments.
    Learn(LearnArgs),
    /// Log-probability of every sequence in a corpus.
    Score(ScoreArgs),
    /// Read one symbol per line from stdin and print the next-symbol prediction.
    Predict(PredictArgs),
    /// Error of learned models against the generating HMM over sample sizes and seeds.
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub hmm: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 3)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corpus path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct LearnArgs {
    #[arg(long, conflicts_with_all = ["moments", "exact"])]
    pub corpus: Option<PathBuf>,
    #[arg(long, conflicts_with = "exact")]
    pub moments: Option<PathBuf>,
    /// HMM parameter file; moments are computed analytically.
    #[arg(long, value_name = "HMM")]
    pub exact: Option<PathBuf>,
    /// Expected alphabet size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, conflicts_with = "auto_rank_threshold")]
    pub m: Option<usize>,
    /// Keep singular values above this fraction of the largest.
    #[arg(long)]
    pub auto_rank_threshold: Option<f64>,
    #[arg(long, default_value_t = EstimationMode::Heads)]
    pub mode: EstimationMode,
    /// Also write the moments used.
    #[arg(long, value_name = "PATH")]
    pub emit_moments: Option<PathBuf>,
    /// Model path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub hmm: PathBuf,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "100,1000,10000,100000")]
    pub sweep_ns: String,
    /// Comma-separated seeds or a half-open range `a..b`.
    #[arg(long, default_value = "0..20")]
    pub sweep_seeds: String,
    #[arg(long, default_value_t = 3)]
    pub eval_len: usize,
    #[arg(long, default_value_t = EstimationMode::Heads)]
    pub mode: EstimationMode,
    /// Directory for sweep_detail.csv and sweep_summary.csv; summary goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NoTriples | Error::EmptyCorpus | Error::DivisionByZeroGuard => 3,
        Error::PinvDegenerate
        | Error::ZeroMatrix
        | Error::SingularUO
        | Error::InvalidInit { .. }
        | Error::NonFinite(_) => 4,
        _ => 2,
    }
}

pub fn report(err: &Error) {
    let msg = err.to_string().replace(['\t', '\n'], " ");
    eprintln!("error\t{}\t{}", err.kind(), msg);
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if code != 0 {
                let first = e.to_string();
                let first = first.lines().next().unwrap_or_default().trim_start_matches("error: ");
                eprintln!("error\tUsage\t{first}");
            }
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => commands::gen(&args),
        Command::Learn(args) => commands::learn(&args),
        Command::Score(args) => commands::score(&args),
        Command::Predict(args) => commands::predict(&args),
        Command::Sweep(args) => commands::sweep(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
