//! `trnn` command-line tool.
//!
//! Exit codes: 0 success, 1 verification or comparison failure, 2 usage or
//! configuration error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "trnn", version, about = "Second-order recurrent networks and automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the train/val/test splits for a Tomita grammar.
    GenData(GenDataArgs),
    /// Program a DFA into a second-order network.
    EncodeDfa(EncodeDfaArgs),
    /// Compile a Turing machine into a network lattice.
    EncodeTm(EncodeTmArgs),
    /// Run a lattice next to the interpreter and compare configurations.
    SimulateTm(SimulateTmArgs),
    /// Train networks on a Tomita grammar.
    Train(TrainArgs),
    /// Classification accuracy of a model on a dataset.
    Eval(EvalArgs),
    /// Extract a DFA from a model and compare it to an oracle.
    Extract(ExtractArgs),
    /// Minimize a DFA.
    Minimize(MinimizeArgs),
    /// Check two DFAs for language equivalence.
    Equiv(EquivArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long)]
    grammar: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated sizes for train,val,test1,test2,ext200,ext400.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Mode {
    Exact,
    Sigmoid,
}

#[derive(Args, Debug)]
struct DfaSource {
    /// DFA JSON file.
    #[arg(long, conflicts_with = "grammar")]
    dfa: Option<PathBuf>,
    /// Built-in Tomita grammar 1..=7.
    #[arg(long)]
    grammar: Option<usize>,
}

#[derive(Args, Debug)]
struct EncodeDfaArgs {
    #[command(flatten)]
    source: DfaSource,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 0.25)]
    eps0: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Variant {
    TwoStep,
    RealTime,
}

#[derive(Args, Debug)]
struct EncodeTmArgs {
    /// Turing machine JSON file.
    #[arg(long)]
    tm: PathBuf,
    #[arg(long, value_enum, default_value = "two-step")]
    variant: Variant,
    /// Use a sigmoid of this gain instead of the hard threshold.
    #[arg(long)]
    gain: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateTmArgs {
    /// Turing machine JSON file (compiled on the fly).
    #[arg(long, required_unless_present = "lattice", conflicts_with = "lattice")]
    tm: Option<PathBuf>,
    /// Previously compiled lattice JSON file.
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "two-step")]
    variant: Variant,
    /// Input tape as base-36 digits, e.g. `121`.
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    grammar: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// JSON training config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value_t = 1)]
    parallel_trials: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// TSV dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "ab")]
    alphabet: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    /// Oracle DFA JSON file.
    #[arg(long, conflicts_with = "grammar", required_unless_present = "grammar")]
    oracle: Option<PathBuf>,
    /// Built-in Tomita grammar as oracle.
    #[arg(long)]
    grammar: Option<usize>,
    /// JSON extraction config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Basename of the DOT files.
    #[arg(long, default_value = "automaton")]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MinimizeArgs {
    #[command(flatten)]
    source: DfaSource,
    /// Write the minimized DFA here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print a DOT rendering.
    #[arg(long)]
    dot: bool,
}

#[derive(Args, Debug)]
struct EquivArgs {
    a: PathBuf,
    b: PathBuf,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Verification or comparison did not hold (exit 1).
    Check(String),
    /// Bad arguments, unreadable or malformed input (exit 2).
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::EncodeDfa(a) => commands::encode_dfa(a),
        Command::EncodeTm(a) => commands::encode_tm(a),
        Command::SimulateTm(a) => commands::simulate_tm(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Extract(a) => commands::extract(a),
        Command::Minimize(a) => commands::minimize(a),
        Command::Equiv(a) => commands::equiv(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(msg) | Failure::Usage(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
