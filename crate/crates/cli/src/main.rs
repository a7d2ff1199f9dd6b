//! `bell-eff` command-line tool. Every command prints one JSON artifact.
//! Exit status: 0 success, 2 verdict failure, 1 usage or input error.

mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bell-eff", version, about = "Efficiency and partition bounds for Bell distributions")]
pub struct Cli {
    /// Enumeration cap on strategies, table entries and columns.
    #[arg(long, global = true, env = "BELL_EFF_CAP", default_value_t = bell_eff::DEFAULT_CAP)]
    pub cap: u128,
    /// Seed for every random stream.
    #[arg(long, global = true, env = "BELL_EFF_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Relative error allowed when rationalizing irrational constants.
    #[arg(long, global = true, default_value = "1e-15")]
    pub precision: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build or check distribution files.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Compute a lower bound.
    Bound(BoundArgs),
    /// Extract or verify Bell certificates.
    #[command(subcommand)]
    Cert(CertCmd),
    /// Hidden Matching fixtures.
    #[command(subcommand)]
    Hm(HmCmd),
    /// Protocol reductions and simulation.
    #[command(subcommand)]
    Sim(SimCmd),
}

#[derive(Subcommand, Debug)]
pub enum DistCmd {
    /// Write a reference distribution.
    Build {
        #[arg(value_enum)]
        which: DistKind,
        /// Truth table of f for `pf`, rows split by `;` (e.g. "0 0; 0 1").
        #[arg(long, default_value = "0 0; 0 1")]
        table: String,
        /// Hidden Matching size for `hm`, or for `quantum --setup hm`.
        #[arg(short, long, default_value_t = 4)]
        n: usize,
        /// Quantum setup to measure.
        #[arg(long, value_enum, default_value_t = QuantumPreset::Tsirelson)]
        setup: QuantumPreset,
        /// Denominator limit for rationalizing quantum probabilities.
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Report normalization and nonsignaling; never fails on the verdict.
    Check { file: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Pf,
    Pr,
    Quantum,
    Hm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuantumPreset {
    Tsirelson,
    Hm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundName {
    Eff,
    EffEps,
    EffEta,
    EffNc,
    EffOneway,
    Nu,
    Prt,
    PrtFn,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(value_enum)]
    pub name: BoundName,
    #[command(flatten)]
    pub spec: BoundSpec,
    /// Include the LP in text form under "lp".
    #[arg(long)]
    pub dump_lp: bool,
}

#[derive(Args, Debug)]
pub struct BoundSpec {
    /// Distribution file (for `prt-fn`: {"f": [[z or null, ...], ...], "z": count}).
    #[arg(short = 'p', long = "input", value_name = "FILE")]
    pub p: String,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    /// Solve by column generation instead of full enumeration.
    #[arg(long)]
    pub colgen: bool,
}

#[derive(Subcommand, Debug)]
pub enum CertCmd {
    /// Solve a bound and write its certificate.
    Extract {
        #[arg(long, value_enum)]
        bound: BoundName,
        #[command(flatten)]
        spec: BoundSpec,
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Check a certificate against a distribution; exit 2 when invalid.
    Verify {
        #[arg(short = 'c', long = "cert", value_name = "FILE")]
        c: String,
        #[arg(short = 'p', long = "input", value_name = "FILE")]
        p: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum HmCmd {
    Dist(HmArgs),
    /// The Hidden Matching functional as a certificate file.
    Bell(HmArgs),
    /// Bell value on the HM distribution against the closed form; exit 2 on mismatch.
    Objective(HmArgs),
    /// Maximum of the functional over strategies where only Alice aborts.
    Scan(HmArgs),
    /// Degree-2 Fourier mass scan over all subsets (n ≤ 4).
    Fourier(HmArgs),
}

#[derive(Args, Debug)]
pub struct HmArgs {
    #[arg(short, long)]
    pub n: usize,
    #[arg(short = 'C', long = "kkl-c", default_value = "1")]
    pub c: String,
    #[arg(short, long)]
    pub output: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum SimCmd {
    /// Transcript-guessing reduction to an abort strategy mixture.
    Reduce(SimArgs),
    /// Feasible partition-bound weights from the protocol leaves.
    Partition(SimArgs),
    /// Repetition count and abort probability for a target efficiency.
    Amplify(SimArgs),
    /// Monte Carlo check of the reduction, amplified when `--eta` is given.
    Mc(SimArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 1-bit PR-box protocol.
    Pr1,
    /// PR-box protocol padded to 2 bits.
    Pr2,
    /// 0-bit protocol for the XOR distribution.
    Local,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[arg(long, conflicts_with = "preset")]
    pub protocol: Option<String>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Use the reduction in which Bob never aborts.
    #[arg(long)]
    pub one_way: bool,
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(out) => {
            // A closed pipe downstream is not an error worth reporting.
            let _ = std::io::stdout().write_all(output::render(&out.value, cli.format).as_bytes());
            ExitCode::from(if out.ok { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
