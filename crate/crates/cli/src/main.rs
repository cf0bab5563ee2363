//! `cnl`: build constructions, count blocks, enclose orbits, measure
//! discrepancy, and run the verification suite.
//!
//! Exit status: 0 success, 1 verification failure, 2 usage or validation
//! error, 3 size limit.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use cantor_normal::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cnl", version, about = "Cantor series expansions and normal-number constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    /// P-block construction, segments 6..=10, w = 2, l_i = 2^(2i).
    Qnex,
    /// C-block construction, segments 2..=12, w = 2, l_i = i^3.
    Qde,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct SpecSource {
    /// Construction spec (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct DigitSource {
    /// Digit file written by `construct`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble the first digits of a construction.
    Construct {
        #[command(flatten)]
        source: SpecSource,
        /// Number of digits; the whole construction when omitted.
        #[arg(long)]
        n_max: Option<u64>,
        /// Digit file (length-prefixed LEB128). Without it, `n,q,E` rows go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count occurrences of a block in a digit prefix.
    Count {
        #[command(flatten)]
        source: DigitSource,
        /// Digits separated by commas, e.g. 0,1,1.
        #[arg(long)]
        block: String,
        /// Prefix length; everything available when omitted.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Block weightings.
    Weights {
        #[command(subcommand)]
        action: WeightsAction,
    },
    /// (ε, k, μ)-normality of a digit string.
    Normality {
        #[command(subcommand)]
        action: NormalityAction,
    },
    /// Q_n^(k) at checkpoints, with a growth label.
    Moments {
        #[command(flatten)]
        q: QSource,
        #[arg(long, default_value_t = 1)]
        k: u64,
        /// Strictly increasing positions, comma separated.
        #[arg(long)]
        checkpoints: String,
    },
    /// Rational enclosures of T_{Q,n}(x) at the listed positions.
    Orbit {
        #[command(flatten)]
        source: SpecSource,
        #[arg(long)]
        n_list: String,
        #[arg(long, default_value_t = 64)]
        tail: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact star discrepancy of a sequence in [0,1), with optional bounds.
    Discrepancy {
        /// One value per line (or comma separated), as p/q or decimals.
        #[arg(long = "in")]
        input: PathBuf,
        /// Accepted for compatibility; all arithmetic is exact.
        #[arg(long)]
        exact: bool,
        /// Any of kn1, kn2, e1l.
        #[arg(long, value_delimiter = ',')]
        bounds: Vec<String>,
        /// Segment lengths for kn2, summing to the sequence length.
        #[arg(long)]
        segments: Option<String>,
        /// Base for e1l.
        #[arg(long)]
        base: Option<u64>,
        /// ε for e1l.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run claims and write certificates.
    Verify {
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        claim: Option<String>,
        /// Axis overrides, e.g. b=2..6,w=1..3.
        #[arg(long, requires = "claim")]
        grid: Option<String>,
        /// Every claim on its default grid.
        #[arg(long)]
        all: bool,
        /// Time budget for --all, e.g. 10min.
        #[arg(long, requires = "all")]
        budget: Option<String>,
        /// Certificate destination; runtime goes to <out>.meta.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normality ratios, orbit enclosures, D* and ε̄ trajectories for a spec.
    Report {
        #[command(flatten)]
        source: SpecSource,
        /// Positions; boundary neighbours plus log-spaced points when omitted.
        #[arg(long)]
        checkpoints: Option<String>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        tail: u64,
        /// ε_i per segment, comma separated, enabling the ε̄ trajectory for spec files.
        #[arg(long)]
        eps: Option<String>,
        /// Blocks for the normality ratios, separated by ';'.
        #[arg(long, default_value = "0;1")]
        blocks: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum WeightsAction {
    /// Weight of one block.
    Eval {
        /// `uniform:B` (λ_B) or `nu:b` (ν_b).
        #[arg(long)]
        weighting: String,
        #[arg(long)]
        block: String,
    },
}

#[derive(Subcommand, Debug)]
enum NormalityAction {
    /// Exit 1 with a witness block when the check fails.
    Check {
        #[command(flatten)]
        source: DigitSource,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        weighting: String,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct QSource {
    /// Explicit q_1, q_2, ... comma separated.
    #[arg(long)]
    q: Option<String>,
    /// q_n = b for all n.
    #[arg(long)]
    constant: Option<u64>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::SizeLimit { .. } => 3,
                _ => 2,
            })
        }
    }
}
