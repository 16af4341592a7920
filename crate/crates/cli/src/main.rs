use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use flowround::{Algorithm, Mode};
use flowround_cli::commands::{
    cmd_bench, cmd_expect, cmd_gen, cmd_round, cmd_verify, BenchConfig, ExpectConfig, ExpectMethod, KChoice,
    RoundConfig,
};
use flowround_cli::format::parse_mode;
use flowround_cli::GenParams;

#[derive(Parser)]
#[command(name = "flowround", version, about = "Round fractional flows to integral ones by cycle canceling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Tuning {
    /// Cluster size for mlogn2m (default ceil(n^2/m)).
    #[arg(long)]
    k: Option<usize>,
    /// Shuffle the processing order with this seed instead of input order.
    #[arg(long)]
    order_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Round an instance and write a result file.
    Round {
        #[arg(long, short)]
        input: PathBuf,
        /// Result path; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "mlogn2m")]
        algo: Algorithm,
        #[arg(long, default_value = "randomized", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Check a result file against its instance.
    Verify {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        result: PathBuf,
    },
    /// Check that randomized rounding preserves every flow in expectation.
    Expect {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, default_value = "mlogn2m")]
        algo: Algorithm,
        /// Enumerate every decision branch exactly.
        #[arg(long, conflicts_with = "trials", required_unless_present = "trials")]
        oracle: bool,
        /// Run this many seeded trials instead.
        #[arg(long)]
        trials: Option<u64>,
        /// Leaf budget for --oracle.
        #[arg(long, default_value_t = 1 << 16)]
        max_branches: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Generate a random fractional circulation.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add integer costs in [-10, 10].
        #[arg(long)]
        costed: bool,
        /// Open one fractional edge to produce an s-t flow with m - 1 edges.
        #[arg(long)]
        flow: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Time algorithms over a directory of instances; CSV on standard output.
    Bench {
        corpus: PathBuf,
        /// Repeat to select several; all algorithms when omitted.
        #[arg(long)]
        algo: Vec<Algorithm>,
        /// Comma-separated k values for mlogn2m: integers, `auto` or `n`.
        #[arg(long, value_delimiter = ',', default_value = "auto")]
        k_sweep: Vec<KChoice>,
        #[arg(long, default_value = "randomized", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Round { input, output, algo, mode, seed, tuning } => {
            let cfg = RoundConfig { algo, mode, seed, k: tuning.k, order_seed: tuning.order_seed };
            cmd_round(&input, output.as_deref(), &cfg, &mut out, &mut err)
        }
        Command::Verify { input, result } => cmd_verify(&input, &result, &mut out, &mut err),
        Command::Expect { input, algo, oracle: _, trials, max_branches, seed, tuning } => {
            let method = match trials {
                Some(t) => ExpectMethod::Trials(t),
                None => ExpectMethod::Oracle { max_branches },
            };
            let cfg = ExpectConfig { algo, method, seed, k: tuning.k, order_seed: tuning.order_seed };
            cmd_expect(&input, &cfg, &mut out, &mut err)
        }
        Command::Gen { n, m, cycles, seed, costed, flow, output } => {
            cmd_gen(&GenParams { n, m, cycles, seed, costed }, flow, output.as_deref(), &mut out, &mut err)
        }
        Command::Bench { corpus, algo, k_sweep, mode, seed } => {
            let algos = if algo.is_empty() { Algorithm::ALL.to_vec() } else { algo };
            cmd_bench(&corpus, &BenchConfig { algos, k_sweep, mode, seed }, &mut out, &mut err)
        }
    };
    drop((out, err));
    std::process::exit(code);
}
