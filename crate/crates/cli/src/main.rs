mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "warpshift", version, about = "Dynamic Time Warping under translation")]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "DTW_THREADS")]
    pub threads: Option<usize>,

    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Plain DTW distance between two curves.
    Dtw {
        #[command(flatten)]
        input: Input,
        /// Also print an optimal traversal.
        #[arg(long)]
        traversal: bool,
    },
    /// Optimal translation of the second curve.
    #[command(subcommand)]
    Translate(Translate),
    /// Approximate decision: is some translation within delta?
    Decide {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        approx: ApproxArgs,
    },
    /// Write generated instances as curve files.
    #[command(subcommand)]
    Gen(Gen),
    /// Print the node-weight update stream, one `t i j w` line per event.
    Stream {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Only emit events for subtrees that contain candidates.
        #[arg(long)]
        prune: bool,
    },
    /// Time the approximate algorithms on random instances; CSV on stdout.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct Input {
    /// First curve file.
    pub pi: std::path::PathBuf,
    /// Second curve file.
    pub sigma: std::path::PathBuf,
    /// Norm: 1, 2, inf or any p >= 1.
    #[arg(long, short, default_value = "2")]
    pub p: String,
}

#[derive(Subcommand, Debug)]
pub enum Translate {
    /// Exact optimum under L1 (any dimension) or L-infinity (plane).
    ExactL1 {
        #[command(flatten)]
        input: Input,
    },
    /// (1+eps)-approximate optimum in the plane.
    Approx {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        approx: ApproxArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ApproxArgs {
    #[arg(long, value_enum, default_value_t = Algorithm::Cubic)]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples for the randomized decider (default 40 times the longer length).
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long, value_enum, default_value_t = Engine::DirtyRegion)]
    pub engine: Engine,
    /// Include counters and timings.
    #[arg(long)]
    pub stats: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Simple,
    Cubic,
    Randomized,
    Subcubic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Recompute,
    DirtyRegion,
}

#[derive(Subcommand, Debug)]
pub enum Gen {
    /// Uniform random points in a box.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Regular n-gon against a small spiral.
    Ngon {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        eps_geom: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Prefix both curves so translation cannot help.
    Gadget {
        #[command(flatten)]
        input: Input,
        /// Radius of a ball around the origin containing both curves.
        #[arg(long)]
        b: f64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug)]
pub struct Output {
    #[arg(long)]
    pub out_pi: std::path::PathBuf,
    #[arg(long)]
    pub out_sigma: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Curve lengths (n = m).
    #[arg(long, value_delimiter = ',', default_value = "8,16")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub eps: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cubic,subcubic")]
    pub algorithms: Vec<Algorithm>,
    /// Instances per cell of the matrix.
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Engine::DirtyRegion)]
    pub engine: Engine,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Io(_) => 1,
                CliError::Lib(ref err) => commands::lib_exit_code(err),
            })
        }
    }
}
