mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "betadyn", version, about = "Exact beta-expansion dynamics for the bases beta_{n,q}")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
    Auto,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Degree n ≥ 2 of x^n = q(x^{n-1} + … + 1)
    #[arg(long, global = true, default_value_t = 2)]
    pub n: usize,
    /// Digit bound q ≥ 1
    #[arg(long, global = true, default_value_t = 1)]
    pub q: u32,
    /// Width of the rational enclosure of beta
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = betadyn::stochastic::DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// beta, the polynomial and the Pisot report
    Ctx,
    /// Greedy digits of x
    Expand {
        /// Rational "p/q" or decimal
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 20)]
        digits: usize,
    },
    /// Check a digit string against the admissibility restrictions
    Validate {
        /// Comma-separated digits
        #[arg(long)]
        digits: String,
    },
    /// Classify the representation preamble·(period)^∞
    Classify {
        #[arg(long, default_value = "")]
        preamble: String,
        #[arg(long, default_value = "")]
        period: String,
    },
    /// The invariant density u1
    Density,
    /// Transfer matrix on span{F_r}, eigenvalues and the lambda2 window
    Spectrum,
    /// Leaves of the depth-M approximation partition
    Partition {
        #[arg(long = "M")]
        m: usize,
    },
    /// L1 decay of P^N f towards u1·∫f for a Lipschitz f
    Iterate {
        #[arg(long = "M", default_value_t = 20)]
        m: usize,
        #[arg(long = "N", default_value_t = 40)]
        n_max: usize,
        /// x, sin, or const:c
        #[arg(long, default_value = "x")]
        f: String,
    },
    /// Truncated Neumann eigenfunction psi_z of P
    Eigen {
        /// "re,im" with |z| < 1
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 12)]
        trunc: usize,
        /// Force grid evaluation with this many points
        #[arg(long)]
        grid: Option<usize>,
        /// Sampling density of the exported CSV
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
    /// The function psi0 with P psi0 = 0
    Psi0,
    /// Exact covariance sequence of a piecewise-constant observable
    Correlate {
        /// chi:a,b  const:c  or x (approximated at depth --M)
        #[arg(long, default_value = "chi:0,1/beta")]
        g: String,
        #[arg(long, default_value_t = 40)]
        max_lag: usize,
        #[arg(long = "M", default_value_t = 12)]
        m: usize,
        /// Monte-Carlo corroboration with this many samples
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Ergodic averages from u1-distributed starting points
    Ergodic {
        #[arg(long = "N", value_delimiter = ',', default_value = "100,1000,10000")]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        starts: usize,
        /// x, const:c, or chi:a,b
        #[arg(long, default_value = "x")]
        g: String,
        /// Also average along the exact orbit of this point
        #[arg(long)]
        x0: Option<String>,
    },
    /// Run the acceptance criteria
    Selftest {
        /// Shorthand for --format json
        #[arg(long)]
        json: bool,
        /// Run only these criteria
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<betadyn::Error>() {
        Some(e) if e.is_resource() => EXIT_RESOURCE,
        Some(betadyn::Error::InvalidParameter(_) | betadyn::Error::Domain(_)) => EXIT_USAGE,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::dispatch(&cli.common, &cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
