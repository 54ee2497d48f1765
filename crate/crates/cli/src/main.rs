//! `heis`: command-line front end for the heis-core suites.
//!
//! Exit codes: 0 every check passed, 1 a mathematical check failed,
//! 2 usage or parse error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Outcome};

#[derive(Debug, Parser)]
#[command(name = "heis", version)]
#[command(about = "Exact symbolic and numeric checks on the Heisenberg group")]
struct Cli {
    /// Dimension n of Hⁿ.
    #[arg(long, global = true, env = "HEIS_DEFAULT_N", default_value_t = 1)]
    n: usize,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for grid evaluation; output order does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// One tab-separated record per check, `#` header and verdict lines.
    Text,
    /// A single JSON document.
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame brackets, the 4ZjZk and Kohn-Laplacian identities, and the
    /// fourth-order factorization.
    Identities,

    /// Contact, conformality, CR and λ-ν checks on one map.
    CheckMap {
        /// Map-spec file.
        spec: Option<PathBuf>,
        /// Corpus map instead of a spec file, e.g. `dilation:r=2`.
        #[arg(long, conflicts_with = "spec")]
        map: Option<String>,
        /// Positivity grid: points per axis.
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },

    /// Proof replay over the corpus.
    Replay {
        /// Comma-separated corpus names; default all.
        #[arg(long, value_delimiter = ',')]
        maps: Vec<String>,
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },

    /// Korányi–Reimann flow experiment; CSV traces optional.
    Flow {
        /// Potential φ in the expression grammar.
        #[arg(long)]
        phi: String,
        /// Box `lo,hi`, used on every axis.
        #[arg(long = "box", default_value = "-1,1", allow_hyphen_values = true)]
        bbox: String,
        #[arg(long, default_value_t = 1.0)]
        smax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Relative tolerance for step halving and the distortion bound.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Start point `x1,..,y1,..,t`; repeatable. Default: 3 per axis on the middle half of the box.
        #[arg(long, allow_hyphen_values = true)]
        point: Vec<String>,
        /// Write the traces as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// First variation of a conformal flow against its exact value.
    RivfCheck {
        /// Corpus name or map-spec path.
        #[arg(long)]
        map: String,
        /// Generator: `X<j>`, `Y<j>` or `T`.
        #[arg(long)]
        w: String,
        /// Sample point; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        point: Vec<String>,
        /// Draw three sample points uniformly from [-1,1]^(2n+1) instead of the defaults.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Central-difference step in s.
        #[arg(long, default_value_t = 1e-4)]
        fd_step: f64,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let n = cli.n;
    match cli.command {
        Command::Identities => commands::identities(n),
        Command::CheckMap { spec, map, grid } => commands::check_map(n, spec.as_deref(), map.as_deref(), grid),
        Command::Replay { maps, grid } => commands::replay(n, &maps, grid),
        Command::Flow {
            phi,
            bbox,
            smax,
            step,
            tol,
            point,
            csv,
        } => commands::flow(n, &phi, &bbox, smax, step, tol, &point, csv.as_deref()),
        Command::RivfCheck {
            map,
            w,
            point,
            seed,
            tol,
            fd_step,
        } => commands::rivf(n, &map, &w, &point, seed, tol, fd_step),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, out) = (cli.format, cli.out.clone());
    match run(cli) {
        Ok(outcome) => {
            let text = output::render(&outcome, format);
            let written = match &out {
                Some(path) => std::fs::write(path, text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(2);
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
