use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use inhomog::Construction;

mod dim;
mod poincare;
mod render;
mod verify;

#[derive(Parser, Debug)]
#[command(name = "inhomog", version, about = "Inhomogeneous attractors and their box dimensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the box dimension over a sweep of scales and write a report.
    Dim(RunArgs),
    /// Run a verification suite and print a pass/fail table.
    Verify {
        #[arg(value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        /// Seed for the randomly generated systems.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Draw a construction to PNG or SVG, chosen by the output extension.
    Render(RenderArgs),
    /// Dump the orbital approximation (or orbit points) as CSV.
    Generate(RunArgs),
    /// Poincaré series and exponent of a group.
    Poincare(poincare::PoincareArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Inclusive range of dyadic exponents, written `a..b`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct KRange {
    pub min: u32,
    pub max: u32,
}

impl std::str::FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected `a..b`, got `{s}`"))?;
        let min: u32 = a.trim().parse().map_err(|_| format!("bad lower bound `{a}`"))?;
        let max: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad upper bound `{b}`"))?;
        if min >= max {
            return Err(format!("need a < b, got {min}..{max}"));
        }
        if max > 22 {
            return Err(format!("upper bound {max} exceeds 22"));
        }
        Ok(KRange { min, max })
    }
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    /// `sierpinski`, `bernoulli:<lambda|sqrt2|cubic>`, `comb:<n>`,
    /// `kleinian-ce:<M>:<N>` or `ifs:<path>`.
    pub construction: String,
    /// Dyadic scale exponents: δ = 2^-a .. 2^-b.
    #[arg(long = "k")]
    pub k: Option<KRange>,
    /// Word-length depth for generated pieces.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Cap on pieces, cells or tree nodes.
    #[arg(long)]
    pub budget: Option<u128>,
    /// Output path; standard output when absent.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RenderArgs {
    pub construction: String,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub budget: Option<u128>,
    #[arg(long, default_value_t = 1024)]
    pub width: u32,
    #[arg(long, default_value_t = 1024)]
    pub height: u32,
}

pub fn parse_construction(name: &str) -> Result<Construction> {
    name.parse::<Construction>()
        .with_context(|| format!("unknown construction `{name}`"))
}

/// Opens `path` for writing, or standard output.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("INHOMOG_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("INHOMOG_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("INHOMOG_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Dim(args) => dim::cmd_dim(&args).map(|_| ExitCode::SUCCESS),
        Command::Verify { suite, seed } => {
            let ok = verify::cmd_verify(suite, seed, &mut io::stdout().lock())?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Render(args) => render::cmd_render(&args).map(|_| ExitCode::SUCCESS),
        Command::Generate(args) => dim::cmd_generate(&args).map(|_| ExitCode::SUCCESS),
        Command::Poincare(args) => poincare::cmd_poincare(&args).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
