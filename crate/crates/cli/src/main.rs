//! `ultradiff` command-line front end.

mod commands;
mod config;
mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use ultradiff::embedding::{embed, validate_ultrametric};
use ultradiff::spectral::Sign;
use ultradiff::{Base, Error};

use config::{read, read_space, Run};
use output::{sha256_hex, Format, Table};

#[derive(Parser)]
#[command(
    name = "ultradiff",
    version,
    about = "Ultrametric diffusion: spectra, bases, solutions and oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a finite ultrametric space (CSV matrix or dendrogram) into Q_p
    Embed(EmbedArgs),
    /// Eigenvalues of every wavelet eigenfunction
    Spectrum(RunArgs),
    /// Orthonormal basis elements, one row per element
    Basis(RunArgs),
    /// Largest deviation of the basis Gram matrix from the identity
    BasisCheck(RunArgs),
    /// Solution of the Cauchy problem at the requested times
    Solve(RunArgs),
    /// Monte Carlo occupancy histogram of the jump process
    Simulate(RunArgs),
    /// Spectral, matrix-exponential and Monte Carlo laws side by side
    Compare(RunArgs),
    /// Reaction term and generator identity for a potential
    Potential(RunArgs),
    /// Dense generator matrix
    Generator(RunArgs),
}

#[derive(Args)]
struct EmbedArgs {
    /// CSV distance matrix, or a dendrogram such as ((u1,u2):1,u3):2
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    p: u32,
    /// Report path (standard output if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Measure file of the image (defaults next to --out)
    #[arg(long)]
    measure_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output path (standard output if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Comma-separated times
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<f64>,
    /// + or -
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<Sign>,
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Config(String),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::ScaleGuard { .. }) => 3,
            _ => 2,
        }
    }

    fn report(&self) {
        match self {
            Failure::Core(Error::NotUltrametric(violations)) => {
                eprintln!("error: the input is not ultrametric");
                for v in violations {
                    eprintln!("  {v}");
                }
            }
            Failure::Core(e) => eprintln!("error: {e}"),
            Failure::Config(msg) => eprintln!("error: {msg}"),
            Failure::Io(path, e) => eprintln!("error: {}: {e}", path.display()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            failure.report();
            ExitCode::from(failure.exit_code())
        }
    }
}

type TableCommand = fn(&Run) -> Result<Table, Failure>;

fn dispatch(command: Command) -> Result<u8, Failure> {
    let (args, f): (RunArgs, TableCommand) = match command {
        Command::Embed(args) => return run_embed(&args),
        Command::Compare(args) => {
            let run = load(&args)?;
            let (table, breach) = commands::compare(&run)?;
            emit(&args, &run, &table)?;
            return Ok(match breach {
                Some(msg) => {
                    eprintln!("threshold breach: {msg}");
                    4
                }
                None => 0,
            });
        }
        Command::Spectrum(args) => (args, commands::spectrum),
        Command::Basis(args) => (args, commands::basis),
        Command::BasisCheck(args) => (args, commands::basis_check),
        Command::Solve(args) => (args, commands::solve),
        Command::Simulate(args) => (args, commands::simulate_histogram),
        Command::Potential(args) => (args, commands::potential),
        Command::Generator(args) => (args, commands::generator),
    };
    let run = load(&args)?;
    let table = f(&run)?;
    emit(&args, &run, &table)?;
    Ok(0)
}

fn load(args: &RunArgs) -> Result<Run, Failure> {
    Run::load(&args.config, |c| {
        if let Some(seed) = args.seed {
            c.seed = seed;
        }
        if let Some(paths) = args.paths {
            c.paths = Some(paths);
        }
        if let Some(times) = &args.times {
            c.times = times.clone();
        }
        if let Some(h) = args.horizon {
            c.horizon = Some(h);
        }
        if let Some(sign) = args.sign {
            c.sign = sign.to_string();
        }
    })
}

fn emit(args: &RunArgs, run: &Run, table: &Table) -> Result<(), Failure> {
    write_out(
        args.out.as_deref(),
        &table.render(args.format, &run.hash(), run.config.seed),
    )
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io("<stdout>".into(), e)),
    }
}

fn run_embed(args: &EmbedArgs) -> Result<u8, Failure> {
    let hash = sha256_hex(read(&args.input)?.as_bytes());
    let space = read_space(&args.input)?;
    let violations = validate_ultrametric(&space);
    if !violations.is_empty() {
        return Err(Error::NotUltrametric(violations).into());
    }
    let embedding = embed(&space, Base::new(args.p)?)?;
    let report = json!({
        "command": "embed",
        "input_sha256": hash,
        "embedding": embedding.report(),
    });
    write_out(
        args.out.as_deref(),
        &(serde_json::to_string_pretty(&report).unwrap() + "\n"),
    )?;

    let measure_path = args
        .measure_out
        .clone()
        .or_else(|| args.out.as_ref().map(|o| o.with_extension("measure.json")));
    if let Some(path) = measure_path {
        let tree = embedding.to_measure_tree(
            embedding.window(),
            ultradiff::rational::parse_rational("1")?,
        )?;
        let mut file = serde_json::to_value(tree.to_file()).unwrap();
        file["input_sha256"] = hash.into();
        write_out(
            Some(&path),
            &(serde_json::to_string_pretty(&file).unwrap() + "\n"),
        )?;
    }
    Ok(0)
}
