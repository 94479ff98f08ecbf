use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparse_bsde::harness::config::ExperimentConfig;
use sparse_bsde::harness::published::{COUNTS_WITHOUT_BOUNDARY, COUNTS_WITH_BOUNDARY};
use sparse_bsde::harness::reproduce::{self, Target};
use sparse_bsde::harness::run::{self, Overrides, EXIT_CONFIG};
use sparse_bsde::harness::{preset, PRESET_NAMES};
use sparse_bsde::models::{InitialLaw, ModelParams, Quadratic};
use sparse_bsde::reference::{cole_hopf, exact_y0, exact_z0};
use sparse_bsde::simulation::{PathBatch, Stepping};
use sparse_bsde::sparse_grid::{count, Family};
use sparse_bsde::{build_model, TimeGrid};

#[derive(Parser)]
#[command(
    name = "sparse-bsde",
    version,
    about = "SGD solvers for semilinear parabolic PDEs on sparse grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse-grid utilities.
    Grid {
        #[command(subcommand)]
        command: GridCommand,
    },
    /// Run a configured experiment.
    Solve(SolveArgs),
    /// Reference value of u(t, x) at the model's start point.
    Reference(ReferenceArgs),
    /// Re-run a published experiment next to the published numbers.
    Reproduce {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in experiment presets.
    Presets {
        #[command(subcommand)]
        command: PresetCommand,
    },
    /// Write a binary dump of simulated Euler paths.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum GridCommand {
    /// Number of basis functions.
    Count {
        #[arg(long, required_unless_present = "table")]
        dim: Option<usize>,
        #[arg(long, required_unless_present = "table")]
        level: Option<u32>,
        #[arg(long, default_value = "prewavelet")]
        family: Family,
        /// Print the tabulated counts with and without boundary as CSV.
        #[arg(long)]
        table: bool,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    List,
    /// Print a preset as a config file.
    Show {
        name: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Override the number of SGD steps per solve.
    #[arg(long)]
    steps: Option<u64>,
    /// Per-iteration CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coefficients of the first replica as CSV.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    #[arg(long)]
    euler_strict: bool,
    #[arg(long, value_enum)]
    warm_start: Option<Switch>,
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(long, default_value = "quadratic")]
    model: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    euler_strict: bool,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG as u8,
            message: message.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        let code = if e.kind() == io::ErrorKind::BrokenPipe {
            0
        } else {
            1
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn grid_count(
    dim: Option<usize>,
    level: Option<u32>,
    family: Family,
    table: bool,
) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    if table {
        writeln!(out, "family,dim,level,count")?;
        for (fam, dims) in [
            (
                Family::PreWavelet,
                COUNTS_WITH_BOUNDARY.iter().map(|r| r.0).collect::<Vec<_>>(),
            ),
            (
                Family::ModifiedHat,
                COUNTS_WITHOUT_BOUNDARY.iter().map(|r| r.0).collect(),
            ),
        ] {
            for d in dims {
                for l in 3..=5 {
                    writeln!(out, "{fam},{d},{l},{}", count(d, l, fam))?;
                }
            }
        }
    } else {
        let (d, l) = (dim.unwrap_or(0), level.unwrap_or(0));
        writeln!(out, "family,dim,level,count")?;
        writeln!(out, "{family},{d},{l},{}", count(d, l, family))?;
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text).map_err(Failure::config)?
        }
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Failure::config(format!(
                "unknown preset '{name}'; valid presets: {}",
                PRESET_NAMES.join(", ")
            ))
        })?,
        (None, None) => unreachable!("clap requires one source"),
    };
    Overrides {
        seed: args.seed,
        replicas: args.replicas,
        steps: args.steps,
        euler_strict: args.euler_strict,
        warm_start: args.warm_start.map(|s| matches!(s, Switch::On)),
    }
    .apply(&mut cfg);
    let outcome = run::run(&cfg).map_err(|e| Failure {
        code: e.exit_code() as u8,
        message: e.to_string(),
    })?;
    run::write_summary_csv(&outcome.summary, io::stdout().lock())?;
    if let Some(p) = &args.out {
        run::write_iterations_csv(&outcome, output(Some(p))?)?;
    }
    if let Some(p) = &args.coefficients {
        outcome.reports[0]
            .coefficients
            .write_csv(output(Some(p))?)?;
    }
    Ok(())
}

fn reference(args: ReferenceArgs) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    if args.model == "quadratic" {
        let q = Quadratic::new(args.dim, args.a.unwrap_or(1.0)).map_err(Failure::config)?;
        let x = vec![0.0; args.dim];
        let r = cole_hopf(&q, args.horizon, args.t, &x, args.samples, args.seed)
            .map_err(Failure::config)?;
        writeln!(out, "{}", r.csv_header())?;
        writeln!(out, "{}", r.csv_row())?;
        return Ok(());
    }
    let params = ModelParams {
        dim: args.dim,
        horizon: args.horizon,
        a: args.a,
    };
    let model = build_model(&args.model, params).map_err(Failure::config)?;
    let x = match model.initial_law() {
        InitialLaw::Dirac(x) => x,
        InitialLaw::Uniform01 => return Err(Failure::config("model has no fixed start point")),
    };
    let y = exact_y0(model.as_ref(), args.t, &x).map_err(Failure::config)?;
    let z = exact_z0(model.as_ref(), args.t, &x).map_err(Failure::config)?;
    let header: Vec<String> = ["y0".to_string()]
        .into_iter()
        .chain((0..z.len()).map(|i| format!("z0_{i}")))
        .collect();
    let row: Vec<String> = std::iter::once(y)
        .chain(z)
        .map(|v| format!("{v:?}"))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    writeln!(out, "{}", row.join(","))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let params = ModelParams {
        dim: args.dim,
        horizon: args.horizon,
        a: args.a,
    };
    let model = build_model(&args.model, params).map_err(Failure::config)?;
    let grid = TimeGrid::new(args.horizon, args.steps).map_err(Failure::config)?;
    let stepping = if args.euler_strict {
        Stepping::EulerStrict
    } else {
        Stepping::Auto
    };
    let batch = PathBatch::simulate(model.as_ref(), grid, args.batch, args.seed, stepping);
    let mut w = BufWriter::new(File::create(&args.out)?);
    batch.write_dump(&mut w)?;
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Grid {
            command:
                GridCommand::Count {
                    dim,
                    level,
                    family,
                    table,
                },
        } => grid_count(dim, level, family, table),
        Command::Solve(args) => solve(args),
        Command::Reference(args) => reference(args),
        Command::Reproduce { target, seed, out } => {
            let target: Target = target.parse().map_err(Failure::config)?;
            let rows = reproduce::reproduce(target, seed).map_err(|e| Failure {
                code: e.exit_code() as u8,
                message: e.to_string(),
            })?;
            reproduce::write_csv(&rows, output(out.as_ref())?)?;
            Ok(())
        }
        Command::Presets { command } => {
            let mut out = io::stdout().lock();
            match command {
                PresetCommand::List => {
                    for n in PRESET_NAMES {
                        writeln!(out, "{n}")?;
                    }
                }
                PresetCommand::Show { name } => {
                    let cfg = preset(&name)
                        .ok_or_else(|| Failure::config(format!("unknown preset '{name}'")))?;
                    write!(out, "{}", cfg.to_toml())?;
                }
            }
            Ok(())
        }
        Command::Simulate(args) => simulate(args),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.code == 0 => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
