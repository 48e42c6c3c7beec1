use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cbr_core::optimize::{frontier_csv, Target};
use cbr_core::specio::{self, fixtures, report, OptimizeOptions, SpecError, WorkflowSpec};
use cbr_core::EntropyMode;

#[derive(Parser)]
#[command(name = "cbr", version, about = "Cost-benefit analysis of data-analysis and visualization workflows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a spec parses and its graph is valid.
    Validate { file: PathBuf },
    /// Per-step and overall measures.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        json: bool,
    },
    /// Search the spec's parameter space for the best overall CBR.
    Optimize {
        file: PathBuf,
        /// Maximum total cost, in the spec's cost unit.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        greedy: bool,
        #[arg(long, requires = "greedy", value_parser = clap::value_parser!(u32).range(1..))]
        restarts: Option<u32>,
        #[arg(long, value_enum, default_value = "midpoint")]
        objective: Objective,
        #[arg(long)]
        json: bool,
    },
    /// Emit the graph as DOT or the optimizer frontier as CSV.
    Report {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
    },
    /// Run the built-in case-study fixtures against their expected values.
    Fixtures {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(fixtures::NAMES))]
        name: Option<String>,
        /// Write the fixture files into this directory instead of running them.
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Actual,
    Maximal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Midpoint,
    Lower,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Csv,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::Run(e.to_string())
    }
}

fn seed_from_env() -> Result<Option<u64>, Failure> {
    match std::env::var("CBR_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("CBR_SEED must be a decimal 64-bit integer, got `{s}`"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Failure::Usage(format!("CBR_SEED: {e}"))),
    }
}

fn load(path: &Path) -> Result<WorkflowSpec, Failure> {
    Ok(specio::load_spec(path)?)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports always serialize")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { file } => {
            let spec = load(&file)?;
            let g = specio::build_graph(&spec)?;
            println!(
                "{}: valid ({} alphabets, {} steps)",
                file.display(),
                g.nodes().len(),
                g.edges().len()
            );
        }
        Command::Analyze { file, mode, json } => {
            let mut spec = load(&file)?;
            if let Some(m) = mode {
                spec.entropy_mode = match m {
                    Mode::Actual => EntropyMode::Actual,
                    Mode::Maximal => EntropyMode::Maximal,
                };
            }
            let g = specio::build_graph(&spec)?;
            let r = g.analyze(spec.cost_model.merge);
            if json {
                println!("{}", to_json(&r));
            } else {
                print!("{}", report::metrics_table(&r));
            }
        }
        Command::Optimize {
            file,
            budget,
            greedy,
            restarts,
            objective,
            json,
        } => {
            let seed = seed_from_env()?;
            let spec = load(&file)?;
            let opts = OptimizeOptions {
                budget,
                greedy,
                restarts: restarts.unwrap_or(1),
                seed,
                target: match objective {
                    Objective::Midpoint => Target::Midpoint,
                    Objective::Lower => Target::Lower,
                },
                cap: None,
            };
            let r = specio::optimize_spec(&spec, &opts)?;
            if json {
                println!("{}", to_json(&r));
            } else {
                print!("{}", report::optimize_table(&r));
            }
        }
        Command::Report { file, format } => {
            let spec = load(&file)?;
            match format {
                Format::Dot => {
                    let g = specio::build_graph(&spec)?;
                    print!("{}", g.to_dot(spec.cost_model.merge));
                }
                Format::Csv => {
                    let r = specio::optimize_spec(&spec, &OptimizeOptions::default())?;
                    print!("{}", frontier_csv(&r.frontier));
                }
            }
        }
        Command::Fixtures { name, emit, json } => {
            let selected: Vec<fixtures::Fixture> = match &name {
                Some(n) => vec![fixtures::by_name(n).expect("validated by clap")],
                None => fixtures::builtin(),
            };
            if let Some(dir) = emit {
                std::fs::create_dir_all(&dir).map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))?;
                for f in &selected {
                    let path = dir.join(format!("{}.json", f.fixture));
                    std::fs::write(&path, fixtures::emit_fixture(f))
                        .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
                    println!("wrote {}", path.display());
                }
                return Ok(());
            }
            let outcomes: Vec<_> = selected.iter().map(fixtures::run_fixture).collect();
            if json {
                println!("{}", to_json(&outcomes));
            } else {
                for o in &outcomes {
                    print!("{}", report::fixture_table(o));
                }
            }
            let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.fixture.as_str()).collect();
            if !failed.is_empty() {
                return Err(Failure::Run(format!("fixtures out of tolerance: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
