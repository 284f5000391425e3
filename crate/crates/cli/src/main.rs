use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kinematics_core::jb::{contrast, mc_report, sweep, sweep_csv, sweep_svg, GridSpec};
use kinematics_core::second_order::DEFAULT_SEED;
use kinematics_core::{
    ce_update, condition, jeffrey_update, kl_divergence, CeOptions, ConstraintSet, Error, Event,
    FiniteDistribution, McConfig, MessageBand, Partition, SecondOrderPrior,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "jb", version, about = "Belief updates on finite spaces and the Judy Benjamin problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Update a prior distribution with a single rule and print the posterior.
    Update {
        /// Prior distribution JSON: {"labels": [...], "probs": [...]}.
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, value_enum)]
        rule: Rule,
        /// Rule input: {"event": [...]}, {"partition": [[...]], "weights": [...]},
        /// or a constraint set {"conditional": [...], "linear": [...]}.
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate CE and hierarchical Blue over a grid of reported conditionals.
    JbSweep {
        /// START:STEP:END
        #[arg(long, default_value = "0:0.05:1")]
        grid: String,
        #[arg(long, default_value_t = MessageBand::DEFAULT_EPSILON)]
        eps: f64,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG line chart destination.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Monte Carlo check of the hierarchical posterior for one band.
    JbMc {
        /// Prior JSON: {"variant": "uniform" | "dirichlet" | "conditional", "alpha": [...]}.
        /// Uniform on the simplex when absent.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = 0.75)]
        q: f64,
        #[arg(long, default_value_t = MessageBand::DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        chunks: u32,
        /// Lattice size for the independence check.
        #[arg(long, default_value_t = 20)]
        independence_grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Base-space conditioning, hierarchical conditioning and CE at q = 1.
    JbContrast {
        #[arg(long, default_value_t = MessageBand::DEFAULT_EPSILON)]
        eps: f64,
        /// Print the table as JSON instead of text.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Condition,
    Jeffrey,
    Ce,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    event: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionFile {
    partition: Vec<Vec<String>>,
    weights: Vec<f64>,
}

#[derive(Serialize)]
struct UpdateOutput {
    rule: &'static str,
    posterior: FiniteDistribution,
    kl_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multipliers: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible | Error::ZeroConditioningEvent | Error::InfeasibleWeight { .. } => 3,
            Error::NotConverged { .. } => 4,
            Error::NoAcceptedSamples { .. } => 5,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes through a sibling temp file so a failed run never leaves a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure { code: 1, message: format!("{}: {e}", path.display()) };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn update(prior: &Path, rule: Rule, constraints: &Path) -> Result<UpdateOutput, Failure> {
    let prior: FiniteDistribution = parse(prior)?;
    let space = prior.space();
    let out = match rule {
        Rule::Condition => {
            let file: EventFile = parse(constraints)?;
            let posterior = condition(&prior, &Event::from_labels(space, &file.event)?)?;
            UpdateOutput {
                rule: "condition",
                kl_value: kl_divergence(&posterior, &prior)?,
                posterior,
                iterations: None,
                multipliers: None,
                residual: None,
            }
        }
        Rule::Jeffrey => {
            let file: PartitionFile = parse(constraints)?;
            let partition = Partition::from_labels(space, &file.partition)?;
            let posterior = jeffrey_update(&prior, &partition, &file.weights)?;
            UpdateOutput {
                rule: "jeffrey",
                kl_value: kl_divergence(&posterior, &prior)?,
                posterior,
                iterations: None,
                multipliers: None,
                residual: None,
            }
        }
        Rule::Ce => {
            let set = ConstraintSet::from_json(space, &read(constraints)?)?;
            let sol = ce_update(&prior, &set, CeOptions::default())?;
            UpdateOutput {
                rule: "ce",
                posterior: sol.posterior,
                kl_value: sol.kl_value,
                iterations: Some(sol.iterations),
                multipliers: Some(sol.multipliers),
                residual: Some(sol.residual),
            }
        }
    };
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Update { prior, rule, constraints, out } => {
            let result = update(&prior, rule, &constraints)?;
            emit(out.as_deref(), &to_json(&result))
        }
        Command::JbSweep { grid, eps, out, plot } => {
            let points = GridSpec::parse(&grid)?.points()?;
            let rows = sweep(&points, eps, CeOptions::default())?;
            let csv = sweep_csv(&rows);
            let svg = plot.as_ref().map(|_| sweep_svg(&rows));
            emit(out.as_deref(), &csv)?;
            if let (Some(path), Some(svg)) = (plot, svg) {
                write_atomic(&path, &svg)?;
            }
            Ok(())
        }
        Command::JbMc { prior, q, eps, samples, seed, chunks, independence_grid, out } => {
            let prior = match prior {
                Some(path) => SecondOrderPrior::from_json(&read(&path)?)?,
                None => SecondOrderPrior::UniformSimplex,
            };
            let band = MessageBand::new(q, eps)?;
            let cfg = McConfig::new(samples, seed, chunks)?;
            let report = mc_report(&prior, &band, &cfg, independence_grid)?;
            emit(out.as_deref(), &to_json(&report))
        }
        Command::JbContrast { eps, json, out } => {
            let table = contrast(eps)?;
            if json {
                emit(out.as_deref(), &to_json(&table))
            } else {
                print!("{}", table.to_text());
                match out {
                    Some(path) => write_atomic(&path, &to_json(&table)),
                    None => Ok(()),
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
