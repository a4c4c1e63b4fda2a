//! `fibersis` command-line tool.
//!
//! Exit codes: 0 success, 1 infeasible or empty result, 2 usage or input
//! error, 3 search or box budget exceeded.

mod io;

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fibersis::bounds::{cell_bounds, PartialAssignment};
use fibersis::enumerate::count_fiber_with_budget;
use fibersis::genexp::{
    generate_indexed, reference_models, run_experiment, ExperimentConfig, ExperimentRow,
    GeneratorConfig, GeneratorKind,
};
use fibersis::model::{ModelSpec, TableVector};
use fibersis::search::DEFAULT_NODE_BUDGET;
use fibersis::semigroup::holes_in_box_with;
use fibersis::sis::{estimate_count, sample_many, Sampler, SisConfig};
use fibersis::{BoundMethod, Error};
use serde::Serialize;

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 2012;

#[derive(Parser)]
#[command(
    name = "fibersis",
    version,
    about = "Sequential importance sampling on contingency-table fibers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds on one cell given a fixed prefix of the table.
    Bounds {
        #[command(flatten)]
        fiber: FiberArgs,
        /// Values of the leading cells, comma separated.
        #[arg(long, default_value = "")]
        prefix: String,
        /// Cell to bound (0-based); must be the first unfixed cell.
        #[arg(long)]
        cell: Option<usize>,
        #[arg(long, default_value = "ip")]
        method: BoundMethod,
    },
    /// Draw tables; prints one line per draw.
    Sample {
        #[command(flatten)]
        fiber: FiberArgs,
        #[command(flatten)]
        sis: SisArgs,
    },
    /// Estimate the number of tables in the fiber; prints JSON.
    Estimate {
        #[command(flatten)]
        fiber: FiberArgs,
        #[command(flatten)]
        sis: SisArgs,
    },
    /// Exact count of the fiber.
    Enumerate {
        #[command(flatten)]
        fiber: FiberArgs,
        /// Largest count for which --list prints the tables.
        #[arg(long, default_value_t = 1000)]
        cap: usize,
        /// Print every table after the count.
        #[arg(long)]
        list: bool,
        /// Only test whether this table lies in the fiber.
        #[arg(long, value_name = "TABLE")]
        check: Option<String>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Holes of the semigroup spanned by the matrix columns inside a box.
    Semigroup {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// Upper bound per row, comma separated.
        #[arg(long = "box", value_name = "B1,..,BD")]
        box_bound: String,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Random tables from the generator, one per line.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Number of cells; taken from --model when omitted.
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        model: Option<ModelSpec>,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Tables-with-rejection experiment; prints CSV.
    Experiment {
        #[command(flatten)]
        gen: GenArgs,
        /// Models separated by ';' (default: the nine reference models).
        #[arg(long)]
        models: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        tables: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct MatrixArgs {
    /// Model shorthand (indep:I,J, unilogit:I, bilogit:I,J) or a matrix file.
    #[arg(long)]
    model: Option<String>,
    /// Matrix file: "d k" then d rows of k integers.
    #[arg(long)]
    matrix: Option<String>,
}

#[derive(Args)]
struct FiberArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Margin b, inline or as a vector file.
    #[arg(long)]
    margin: Option<String>,
    /// Observed table, inline or as a vector file; its margin defines the fiber.
    #[arg(long)]
    table: Option<String>,
}

#[derive(Args)]
struct SisArgs {
    #[arg(long, default_value = "classical")]
    sampler: Sampler,
    #[arg(long, default_value = "ip")]
    method: BoundMethod,
    #[arg(long, short = 'n', default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Sampling order of the cells, comma separated (0-based).
    #[arg(long)]
    order: Option<String>,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct GenArgs {
    /// 1: small cells are 1 + Poisson(lambda); 2: small cells are uniform on 1..=10.
    #[arg(long, default_value_t = 1)]
    option: u8,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

/// Failure of a subcommand together with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EmptyFiber => 1,
            Error::BudgetExceeded { .. } | Error::BoxTooLarge { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Printed output plus whether the result was infeasible or empty.
struct Output {
    text: String,
    empty: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, empty: false }
    }
}

#[derive(Serialize)]
struct EstimateJson {
    estimate: Option<f64>,
    log10_estimate: f64,
    stderr: Option<f64>,
    rejections: usize,
    #[serde(rename = "N")]
    n: usize,
    seed: u64,
}

fn workers(w: Option<usize>) -> Result<Option<usize>, Failure> {
    if w == Some(0) {
        return Err(Error::InvalidDimension {
            field: "workers",
            reason: "must be at least 1".into(),
        }
        .into());
    }
    Ok(w)
}

fn sis_config(args: &SisArgs) -> Result<SisConfig, Failure> {
    let mut cfg = SisConfig::new(args.sampler, args.method, args.samples, args.seed)
        .with_workers(workers(args.workers)?);
    cfg.node_budget = args.budget;
    if let Some(order) = &args.order {
        cfg = cfg.with_cell_order(
            io::load_vector(order)?
                .into_iter()
                .map(|v| v as usize)
                .collect(),
        );
    }
    Ok(cfg)
}

fn load_fiber(f: &FiberArgs) -> Result<fibersis::FiberSpec, Failure> {
    Ok(io::load_fiber(
        f.matrix.model.as_deref(),
        f.matrix.matrix.as_deref(),
        f.margin.as_deref(),
        f.table.as_deref(),
    )?)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn run(command: Command) -> Result<Output, Failure> {
    let mut text = String::new();
    match command {
        Command::Bounds {
            fiber,
            prefix,
            cell,
            method,
        } => {
            let fiber = load_fiber(&fiber)?;
            let state = PartialAssignment::new(&fiber, io::load_vector(&prefix)?)?;
            let cell = cell.unwrap_or_else(|| state.next_cell());
            let b = cell_bounds(&state, cell, method)?;
            if b.empty {
                return Ok(Output {
                    text: "EMPTY\n".into(),
                    empty: true,
                });
            }
            writeln!(text, "{} {}", b.lower, b.upper).unwrap();
        }
        Command::Sample { fiber, sis } => {
            let fiber = load_fiber(&fiber)?;
            for d in sample_many(&fiber, &sis_config(&sis)?)? {
                match (&d.table, d.rejected_at) {
                    (Some(t), _) => writeln!(text, "{t}\t{}", d.weight),
                    (None, at) => writeln!(text, "REJECTED {}\t{}", at.unwrap_or(0), d.weight),
                }
                .unwrap();
            }
        }
        Command::Estimate { fiber, sis } => {
            let fiber = load_fiber(&fiber)?;
            let cfg = sis_config(&sis)?;
            let est = estimate_count(&fiber, &cfg)?;
            let json = EstimateJson {
                estimate: finite(est.estimate),
                log10_estimate: est.log10_estimate,
                stderr: finite(est.std_error),
                rejections: est.rejections,
                n: est.samples,
                seed: cfg.seed,
            };
            text = serde_json::to_string(&json).expect("plain struct serializes");
            text.push('\n');
        }
        Command::Enumerate {
            fiber,
            cap,
            list,
            check,
            budget,
        } => {
            let fiber = load_fiber(&fiber)?;
            if let Some(table) = check {
                let inside = fiber.contains(&TableVector::new(io::load_vector(&table)?))?;
                return Ok(Output {
                    text: format!("{inside}\n"),
                    empty: !inside,
                });
            }
            let fc = count_fiber_with_budget(&fiber, list.then_some(cap), budget)?;
            writeln!(text, "{}", fc.count).unwrap();
            if list {
                match &fc.enumerated {
                    Some(tables) => tables.iter().for_each(|t| writeln!(text, "{t}").unwrap()),
                    None => eprintln!("count exceeds --cap {cap}; tables not listed"),
                }
            }
            let empty = fc.as_u64() == Some(0);
            return Ok(Output { text, empty });
        }
        Command::Semigroup {
            matrix,
            box_bound,
            workers: w,
        } => {
            let a = io::load_matrix(matrix.model.as_deref(), matrix.matrix.as_deref())?;
            let analysis = holes_in_box_with(&a, &io::load_vector(&box_bound)?, workers(w)?)?;
            for h in &analysis.holes {
                let line: Vec<String> = h.iter().map(i64::to_string).collect();
                writeln!(text, "{}", line.join(" ")).unwrap();
            }
            let verdict = if analysis.saturated_in_box {
                "SATURATED"
            } else {
                "NOT-SATURATED"
            };
            writeln!(text, "{verdict}").unwrap();
        }
        Command::Generate {
            gen,
            cells,
            model,
            count,
            seed,
        } => {
            let cells = match (cells, model) {
                (Some(c), _) => c,
                (None, Some(m)) => m.cells(),
                (None, None) => {
                    return Err(Failure {
                        code: 2,
                        message: "one of --cells or --model is required".into(),
                    })
                }
            };
            let cfg = GeneratorConfig {
                kind: GeneratorKind::from_option(gen.option, gen.lambda)?,
                cells,
                seed,
            };
            for i in 0..count {
                writeln!(text, "{}", generate_indexed(&cfg, i)?).unwrap();
            }
        }
        Command::Experiment {
            gen,
            models,
            samples,
            tables,
            seed,
            workers: w,
        } => {
            let models = match models {
                Some(list) => list
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<ModelSpec>, _>>()?,
                None => reference_models(),
            };
            let cfg = ExperimentConfig {
                kind: GeneratorKind::from_option(gen.option, gen.lambda)?,
                models,
                samples,
                tables,
                seed,
                workers: workers(w)?,
            };
            writeln!(text, "{}", ExperimentRow::CSV_HEADER).unwrap();
            for row in run_experiment(&cfg)? {
                writeln!(text, "{}", row.to_csv()).unwrap();
            }
        }
    }
    Ok(Output::ok(text))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            ExitCode::from(u8::from(out.empty))
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
