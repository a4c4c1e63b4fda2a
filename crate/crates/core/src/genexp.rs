//! Random table generators and the rejection-count experiment harness.
//!
//! Each cell independently takes a large value (uniform on `[1, 1000]`) with
//! probability `5 / 2^k`, a small positive value with probability up to 1/2,
//! and zero otherwise. The small value is `1 + Poisson(lambda)` for option 1
//! and uniform on `[1, 10]` for option 2. While no cell exceeds 10, a random
//! cell is overwritten with a uniform value from `[1, 1000]`.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::bounds::BoundMethod;
use crate::error::{Error, Result};
use crate::model::{build_design_matrix, FiberSpec, ModelSpec, TableVector};
use crate::par::{map_indexed, Workers};
use crate::rng::{mix, substream};
use crate::sis::{estimate_count, Sampler, SisConfig};

/// Distribution of the small-value branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    /// Option 1: `1 + Poisson(lambda)`.
    Poisson { lambda: f64 },
    /// Option 2: uniform on `[1, 10]`.
    Uniform,
}

impl GeneratorKind {
    /// Generator for a numbered option (1 = Poisson, 2 = uniform).
    pub fn from_option(option: u8, lambda: f64) -> Result<Self> {
        let kind = match option {
            1 => GeneratorKind::Poisson { lambda },
            2 => GeneratorKind::Uniform,
            _ => {
                return Err(Error::InvalidDimension {
                    field: "option",
                    reason: format!("must be 1 or 2, got {option}"),
                })
            }
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn option(&self) -> u8 {
        match self {
            GeneratorKind::Poisson { .. } => 1,
            GeneratorKind::Uniform => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GeneratorKind::Poisson { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                Err(Error::InvalidDimension {
                    field: "lambda",
                    reason: format!("must be positive, got {lambda}"),
                })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub cells: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if self.cells == 0 {
            return Err(Error::InvalidDimension {
                field: "cells",
                reason: "need at least one cell".into(),
            });
        }
        Ok(())
    }
}

/// Which branch produced a cell value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellBranch {
    Large,
    Small,
    Zero,
}

/// One cell before the fallback rule.
pub fn draw_cell<R: Rng + ?Sized>(
    kind: GeneratorKind,
    cells: usize,
    rng: &mut R,
) -> (CellBranch, u64) {
    let large = 5.0 * 2f64.powi(-(cells.min(i32::MAX as usize) as i32));
    let r = loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            break r;
        }
    };
    if r <= large {
        (CellBranch::Large, rng.random_range(1..=1000))
    } else if r <= 0.5 {
        let v = match kind {
            GeneratorKind::Poisson { lambda } => {
                let p = Poisson::new(lambda).expect("validated lambda");
                1 + p.sample(rng) as u64
            }
            GeneratorKind::Uniform => rng.random_range(1..=10),
        };
        (CellBranch::Small, v)
    } else {
        (CellBranch::Zero, 0)
    }
}

/// Draws one random table of `config.cells` cells.
pub fn generate_table<R: Rng + ?Sized>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<TableVector> {
    config.validate()?;
    let k = config.cells;
    let mut cells: Vec<u64> = (0..k).map(|_| draw_cell(config.kind, k, rng).1).collect();
    while cells.iter().all(|&v| v <= 10) {
        let i = rng.random_range(0..k);
        cells[i] = rng.random_range(1..=1000);
    }
    Ok(TableVector::new(cells))
}

/// Table `index` of the stream seeded by `config.seed`.
pub fn generate_indexed(config: &GeneratorConfig, index: u64) -> Result<TableVector> {
    generate_table(config, &mut substream(config.seed, index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: GeneratorKind,
    pub models: Vec<ModelSpec>,
    /// Draws per SIS run.
    pub samples: usize,
    /// Random tables per model.
    pub tables: usize,
    pub seed: u64,
    pub workers: Workers,
}

impl ExperimentConfig {
    /// The nine rows of the reference protocol: univariate I = 5..=10 and
    /// bivariate (2,5), (2,6), (2,7), with N = 100 draws on 100 tables each.
    pub fn reference(option: u8, lambda: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            kind: GeneratorKind::from_option(option, lambda)?,
            models: reference_models(),
            samples: 100,
            tables: 100,
            seed,
            workers: None,
        })
    }
}

pub fn reference_models() -> Vec<ModelSpec> {
    let mut models: Vec<ModelSpec> = (5..=10)
        .map(|levels| ModelSpec::UnivariateLogit { levels })
        .collect();
    models.extend((5..=7).map(|levels_j| ModelSpec::BivariateLogit {
        levels_i: 2,
        levels_j,
    }));
    models
}

/// One output row: how many tables saw at least one rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub option: u8,
    pub model: ModelSpec,
    pub time_sec: f64,
    pub reject_tables: usize,
    pub tables: usize,
}

impl ExperimentRow {
    pub const CSV_HEADER: &'static str = "option,model,levels,time_sec,reject_tables";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},\"{}\",{:.3},{}",
            self.option,
            self.model.family(),
            self.model.levels(),
            self.time_sec,
            self.reject_tables
        )
    }
}

impl fmt::Display for ExperimentRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

/// Per model: generate tables, run classical exact-IP SIS on each table's
/// fiber and count tables with any rejection.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if config.samples == 0 || config.tables == 0 {
        return Err(Error::InvalidDimension {
            field: if config.samples == 0 {
                "samples"
            } else {
                "tables"
            },
            reason: "must be at least 1".into(),
        });
    }
    config.kind.validate()?;
    let mut rows = Vec::with_capacity(config.models.len());
    for (m, model) in config.models.iter().enumerate() {
        let matrix = build_design_matrix(model)?;
        let gen = GeneratorConfig {
            kind: config.kind,
            cells: model.cells(),
            seed: mix(config.seed, m as u64),
        };
        let start = Instant::now();
        let rejected = map_indexed(
            config.tables,
            config.workers,
            || (),
            |_, t| {
                let table = generate_indexed(&gen, t as u64)?;
                let fiber = FiberSpec::from_table(matrix.clone(), &table)?;
                let sis = SisConfig::new(
                    Sampler::Classical,
                    BoundMethod::ExactIp,
                    config.samples,
                    mix(gen.seed, t as u64),
                )
                .with_workers(Some(1));
                Ok(estimate_count(&fiber, &sis)?.rejections > 0)
            },
        )?
        .into_iter()
        .collect::<Result<Vec<bool>>>()?;
        rows.push(ExperimentRow {
            option: config.kind.option(),
            model: *model,
            time_sec: start.elapsed().as_secs_f64(),
            reject_tables: rejected.iter().filter(|&&r| r).count(),
            tables: config.tables,
        });
    }
    Ok(rows)
}
