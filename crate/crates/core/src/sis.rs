//! Sequential importance sampling over a fiber and the importance estimator
//! of its size.
//!
//! The classical sampler draws each cell uniformly from `[l_i, u_i]`
//! (exact-IP or LP bounds) and may reach a prefix with no completion; such a
//! draw is rejected and contributes zero to the estimator, which then stays
//! unbiased for `|F|` because the proposal is normalized over the larger set
//! of reachable partial tables. The rejection-free sampler draws each cell
//! uniformly from its exact support and never rejects.
//!
//! Draw `i` uses the substream `(seed, i)`, so estimates are bit-identical for
//! any worker count.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::bounds::{bounds_exact_ip_with, lp_bounds_on, rational_rows, BoundMethod, CellBounds};
use crate::error::{Error, Result};
use crate::model::{check_permutation, FiberSpec, TableVector};
use crate::par::{map_indexed, Workers};
use crate::rng::substream;
use crate::search::{to_residual, FeasibilityOracle, DEFAULT_NODE_BUDGET};

/// Which proposal to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    /// Uniform on `[l_i, u_i]` per cell, with rejections.
    Classical,
    /// Uniform on the exact support per cell.
    RejectionFree,
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::Classical => "classical",
            Sampler::RejectionFree => "free",
        })
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Sampler::Classical),
            "free" | "rejection-free" => Ok(Sampler::RejectionFree),
            _ => Err(Error::Parse(format!("unknown sampler {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SisConfig {
    pub method: BoundMethod,
    pub sampler: Sampler,
    pub samples: usize,
    pub seed: u64,
    /// Sampling order of the cells; `None` is model order.
    pub cell_order: Option<Vec<usize>>,
    pub workers: Workers,
    /// Search node budget per draw.
    pub node_budget: u64,
}

impl SisConfig {
    pub fn new(sampler: Sampler, method: BoundMethod, samples: usize, seed: u64) -> Self {
        Self {
            method,
            sampler,
            samples,
            seed,
            cell_order: None,
            workers: None,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_cell_order(mut self, order: Vec<usize>) -> Self {
        self.cell_order = Some(order);
        self
    }

    fn validate(&self, cells: usize) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidDimension {
                field: "samples",
                reason: "need at least one sample".into(),
            });
        }
        if let Some(order) = &self.cell_order {
            check_permutation(order, cells)?;
        }
        Ok(())
    }
}

/// One sampled cell: its model index, how many values it could take, and
/// the value drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub cell: usize,
    pub choices: u64,
    pub value: u64,
}

/// A complete or rejected table and its inverse proposal probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    /// The table in model cell order; `None` for a rejected draw.
    pub table: Option<TableVector>,
    /// Model index of the cell whose bounds came back empty, or the number of
    /// cells when only the final margin check failed.
    pub rejected_at: Option<usize>,
    /// Product of `choices` over the trace, i.e. `1 / q`.
    pub weight: BigUint,
    pub log_weight: f64,
    pub trace: Vec<TraceStep>,
}

impl SampleDraw {
    pub fn is_rejected(&self) -> bool {
        self.table.is_none()
    }

    /// Weight recomputed from the trace.
    pub fn trace_weight(&self) -> BigUint {
        self.trace
            .iter()
            .fold(BigUint::one(), |w, s| w * BigUint::from(s.choices))
    }
}

/// Estimated fiber size from `samples` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct CountEstimate {
    pub estimate: f64,
    pub log10_estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub rejections: usize,
    /// True when `estimate` overflowed `f64` and only the log value is usable.
    pub log_domain: bool,
    /// Exact mean of the per-draw contributions.
    pub exact: BigRational,
}

impl CountEstimate {
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.samples as f64
    }
}

/// Reusable per-worker sampling state for one fiber.
#[derive(Debug, Clone)]
pub struct DrawEngine {
    fiber: FiberSpec,
    // model index of sampled position t
    order: Vec<usize>,
    sampler: Sampler,
    oracle: FeasibilityOracle,
    rational: Option<Vec<Vec<BigRational>>>,
    // LP bounds keyed by (position, residual)
    lp_memo: HashMap<(usize, Vec<i64>), CellBounds>,
    root: Vec<i64>,
}

const LP_MEMO_LIMIT: usize = 1_000_000;

impl DrawEngine {
    pub fn new(fiber: &FiberSpec, config: &SisConfig) -> Result<Self> {
        config.validate(fiber.cells())?;
        let (fiber, order) = match &config.cell_order {
            Some(order) => (fiber.permuted(order)?, order.clone()),
            None => (fiber.clone(), (0..fiber.cells()).collect()),
        };
        let oracle = FeasibilityOracle::new(fiber.matrix())?.with_budget(config.node_budget);
        let rational = (config.sampler == Sampler::Classical
            && config.method == BoundMethod::LpRelaxation)
            .then(|| rational_rows(&fiber));
        let root = to_residual(fiber.margin())?;
        Ok(Self {
            fiber,
            order,
            sampler: config.sampler,
            oracle,
            rational,
            lp_memo: HashMap::new(),
            root,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SampleDraw> {
        self.oracle.reset_nodes();
        match self.sampler {
            Sampler::Classical => self.draw_classical(rng),
            Sampler::RejectionFree => self.draw_free(rng),
        }
    }

    fn bounds(&mut self, res: &[i64], t: usize) -> Result<CellBounds> {
        let Some(rows) = &self.rational else {
            return bounds_exact_ip_with(&mut self.oracle, res, t, self.fiber.cells());
        };
        let key = (t, res.to_vec());
        if let Some(b) = self.lp_memo.get(&key) {
            return Ok(*b);
        }
        let b = lp_bounds_on(rows, res, t)?;
        if self.lp_memo.len() >= LP_MEMO_LIMIT {
            self.lp_memo.clear();
        }
        self.lp_memo.insert(key, b);
        Ok(b)
    }

    fn draw_classical<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SampleDraw> {
        let k = self.fiber.cells();
        let mut res = self.root.clone();
        let mut acc = Accumulator::new(k);
        for t in 0..k {
            let b = self.bounds(&res, t)?;
            if b.empty {
                return Ok(acc.rejected(self.order[t]));
            }
            let value = rng.random_range(b.lower..=b.upper);
            acc.push(self.order[t], b.width(), value);
            self.subtract(&mut res, t, value)?;
        }
        if res.iter().any(|&r| r != 0) {
            return Ok(acc.rejected(k));
        }
        Ok(acc.completed(&self.order))
    }

    fn draw_free<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SampleDraw> {
        let k = self.fiber.cells();
        let mut res = self.root.clone();
        let mut acc = Accumulator::new(k);
        for t in 0..k {
            let support = self.oracle.support(t, &res)?;
            if support.is_empty() {
                debug_assert_eq!(t, 0, "support of a completable prefix is nonempty");
                return Err(Error::EmptyFiber);
            }
            let value = support[rng.random_range(0..support.len())];
            acc.push(self.order[t], support.len() as u64, value);
            self.subtract(&mut res, t, value)?;
        }
        debug_assert!(res.iter().all(|&r| r == 0));
        Ok(acc.completed(&self.order))
    }

    fn subtract(&self, res: &mut [i64], t: usize, value: u64) -> Result<()> {
        let v = i64::try_from(value).map_err(|_| Error::Overflow("cell value"))?;
        for &(i, a) in self.oracle.column(t) {
            res[i] -= a.checked_mul(v).ok_or(Error::Overflow("residual"))?;
        }
        Ok(())
    }
}

struct Accumulator {
    weight: BigUint,
    log_weight: f64,
    trace: Vec<TraceStep>,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self {
            weight: BigUint::one(),
            log_weight: 0.0,
            trace: Vec::with_capacity(k),
        }
    }

    fn push(&mut self, cell: usize, choices: u64, value: u64) {
        self.weight *= choices;
        self.log_weight += (choices as f64).ln();
        self.trace.push(TraceStep {
            cell,
            choices,
            value,
        });
    }

    fn rejected(self, at: usize) -> SampleDraw {
        SampleDraw {
            table: None,
            rejected_at: Some(at),
            weight: self.weight,
            log_weight: self.log_weight,
            trace: self.trace,
        }
    }

    fn completed(self, order: &[usize]) -> SampleDraw {
        let mut cells = vec![0u64; order.len()];
        for step in &self.trace {
            cells[step.cell] = step.value;
        }
        SampleDraw {
            table: Some(TableVector::new(cells)),
            rejected_at: None,
            weight: self.weight,
            log_weight: self.log_weight,
            trace: self.trace,
        }
    }
}

/// One draw of the classical sampler (interval proposal, may reject).
pub fn sample_classical<R: Rng + ?Sized>(
    fiber: &FiberSpec,
    config: &SisConfig,
    rng: &mut R,
) -> Result<SampleDraw> {
    let config = SisConfig {
        sampler: Sampler::Classical,
        ..config.clone()
    };
    DrawEngine::new(fiber, &config)?.draw(rng)
}

/// One draw of the rejection-free sampler. Errors on an empty fiber.
pub fn sample_rejection_free<R: Rng + ?Sized>(
    fiber: &FiberSpec,
    config: &SisConfig,
    rng: &mut R,
) -> Result<SampleDraw> {
    let config = SisConfig {
        sampler: Sampler::RejectionFree,
        ..config.clone()
    };
    DrawEngine::new(fiber, &config)?.draw(rng)
}

/// `config.samples` draws, draw `i` from substream `(config.seed, i)`.
pub fn sample_many(fiber: &FiberSpec, config: &SisConfig) -> Result<Vec<SampleDraw>> {
    let engine = DrawEngine::new(fiber, config)?;
    let seed = config.seed;
    map_indexed(
        config.samples,
        config.workers,
        || engine.clone(),
        |eng, i| eng.draw(&mut substream(seed, i as u64)),
    )?
    .into_iter()
    .collect()
}

/// Importance estimate of `|F|` with rejected draws contributing zero.
pub fn estimate_count(fiber: &FiberSpec, config: &SisConfig) -> Result<CountEstimate> {
    let engine = DrawEngine::new(fiber, config)?;
    let seed = config.seed;
    let contributions: Vec<Option<BigUint>> = map_indexed(
        config.samples,
        config.workers,
        || engine.clone(),
        |eng, i| {
            eng.draw(&mut substream(seed, i as u64))
                .map(|d| (!d.is_rejected()).then_some(d.weight))
        },
    )?
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(summarize(&contributions))
}

/// Fraction of rejected draws among `config.samples`.
pub fn rejection_rate(fiber: &FiberSpec, config: &SisConfig) -> Result<f64> {
    estimate_count(fiber, config).map(|e| e.rejection_rate())
}

/// Mean and standard error of per-draw contributions `I{n in F} / q(n)`,
/// `None` marking a rejection. Sums are exact; the standard error is the
/// population standard deviation over `sqrt(N)`.
pub fn summarize(contributions: &[Option<BigUint>]) -> CountEstimate {
    let n = contributions.len();
    assert!(n > 0, "no draws");
    let mut sum = BigUint::zero();
    let mut sum_sq = BigUint::zero();
    let mut rejections = 0;
    for c in contributions {
        match c {
            Some(w) => {
                sum += w;
                sum_sq += w * w;
            }
            None => rejections += 1,
        }
    }
    let big_n = BigInt::from(n);
    let mean = BigRational::new(BigInt::from(sum), big_n.clone());
    let second = BigRational::new(BigInt::from(sum_sq), big_n.clone());
    let var = &second - &mean * &mean;
    // var / N, then sqrt in log space
    let var_of_mean = var / BigRational::from_integer(big_n);
    let ln_mean = ln_rational(&mean);
    let ln_se = 0.5 * ln_rational(&var_of_mean);
    let estimate = ln_mean.exp();
    CountEstimate {
        estimate,
        log10_estimate: ln_mean / std::f64::consts::LN_10,
        std_error: ln_se.exp(),
        samples: n,
        rejections,
        log_domain: !estimate.is_finite(),
        exact: mean,
    }
}

/// Natural log of a nonnegative big integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return big_to_f64(x).ln();
    }
    let shift = bits - 900;
    big_to_f64(&(x >> shift)).ln() + shift as f64 * std::f64::consts::LN_2
}

fn big_to_f64(x: &BigUint) -> f64 {
    // at most ~1000 bits, well inside f64 range
    x.to_u64_digits()
        .iter()
        .rev()
        .fold(0.0, |acc, &d| acc * 18_446_744_073_709_551_616.0 + d as f64)
}

/// Natural log of a nonnegative rational; `-inf` for zero.
pub fn ln_rational(x: &BigRational) -> f64 {
    let (num, den) = (x.numer(), x.denom());
    match (num.to_biguint(), den.to_biguint()) {
        (Some(n), Some(d)) => ln_biguint(&n) - ln_biguint(&d),
        _ => f64::NAN,
    }
}

/// `ln(sum exp(x_i))` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
