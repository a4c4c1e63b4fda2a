//! Brute-force fiber oracle: exact counts, explicit enumeration and exact
//! cell supports.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::bounds::PartialAssignment;
use crate::error::Result;
use crate::model::{FiberSpec, TableVector};
use crate::search::{to_residual, FeasibilityOracle, DEFAULT_NODE_BUDGET};

/// Exact size of a fiber, with the tables themselves when few enough.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberCount {
    pub count: BigUint,
    pub enumerated: Option<Vec<TableVector>>,
}

impl FiberCount {
    pub fn as_u64(&self) -> Option<u64> {
        self.count.to_u64()
    }
}

/// Counts `{n >= 0 : A n = b}` with the default node budget. When `cap` is
/// given and the count does not exceed it, the tables are listed in
/// lexicographic order.
pub fn count_fiber(fiber: &FiberSpec, cap: Option<usize>) -> Result<FiberCount> {
    count_fiber_with_budget(fiber, cap, DEFAULT_NODE_BUDGET)
}

pub fn count_fiber_with_budget(
    fiber: &FiberSpec,
    cap: Option<usize>,
    budget: u64,
) -> Result<FiberCount> {
    let mut oracle = FeasibilityOracle::new(fiber.matrix())?.with_budget(budget);
    let root = to_residual(fiber.margin())?;
    let mut counter = Counter {
        oracle: &mut oracle,
        memo: HashMap::new(),
    };
    let count = if counter.oracle.is_feasible(0, &root)? {
        counter.count(0, &root)?
    } else {
        BigUint::zero()
    };
    let enumerated = match cap {
        Some(cap) if count <= BigUint::from(cap) => {
            let mut out = Vec::with_capacity(cap.min(count.to_usize().unwrap_or(0)));
            if !count.is_zero() {
                let mut prefix = Vec::with_capacity(fiber.cells());
                list(&mut oracle, 0, &root, &mut prefix, &mut out)?;
            }
            Some(out)
        }
        _ => None,
    };
    Ok(FiberCount { count, enumerated })
}

struct Counter<'o> {
    oracle: &'o mut FeasibilityOracle,
    memo: HashMap<(usize, Vec<i64>), BigUint>,
}

impl Counter<'_> {
    /// Number of completions of a residual already known to be feasible.
    fn count(&mut self, idx: usize, res: &[i64]) -> Result<BigUint> {
        self.oracle.tick()?;
        if idx == self.oracle.cols() {
            return Ok(BigUint::one());
        }
        let key = (idx, res.to_vec());
        if let Some(c) = self.memo.get(&key) {
            return Ok(c.clone());
        }
        let column = self.oracle.column(idx).to_vec();
        let mut total = BigUint::zero();
        for v in self.oracle.support(idx, res)? {
            let mut next = res.to_vec();
            for &(i, a) in &column {
                next[i] -= a * v as i64;
            }
            total += self.count(idx + 1, &next)?;
        }
        self.memo.insert(key, total.clone());
        Ok(total)
    }
}

fn list(
    oracle: &mut FeasibilityOracle,
    idx: usize,
    res: &[i64],
    prefix: &mut Vec<u64>,
    out: &mut Vec<TableVector>,
) -> Result<()> {
    oracle.tick()?;
    if idx == oracle.cols() {
        out.push(TableVector::new(prefix.clone()));
        return Ok(());
    }
    let column = oracle.column(idx).to_vec();
    for v in oracle.support(idx, res)? {
        let mut next = res.to_vec();
        for &(i, a) in &column {
            next[i] -= a * v as i64;
        }
        prefix.push(v);
        list(oracle, idx + 1, &next, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

/// Exact values of `cell` that leave a nonempty integer fiber, ascending.
/// Empty when the prefix cannot be completed.
pub fn cell_support(state: &PartialAssignment<'_>, cell: usize) -> Result<Vec<u64>> {
    state.check_cell(cell)?;
    let mut oracle = FeasibilityOracle::new(state.fiber().matrix())?;
    oracle.support(cell, state.residual())
}
