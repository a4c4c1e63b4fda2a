//! Memoized depth-first search deciding whether a residual margin has a
//! nonnegative integer completion over a suffix of the columns.
//!
//! Every exact answer in the crate (IP bounds, cell supports, fiber counts,
//! semigroup membership) goes through [`FeasibilityOracle::is_feasible`].
//! The search branches on columns in index order and prunes with
//! per-column caps `floor(r_i / a_ij)` and per-row reachability.
//!
//! A row whose remaining columns are all unit vectors `e_i` behaves like an
//! inequality: any nonnegative residual is absorbed. Such rows are dropped
//! from the memo key, which collapses the failure cells of the logistic
//! models into plain upper bounds on the success cells.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::DesignMatrix;

/// Default node budget for one query.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

const MEMO_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowClass {
    /// No column at or after the position touches the row.
    Dead,
    /// Only unit columns touch the row.
    Slack,
    Active,
}

#[derive(Debug)]
struct Structure {
    rows: usize,
    cols: usize,
    columns: Vec<Vec<(usize, i64)>>,
    // class[idx][row] relative to columns idx..cols
    class: Vec<Vec<RowClass>>,
    // active[idx] lists the Active rows at idx, in row order
    active: Vec<Vec<usize>>,
}

impl Structure {
    fn new(matrix: &DesignMatrix) -> Result<Self> {
        let (rows, cols) = (matrix.rows(), matrix.cols());
        let columns: Vec<Vec<(usize, i64)>> = (0..cols)
            .map(|j| {
                matrix
                    .sparse_column(j)
                    .iter()
                    .map(|&(i, a)| {
                        i64::try_from(a)
                            .map(|a| (i, a))
                            .map_err(|_| Error::Overflow("matrix entry"))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut class = vec![vec![RowClass::Dead; rows]; cols + 1];
        for idx in (0..cols).rev() {
            let mut here = class[idx + 1].clone();
            let col = &columns[idx];
            let unit = col.len() == 1 && col[0].1 == 1;
            for &(i, _) in col {
                here[i] = match (here[i], unit) {
                    (RowClass::Active, _) | (_, false) => RowClass::Active,
                    (RowClass::Dead | RowClass::Slack, true) => RowClass::Slack,
                };
            }
            class[idx] = here;
        }
        let active = class
            .iter()
            .map(|c| (0..rows).filter(|&i| c[i] == RowClass::Active).collect())
            .collect();
        Ok(Self {
            rows,
            cols,
            columns,
            class,
            active,
        })
    }

    /// Largest value of column `j` that keeps the residual nonnegative.
    fn cap(&self, j: usize, res: &[i64]) -> i64 {
        self.columns[j]
            .iter()
            .map(|&(i, a)| res[i].max(0) / a)
            .min()
            .unwrap_or(0)
    }
}

/// Exact feasibility oracle for one design matrix.
///
/// Cloning shares the precomputed structure and starts an empty memo, so a
/// clone per worker is cheap. Answers do not depend on the memo state.
#[derive(Debug)]
pub struct FeasibilityOracle {
    structure: Arc<Structure>,
    memo: Vec<HashMap<Vec<i64>, bool>>,
    memo_entries: usize,
    nodes: u64,
    budget: u64,
}

impl Clone for FeasibilityOracle {
    fn clone(&self) -> Self {
        Self {
            structure: Arc::clone(&self.structure),
            memo: vec![HashMap::new(); self.structure.cols + 1],
            memo_entries: 0,
            nodes: 0,
            budget: self.budget,
        }
    }
}

impl FeasibilityOracle {
    pub fn new(matrix: &DesignMatrix) -> Result<Self> {
        let structure = Arc::new(Structure::new(matrix)?);
        let memo = vec![HashMap::new(); structure.cols + 1];
        Ok(Self {
            structure,
            memo,
            memo_entries: 0,
            nodes: 0,
            budget: DEFAULT_NODE_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn rows(&self) -> usize {
        self.structure.rows
    }

    pub fn cols(&self) -> usize {
        self.structure.cols
    }

    /// Nodes visited since the last [`reset_nodes`](Self::reset_nodes).
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    /// Restarts the node budget.
    pub fn reset_nodes(&mut self) {
        self.nodes = 0;
    }

    pub(crate) fn column(&self, j: usize) -> &[(usize, i64)] {
        &self.structure.columns[j]
    }

    pub(crate) fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                visited: self.nodes,
            });
        }
        Ok(())
    }

    /// Whether `sum_{j >= from} a_j x_j = residual` has a solution in `Z_+`.
    pub fn is_feasible(&mut self, from: usize, residual: &[i64]) -> Result<bool> {
        assert_eq!(residual.len(), self.structure.rows, "residual length");
        assert!(from <= self.structure.cols, "column index out of range");
        let mut res = residual.to_vec();
        self.search(from, &mut res)
    }

    /// Largest admissible value of column `j` under the residual.
    pub fn cap(&self, j: usize, residual: &[i64]) -> i64 {
        self.structure.cap(j, residual)
    }

    /// Exact set of values `v` for column `cell` such that the residual
    /// `residual - a_cell v` stays completable over the later columns.
    pub fn support(&mut self, cell: usize, residual: &[i64]) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        if residual.iter().any(|&r| r < 0) {
            return Ok(out);
        }
        let cap = self.cap(cell, residual);
        let mut next = residual.to_vec();
        for v in 0..=cap {
            if v > 0 {
                for &(i, a) in &self.structure.columns[cell] {
                    next[i] -= a;
                }
            }
            if self.is_feasible(cell + 1, &next)? {
                out.push(v as u64);
            }
        }
        Ok(out)
    }

    /// Exact minimum and maximum of column `cell` over all completions, or
    /// `None` when there is no completion.
    pub fn value_range(&mut self, cell: usize, residual: &[i64]) -> Result<Option<(u64, u64)>> {
        if residual.iter().any(|&r| r < 0) || !self.is_feasible(cell, residual)? {
            return Ok(None);
        }
        let cap = self.cap(cell, residual);
        let column = self.structure.columns[cell].clone();
        let shifted = |v: i64| -> Vec<i64> {
            let mut r = residual.to_vec();
            for &(i, a) in &column {
                r[i] -= a * v;
            }
            r
        };
        let mut lo = None;
        for v in 0..=cap {
            if self.is_feasible(cell + 1, &shifted(v))? {
                lo = Some(v);
                break;
            }
        }
        let lo = lo.expect("feasible residual has a completion value");
        let mut hi = lo;
        for v in (lo..=cap).rev() {
            if self.is_feasible(cell + 1, &shifted(v))? {
                hi = v;
                break;
            }
        }
        Ok(Some((lo as u64, hi as u64)))
    }

    fn search(&mut self, idx: usize, res: &mut [i64]) -> Result<bool> {
        self.tick()?;
        let s = Arc::clone(&self.structure);
        for (i, r) in res.iter_mut().enumerate() {
            match s.class[idx][i] {
                RowClass::Dead if *r != 0 => return Ok(false),
                RowClass::Slack if *r < 0 => return Ok(false),
                RowClass::Slack => *r = 0,
                RowClass::Active if *r < 0 => return Ok(false),
                _ => {}
            }
        }
        if idx == s.cols {
            return Ok(true);
        }
        let key: Vec<i64> = s.active[idx].iter().map(|&i| res[i]).collect();
        if let Some(&hit) = self.memo[idx].get(&key) {
            return Ok(hit);
        }
        let found = self.branch(&s, idx, res)?;
        if self.memo_entries >= MEMO_LIMIT {
            self.memo.iter_mut().for_each(HashMap::clear);
            self.memo_entries = 0;
        }
        self.memo[idx].insert(key, found);
        self.memo_entries += 1;
        Ok(found)
    }

    fn branch(&mut self, s: &Structure, idx: usize, res: &[i64]) -> Result<bool> {
        // reach[i]: most that columns after idx can contribute to row i
        let mut reach = vec![0i64; s.rows];
        for j in idx + 1..s.cols {
            let cap = s.cap(j, res);
            if cap == 0 {
                continue;
            }
            for &(i, a) in &s.columns[j] {
                reach[i] = reach[i].saturating_add(a.saturating_mul(cap));
            }
        }
        let col = &s.columns[idx];
        let cap = s.cap(idx, res);
        for &i in &s.active[idx] {
            let own = col
                .iter()
                .find(|&&(r, _)| r == i)
                .map_or(0, |&(_, a)| a.saturating_mul(cap));
            if res[i] > reach[i].saturating_add(own) {
                return Ok(false);
            }
        }
        let mut lo = 0i64;
        for &(i, a) in col {
            if s.class[idx][i] == RowClass::Active {
                let need = res[i] - reach[i];
                if need > 0 {
                    lo = lo.max((need + a - 1) / a);
                }
            }
        }
        let mut next = res.to_vec();
        for v in (lo..=cap).rev() {
            for &(i, a) in col {
                next[i] = res[i] - a * v;
            }
            if self.search(idx + 1, &mut next)? {
                return Ok(true);
            }
            // search may have normalized rows in place
            next.copy_from_slice(res);
        }
        Ok(false)
    }
}

/// Converts a `u64` margin into signed residual form.
pub(crate) fn to_residual(margin: &[u64]) -> Result<Vec<i64>> {
    margin
        .iter()
        .map(|&b| i64::try_from(b).map_err(|_| Error::Overflow("margin")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_design_matrix, ModelSpec};

    fn oracle(rows: &[Vec<u64>]) -> FeasibilityOracle {
        FeasibilityOracle::new(&DesignMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn numerical_semigroup_2_3() {
        let mut o = oracle(&[vec![2, 3]]);
        let members: Vec<i64> = (0..12)
            .filter(|&t| o.is_feasible(0, &[t]).unwrap())
            .collect();
        assert_eq!(members, vec![0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]);
    }

    #[test]
    fn alpha_system() {
        let mut o = oracle(&[vec![1, 8]]);
        assert_eq!(o.support(0, &[9]).unwrap(), vec![1, 9]);
        assert_eq!(o.value_range(0, &[9]).unwrap(), Some((1, 9)));
        assert_eq!(o.value_range(1, &[4]).unwrap(), None);
    }

    #[test]
    fn slack_rows_absorb() {
        // univariate logit with I = 2; successes then failures
        let a = build_design_matrix(&ModelSpec::UnivariateLogit { levels: 2 }).unwrap();
        let mut o = FeasibilityOracle::new(&a).unwrap();
        // X1+ = 2, sum i X1i = 3, totals (1, 1): s = (1, 1), f = (0, 0)
        assert!(o.is_feasible(0, &[2, 3, 1, 1]).unwrap());
        // sum i X1i = 4 with X1+ = 2 needs s2 = 2 > total 1
        assert!(!o.is_feasible(0, &[2, 4, 1, 1]).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let a = build_design_matrix(&ModelSpec::Independence { rows: 3, cols: 3 }).unwrap();
        let mut o = FeasibilityOracle::new(&a).unwrap().with_budget(2);
        let err = o.is_feasible(0, &[5, 5, 5, 5, 5, 5]).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 2, .. }));
    }
}
