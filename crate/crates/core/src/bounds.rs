//! Per-cell bounds `[l_i, u_i]` for the next cell of a partially filled table.
//!
//! Two methods: the exact integer program (min / max of `x_i` over all
//! nonnegative integer completions) and its rational LP relaxation rounded
//! inward. The LP interval always contains the IP interval.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::lp::{variable_range, LpRange};
use crate::model::FiberSpec;
use crate::search::{to_residual, FeasibilityOracle};

/// How cell bounds are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundMethod {
    ExactIp,
    LpRelaxation,
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMethod::ExactIp => "ip",
            BoundMethod::LpRelaxation => "lp",
        })
    }
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ip" | "exact-ip" => Ok(BoundMethod::ExactIp),
            "lp" | "lp-relaxation" => Ok(BoundMethod::LpRelaxation),
            _ => Err(Error::Parse(format!("unknown bound method {s:?}"))),
        }
    }
}

/// Integer interval for one cell, or the empty marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBounds {
    pub lower: u64,
    pub upper: u64,
    pub method: BoundMethod,
    pub empty: bool,
}

impl CellBounds {
    pub fn interval(lower: u64, upper: u64, method: BoundMethod) -> Self {
        debug_assert!(lower <= upper);
        Self {
            lower,
            upper,
            method,
            empty: false,
        }
    }

    pub fn empty(method: BoundMethod) -> Self {
        Self {
            lower: 0,
            upper: 0,
            method,
            empty: true,
        }
    }

    /// Number of integers in the interval, zero when empty.
    pub fn width(&self) -> u64 {
        if self.empty {
            0
        } else {
            self.upper - self.lower + 1
        }
    }
}

/// A fiber with its first cells fixed.
#[derive(Debug, Clone)]
pub struct PartialAssignment<'a> {
    fiber: &'a FiberSpec,
    prefix: Vec<u64>,
    residual: Vec<i64>,
}

impl<'a> PartialAssignment<'a> {
    /// Empty prefix.
    pub fn root(fiber: &'a FiberSpec) -> Result<Self> {
        Ok(Self {
            fiber,
            prefix: Vec::new(),
            residual: to_residual(fiber.margin())?,
        })
    }

    /// Fixes `prefix` as the values of the first cells. Rejects prefixes that
    /// leave a negative residual or cover every cell.
    pub fn new(fiber: &'a FiberSpec, prefix: Vec<u64>) -> Result<Self> {
        let mut state = Self::root(fiber)?;
        for v in prefix {
            state = state.extend(v)?;
        }
        Ok(state)
    }

    /// Assignment with the next cell fixed to `value`.
    pub fn extend(&self, value: u64) -> Result<Self> {
        let cell = self.prefix.len();
        if cell + 1 >= self.fiber.cells() {
            return Err(Error::CellOutOfRange {
                cell,
                next: cell,
                cells: self.fiber.cells(),
            });
        }
        let v = i64::try_from(value).map_err(|_| Error::Overflow("cell value"))?;
        let mut residual = self.residual.clone();
        for &(i, a) in self.fiber.matrix().sparse_column(cell) {
            let sub = (a as i64)
                .checked_mul(v)
                .ok_or(Error::Overflow("residual"))?;
            residual[i] -= sub;
            if residual[i] < 0 {
                return Err(Error::NegativeResidual { row: i });
            }
        }
        let mut prefix = self.prefix.clone();
        prefix.push(value);
        Ok(Self {
            fiber: self.fiber,
            prefix,
            residual,
        })
    }

    pub fn fiber(&self) -> &'a FiberSpec {
        self.fiber
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    /// `b - sum_{j < i} a_j x*_j`.
    pub fn residual(&self) -> &[i64] {
        &self.residual
    }

    /// Index of the first unfixed cell.
    pub fn next_cell(&self) -> usize {
        self.prefix.len()
    }

    pub(crate) fn check_cell(&self, cell: usize) -> Result<()> {
        if cell != self.next_cell() {
            return Err(Error::CellOutOfRange {
                cell,
                next: self.next_cell(),
                cells: self.fiber.cells(),
            });
        }
        Ok(())
    }
}

/// Exact `min x_i` and `max x_i` over nonnegative integer completions.
pub fn bounds_exact_ip(state: &PartialAssignment<'_>, cell: usize) -> Result<CellBounds> {
    state.check_cell(cell)?;
    let mut oracle = FeasibilityOracle::new(state.fiber().matrix())?;
    bounds_exact_ip_with(&mut oracle, state.residual(), cell, state.fiber().cells())
}

/// [`bounds_exact_ip`] on a caller-held oracle, given the raw residual.
pub fn bounds_exact_ip_with(
    oracle: &mut FeasibilityOracle,
    residual: &[i64],
    cell: usize,
    cells: usize,
) -> Result<CellBounds> {
    if cell >= cells {
        return Err(Error::CellOutOfRange {
            cell,
            next: cell,
            cells,
        });
    }
    Ok(match oracle.value_range(cell, residual)? {
        Some((l, u)) => CellBounds::interval(l, u, BoundMethod::ExactIp),
        None => CellBounds::empty(BoundMethod::ExactIp),
    })
}

/// `ceil(LP min)` and `floor(LP max)` of `x_i` over the real relaxation.
pub fn bounds_lp(state: &PartialAssignment<'_>, cell: usize) -> Result<CellBounds> {
    state.check_cell(cell)?;
    bounds_lp_raw(state.fiber(), state.residual(), cell)
}

/// [`bounds_lp`] given the raw residual.
pub fn bounds_lp_raw(fiber: &FiberSpec, residual: &[i64], cell: usize) -> Result<CellBounds> {
    let k = fiber.cells();
    if cell >= k {
        return Err(Error::CellOutOfRange {
            cell,
            next: cell,
            cells: k,
        });
    }
    lp_bounds_on(&rational_rows(fiber), residual, cell)
}

/// Design matrix rows as exact rationals.
pub(crate) fn rational_rows(fiber: &FiberSpec) -> Vec<Vec<BigRational>> {
    let matrix = fiber.matrix();
    (0..matrix.rows())
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect()
}

/// LP bounds for `cell` using columns `cell..` of precomputed rational rows.
pub(crate) fn lp_bounds_on(
    rows: &[Vec<BigRational>],
    residual: &[i64],
    cell: usize,
) -> Result<CellBounds> {
    let a: Vec<Vec<BigRational>> = rows.iter().map(|r| r[cell..].to_vec()).collect();
    let b: Vec<BigRational> = residual
        .iter()
        .map(|&v| BigRational::from_integer(BigInt::from(v)))
        .collect();
    let empty = CellBounds::empty(BoundMethod::LpRelaxation);
    Ok(match variable_range(&a, &b, 0) {
        LpRange::Infeasible => empty,
        LpRange::Range { min, max } => {
            let max = max.expect("nonnegative columns bound every variable");
            let lower = min.ceil().to_integer();
            let upper = max.floor().to_integer();
            if lower > upper {
                empty
            } else {
                let to_u64 = |v: BigInt| v.to_u64().ok_or(Error::Overflow("LP bound"));
                CellBounds::interval(to_u64(lower)?, to_u64(upper)?, BoundMethod::LpRelaxation)
            }
        }
    })
}

/// Bounds by the chosen method.
pub fn cell_bounds(
    state: &PartialAssignment<'_>,
    cell: usize,
    method: BoundMethod,
) -> Result<CellBounds> {
    match method {
        BoundMethod::ExactIp => bounds_exact_ip(state, cell),
        BoundMethod::LpRelaxation => bounds_lp(state, cell),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_design_matrix, DesignMatrix, ModelSpec};

    fn alpha_fiber(alpha: u64) -> FiberSpec {
        let a = DesignMatrix::from_rows(&[vec![1, alpha]]).unwrap();
        FiberSpec::new(a, vec![alpha + 1]).unwrap()
    }

    fn indep22() -> FiberSpec {
        let a = build_design_matrix(&ModelSpec::Independence { rows: 2, cols: 2 }).unwrap();
        FiberSpec::new(a, vec![1, 1, 1, 1]).unwrap()
    }

    #[test]
    fn alpha_example_ip_vs_lp() {
        let f = alpha_fiber(8);
        let root = PartialAssignment::root(&f).unwrap();
        let ip = bounds_exact_ip(&root, 0).unwrap();
        assert_eq!((ip.lower, ip.upper, ip.empty), (1, 9, false));
        let lp = bounds_lp(&root, 0).unwrap();
        assert_eq!((lp.lower, lp.upper, lp.empty), (0, 9, false));
    }

    #[test]
    fn alpha_example_dead_prefix() {
        let f = alpha_fiber(8);
        let state = PartialAssignment::new(&f, vec![4]).unwrap();
        assert!(bounds_exact_ip(&state, 1).unwrap().empty);
        // 8 x2 = 5 has x2 = 5/8: ceil 1 > floor 0
        assert!(bounds_lp(&state, 1).unwrap().empty);
        let state = PartialAssignment::new(&f, vec![1]).unwrap();
        let lp = bounds_lp(&state, 1).unwrap();
        assert_eq!((lp.lower, lp.upper), (1, 1));
    }

    #[test]
    fn independence_2x2_cell_one() {
        let f = indep22();
        let root = PartialAssignment::root(&f).unwrap();
        for method in [BoundMethod::ExactIp, BoundMethod::LpRelaxation] {
            let b = cell_bounds(&root, 0, method).unwrap();
            assert_eq!((b.lower, b.upper, b.empty), (0, 1, false), "{method}");
        }
    }

    #[test]
    fn zero_residual_forces_zero() {
        let a = build_design_matrix(&ModelSpec::BivariateLogit {
            levels_i: 2,
            levels_j: 2,
        })
        .unwrap();
        let f = FiberSpec::new(a, vec![0; 7]).unwrap();
        let state = PartialAssignment::new(&f, vec![0, 0, 0]).unwrap();
        for method in [BoundMethod::ExactIp, BoundMethod::LpRelaxation] {
            let b = cell_bounds(&state, 3, method).unwrap();
            assert_eq!((b.lower, b.upper, b.empty), (0, 0, false));
        }
    }

    #[test]
    fn cell_must_be_next() {
        let f = indep22();
        let root = PartialAssignment::root(&f).unwrap();
        assert!(matches!(
            bounds_exact_ip(&root, 2),
            Err(Error::CellOutOfRange { .. })
        ));
        assert!(matches!(
            bounds_lp(&root, 9),
            Err(Error::CellOutOfRange { .. })
        ));
    }

    #[test]
    fn prefix_validation() {
        let f = indep22();
        assert!(matches!(
            PartialAssignment::new(&f, vec![2]),
            Err(Error::NegativeResidual { .. })
        ));
        assert!(PartialAssignment::new(&f, vec![0, 0, 0, 0]).is_err());
    }
}
