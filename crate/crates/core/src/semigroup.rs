//! Membership in the affine semigroup `Q(A)` of nonnegative integer column
//! combinations, in its saturation `K ∩ L` (real cone intersected with the
//! integer lattice of the columns), and box-bounded search for holes
//! `(K ∩ L) \ Q`.
//!
//! A hole is a margin whose fiber is LP-feasible and lattice-consistent yet
//! contains no integer table; holes of the residual semigroups are what make
//! interval sampling reject.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::is_feasible;
use crate::model::DesignMatrix;
use crate::par::{map_indexed, Workers};
use crate::search::FeasibilityOracle;

/// Largest box searched by [`holes_in_box`].
pub const MAX_BOX_POINTS: u128 = 10_000_000;

/// Column-echelon basis of the integer lattice `L(A) = A Z^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    // basis vectors with strictly increasing pivot rows
    columns: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
    rows: usize,
}

impl LatticeBasis {
    /// Integer column reduction of `A` (extended-gcd column operations).
    pub fn new(matrix: &DesignMatrix) -> Self {
        let d = matrix.rows();
        let mut cols: Vec<Vec<BigInt>> = (0..matrix.cols())
            .map(|j| matrix.column(j).into_iter().map(BigInt::from).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut next = 0;
        for row in 0..d {
            if next == cols.len() {
                break;
            }
            // gcd-combine every column's entry in `row` into column `next`
            for j in next + 1..cols.len() {
                if cols[j][row].is_zero() {
                    continue;
                }
                if cols[next][row].is_zero() {
                    cols.swap(next, j);
                    continue;
                }
                let (a, b) = (cols[next][row].clone(), cols[j][row].clone());
                let eg = a.extended_gcd(&b);
                let (g, x, y) = (eg.gcd, eg.x, eg.y);
                let (ag, bg) = (&a / &g, &b / &g);
                let p: Vec<BigInt> = (0..d)
                    .map(|i| &x * &cols[next][i] + &y * &cols[j][i])
                    .collect();
                let q: Vec<BigInt> = (0..d)
                    .map(|i| &ag * &cols[j][i] - &bg * &cols[next][i])
                    .collect();
                cols[next] = p;
                cols[j] = q;
            }
            if !cols[next][row].is_zero() {
                if cols[next][row].is_negative() {
                    cols[next].iter_mut().for_each(|v| *v = -v.clone());
                }
                pivots.push(row);
                next += 1;
            }
        }
        cols.truncate(next);
        Self {
            columns: cols,
            pivots,
            rows: d,
        }
    }

    /// Rank of the lattice.
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Whether `target` is an integer combination of the columns.
    pub fn contains(&self, target: &[i64]) -> bool {
        assert_eq!(target.len(), self.rows, "target length");
        let mut res: Vec<BigInt> = target.iter().map(|&v| BigInt::from(v)).collect();
        let mut row = 0;
        for (col, &pivot) in self.columns.iter().zip(&self.pivots) {
            if res[row..pivot].iter().any(|v| !v.is_zero()) {
                return false;
            }
            let (q, r) = res[pivot].div_rem(&col[pivot]);
            if !r.is_zero() {
                return false;
            }
            for (v, c) in res.iter_mut().zip(col) {
                *v -= &q * c;
            }
            row = pivot + 1;
        }
        res.iter().all(Zero::is_zero)
    }
}

fn check_len(matrix: &DesignMatrix, target: &[i64]) -> Result<()> {
    if target.len() != matrix.rows() {
        return Err(Error::LengthMismatch {
            what: "target",
            expected: matrix.rows(),
            got: target.len(),
        });
    }
    Ok(())
}

/// `target ∈ Q(A)`: some `x ∈ Z_+^k` has `A x = target`.
pub fn in_semigroup(matrix: &DesignMatrix, target: &[i64]) -> Result<bool> {
    check_len(matrix, target)?;
    FeasibilityOracle::new(matrix)?.is_feasible(0, target)
}

/// `target ∈ K(A)`: the rational system `A x = target, x >= 0` is feasible.
pub fn in_cone(matrix: &DesignMatrix, target: &[i64]) -> Result<bool> {
    check_len(matrix, target)?;
    let a: Vec<Vec<BigRational>> = (0..matrix.rows())
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect();
    let b: Vec<BigRational> = target
        .iter()
        .map(|&v| BigRational::from_integer(BigInt::from(v)))
        .collect();
    Ok(is_feasible(&a, &b))
}

/// `target ∈ K(A) ∩ L(A)`.
pub fn in_saturation(matrix: &DesignMatrix, target: &[i64]) -> Result<bool> {
    check_len(matrix, target)?;
    Ok(LatticeBasis::new(matrix).contains(target) && in_cone(matrix, target)?)
}

/// Holes found in a box `0..=box_bound[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemigroupAnalysis {
    pub matrix: DesignMatrix,
    pub box_bound: Vec<u64>,
    /// Holes in lexicographic order.
    pub holes: Vec<Vec<i64>>,
    pub saturated_in_box: bool,
}

/// Every `b` in the box with `b ∈ K ∩ L` and `b ∉ Q`.
pub fn holes_in_box(matrix: &DesignMatrix, box_bound: &[u64]) -> Result<SemigroupAnalysis> {
    holes_in_box_with(matrix, box_bound, None)
}

pub fn holes_in_box_with(
    matrix: &DesignMatrix,
    box_bound: &[u64],
    workers: Workers,
) -> Result<SemigroupAnalysis> {
    if box_bound.len() != matrix.rows() {
        return Err(Error::LengthMismatch {
            what: "box bound",
            expected: matrix.rows(),
            got: box_bound.len(),
        });
    }
    let points = box_bound
        .iter()
        .try_fold(1u128, |acc, &b| acc.checked_mul(b as u128 + 1))
        .filter(|&p| p <= MAX_BOX_POINTS)
        .ok_or_else(|| Error::BoxTooLarge {
            points: box_bound
                .iter()
                .fold(1u128, |acc, &b| acc.saturating_mul(b as u128 + 1)),
            limit: MAX_BOX_POINTS,
        })?;
    let lattice = LatticeBasis::new(matrix);
    let oracle = FeasibilityOracle::new(matrix)?;
    let point = |mut idx: usize| -> Vec<i64> {
        // last coordinate varies fastest
        let mut p = vec![0i64; box_bound.len()];
        for (slot, &b) in p.iter_mut().zip(box_bound).rev() {
            let span = b as usize + 1;
            *slot = (idx % span) as i64;
            idx /= span;
        }
        p
    };
    let verdicts = map_indexed(
        points as usize,
        workers,
        || oracle.clone(),
        |o, idx| {
            let b = point(idx);
            if !lattice.contains(&b) || o.is_feasible(0, &b)? {
                return Ok(None);
            }
            Ok(in_cone(matrix, &b)?.then_some(b))
        },
    )?;
    let holes: Vec<Vec<i64>> = verdicts
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(SemigroupAnalysis {
        matrix: matrix.clone(),
        box_bound: box_bound.to_vec(),
        saturated_in_box: holes.is_empty(),
        holes,
    })
}
