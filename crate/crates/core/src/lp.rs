//! Exact rational simplex for `{x >= 0 : A x = b}`.
//!
//! Dense two-phase tableau with Bland's rule. All arithmetic is over
//! `BigRational`, so optimal values can be rounded with `ceil`/`floor`
//! without any tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Result of optimizing a linear objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal(BigRational),
}

/// Range of one variable over the polyhedron.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpRange {
    Infeasible,
    /// `max` is `None` when the variable is unbounded above.
    Range {
        min: BigRational,
        max: Option<BigRational>,
    },
}

/// Polyhedron `{x in R^n : A x = b, x >= 0}` brought to a feasible basis.
#[derive(Debug, Clone)]
pub struct FeasibleTableau {
    n: usize,
    // each row: n coefficients then the right-hand side
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl FeasibleTableau {
    /// Runs phase one. Returns `None` when the system is infeasible.
    pub fn new(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Self> {
        assert_eq!(a.len(), b.len(), "row count mismatch");
        let n = a.first().map_or(0, Vec::len);
        let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(a.len());
        for (row, rhs) in a.iter().zip(b) {
            assert_eq!(row.len(), n, "ragged constraint matrix");
            if row.iter().all(Zero::is_zero) {
                if !rhs.is_zero() {
                    return None;
                }
                continue;
            }
            let flip = rhs.is_negative();
            let mut r: Vec<BigRational> = row
                .iter()
                .map(|v| if flip { -v.clone() } else { v.clone() })
                .collect();
            r.push(if flip { -rhs.clone() } else { rhs.clone() });
            rows.push(r);
        }
        let m = rows.len();
        if n == 0 {
            return if m == 0 {
                Some(Self {
                    n,
                    rows,
                    basis: Vec::new(),
                })
            } else {
                None
            };
        }

        // Phase one tableau: [A | I | b], artificial variables n..n+m in the basis.
        let width = n + m;
        let mut tab: Vec<Vec<BigRational>> = rows
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                let rhs = r.pop().unwrap();
                r.extend((0..m).map(|t| if t == i { int(1) } else { int(0) }));
                r.push(rhs);
                r
            })
            .collect();
        let mut basis: Vec<usize> = (n..n + m).collect();
        // reduced costs for min sum(artificial); last entry is -objective
        let mut cost = vec![int(0); width + 1];
        for row in &tab {
            for j in 0..n {
                cost[j] -= &row[j];
            }
            cost[width] -= &row[width];
        }
        run_simplex(&mut tab, &mut basis, &mut cost, width, n);
        if !cost[width].is_zero() {
            return None;
        }

        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.len() {
            if basis[i] >= n {
                match (0..n).find(|&j| !tab[i][j].is_zero()) {
                    Some(j) => {
                        pivot(&mut tab, &mut basis, None, i, j, width);
                        i += 1;
                    }
                    None => {
                        tab.remove(i);
                        basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        let rows = tab
            .into_iter()
            .map(|mut r| {
                let rhs = r.pop().unwrap();
                r.truncate(n);
                r.push(rhs);
                r
            })
            .collect();
        Some(Self { n, rows, basis })
    }

    /// Minimizes `c . x` over the polyhedron.
    pub fn minimize(&self, c: &[BigRational]) -> LpOutcome {
        assert_eq!(c.len(), self.n, "objective length mismatch");
        let mut tab = self.rows.clone();
        let mut basis = self.basis.clone();
        let width = self.n;
        let mut cost: Vec<BigRational> = c.to_vec();
        cost.push(int(0));
        for (row, &bv) in tab.iter().zip(&basis) {
            let cb = c[bv].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=width {
                cost[j] -= &cb * &row[j];
            }
        }
        if run_simplex(&mut tab, &mut basis, &mut cost, width, width) {
            LpOutcome::Optimal(-cost[width].clone())
        } else {
            LpOutcome::Unbounded
        }
    }

    /// Minimum and maximum of variable `var`.
    pub fn variable_range(&self, var: usize) -> LpRange {
        let mut c = vec![int(0); self.n];
        c[var] = int(1);
        let min = match self.minimize(&c) {
            LpOutcome::Optimal(v) => v,
            // x >= 0 bounds the variable below
            _ => unreachable!("variable bounded below by zero"),
        };
        c[var] = int(-1);
        let max = match self.minimize(&c) {
            LpOutcome::Optimal(v) => Some(-v),
            _ => None,
        };
        LpRange::Range { min, max }
    }
}

/// Min and max of `x[var]` over `{x >= 0 : A x = b}`.
pub fn variable_range(a: &[Vec<BigRational>], b: &[BigRational], var: usize) -> LpRange {
    match FeasibleTableau::new(a, b) {
        None => LpRange::Infeasible,
        Some(t) => t.variable_range(var),
    }
}

/// Whether `{x >= 0 : A x = b}` is nonempty.
pub fn is_feasible(a: &[Vec<BigRational>], b: &[BigRational]) -> bool {
    FeasibleTableau::new(a, b).is_some()
}

/// Bland's-rule simplex on a tableau whose last column is the right-hand side.
/// `cost[width]` holds minus the current objective. Only columns below
/// `enter_limit` may enter the basis. Returns false when unbounded.
fn run_simplex(
    tab: &mut [Vec<BigRational>],
    basis: &mut [usize],
    cost: &mut [BigRational],
    width: usize,
    enter_limit: usize,
) -> bool {
    loop {
        let Some(enter) = (0..enter_limit).find(|&j| cost[j].is_negative()) else {
            return true;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for (i, row) in tab.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[width] / &row[enter];
            let better = match &leave {
                None => true,
                Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((row, _)) = leave else {
            return false;
        };
        pivot(tab, basis, Some(cost), row, enter, width);
    }
}

fn pivot(
    tab: &mut [Vec<BigRational>],
    basis: &mut [usize],
    cost: Option<&mut [BigRational]>,
    row: usize,
    col: usize,
    width: usize,
) {
    let p = tab[row][col].clone();
    if !p.is_one() {
        for v in tab[row].iter_mut() {
            *v /= &p;
        }
    }
    let pivot_row = tab[row].clone();
    let eliminate = |target: &mut [BigRational]| {
        let f = target[col].clone();
        if f.is_zero() {
            return;
        }
        for j in 0..=width {
            if !pivot_row[j].is_zero() {
                target[j] -= &f * &pivot_row[j];
            }
        }
    };
    for (i, r) in tab.iter_mut().enumerate() {
        if i != row {
            eliminate(r);
        }
    }
    if let Some(c) = cost {
        eliminate(c);
    }
    basis[row] = col;
}
