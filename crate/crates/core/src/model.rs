//! Tables, design matrices and fibers.
//!
//! A fiber is the set `{n in Z_+^k : A n = b}` for a nonnegative integer
//! design matrix `A` (d x k) and a margin `b`. The design matrices of the
//! independence model and of the univariate / bivariate logistic regression
//! models are built here from their sufficient statistics.
//!
//! Cell linearization:
//! * independence(I, J): row-major, cell (i, j) at `(i-1)*J + (j-1)`;
//! * univariate-logit(I): successes `X_{1i}` at `i-1`, failures `X_{2i}` at `I + i-1`;
//! * bivariate-logit(I, J): successes `X_{1ij}` in lexicographic (i, j) order at
//!   `(i-1)*J + (j-1)`, then failures in the same order offset by `I*J`.
//!
//! Covariate levels are the integers `1..=I` and `1..=J`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A vectorized contingency table `(n_1, ..., n_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TableVector(Vec<u64>);

impl TableVector {
    pub fn new(entries: Vec<u64>) -> Self {
        Self(entries)
    }

    pub fn zeros(cells: usize) -> Self {
        Self(vec![0; cells])
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    /// Cellwise sum, `None` on overflow or length mismatch.
    pub fn checked_add(&self, other: &TableVector) -> Option<TableVector> {
        if self.len() != other.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b))
            .collect::<Option<Vec<_>>>()
            .map(TableVector)
    }
}

impl From<Vec<u64>> for TableVector {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for TableVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.0, " ")
    }
}

impl FromStr for TableVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_vector(s).map(TableVector)
    }
}

/// Parses integers separated by commas and/or whitespace.
pub fn parse_vector(s: &str) -> Result<Vec<u64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u64>()
                .map_err(|e| Error::Parse(format!("bad nonnegative integer {t:?}: {e}")))
        })
        .collect()
}

fn write_joined(f: &mut fmt::Formatter<'_>, xs: &[u64], sep: &str) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// A `d x k` nonnegative integer matrix with no all-zero column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
    // (row, coefficient) pairs of the nonzero entries of each column
    sparse_cols: Vec<Vec<(usize, u64)>>,
}

impl DesignMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidDimension {
                field: "rows",
                reason: "a design matrix needs at least one row".into(),
            });
        }
        if cols == 0 {
            return Err(Error::InvalidDimension {
                field: "cols",
                reason: "a design matrix needs at least one column".into(),
            });
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or(Error::Overflow("matrix size"))?;
        if entries.len() != expected {
            return Err(Error::LengthMismatch {
                what: "matrix entries",
                expected,
                got: entries.len(),
            });
        }
        let sparse_cols: Vec<Vec<(usize, u64)>> = (0..cols)
            .map(|j| {
                (0..rows)
                    .filter_map(|i| {
                        let a = entries[i * cols + j];
                        (a != 0).then_some((i, a))
                    })
                    .collect()
            })
            .collect();
        if let Some(j) = sparse_cols.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidDimension {
                field: "entries",
                reason: format!("column {j} is all zero, so its cell would be unbounded"),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
            sparse_cols,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                what: "matrix row",
                expected: cols,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Number of rows `d`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns (cells) `k`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Dense copy of column `j`.
    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Nonzero `(row, coefficient)` pairs of column `j`.
    pub fn sparse_column(&self, j: usize) -> &[(usize, u64)] {
        &self.sparse_cols[j]
    }

    /// Matrix whose column `t` is column `order[t]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.cols)?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.rows {
            entries.extend(order.iter().map(|&j| self.get(i, j)));
        }
        Self::new(self.rows, self.cols, entries)
    }

    /// Parses the plain-text format: a `d k` header followed by `d` rows.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims = parse_vector(header)?;
        let [d, k] = dims[..] else {
            return Err(Error::Parse(format!(
                "matrix header must be \"d k\", got {header:?}"
            )));
        };
        let (d, k) = (d as usize, k as usize);
        let mut entries = Vec::with_capacity(d * k);
        for i in 0..d {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing matrix row {}", i + 1)))?;
            let row = parse_vector(line)?;
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    what: "matrix row",
                    expected: k,
                    got: row.len(),
                });
            }
            entries.extend(row);
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing matrix content {extra:?}")));
        }
        Self::new(d, k, entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(u64::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn check_permutation(order: &[usize], k: usize) -> Result<()> {
    if order.len() != k {
        return Err(Error::LengthMismatch {
            what: "cell order",
            expected: k,
            got: order.len(),
        });
    }
    let mut seen = vec![false; k];
    for &j in order {
        if j >= k || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidDimension {
                field: "cell order",
                reason: format!("{order:?} is not a permutation of 0..{k}"),
            });
        }
    }
    Ok(())
}

/// The named models with built-in design matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    /// Two-way table with fixed row and column sums.
    Independence { rows: usize, cols: usize },
    /// Logistic regression on one covariate with levels `1..=levels`.
    UnivariateLogit { levels: usize },
    /// Logistic regression on two covariates with levels `1..=i` and `1..=j`.
    BivariateLogit { levels_i: usize, levels_j: usize },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let need = |field, v: usize, min: usize| {
            if v < min {
                Err(Error::InvalidDimension {
                    field,
                    reason: format!("must be at least {min}, got {v}"),
                })
            } else {
                Ok(())
            }
        };
        match *self {
            ModelSpec::Independence { rows, cols } => {
                need("rows", rows, 1)?;
                need("cols", cols, 1)
            }
            ModelSpec::UnivariateLogit { levels } => need("levels", levels, 2),
            ModelSpec::BivariateLogit { levels_i, levels_j } => {
                need("levels_i", levels_i, 2)?;
                need("levels_j", levels_j, 2)
            }
        }
    }

    /// Number of cells `k`.
    pub fn cells(&self) -> usize {
        match *self {
            ModelSpec::Independence { rows, cols } => rows * cols,
            ModelSpec::UnivariateLogit { levels } => 2 * levels,
            ModelSpec::BivariateLogit { levels_i, levels_j } => 2 * levels_i * levels_j,
        }
    }

    /// Number of sufficient statistics `d`.
    pub fn statistics(&self) -> usize {
        match *self {
            ModelSpec::Independence { rows, cols } => rows + cols,
            ModelSpec::UnivariateLogit { levels } => levels + 2,
            ModelSpec::BivariateLogit { levels_i, levels_j } => levels_i * levels_j + 3,
        }
    }

    /// Short family name used in experiment output.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Independence { .. } => "independence",
            ModelSpec::UnivariateLogit { .. } => "univariate",
            ModelSpec::BivariateLogit { .. } => "bivariate",
        }
    }

    /// Level description, e.g. `5` or `2,7`.
    pub fn levels(&self) -> String {
        match *self {
            ModelSpec::Independence { rows, cols } => format!("{rows},{cols}"),
            ModelSpec::UnivariateLogit { levels } => levels.to_string(),
            ModelSpec::BivariateLogit { levels_i, levels_j } => format!("{levels_i},{levels_j}"),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelSpec::Independence { rows, cols } => write!(f, "indep:{rows},{cols}"),
            ModelSpec::UnivariateLogit { levels } => write!(f, "unilogit:{levels}"),
            ModelSpec::BivariateLogit { levels_i, levels_j } => {
                write!(f, "bilogit:{levels_i},{levels_j}")
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Accepts `indep:I,J`, `unilogit:I` and `bilogit:I,J`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("model {s:?} must look like name:levels")))?;
        let nums: Vec<usize> = parse_vector(args)?
            .into_iter()
            .map(|v| v as usize)
            .collect();
        let spec = match (name.trim(), nums.as_slice()) {
            ("indep" | "independence", &[rows, cols]) => ModelSpec::Independence { rows, cols },
            ("unilogit" | "univariate", &[levels]) => ModelSpec::UnivariateLogit { levels },
            ("bilogit" | "bivariate", &[levels_i, levels_j]) => {
                ModelSpec::BivariateLogit { levels_i, levels_j }
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unknown model {s:?}; expected indep:I,J, unilogit:I or bilogit:I,J"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Builds the design matrix whose rows are the model's sufficient statistics.
///
/// Row order for bivariate-logit: `X_{1++}`, `sum_i i X_{1i+}`, `sum_j j X_{1+j}`,
/// then `X_{+ij}` in lexicographic (i, j) order. Univariate-logit drops the
/// j-statistic: `X_{1+}`, `sum_i i X_{1i}`, then `X_{+i}`. Independence has the
/// I row sums followed by the J column sums.
pub fn build_design_matrix(spec: &ModelSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let d = spec.statistics();
    let k = spec.cells();
    let mut a = vec![0u64; d * k];
    let mut set = |row: usize, col: usize, v: u64| a[row * k + col] = v;
    match *spec {
        ModelSpec::Independence { rows, cols } => {
            for i in 0..rows {
                for j in 0..cols {
                    let cell = i * cols + j;
                    set(i, cell, 1);
                    set(rows + j, cell, 1);
                }
            }
        }
        ModelSpec::UnivariateLogit { levels } => {
            for i in 1..=levels {
                let success = i - 1;
                let failure = levels + i - 1;
                set(0, success, 1);
                set(1, success, i as u64);
                set(1 + i, success, 1);
                set(1 + i, failure, 1);
            }
        }
        ModelSpec::BivariateLogit { levels_i, levels_j } => {
            let half = levels_i * levels_j;
            for i in 1..=levels_i {
                for j in 1..=levels_j {
                    let pos = (i - 1) * levels_j + (j - 1);
                    set(0, pos, 1);
                    set(1, pos, i as u64);
                    set(2, pos, j as u64);
                    set(3 + pos, pos, 1);
                    set(3 + pos, half + pos, 1);
                }
            }
        }
    }
    DesignMatrix::new(d, k, a)
}

/// `A n` in exact integer arithmetic.
pub fn margin_of(matrix: &DesignMatrix, table: &TableVector) -> Result<Vec<u64>> {
    if table.len() != matrix.cols() {
        return Err(Error::LengthMismatch {
            what: "table",
            expected: matrix.cols(),
            got: table.len(),
        });
    }
    let mut b = vec![0u64; matrix.rows()];
    for (j, &n) in table.entries().iter().enumerate() {
        for &(i, a) in matrix.sparse_column(j) {
            let term = a.checked_mul(n).ok_or(Error::Overflow("margin"))?;
            b[i] = b[i].checked_add(term).ok_or(Error::Overflow("margin"))?;
        }
    }
    Ok(b)
}

/// A design matrix with a margin vector; describes `F = {n >= 0 : A n = b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberSpec {
    matrix: DesignMatrix,
    margin: Vec<u64>,
}

impl FiberSpec {
    /// Fiber from a raw margin. Nonemptiness is not checked.
    pub fn new(matrix: DesignMatrix, margin: Vec<u64>) -> Result<Self> {
        if margin.len() != matrix.rows() {
            return Err(Error::LengthMismatch {
                what: "margin",
                expected: matrix.rows(),
                got: margin.len(),
            });
        }
        Ok(Self { matrix, margin })
    }

    /// Fiber through an observed table, `b = A n_obs`.
    pub fn from_table(matrix: DesignMatrix, observed: &TableVector) -> Result<Self> {
        let margin = margin_of(&matrix, observed)?;
        Ok(Self { matrix, margin })
    }

    pub fn matrix(&self) -> &DesignMatrix {
        &self.matrix
    }

    pub fn margin(&self) -> &[u64] {
        &self.margin
    }

    pub fn cells(&self) -> usize {
        self.matrix.cols()
    }

    pub fn contains(&self, table: &TableVector) -> Result<bool> {
        in_fiber(self, table)
    }

    /// Same fiber with cells reordered: new cell `t` is old cell `order[t]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.permute_columns(order)?,
            margin: self.margin.clone(),
        })
    }
}

/// True iff `A n = b`. Entries are nonnegative by construction.
pub fn in_fiber(fiber: &FiberSpec, table: &TableVector) -> Result<bool> {
    if table.len() != fiber.cells() {
        return Err(Error::LengthMismatch {
            what: "table",
            expected: fiber.cells(),
            got: table.len(),
        });
    }
    match margin_of(&fiber.matrix, table) {
        Ok(b) => Ok(b == fiber.margin),
        // A table whose margin overflows u64 cannot match a u64 margin.
        Err(Error::Overflow(_)) => Ok(false),
        Err(e) => Err(e),
    }
}
