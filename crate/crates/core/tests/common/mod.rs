#![allow(dead_code)]

use fibersis::model::{build_design_matrix, DesignMatrix, FiberSpec, ModelSpec, TableVector};
use rand::Rng;

/// All completions `x_from..x_k >= 0` of `residual`, by plain nested search
/// with nonnegativity and dead-row pruning only.
pub fn brute_completions(matrix: &DesignMatrix, from: usize, residual: &[i64]) -> Vec<Vec<u64>> {
    let k = matrix.cols();
    let d = matrix.rows();
    // last column touching each row
    let mut last = vec![None; d];
    for j in 0..k {
        for (i, l) in last.iter_mut().enumerate() {
            if matrix.get(i, j) != 0 {
                *l = Some(j);
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        m: &DesignMatrix,
        last: &[Option<usize>],
        j: usize,
        res: &mut Vec<i64>,
        cur: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        // rows no column >= j touches must already be zero
        if res
            .iter()
            .zip(last)
            .any(|(&r, l)| l.is_none_or(|l| l < j) && r != 0)
        {
            return;
        }
        if j == m.cols() {
            out.push(cur.clone());
            return;
        }
        let mut v = 0u64;
        loop {
            let ok = (0..res.len()).all(|i| res[i] - (m.get(i, j) * v) as i64 >= 0);
            if !ok {
                break;
            }
            for (i, r) in res.iter_mut().enumerate() {
                *r -= (m.get(i, j) * v) as i64;
            }
            cur.push(v);
            rec(m, last, j + 1, res, cur, out);
            cur.pop();
            for (i, r) in res.iter_mut().enumerate() {
                *r += (m.get(i, j) * v) as i64;
            }
            v += 1;
        }
    }
    let mut res = residual.to_vec();
    if res.iter().any(|&r| r < 0) {
        return out;
    }
    // columns before `from` are fixed at zero
    let mut prefix_zero = vec![0u64; from];
    cur.append(&mut prefix_zero);
    rec(matrix, &last, from, &mut res, &mut cur, &mut out);
    out.into_iter().map(|t| t[from..].to_vec()).collect()
}

/// Random small table with entries uniform on `0..=max`.
pub fn small_table<R: Rng>(cells: usize, max: u64, rng: &mut R) -> TableVector {
    TableVector::new((0..cells).map(|_| rng.random_range(0..=max)).collect())
}

pub fn fiber_through(model: &ModelSpec, table: &TableVector) -> FiberSpec {
    FiberSpec::from_table(build_design_matrix(model).unwrap(), table).unwrap()
}

pub fn alpha_fiber(alpha: u64) -> FiberSpec {
    let a = DesignMatrix::from_rows(&[vec![1, alpha]]).unwrap();
    FiberSpec::new(a, vec![alpha + 1]).unwrap()
}

pub fn families() -> [ModelSpec; 3] {
    [
        ModelSpec::Independence { rows: 3, cols: 3 },
        ModelSpec::UnivariateLogit { levels: 4 },
        ModelSpec::BivariateLogit {
            levels_i: 2,
            levels_j: 3,
        },
    ]
}

/// Prints and returns a pass/fail line.
pub fn report(id: &str, pass: bool, detail: &str) -> bool {
    println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
