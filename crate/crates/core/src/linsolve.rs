//! Sparse direct solver for the symmetric indefinite saddle-point systems.
//!
//! Steps: symmetric Ruiz equilibration, AMD column ordering of the pattern of
//! `K + K^T`, left-looking (Gilbert-Peierls) LU with threshold partial
//! pivoting that prefers the diagonal, then iterative refinement against the
//! unscaled matrix.

use crate::assembly::SparseMatrix;
use crate::error::{Error, Result};

/// Residual bound every solve must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const RUIZ_ITERATIONS: usize = 8;
const DIAGONAL_PREFERENCE: f64 = 0.1;
const REFINEMENT_STEPS: usize = 3;
const NONE: usize = usize::MAX;

/// Column-compressed storage used internally by the factorization.
#[derive(Debug, Clone)]
struct Csc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csc {
    fn from_csr_transposed(a: &SparseMatrix) -> Csc {
        // Column j of A is row j of A^T; build it via a transpose.
        let t = a.transpose();
        Csc {
            n: a.n_rows(),
            col_ptr: t.row_ptr().to_vec(),
            row_idx: t.col_idx().to_vec(),
            values: t.values().to_vec(),
        }
    }
}

/// LU factors of `P (D K D) Q = L U` plus the scaling `D`.
#[derive(Debug, Clone)]
pub struct Factorization {
    matrix: SparseMatrix,
    scale: Vec<f64>,
    /// `pinv[row] = pivot step`.
    pinv: Vec<usize>,
    /// `q[step] = column`.
    q: Vec<usize>,
    l: Csc,
    u: Csc,
    min_pivot: f64,
}

/// Factorizes a square sparse matrix.
pub fn factorize(matrix: &SparseMatrix) -> Result<Factorization> {
    let n = matrix.n_rows();
    if matrix.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: matrix.n_cols(),
        });
    }
    let scale = ruiz_scaling(matrix);
    let scaled_t: Vec<(usize, usize, f64)> = matrix
        .triplets()
        .map(|(r, c, v)| (r, c, v * scale[r] * scale[c]))
        .collect();
    let scaled = SparseMatrix::from_triplets(n, n, scaled_t)?;
    let a = Csc::from_csr_transposed(&scaled);
    let q = amd_order(&scaled)?;
    let (l, u, pinv, min_pivot) = lu(&a, &q)?;
    Ok(Factorization {
        matrix: matrix.clone(),
        scale,
        pinv,
        q,
        l,
        u,
        min_pivot,
    })
}

/// Diagonal `D` with `D |K| D` having unit max-norm rows and columns
/// (approximately, after a fixed number of sweeps).
fn ruiz_scaling(a: &SparseMatrix) -> Vec<f64> {
    let n = a.n_rows();
    let mut d = vec![1.0; n];
    for _ in 0..RUIZ_ITERATIONS {
        let mut rmax = vec![0.0f64; n];
        for (r, c, v) in a.triplets() {
            let s = (v * d[r] * d[c]).abs();
            rmax[r] = rmax[r].max(s);
            rmax[c] = rmax[c].max(s);
        }
        for (di, m) in d.iter_mut().zip(&rmax) {
            if *m > 0.0 {
                *di /= m.sqrt();
            }
        }
    }
    d
}

fn amd_order(a: &SparseMatrix) -> Result<Vec<usize>> {
    let n = a.n_rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // The ordering library expects at least n entries; add the diagonal to
    // the pattern, which does not change the fill of K + K^T.
    let pattern = SparseMatrix::from_triplets(
        n,
        n,
        a.triplets().map(|(r, c, _)| (r, c, 1.0)).chain((0..n).map(|i| (i, i, 1.0))).collect(),
    )?;
    let ap: Vec<usize> = pattern.row_ptr().to_vec();
    let ai: Vec<usize> = pattern.col_idx().to_vec();
    let (p, _, _) = amd::order::<usize>(n, &ap, &ai, &amd::Control::default())
        .map_err(|s| Error::InvalidArgument(format!("AMD ordering failed: {s:?}")))?;
    Ok(p)
}

/// Gilbert-Peierls left-looking LU with partial pivoting.
fn lu(a: &Csc, q: &[usize]) -> Result<(Csc, Csc, Vec<usize>, f64)> {
    let n = a.n;
    let mut pinv = vec![NONE; n];
    let mut x = vec![0.0; n];
    let mut work = Workspace {
        xi: vec![0; n],
        stack: vec![0; n],
        pstack: vec![0; n],
        marked: vec![false; n],
    };
    let mut l = Csc {
        n,
        col_ptr: vec![0; n + 1],
        row_idx: Vec::new(),
        values: Vec::new(),
    };
    let mut u = Csc {
        n,
        col_ptr: vec![0; n + 1],
        row_idx: Vec::new(),
        values: Vec::new(),
    };
    let tiny = n.max(1) as f64 * f64::EPSILON;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        l.col_ptr[k] = l.row_idx.len();
        u.col_ptr[k] = u.row_idx.len();
        let col = q[k];

        // Reach of column `col` in the graph of L.
        let top = reach(&l, a, col, &mut work, &pinv);
        let xi = &work.xi;
        for &i in &xi[top..n] {
            x[i] = 0.0;
        }
        for p in a.col_ptr[col]..a.col_ptr[col + 1] {
            x[a.row_idx[p]] = a.values[p];
        }
        for px in top..n {
            let j = xi[px];
            let jj = pinv[j];
            if jj == NONE {
                continue;
            }
            // Unit diagonal stored first in each column of L.
            let xj = x[j];
            for p in l.col_ptr[jj] + 1..l.col_ptr[jj + 1] {
                x[l.row_idx[p]] -= l.values[p] * xj;
            }
        }

        // Pivot search among rows not yet pivotal.
        let mut ipiv = NONE;
        let mut amax = -1.0;
        for &i in &xi[top..n] {
            if pinv[i] == NONE {
                let t = x[i].abs();
                if t > amax {
                    amax = t;
                    ipiv = i;
                }
            } else {
                u.row_idx.push(pinv[i]);
                u.values.push(x[i]);
            }
        }
        if ipiv == NONE || amax <= tiny {
            return Err(Error::Singular {
                step: k,
                pivot: amax.max(0.0),
            });
        }
        if pinv[col] == NONE && x[col].abs() >= DIAGONAL_PREFERENCE * amax {
            ipiv = col;
        }
        let pivot = x[ipiv];
        min_pivot = min_pivot.min(pivot.abs());
        u.row_idx.push(k);
        u.values.push(pivot);
        pinv[ipiv] = k;
        l.row_idx.push(ipiv);
        l.values.push(1.0);
        for &i in &xi[top..n] {
            if pinv[i] == NONE {
                l.row_idx.push(i);
                l.values.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    l.col_ptr[n] = l.row_idx.len();
    u.col_ptr[n] = u.row_idx.len();
    // Rows of L in pivot order.
    for r in l.row_idx.iter_mut() {
        *r = pinv[*r];
    }
    Ok((l, u, pinv, min_pivot))
}

/// Nodes reachable from the pattern of `a[:, col]` in the graph of L, in
/// topological order in `xi[top..]`. `marked` is restored on exit.
fn reach(l: &Csc, a: &Csc, col: usize, work: &mut Workspace, pinv: &[usize]) -> usize {
    let n = a.n;
    let mut top = n;
    for p in a.col_ptr[col]..a.col_ptr[col + 1] {
        let start = a.row_idx[p];
        if !work.marked[start] {
            top = dfs(start, l, top, work, pinv);
        }
    }
    for &j in &work.xi[top..n] {
        work.marked[j] = false;
    }
    top
}

fn dfs(start: usize, l: &Csc, mut top: usize, work: &mut Workspace, pinv: &[usize]) -> usize {
    let mut head = 0usize;
    work.stack[0] = start;
    loop {
        let j = work.stack[head];
        let jj = pinv[j];
        if !work.marked[j] {
            work.marked[j] = true;
            work.pstack[head] = if jj == NONE { 0 } else { l.col_ptr[jj] };
        }
        let end = if jj == NONE { 0 } else { l.col_ptr[jj + 1] };
        let mut done = true;
        let mut p = work.pstack[head];
        while p < end {
            let i = l.row_idx[p];
            p += 1;
            if work.marked[i] {
                continue;
            }
            work.pstack[head] = p;
            head += 1;
            work.stack[head] = i;
            done = false;
            break;
        }
        if done {
            top -= 1;
            work.xi[top] = j;
            if head == 0 {
                return top;
            }
            head -= 1;
        }
    }
}

struct Workspace {
    xi: Vec<usize>,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    marked: Vec<bool>,
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Smallest pivot magnitude of the equilibrated matrix.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn nnz_factors(&self) -> usize {
        self.l.values.len() + self.u.values.len()
    }

    /// One pass of `x = K^{-1} b` through the factors.
    fn apply_inverse(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i] * self.scale[i];
        }
        // L y = P D b
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l.col_ptr[j] + 1..self.l.col_ptr[j + 1] {
                    y[self.l.row_idx[p]] -= self.l.values[p] * yj;
                }
            }
        }
        // U z = y; the diagonal is the last entry of each column.
        for j in (0..n).rev() {
            let last = self.u.col_ptr[j + 1] - 1;
            y[j] /= self.u.values[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u.col_ptr[j]..last {
                    y[self.u.row_idx[p]] -= self.u.values[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k] * self.scale[self.q[k]];
        }
        x
    }

    /// `||K x - b||_inf / (||K||_inf ||x||_inf + ||b||_inf)`, zero when both
    /// `x` and `b` vanish.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let kx = self.matrix.matvec(x);
        let r = kx.iter().zip(b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let denom = self.matrix.norm_inf() * xn + bn;
        if denom == 0.0 {
            0.0
        } else {
            r / denom
        }
    }

    /// Solves `K x = b` and returns `x` with its relative residual.
    pub fn solve_with_residual(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut x = self.apply_inverse(b);
        let mut res = self.relative_residual(&x, b);
        for _ in 0..REFINEMENT_STEPS {
            if res <= f64::EPSILON {
                break;
            }
            let kx = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&kx).map(|(b, k)| b - k).collect();
            let dx = self.apply_inverse(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let cres = self.relative_residual(&cand, b);
            if cres >= res {
                break;
            }
            x = cand;
            res = cres;
        }
        if !(res <= RESIDUAL_TOLERANCE) {
            return Err(Error::Residual {
                residual: res,
                tolerance: RESIDUAL_TOLERANCE,
            });
        }
        Ok((x, res))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_residual(b).map(|(x, _)| x)
    }
}
