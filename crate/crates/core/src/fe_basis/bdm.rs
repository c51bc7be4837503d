//! The BDM_k element on an axis-aligned rectangle.
//!
//! Local space: `P_k(T)^2 + span{curl(x^{k+1} y), curl(x y^{k+1})}`, with
//! `4(k+1)` normal-moment degrees of freedom on the edges and `k(k-1)`
//! interior moments against `P_{k-2}(T)^2`. Local edge functionals use the
//! outward normal of the cell; the Legendre weights on an edge are always
//! parameterized along the global edge direction, so neighbouring cells see
//! the same weight function and differ only by the normal sign.

use nalgebra::DMatrix;

use super::lagrange::{monomial, monomial_exponents};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_rule, legendre, tensor_rule};

/// Rejection threshold for the local dof matrix.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct BdmElement {
    k: usize,
    hx: f64,
    hy: f64,
    /// Column `m` holds the raw-basis coefficients of local basis function `m`.
    coeffs: DMatrix<f64>,
    condition: f64,
}

/// Value and physical Jacobian (`grad[c][d] = d v_c / d x_d`) of vector
/// basis functions.
pub type VectorValues = (Vec<[f64; 2]>, Vec<[[f64; 2]; 2]>);

pub fn n_local(k: usize) -> usize {
    (k + 1) * (k + 2) + 2
}

pub fn n_edge_dofs(k: usize) -> usize {
    k + 1
}

pub fn n_interior_dofs(k: usize) -> usize {
    k * k.saturating_sub(1)
}

/// Applies the local (outward-normal) dof functionals of BDM_k on a
/// `hx x hy` cell to `v`, which is evaluated at reference coordinates.
///
/// Ordering: edge slot major (bottom, right, top, left), Legendre degree
/// minor; then interior moments, component major.
pub fn local_functionals(k: usize, hx: f64, hy: f64, v: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let n = k + 2;
    let erule = edge_rule(n).expect("edge rule order in range");
    let mut out = Vec::with_capacity(n_local(k) - 2);
    for slot in 0..4 {
        let normal = Mesh::outward_normal(slot);
        let len = if slot % 2 == 0 { hx } else { hy };
        for m in 0..=k {
            let mut acc = 0.0;
            for (s, w) in erule.iter() {
                let val = v(Mesh::edge_ref_point(slot, s));
                let vn = val[0] * normal[0] + val[1] * normal[1];
                acc += w * len * vn * legendre(m, 2.0 * s - 1.0);
            }
            out.push(acc);
        }
    }
    if k >= 2 {
        let trule = tensor_rule(n).expect("tensor rule order in range");
        let exps = monomial_exponents(k - 2);
        let vals: Vec<([f64; 2], Point, f64)> = trule
            .iter()
            .map(|(p, w)| (v(p), [(p[0] - 0.5) * hx, (p[1] - 0.5) * hy], w * hx * hy))
            .collect();
        for c in 0..2 {
            for &(a, b) in &exps {
                let acc: f64 = vals
                    .iter()
                    .map(|(val, x, w)| w * val[c] * monomial(a, b, x[0], x[1]).0)
                    .sum();
                out.push(acc);
            }
        }
    }
    out
}

impl BdmElement {
    pub fn new(k: usize, hx: f64, hy: f64) -> Result<BdmElement> {
        if !(1..=6).contains(&k) {
            return Err(Error::UnsupportedSpace(format!("BDM({k})")));
        }
        let n = n_local(k);
        let mut raw = BdmElement {
            k,
            hx,
            hy,
            coeffs: DMatrix::identity(n, n),
            condition: 1.0,
        };
        // dof[i][j] = functional i applied to raw basis function j
        let mut dof = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = local_functionals(k, hx, hy, |p| raw.eval_raw_one(j, p).0);
            for (i, v) in col.into_iter().enumerate() {
                dof[(i, j)] = v;
            }
        }
        let sv = dof.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        raw.coeffs = dof
            .try_inverse()
            .ok_or(Error::IllConditioned(f64::INFINITY))?;
        raw.condition = condition;
        Ok(raw)
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn n_local(&self) -> usize {
        n_local(self.k)
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Raw basis function `j` (monomials then the two curl enrichments) at
    /// reference point `p`, in physical derivatives.
    fn eval_raw_one(&self, j: usize, p: Point) -> ([f64; 2], [[f64; 2]; 2]) {
        let k = self.k;
        let (sx, sy) = (2.0 / self.hx, 2.0 / self.hy);
        let xi = 2.0 * p[0] - 1.0;
        let eta = 2.0 * p[1] - 1.0;
        let n_scalar = (k + 1) * (k + 2) / 2;
        if j < 2 * n_scalar {
            let c = j / n_scalar;
            let (a, b) = monomial_exponents(k)[j % n_scalar];
            let (v, g) = monomial(a, b, xi, eta);
            let mut val = [0.0; 2];
            let mut grad = [[0.0; 2]; 2];
            val[c] = v;
            grad[c] = [g[0] * sx, g[1] * sy];
            return (val, grad);
        }
        // Physical curl (d/dy, -d/dx) of psi(xi, eta).
        let kp = (k + 1) as f64;
        let kf = k as f64;
        let pw = |x: f64, e: i32| if e < 0 { 0.0 } else { x.powi(e) };
        let ki = k as i32;
        if j == 2 * n_scalar {
            // psi = xi^{k+1} eta
            let v0 = sy * pw(xi, ki + 1);
            let v1 = -sx * kp * pw(xi, ki) * eta;
            let g0 = [sy * sx * kp * pw(xi, ki), 0.0];
            let g1 = [-sx * sx * kp * kf * pw(xi, ki - 1) * eta, -sx * sy * kp * pw(xi, ki)];
            ([v0, v1], [g0, g1])
        } else {
            // psi = xi eta^{k+1}
            let v0 = sy * kp * xi * pw(eta, ki);
            let v1 = -sx * pw(eta, ki + 1);
            let g0 = [sy * sx * kp * pw(eta, ki), sy * sy * kp * kf * xi * pw(eta, ki - 1)];
            let g1 = [0.0, -sx * sy * kp * pw(eta, ki)];
            ([v0, v1], [g0, g1])
        }
    }

    /// Local basis values and physical Jacobians at reference point `p`.
    pub fn eval(&self, p: Point) -> VectorValues {
        let n = self.n_local();
        let raw: Vec<_> = (0..n).map(|j| self.eval_raw_one(j, p)).collect();
        let mut vals = vec![[0.0; 2]; n];
        let mut grads = vec![[[0.0; 2]; 2]; n];
        for m in 0..n {
            for (j, (rv, rg)) in raw.iter().enumerate() {
                let c = self.coeffs[(j, m)];
                if c == 0.0 {
                    continue;
                }
                for a in 0..2 {
                    vals[m][a] += c * rv[a];
                    for b in 0..2 {
                        grads[m][a][b] += c * rg[a][b];
                    }
                }
            }
        }
        (vals, grads)
    }
}
