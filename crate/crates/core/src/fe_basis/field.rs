use std::sync::Arc;

use super::FunctionSpace;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Coefficient vector over a [`FunctionSpace`].
#[derive(Debug, Clone)]
pub struct DiscreteField {
    space: Arc<FunctionSpace>,
    coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn new(space: Arc<FunctionSpace>, coeffs: Vec<f64>) -> Result<DiscreteField> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.n_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(DiscreteField { space, coeffs })
    }

    pub fn zeros(space: Arc<FunctionSpace>) -> DiscreteField {
        let n = space.n_dofs();
        DiscreteField {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Signed local coefficients of `cell`, in local basis order.
    pub fn local_coeffs(&self, cell: usize) -> Vec<f64> {
        self.space
            .cell_dofs(cell)
            .iter()
            .zip(self.space.cell_signs(cell))
            .map(|(&d, &s)| s * self.coeffs[d])
            .collect()
    }

    /// Value (first `n_comp` entries used) and gradient rows at a reference
    /// point of `cell`.
    pub fn eval_in_cell(&self, cell: usize, ref_pt: Point) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let lb = self.space.eval_basis(cell, ref_pt)?;
        let nc = lb.n_comp;
        let local = self.local_coeffs(cell);
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for (i, &ci) in local.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            for c in 0..nc {
                val[c] += ci * lb.value(i, c);
                let g = lb.grad(i, c);
                grad[c][0] += ci * g[0];
                grad[c][1] += ci * g[1];
            }
        }
        Ok((val, grad))
    }

    /// Value and gradient rows at a physical point.
    pub fn eval(&self, pt: Point) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let (cell, r) = self.space.mesh().locate(pt)?;
        self.eval_in_cell(cell, r)
    }

    pub fn eval_scalar(&self, pt: Point) -> Result<(f64, [f64; 2])> {
        self.require_components(1)?;
        let (v, g) = self.eval(pt)?;
        Ok((v[0], g[0]))
    }

    pub fn eval_vector(&self, pt: Point) -> Result<([f64; 2], [[f64; 2]; 2])> {
        self.require_components(2)?;
        self.eval(pt)
    }

    fn require_components(&self, n: usize) -> Result<()> {
        if self.space.n_components() == n {
            Ok(())
        } else {
            Err(Error::IncompatibleSpaces(format!(
                "expected a {n}-component field, space is {:?}",
                self.space.kind()
            )))
        }
    }
}
