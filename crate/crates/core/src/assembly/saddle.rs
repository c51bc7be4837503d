use std::sync::Arc;

use super::{
    assemble_divergence, assemble_load, assemble_mean, assemble_pressure_mass, assemble_reconstructed_load,
    assemble_stiffness, LoadMode, SparseMatrix,
};
use crate::error::{Error, Result};
use crate::fe_basis::{DiscreteField, FunctionSpace, SpaceKind};
use crate::linsolve;
use crate::mesh::Point;
use crate::reconstruction::Reconstruction;

/// The first Lamé parameter, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Lambda {
    /// `1 / lambda`, zero for the incompressible limit.
    pub fn inverse(&self) -> f64 {
        match self {
            Lambda::Finite(l) => 1.0 / l,
            Lambda::Infinite => 0.0,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Lambda::Finite(l) => *l,
            Lambda::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Lambda::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    /// Bordered row/column enforcing `int p = 0`.
    MeanPressureZero,
}

/// Blocks of
/// ```text
/// [ A  B^T  0 ] [u]   [rhs_u]
/// [ B -M/l  m ] [p] = [  0  ]
/// [ 0  m^T  0 ] [s]   [  0  ]
/// ```
/// where the last row/column exists only with [`Constraint::MeanPressureZero`].
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub m: SparseMatrix,
    pub mean: Vec<f64>,
    pub lambda: Lambda,
    pub rhs_u: Vec<f64>,
    pub constraint: Constraint,
    pub eliminated: Vec<usize>,
    space_v: Arc<FunctionSpace>,
    space_q: Arc<FunctionSpace>,
}

/// Displacement, pressure, the mean-constraint multiplier and the relative
/// solver residual.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: DiscreteField,
    pub p: DiscreteField,
    pub multiplier: f64,
    pub residual: f64,
}

impl SaddleSystem {
    pub fn space_v(&self) -> &Arc<FunctionSpace> {
        &self.space_v
    }

    pub fn space_q(&self) -> &Arc<FunctionSpace> {
        &self.space_q
    }

    pub fn n_u(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_p(&self) -> usize {
        self.m.n_rows()
    }

    pub fn size(&self) -> usize {
        self.n_u() + self.n_p() + usize::from(self.constraint == Constraint::MeanPressureZero)
    }

    /// The composed symmetric matrix.
    pub fn matrix(&self) -> SparseMatrix {
        let (nu, np) = (self.n_u(), self.n_p());
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz() + self.m.nnz());
        t.extend(self.a.triplets());
        for (r, c, v) in self.b.triplets() {
            t.push((nu + r, c, v));
            t.push((c, nu + r, v));
        }
        let inv = self.lambda.inverse();
        if inv != 0.0 {
            t.extend(self.m.triplets().map(|(r, c, v)| (nu + r, nu + c, -inv * v)));
        }
        if self.constraint == Constraint::MeanPressureZero {
            let s = nu + np;
            for (j, &v) in self.mean.iter().enumerate() {
                if v != 0.0 {
                    t.push((nu + j, s, v));
                    t.push((s, nu + j, v));
                }
            }
        }
        let n = self.size();
        SparseMatrix::from_triplets(n, n, t).expect("block indices in range")
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.rhs_u.clone();
        r.resize(self.size(), 0.0);
        r
    }

    /// Factorizes and solves the composed system.
    pub fn solve(&self) -> Result<SaddleSolution> {
        let k = self.matrix();
        let fact = linsolve::factorize(&k)?;
        let (x, residual) = fact.solve_with_residual(&self.rhs())?;
        let (nu, np) = (self.n_u(), self.n_p());
        let multiplier = if self.constraint == Constraint::MeanPressureZero {
            x[nu + np]
        } else {
            0.0
        };
        Ok(SaddleSolution {
            u: DiscreteField::new(self.space_v.clone(), x[..nu].to_vec())?,
            p: DiscreteField::new(self.space_q.clone(), x[nu..nu + np].to_vec())?,
            multiplier,
            residual,
        })
    }
}

/// Assembles all blocks and the load. With `Lambda::Infinite` the pressure
/// block is dropped and the mean-zero constraint is appended.
pub fn build_saddle_system(
    mu: f64,
    lambda: Lambda,
    space_v: &Arc<FunctionSpace>,
    space_q: &Arc<FunctionSpace>,
    f: &dyn Fn(Point) -> [f64; 2],
    mode: LoadMode,
) -> Result<SaddleSystem> {
    let rhs_u = match mode {
        LoadMode::Standard => assemble_load(space_v, f, mode)?,
        LoadMode::Reconstructed => assemble_reconstructed_load(&Reconstruction::new(space_v)?, f)?,
    };
    build_saddle_system_with_load(mu, lambda, space_v, space_q, rhs_u)
}

/// As [`build_saddle_system`] with a precomputed displacement load.
pub fn build_saddle_system_with_load(
    mu: f64,
    lambda: Lambda,
    space_v: &Arc<FunctionSpace>,
    space_q: &Arc<FunctionSpace>,
    rhs_u: Vec<f64>,
) -> Result<SaddleSystem> {
    let SpaceKind::VectorLagrangeQ(k) = space_v.kind() else {
        return Err(Error::IncompatibleSpaces(format!(
            "displacement space must be VectorLagrangeQ, got {:?}",
            space_v.kind()
        )));
    };
    match space_q.kind() {
        SpaceKind::DiscontinuousP(m) if m + 1 == k => {}
        SpaceKind::ScalarLagrangeQ(m) if m + 1 == k => {}
        other => {
            return Err(Error::IncompatibleSpaces(format!(
                "pressure space {other:?} is not a stable partner of Q{k}"
            )))
        }
    }
    if let Lambda::Finite(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {l}")));
        }
    }
    if rhs_u.len() != space_v.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: space_v.n_dofs(),
            got: rhs_u.len(),
        });
    }
    let a = assemble_stiffness(space_v, mu)?;
    let b = assemble_divergence(space_v, space_q)?;
    let m = assemble_pressure_mass(space_q)?;
    let mean = assemble_mean(space_q)?;
    let constraint = if lambda.is_infinite() {
        Constraint::MeanPressureZero
    } else {
        Constraint::None
    };
    Ok(SaddleSystem {
        a,
        b,
        m,
        mean,
        lambda,
        rhs_u,
        constraint,
        eliminated: Vec::new(),
        space_v: space_v.clone(),
        space_q: space_q.clone(),
    })
}

/// Homogeneous Dirichlet conditions by symmetric elimination: boundary rows
/// and columns of `A` and columns of `B` are zeroed, `A` gets a unit
/// diagonal and the load a zero entry.
pub fn apply_dirichlet(mut system: SaddleSystem) -> SaddleSystem {
    let n_u = system.n_u();
    let mut fixed = vec![false; n_u];
    for &d in system.space_v.boundary_dofs() {
        fixed[d] = true;
    }
    let a = system
        .a
        .triplets()
        .filter(|&(r, c, _)| !fixed[r] && !fixed[c])
        .chain(system.space_v.boundary_dofs().iter().map(|&d| (d, d, 1.0)))
        .collect();
    system.a = SparseMatrix::from_triplets(n_u, n_u, a).expect("indices in range");
    let b = system.b.triplets().filter(|&(_, c, _)| !fixed[c]).collect();
    system.b = SparseMatrix::from_triplets(system.b.n_rows(), n_u, b).expect("indices in range");
    for &d in system.space_v.boundary_dofs() {
        system.rhs_u[d] = 0.0;
    }
    system.eliminated = system.space_v.boundary_dofs().to_vec();
    system
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe_basis::build_space;
    use crate::mesh::Mesh;
    use nalgebra::DMatrix;

    fn spaces(n: usize, dgp: bool) -> (Arc<FunctionSpace>, Arc<FunctionSpace>) {
        let mesh = Arc::new(Mesh::unit_square(n).unwrap());
        let q = if dgp {
            SpaceKind::DiscontinuousP(1)
        } else {
            SpaceKind::ScalarLagrangeQ(1)
        };
        (
            build_space(&mesh, SpaceKind::VectorLagrangeQ(2)).unwrap(),
            build_space(&mesh, q).unwrap(),
        )
    }

    fn force(p: Point) -> [f64; 2] {
        [(3.0 * p[0]).sin() + p[1], p[0] * p[0] - (2.0 * p[1]).cos()]
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        for dgp in [true, false] {
            let (v, q) = spaces(3, dgp);
            for lambda in [Lambda::Finite(10.0), Lambda::Infinite] {
                let s = apply_dirichlet(
                    build_saddle_system(1.0, lambda, &v, &q, &|_| [0.0, 0.0], LoadMode::Standard).unwrap(),
                );
                let sol = s.solve().unwrap();
                assert!(sol.u.coeffs().iter().all(|&x| x == 0.0));
                assert!(sol.p.coeffs().iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn boundary_values_vanish_and_a_stays_symmetric() {
        let (v, q) = spaces(3, true);
        let s = apply_dirichlet(build_saddle_system(1.0, Lambda::Finite(100.0), &v, &q, &force, LoadMode::Standard).unwrap());
        assert!(s.a.is_symmetric(1e-12));
        assert!(s.matrix().is_symmetric(1e-12));
        let sol = s.solve().unwrap();
        for &d in v.boundary_dofs() {
            assert_eq!(sol.u.coeffs()[d], 0.0);
        }
        assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn infinite_lambda_pressure_has_zero_mean() {
        let (v, q) = spaces(4, true);
        let s = apply_dirichlet(build_saddle_system(1.0, Lambda::Infinite, &v, &q, &force, LoadMode::Reconstructed).unwrap());
        let sol = s.solve().unwrap();
        let mean: f64 = s.mean.iter().zip(sol.p.coeffs()).map(|(a, b)| a * b).sum();
        assert!(mean.abs() < 1e-12);
        assert!(sol.multiplier.abs() < 1e-10);
        let bu = s.b.matvec(sol.u.coeffs());
        assert!(bu.iter().all(|x| x.abs() < 1e-12));
    }

    /// Dense oracle: eliminate boundary dofs by restriction to free dofs.
    #[test]
    fn elimination_matches_restricted_dense_solve() {
        let (v, q) = spaces(2, true);
        let raw = build_saddle_system(1.0, Lambda::Finite(5.0), &v, &q, &force, LoadMode::Standard).unwrap();
        let sol = apply_dirichlet(raw.clone()).solve().unwrap();
        let free: Vec<usize> = (0..v.n_dofs()).filter(|d| !v.boundary_dofs().contains(d)).collect();
        let (nf, np) = (free.len(), q.n_dofs());
        let a = raw.a.to_dense();
        let b = raw.b.to_dense();
        let m = raw.m.to_dense();
        let mut k = DMatrix::zeros(nf + np, nf + np);
        let mut rhs = nalgebra::DVector::zeros(nf + np);
        for (i, &fi) in free.iter().enumerate() {
            rhs[i] = raw.rhs_u[fi];
            for (j, &fj) in free.iter().enumerate() {
                k[(i, j)] = a[(fi, fj)];
            }
            for r in 0..np {
                k[(nf + r, i)] = b[(r, fi)];
                k[(i, nf + r)] = b[(r, fi)];
            }
        }
        for r in 0..np {
            for c in 0..np {
                k[(nf + r, nf + c)] = -m[(r, c)] / 5.0;
            }
        }
        let x = k.lu().solve(&rhs).unwrap();
        for (i, &fi) in free.iter().enumerate() {
            assert!((x[i] - sol.u.coeffs()[fi]).abs() < 1e-10);
        }
        let energy_dense: f64 = (0..nf).map(|i| x[i] * rhs[i]).sum::<f64>();
        let energy = raw.a.bilinear(sol.u.coeffs(), sol.u.coeffs());
        let pdiv: f64 = raw.b.bilinear(sol.p.coeffs(), sol.u.coeffs());
        assert!((energy + pdiv - energy_dense).abs() < 1e-10 * energy_dense.abs().max(1.0));
    }

    #[test]
    fn rejects_unstable_pairs_and_bad_lambda() {
        let mesh = Arc::new(Mesh::unit_square(2).unwrap());
        let v = build_space(&mesh, SpaceKind::VectorLagrangeQ(2)).unwrap();
        let q0 = build_space(&mesh, SpaceKind::DiscontinuousP(0)).unwrap();
        let q1 = build_space(&mesh, SpaceKind::DiscontinuousP(1)).unwrap();
        assert!(build_saddle_system(1.0, Lambda::Infinite, &v, &q0, &force, LoadMode::Standard).is_err());
        assert!(build_saddle_system(1.0, Lambda::Finite(-1.0), &v, &q1, &force, LoadMode::Standard).is_err());
    }
}
