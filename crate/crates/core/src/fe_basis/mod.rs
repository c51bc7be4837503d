//! Finite element spaces over a structured [`Mesh`].
//!
//! Supported kinds:
//! - `VectorLagrangeQ(k)`: continuous vector `Q_k` (displacements), `k >= 2`;
//! - `ScalarLagrangeQ(k)`: continuous scalar `Q_k` (pressure `Q_{k-1}`,
//!   temperature);
//! - `DiscontinuousP(m)`: cellwise `P_m`, monomials centered at the cell
//!   centroid in physical coordinates;
//! - `Bdm(k)`: the H(div)-conforming BDM_k space.
//!
//! Lagrange nodes form a `(k nx + 1) x (k ny + 1)` lattice numbered with `x`
//! fastest. Vector dofs interleave components: dof `2 * node + c`.

mod bdm;
mod field;
pub(crate) mod lagrange;

use std::sync::Arc;

pub use bdm::{local_functionals, n_edge_dofs, n_interior_dofs, BdmElement, VectorValues};
pub use field::DiscreteField;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use lagrange::{lagrange_1d, monomial, monomial_exponents};

const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    VectorLagrangeQ(usize),
    ScalarLagrangeQ(usize),
    /// Argument is the polynomial degree.
    DiscontinuousP(usize),
    Bdm(usize),
}

impl SpaceKind {
    pub fn n_components(&self) -> usize {
        match self {
            SpaceKind::ScalarLagrangeQ(_) | SpaceKind::DiscontinuousP(_) => 1,
            SpaceKind::VectorLagrangeQ(_) | SpaceKind::Bdm(_) => 2,
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            SpaceKind::VectorLagrangeQ(k)
            | SpaceKind::ScalarLagrangeQ(k)
            | SpaceKind::DiscontinuousP(k)
            | SpaceKind::Bdm(k) => k,
        }
    }

    pub fn n_local(&self) -> usize {
        match *self {
            SpaceKind::VectorLagrangeQ(k) => 2 * (k + 1) * (k + 1),
            SpaceKind::ScalarLagrangeQ(k) => (k + 1) * (k + 1),
            SpaceKind::DiscontinuousP(m) => (m + 1) * (m + 2) / 2,
            SpaceKind::Bdm(k) => bdm::n_local(k),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpaceKind::VectorLagrangeQ(k) => (2..=MAX_DEGREE).contains(&k),
            SpaceKind::ScalarLagrangeQ(k) => (1..=MAX_DEGREE).contains(&k),
            SpaceKind::DiscontinuousP(m) => m <= MAX_DEGREE,
            SpaceKind::Bdm(k) => (1..=6).contains(&k),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedSpace(format!("{self:?}")))
        }
    }
}

/// Local basis values and physical gradients at one point.
///
/// Entry `i * n_comp + c` holds component `c` of local basis function `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    pub n_comp: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.values.len() / self.n_comp
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.n_comp + c]
    }

    pub fn grad(&self, i: usize, c: usize) -> [f64; 2] {
        self.grads[i * self.n_comp + c]
    }

    /// Divergence of vector basis function `i`.
    pub fn div(&self, i: usize) -> f64 {
        debug_assert_eq!(self.n_comp, 2);
        self.grads[2 * i][0] + self.grads[2 * i + 1][1]
    }
}

#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    kind: SpaceKind,
    n_local: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<f64>,
    n_dofs: usize,
    boundary_dofs: Vec<usize>,
    bdm: Option<BdmElement>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind) -> Result<FunctionSpace> {
        kind.validate()?;
        let n_local = kind.n_local();
        let n_cells = mesh.n_cells();
        let mut cell_dofs = Vec::with_capacity(n_cells * n_local);
        let mut cell_signs = vec![1.0; n_cells * n_local];
        let mut bdm = None;

        let n_dofs = match kind {
            SpaceKind::ScalarLagrangeQ(k) | SpaceKind::VectorLagrangeQ(k) => {
                let ncomp = kind.n_components();
                let row = k * mesh.nx() + 1;
                for c in 0..n_cells {
                    let (i, j) = mesh.cell_ij(c);
                    for b in 0..=k {
                        for a in 0..=k {
                            let node = (j * k + b) * row + i * k + a;
                            for comp in 0..ncomp {
                                cell_dofs.push(node * ncomp + comp);
                            }
                        }
                    }
                }
                ncomp * row * (k * mesh.ny() + 1)
            }
            SpaceKind::DiscontinuousP(_) => {
                cell_dofs.extend(0..n_cells * n_local);
                n_cells * n_local
            }
            SpaceKind::Bdm(k) => {
                let (hx, hy) = mesh.cell_size();
                bdm = Some(BdmElement::new(k, hx, hy)?);
                let ne = n_edge_dofs(k);
                let ni = n_interior_dofs(k);
                let interior0 = mesh.n_edges() * ne;
                for c in 0..n_cells {
                    for (slot, ce) in mesh.cell_edges(c).iter().enumerate() {
                        for m in 0..ne {
                            cell_dofs.push(ce.edge * ne + m);
                            cell_signs[c * n_local + slot * ne + m] = ce.sign;
                        }
                    }
                    for i in 0..ni {
                        cell_dofs.push(interior0 + c * ni + i);
                    }
                }
                interior0 + n_cells * ni
            }
        };

        let mut space = FunctionSpace {
            mesh,
            kind,
            n_local,
            cell_dofs,
            cell_signs,
            n_dofs,
            boundary_dofs: Vec::new(),
            bdm,
        };
        if matches!(kind, SpaceKind::ScalarLagrangeQ(_) | SpaceKind::VectorLagrangeQ(_)) {
            let tol = 1e-12 * space.mesh.h();
            space.boundary_dofs = (0..space.n_dofs)
                .filter(|&d| space.mesh.on_boundary(space.dof_point(d), tol))
                .collect();
        }
        Ok(space)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.kind.degree()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn n_components(&self) -> usize {
        self.kind.n_components()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.n_local..(cell + 1) * self.n_local]
    }

    /// Orientation signs of the local dofs; only BDM edge dofs can be `-1`.
    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        &self.cell_signs[cell * self.n_local..(cell + 1) * self.n_local]
    }

    /// Dofs supported on the domain boundary (Lagrange kinds only).
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn bdm_element(&self) -> Option<&BdmElement> {
        self.bdm.as_ref()
    }

    fn lagrange_degree(&self) -> Option<usize> {
        match self.kind {
            SpaceKind::ScalarLagrangeQ(k) | SpaceKind::VectorLagrangeQ(k) => Some(k),
            _ => None,
        }
    }

    /// Physical location of a Lagrange dof's node.
    ///
    /// # Panics
    /// For non-Lagrange kinds.
    pub fn dof_point(&self, dof: usize) -> Point {
        let k = self.lagrange_degree().expect("dof_point requires a Lagrange space");
        let node = dof / self.n_components();
        let row = k * self.mesh.nx() + 1;
        let (a, b) = (node % row, node / row);
        let (hx, hy) = self.mesh.cell_size();
        let x = if a == row - 1 {
            self.mesh.lx()
        } else {
            a as f64 * hx / k as f64
        };
        let y = if b == k * self.mesh.ny() {
            self.mesh.ly()
        } else {
            b as f64 * hy / k as f64
        };
        [x, y]
    }

    /// Local basis values and physical gradients at `ref_pt` in `cell`.
    ///
    /// BDM values are the local (outward-normal) basis; multiply by
    /// [`FunctionSpace::cell_signs`] to obtain restrictions of global basis
    /// functions.
    pub fn eval_basis(&self, cell: usize, ref_pt: Point) -> Result<LocalBasis> {
        if cell >= self.mesh.n_cells() {
            return Err(Error::IndexOutOfRange {
                what: "cell",
                index: cell,
                len: self.mesh.n_cells(),
            });
        }
        Ok(self.eval_basis_unchecked(cell, ref_pt))
    }

    /// All cells are congruent, so the values do not depend on `_cell`.
    pub(crate) fn eval_basis_unchecked(&self, _cell: usize, ref_pt: Point) -> LocalBasis {
        let (hx, hy) = self.mesh.cell_size();
        match self.kind {
            SpaceKind::ScalarLagrangeQ(k) | SpaceKind::VectorLagrangeQ(k) => {
                let ncomp = self.n_components();
                let (vx, dx) = lagrange_1d(k, ref_pt[0]);
                let (vy, dy) = lagrange_1d(k, ref_pt[1]);
                let mut values = vec![0.0; self.n_local * ncomp];
                let mut grads = vec![[0.0; 2]; self.n_local * ncomp];
                for b in 0..=k {
                    for a in 0..=k {
                        let node = b * (k + 1) + a;
                        let v = vx[a] * vy[b];
                        let g = [dx[a] * vy[b] / hx, vx[a] * dy[b] / hy];
                        for c in 0..ncomp {
                            let idx = (node * ncomp + c) * ncomp + c;
                            values[idx] = v;
                            grads[idx] = g;
                        }
                    }
                }
                LocalBasis {
                    n_comp: ncomp,
                    values,
                    grads,
                }
            }
            SpaceKind::DiscontinuousP(m) => {
                let x = (ref_pt[0] - 0.5) * hx;
                let y = (ref_pt[1] - 0.5) * hy;
                let (values, grads) = monomial_exponents(m)
                    .into_iter()
                    .map(|(a, b)| monomial(a, b, x, y))
                    .unzip();
                LocalBasis {
                    n_comp: 1,
                    values,
                    grads,
                }
            }
            SpaceKind::Bdm(_) => {
                let el = self.bdm.as_ref().expect("BDM element present");
                let (vals, jac) = el.eval(ref_pt);
                let n = vals.len();
                let mut values = Vec::with_capacity(2 * n);
                let mut grads = Vec::with_capacity(2 * n);
                for (v, g) in vals.iter().zip(&jac) {
                    values.extend_from_slice(v);
                    grads.extend_from_slice(g);
                }
                LocalBasis {
                    n_comp: 2,
                    values,
                    grads,
                }
            }
        }
    }

    /// Nodal interpolant of a scalar function (scalar Lagrange kinds).
    pub fn interpolate_scalar(self: &Arc<Self>, f: impl Fn(Point) -> f64) -> Result<DiscreteField> {
        if !matches!(self.kind, SpaceKind::ScalarLagrangeQ(_)) {
            return Err(Error::IncompatibleSpaces(format!(
                "scalar nodal interpolation needs ScalarLagrangeQ, got {:?}",
                self.kind
            )));
        }
        let coeffs = (0..self.n_dofs).map(|d| f(self.dof_point(d))).collect();
        DiscreteField::new(self.clone(), coeffs)
    }

    /// Nodal interpolant of a vector function (vector Lagrange kinds).
    pub fn interpolate_vector(self: &Arc<Self>, f: impl Fn(Point) -> [f64; 2]) -> Result<DiscreteField> {
        if !matches!(self.kind, SpaceKind::VectorLagrangeQ(_)) {
            return Err(Error::IncompatibleSpaces(format!(
                "vector nodal interpolation needs VectorLagrangeQ, got {:?}",
                self.kind
            )));
        }
        let coeffs = (0..self.n_dofs)
            .map(|d| f(self.dof_point(d))[d % 2])
            .collect();
        DiscreteField::new(self.clone(), coeffs)
    }
}

/// Shorthand for building a shared space.
pub fn build_space(mesh: &Arc<Mesh>, kind: SpaceKind) -> Result<Arc<FunctionSpace>> {
    FunctionSpace::new(mesh.clone(), kind).map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(nx: usize, ny: usize) -> Arc<Mesh> {
        Arc::new(Mesh::rectangle(nx, ny, 1.0, 1.0).unwrap())
    }

    #[test]
    fn dof_counts() {
        assert_eq!(build_space(&mesh(1, 1), SpaceKind::VectorLagrangeQ(2)).unwrap().n_dofs(), 18);
        assert_eq!(build_space(&mesh(2, 2), SpaceKind::DiscontinuousP(1)).unwrap().n_dofs(), 12);
        assert_eq!(build_space(&mesh(1, 1), SpaceKind::Bdm(2)).unwrap().n_dofs(), 14);
        // 2x2: 12 edges * 3 + 4 cells * 2
        assert_eq!(build_space(&mesh(2, 2), SpaceKind::Bdm(2)).unwrap().n_dofs(), 44);
        assert_eq!(build_space(&mesh(2, 3), SpaceKind::ScalarLagrangeQ(1)).unwrap().n_dofs(), 12);
    }

    #[test]
    fn rejects_unsupported_degrees() {
        let m = mesh(1, 1);
        assert!(build_space(&m, SpaceKind::VectorLagrangeQ(1)).is_err());
        assert!(build_space(&m, SpaceKind::ScalarLagrangeQ(0)).is_err());
        assert!(build_space(&m, SpaceKind::Bdm(0)).is_err());
        assert!(build_space(&m, SpaceKind::ScalarLagrangeQ(9)).is_err());
    }

    #[test]
    fn boundary_dofs_of_vector_q2() {
        let s = build_space(&mesh(2, 2), SpaceKind::VectorLagrangeQ(2)).unwrap();
        // 5x5 nodes, 16 on the boundary, two components each
        assert_eq!(s.boundary_dofs().len(), 32);
    }

    #[test]
    fn q2_kronecker_at_nodes() {
        let s = build_space(&mesh(2, 2), SpaceKind::ScalarLagrangeQ(2)).unwrap();
        let cell = 3;
        for b in 0..=2 {
            for a in 0..=2 {
                let lb = s.eval_basis(cell, [a as f64 / 2.0, b as f64 / 2.0]).unwrap();
                let me = b * 3 + a;
                for i in 0..9 {
                    let expect = if i == me { 1.0 } else { 0.0 };
                    assert!((lb.value(i, 0) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn dgp1_basis_is_centered_monomials() {
        let m = Arc::new(Mesh::rectangle(2, 2, 2.0, 1.0).unwrap());
        let s = build_space(&m, SpaceKind::DiscontinuousP(1)).unwrap();
        let cell = 1; // centroid (1.5, 0.25)
        let p = [0.3, 0.8];
        let x = m.ref_to_phys(cell, p).unwrap();
        let lb = s.eval_basis(cell, p).unwrap();
        assert!((lb.value(0, 0) - 1.0).abs() < 1e-15);
        assert!((lb.value(1, 0) - (x[0] - 1.5)).abs() < 1e-15);
        assert!((lb.value(2, 0) - (x[1] - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn q2_gradient_matches_finite_differences() {
        let m = Arc::new(Mesh::rectangle(3, 2, 1.5, 1.0).unwrap());
        let s = build_space(&m, SpaceKind::ScalarLagrangeQ(2)).unwrap();
        let (hx, hy) = m.cell_size();
        let step = 1e-6;
        let cell = 4;
        for &p in &[[0.2, 0.3], [0.75, 0.5], [0.4, 0.9]] {
            let lb = s.eval_basis(cell, p).unwrap();
            let px = s.eval_basis(cell, [p[0] + step / hx, p[1]]).unwrap();
            let mx = s.eval_basis(cell, [p[0] - step / hx, p[1]]).unwrap();
            let py = s.eval_basis(cell, [p[0], p[1] + step / hy]).unwrap();
            let my = s.eval_basis(cell, [p[0], p[1] - step / hy]).unwrap();
            for i in 0..9 {
                let gx = (px.value(i, 0) - mx.value(i, 0)) / (2.0 * step);
                let gy = (py.value(i, 0) - my.value(i, 0)) / (2.0 * step);
                assert!((gx - lb.grad(i, 0)[0]).abs() < 1e-8);
                assert!((gy - lb.grad(i, 0)[1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [SpaceKind::ScalarLagrangeQ(1), SpaceKind::ScalarLagrangeQ(2), SpaceKind::ScalarLagrangeQ(3)] {
            let s = build_space(&mesh(3, 3), kind).unwrap();
            for cell in 0..9 {
                for _ in 0..20 {
                    let p = [rng.random::<f64>(), rng.random::<f64>()];
                    let lb = s.eval_basis(cell, p).unwrap();
                    let sum: f64 = lb.values.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn q_k_reproduces_its_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=3usize {
            let s = build_space(&mesh(3, 2), SpaceKind::ScalarLagrangeQ(k)).unwrap();
            let coef: Vec<f64> = (0..(k + 1) * (k + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let poly = |p: Point| {
                let mut acc = 0.0;
                for b in 0..=k {
                    for a in 0..=k {
                        acc += coef[b * (k + 1) + a] * p[0].powi(a as i32) * p[1].powi(b as i32);
                    }
                }
                acc
            };
            let field = s.interpolate_scalar(poly).unwrap();
            for _ in 0..50 {
                let p = [rng.random::<f64>(), rng.random::<f64>()];
                let (v, _) = field.eval_scalar(p).unwrap();
                assert!((v - poly(p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bdm_signs_follow_mesh_orientation() {
        let m = mesh(2, 2);
        let s = build_space(&m, SpaceKind::Bdm(2)).unwrap();
        for c in 0..m.n_cells() {
            let signs = s.cell_signs(c);
            for (slot, ce) in m.cell_edges(c).iter().enumerate() {
                for q in 0..3 {
                    assert_eq!(signs[slot * 3 + q], ce.sign);
                }
            }
            assert_eq!(&signs[12..], &[1.0, 1.0]);
        }
    }
}
