//! Canonical BDM_k interpolation of continuous vector `Q_k` fields.
//!
//! On each cell the interpolant is fixed by the BDM dof functionals: normal
//! moments against Legendre polynomials of degree `<= k` on every edge, and
//! moments against `P_{k-2}(T)^2` in the interior. Since `Q_k` fields are
//! continuous, the two cells sharing an edge compute the same normal moments,
//! so the cellwise interpolants glue into an H(div)-conforming field.
//!
//! The operator is stored as one dense matrix per cell mapping local `Q_k`
//! coefficients to local BDM coefficients. Loads only ever need its action
//! inside a cell, so no global BDM vector is formed while solving.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::assembly::assemble_divergence;
use crate::error::{Error, Result};
use crate::fe_basis::lagrange::{monomial, monomial_exponents};
use crate::fe_basis::{build_space, local_functionals, DiscreteField, FunctionSpace, SpaceKind};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_rule, tensor_rule};

/// Local interpolation matrix of one cell (`n_bdm_local x n_v_local`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalReconstruction {
    pub cell: usize,
    pub matrix: DMatrix<f64>,
}

impl LocalReconstruction {
    /// Local BDM coefficients of the interpolant of local `Q_k` coefficients.
    pub fn apply(&self, v_local: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v_local);
        (&self.matrix * v).iter().copied().collect()
    }
}

/// Global-orientation dof functionals of BDM_k on one cell.
#[derive(Debug, Clone)]
pub struct BdmFunctionals {
    k: usize,
    hx: f64,
    hy: f64,
    signs: Vec<f64>,
}

impl BdmFunctionals {
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Applies all functionals to `v`, given at reference coordinates of the
    /// cell. Edge functionals use the mesh's global edge normals.
    pub fn apply(&self, v: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        local_functionals(self.k, self.hx, self.hy, v)
            .into_iter()
            .zip(&self.signs)
            .map(|(f, s)| s * f)
            .collect()
    }
}

/// Dof functionals of the BDM space on `cell`.
pub fn bdm_dof_functionals(bdm_space: &FunctionSpace, cell: usize) -> Result<BdmFunctionals> {
    let SpaceKind::Bdm(k) = bdm_space.kind() else {
        return Err(Error::IncompatibleSpaces(format!(
            "BDM functionals need a BDM space, got {:?}",
            bdm_space.kind()
        )));
    };
    let mesh = bdm_space.mesh();
    if cell >= mesh.n_cells() {
        return Err(Error::IndexOutOfRange {
            what: "cell",
            index: cell,
            len: mesh.n_cells(),
        });
    }
    let (hx, hy) = mesh.cell_size();
    Ok(BdmFunctionals {
        k,
        hx,
        hy,
        signs: bdm_space.cell_signs(cell).to_vec(),
    })
}

/// Basis of `P_{k-2}(T)^2` in centroid-centered physical coordinates; the
/// space the interior BDM moments are tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestSpaceQtilde {
    k: usize,
}

impl TestSpaceQtilde {
    pub fn new(k: usize) -> Self {
        TestSpaceQtilde { k }
    }

    pub fn dim(&self) -> usize {
        if self.k < 2 {
            0
        } else {
            self.k * (self.k - 1)
        }
    }

    /// Basis values at a reference point of a cell of size `hx x hy`.
    pub fn eval(&self, hx: f64, hy: f64, ref_pt: Point) -> Vec<[f64; 2]> {
        if self.k < 2 {
            return Vec::new();
        }
        let x = (ref_pt[0] - 0.5) * hx;
        let y = (ref_pt[1] - 0.5) * hy;
        let exps = monomial_exponents(self.k - 2);
        let mut out = Vec::with_capacity(self.dim());
        for c in 0..2 {
            for &(a, b) in &exps {
                let mut v = [0.0; 2];
                v[c] = monomial(a, b, x, y).0;
                out.push(v);
            }
        }
        out
    }
}

/// Interpolation matrix on `cell`: BDM functionals applied to the local
/// `Q_k` basis.
pub fn build_local_reconstruction(space_v: &FunctionSpace, cell: usize) -> Result<LocalReconstruction> {
    let SpaceKind::VectorLagrangeQ(k) = space_v.kind() else {
        return Err(Error::IncompatibleSpaces(format!(
            "reconstruction needs VectorLagrangeQ, got {:?}",
            space_v.kind()
        )));
    };
    let mesh = space_v.mesh();
    if cell >= mesh.n_cells() {
        return Err(Error::IndexOutOfRange {
            what: "cell",
            index: cell,
            len: mesh.n_cells(),
        });
    }
    let (hx, hy) = mesh.cell_size();
    let n_v = space_v.n_local();
    let n_bdm = SpaceKind::Bdm(k).n_local();
    let mut matrix = DMatrix::zeros(n_bdm, n_v);
    for j in 0..n_v {
        let col = local_functionals(k, hx, hy, |p| {
            let lb = space_v.eval_basis_unchecked(cell, p);
            [lb.value(j, 0), lb.value(j, 1)]
        });
        for (i, v) in col.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    Ok(LocalReconstruction { cell, matrix })
}

/// The interpolation operator `pi_div : V_h -> BDM_k` for a vector `Q_k`
/// space.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    space_v: Arc<FunctionSpace>,
    space_bdm: Arc<FunctionSpace>,
    local: Vec<LocalReconstruction>,
}

impl Reconstruction {
    pub fn new(space_v: &Arc<FunctionSpace>) -> Result<Reconstruction> {
        let SpaceKind::VectorLagrangeQ(k) = space_v.kind() else {
            return Err(Error::IncompatibleSpaces(format!(
                "reconstruction needs VectorLagrangeQ, got {:?}",
                space_v.kind()
            )));
        };
        let space_bdm = build_space(space_v.mesh(), SpaceKind::Bdm(k))?;
        let local = (0..space_v.mesh().n_cells())
            .map(|c| build_local_reconstruction(space_v, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Reconstruction {
            space_v: space_v.clone(),
            space_bdm,
            local,
        })
    }

    pub fn space_v(&self) -> &Arc<FunctionSpace> {
        &self.space_v
    }

    pub fn space_bdm(&self) -> &Arc<FunctionSpace> {
        &self.space_bdm
    }

    pub fn degree(&self) -> usize {
        self.space_v.degree()
    }

    pub fn local(&self, cell: usize) -> &LocalReconstruction {
        &self.local[cell]
    }

    fn check_field(&self, field: &DiscreteField) -> Result<()> {
        if Arc::ptr_eq(field.space(), &self.space_v)
            || (field.space().kind() == self.space_v.kind()
                && field.space().mesh() == self.space_v.mesh())
        {
            Ok(())
        } else {
            Err(Error::IncompatibleSpaces(
                "field does not live in the reconstruction's displacement space".into(),
            ))
        }
    }

    /// Global BDM field `pi_div v`. Shared edge dofs are written by both
    /// adjacent cells with identical values.
    pub fn apply(&self, field: &DiscreteField) -> Result<DiscreteField> {
        self.check_field(field)?;
        let mut out = vec![0.0; self.space_bdm.n_dofs()];
        for (cell, lr) in self.local.iter().enumerate() {
            let c = lr.apply(&field.local_coeffs(cell));
            for ((&d, &s), v) in self
                .space_bdm
                .cell_dofs(cell)
                .iter()
                .zip(self.space_bdm.cell_signs(cell))
                .zip(c)
            {
                out[d] = s * v;
            }
        }
        DiscreteField::new(self.space_bdm.clone(), out)
    }

    /// Value and Jacobian of `pi_div v` at a reference point of `cell`,
    /// computed from the local image only.
    pub fn eval_image(&self, field: &DiscreteField, cell: usize, ref_pt: Point) -> ([f64; 2], [[f64; 2]; 2]) {
        let c = self.local[cell].apply(&field.local_coeffs(cell));
        let lb = self.space_bdm.eval_basis_unchecked(cell, ref_pt);
        let mut v = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for (i, ci) in c.iter().enumerate() {
            for comp in 0..2 {
                v[comp] += ci * lb.value(i, comp);
                let gi = lb.grad(i, comp);
                g[comp][0] += ci * gi[0];
                g[comp][1] += ci * gi[1];
            }
        }
        (v, g)
    }

    /// `max |div(pi_div v)|` over interior quadrature points, together with
    /// `max |grad v|` over the same points as a scale.
    pub fn max_pointwise_divergence(&self, field: &DiscreteField) -> Result<(f64, f64)> {
        self.check_field(field)?;
        let rule = tensor_rule(self.degree() + 3)?;
        let mut max_div: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for cell in 0..self.space_v.mesh().n_cells() {
            for &p in &rule.points {
                let (_, g) = self.eval_image(field, cell, p);
                max_div = max_div.max((g[0][0] + g[1][1]).abs());
                let (_, gv) = field.eval_in_cell(cell, p)?;
                scale = scale.max(gv.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())));
            }
        }
        Ok((max_div, scale))
    }

    /// `max |pi_div v . n|` over quadrature points of all boundary edges,
    /// with the largest coefficient of `v` as a scale.
    pub fn max_boundary_normal_trace(&self, field: &DiscreteField) -> Result<(f64, f64)> {
        self.check_field(field)?;
        let mesh = self.space_v.mesh();
        let rule = edge_rule(self.degree() + 3)?;
        let mut max_trace: f64 = 0.0;
        let scale = field.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for cell in 0..mesh.n_cells() {
            for (slot, ce) in mesh.cell_edges(cell).iter().enumerate() {
                if !mesh.edges()[ce.edge].boundary {
                    continue;
                }
                let n = Mesh::outward_normal(slot);
                for &s in &rule.points {
                    let p = Mesh::edge_ref_point(slot, s);
                    let (v, _) = self.eval_image(field, cell, p);
                    max_trace = max_trace.max((v[0] * n[0] + v[1] * n[1]).abs());
                }
            }
        }
        Ok((max_trace, scale))
    }

    /// Sharp constant `c` of `||pi_div v - v||_{0,T} <= c h_T |v|_{1,T}` over
    /// the whole local space, from a generalized eigenproblem on one cell.
    /// All cells are congruent, so this holds on every cell of the mesh.
    pub fn sharp_approximation_constant(&self) -> Result<f64> {
        let space = &self.space_v;
        let mesh = space.mesh();
        let cell = 0;
        let n = space.n_local();
        let rule = tensor_rule(self.degree() + 3)?;
        let area = mesh.cell_area();
        let lr = &self.local[cell];
        let mut err_gram = DMatrix::<f64>::zeros(n, n);
        let mut semi_gram = DMatrix::<f64>::zeros(n, n);
        for (p, w) in rule.iter() {
            let lv = space.eval_basis_unchecked(cell, p);
            let lb = self.space_bdm.eval_basis_unchecked(cell, p);
            // columns: pi phi_j - phi_j
            let mut diff = vec![[0.0; 2]; n];
            for (j, d) in diff.iter_mut().enumerate() {
                for c in 0..2 {
                    let mut acc = -lv.value(j, c);
                    for i in 0..lb.len() {
                        acc += lr.matrix[(i, j)] * lb.value(i, c);
                    }
                    d[c] = acc;
                }
            }
            let wa = w * area;
            for a in 0..n {
                for b in 0..n {
                    err_gram[(a, b)] += wa * (diff[a][0] * diff[b][0] + diff[a][1] * diff[b][1]);
                    let mut s = 0.0;
                    for c in 0..2 {
                        let ga = lv.grad(a, c);
                        let gb = lv.grad(b, c);
                        s += ga[0] * gb[0] + ga[1] * gb[1];
                    }
                    semi_gram[(a, b)] += wa * s;
                }
            }
        }
        let eig = SymmetricEigen::new(semi_gram);
        let smax = eig.eigenvalues.max();
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-10 * smax).collect();
        let mut w = DMatrix::<f64>::zeros(n, keep.len());
        for (col, &i) in keep.iter().enumerate() {
            let scale = 1.0 / eig.eigenvalues[i].sqrt();
            for r in 0..n {
                w[(r, col)] = eig.eigenvectors[(r, i)] * scale;
            }
        }
        let reduced = w.transpose() * err_gram * &w;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let lmax = SymmetricEigen::new(reduced).eigenvalues.max().max(0.0);
        Ok(lmax.sqrt() / mesh.h())
    }
}

/// Measured violations of the properties the reconstruction must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionDefects {
    /// `max_q |b(q, pi v) - b(q, v)|` over the pressure basis.
    pub commuting: f64,
    /// `commuting` divided by `max_q sum_i |B_qi v_i|`.
    pub commuting_rel: f64,
    /// `max |(v - pi v, q)|` over the `P_{k-2}^2` test basis of every cell.
    pub orthogonality: f64,
    /// `orthogonality` divided by the matching `max int |v| |q|`.
    pub orthogonality_rel: f64,
    /// `max_T ||pi v - v||_{0,T} / (h_T |v|_{1,T})`, with `0/0 -> 0`.
    pub approx_ratio: f64,
}

/// Checks the commuting property against the assembled divergence matrix of
/// `space_q`, orthogonality against `P_{k-2}^2`, and the local approximation
/// ratio, all by quadrature of `pi_div v` evaluated cell by cell.
pub fn reconstruction_defects(
    recon: &Reconstruction,
    space_q: &Arc<FunctionSpace>,
    field: &DiscreteField,
) -> Result<ReconstructionDefects> {
    recon.check_field(field)?;
    let space_v = recon.space_v();
    let mesh = space_v.mesh();
    if space_q.mesh() != mesh {
        return Err(Error::IncompatibleSpaces("pressure space lives on another mesh".into()));
    }
    let k = recon.degree();
    let rule = tensor_rule(k + 3)?;
    let area = mesh.cell_area();
    let (hx, hy) = mesh.cell_size();
    let h = mesh.h();

    // b(q, v) through the assembled matrix.
    let b = assemble_divergence(space_v, space_q)?;
    let bv = b.matvec(field.coeffs());
    let mut b_scale = vec![0.0; space_q.n_dofs()];
    for (row, scale) in b_scale.iter_mut().enumerate() {
        *scale = b
            .row(row)
            .map(|(col, val)| (val * field.coeffs()[col]).abs())
            .sum();
    }

    // b(q, pi v) by quadrature.
    let mut b_pi = vec![0.0; space_q.n_dofs()];
    let qtilde = TestSpaceQtilde::new(k);
    let mut orth: f64 = 0.0;
    let mut orth_rel: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for cell in 0..mesh.n_cells() {
        let qdofs = space_q.cell_dofs(cell);
        let mut orth_cell = vec![0.0; qtilde.dim()];
        let mut orth_scale = vec![0.0; qtilde.dim()];
        let mut err_l2 = 0.0;
        let mut semi = 0.0;
        for (p, w) in rule.iter() {
            let wa = w * area;
            let (pv, pg) = recon.eval_image(field, cell, p);
            let (v, vg) = field.eval_in_cell(cell, p)?;
            let div_pi = pg[0][0] + pg[1][1];
            let lq = space_q.eval_basis_unchecked(cell, p);
            for (i, &d) in qdofs.iter().enumerate() {
                b_pi[d] += wa * lq.value(i, 0) * div_pi;
            }
            for (j, q) in qtilde.eval(hx, hy, p).iter().enumerate() {
                orth_cell[j] += wa * ((v[0] - pv[0]) * q[0] + (v[1] - pv[1]) * q[1]);
                orth_scale[j] += wa * (v[0].hypot(v[1]) * q[0].hypot(q[1]));
            }
            err_l2 += wa * ((pv[0] - v[0]).powi(2) + (pv[1] - v[1]).powi(2));
            semi += wa * vg.iter().flatten().map(|x| x * x).sum::<f64>();
        }
        for (o, s) in orth_cell.iter().zip(&orth_scale) {
            orth = orth.max(o.abs());
            if *s > 0.0 {
                orth_rel = orth_rel.max(o.abs() / s);
            }
        }
        let (err, semi) = (err_l2.sqrt(), semi.sqrt());
        if semi > 0.0 {
            ratio = ratio.max(err / (h * semi));
        }
    }

    let mut commuting: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..b_pi.len() {
        commuting = commuting.max((b_pi[i] - bv[i]).abs());
        scale = scale.max(b_scale[i]);
    }
    let commuting_rel = if scale > 0.0 { commuting / scale } else { commuting };

    Ok(ReconstructionDefects {
        commuting,
        commuting_rel,
        orthogonality: orth,
        orthogonality_rel: orth_rel,
        approx_ratio: ratio,
    })
}
