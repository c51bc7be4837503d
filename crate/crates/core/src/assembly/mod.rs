//! Bilinear forms, load functionals and the constrained saddle-point system.
//!
//! All cells of a mesh are congruent, so basis tables at quadrature points
//! are computed once on cell 0 and reused for every cell.

mod heat;
mod saddle;
mod sparse;

pub use heat::{assemble_heat, solve_heat};
pub use saddle::{
    apply_dirichlet, build_saddle_system, build_saddle_system_with_load, Constraint, Lambda, SaddleSolution, SaddleSystem};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};
use crate::fe_basis::{FunctionSpace, LocalBasis, SpaceKind};
use crate::mesh::Point;
use crate::quadrature::{tensor_rule, QuadRule2d};
use crate::reconstruction::Reconstruction;

/// Which test function the load is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadMode {
    /// `(f, v_h)`.
    Standard,
    /// `(f, pi_div v_h)`.
    Reconstructed,
}

fn tabulate(space: &FunctionSpace, rule: &QuadRule2d) -> Vec<LocalBasis> {
    rule.points
        .iter()
        .map(|&p| space.eval_basis_unchecked(0, p))
        .collect()
}

fn require_vector(space: &FunctionSpace) -> Result<usize> {
    match space.kind() {
        SpaceKind::VectorLagrangeQ(k) => Ok(k),
        other => Err(Error::IncompatibleSpaces(format!(
            "displacement space must be VectorLagrangeQ, got {other:?}"
        ))),
    }
}

fn require_scalar_pressure(space: &FunctionSpace) -> Result<()> {
    match space.kind() {
        SpaceKind::DiscontinuousP(_) | SpaceKind::ScalarLagrangeQ(_) => Ok(()),
        other => Err(Error::IncompatibleSpaces(format!(
            "pressure space must be scalar, got {other:?}"
        ))),
    }
}

/// `A_ij = 2 mu (eps(phi_i), eps(phi_j))`.
pub fn assemble_stiffness(space_v: &FunctionSpace, mu: f64) -> Result<SparseMatrix> {
    let k = require_vector(space_v)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let rule = tensor_rule(k + 1)?;
    let table = tabulate(space_v, &rule);
    let mesh = space_v.mesh();
    let area = mesh.cell_area();
    let n = space_v.n_local();

    // Symmetric gradients of each local basis function at each point.
    let strains: Vec<Vec<[f64; 3]>> = table
        .iter()
        .map(|lb| {
            (0..n)
                .map(|i| {
                    let g0 = lb.grad(i, 0);
                    let g1 = lb.grad(i, 1);
                    [g0[0], g1[1], 0.5 * (g0[1] + g1[0])]
                })
                .collect()
        })
        .collect();
    let mut local = vec![0.0; n * n];
    for (q, w) in rule.weights.iter().enumerate() {
        let wq = 2.0 * mu * w * area;
        let e = &strains[q];
        for i in 0..n {
            for j in 0..n {
                local[i * n + j] += wq * (e[i][0] * e[j][0] + e[i][1] * e[j][1] + 2.0 * e[i][2] * e[j][2]);
            }
        }
    }
    scatter(space_v, space_v, &local, space_v.n_dofs(), space_v.n_dofs())
}

/// `B_qi = (q, div phi_i)`, shape `n_q x n_u`.
pub fn assemble_divergence(space_v: &FunctionSpace, space_q: &FunctionSpace) -> Result<SparseMatrix> {
    let k = require_vector(space_v)?;
    require_scalar_pressure(space_q)?;
    if space_v.mesh() != space_q.mesh() {
        return Err(Error::IncompatibleSpaces("spaces live on different meshes".into()));
    }
    let rule = tensor_rule(k + 1)?;
    let tv = tabulate(space_v, &rule);
    let tq = tabulate(space_q, &rule);
    let area = space_v.mesh().cell_area();
    let (nv, nq) = (space_v.n_local(), space_q.n_local());
    let mut local = vec![0.0; nq * nv];
    for (q, w) in rule.weights.iter().enumerate() {
        for a in 0..nq {
            let qa = w * area * tq[q].value(a, 0);
            for i in 0..nv {
                local[a * nv + i] += qa * tv[q].div(i);
            }
        }
    }
    scatter(space_q, space_v, &local, space_q.n_dofs(), space_v.n_dofs())
}

/// `M_qr = (q, r)`.
pub fn assemble_pressure_mass(space_q: &FunctionSpace) -> Result<SparseMatrix> {
    require_scalar_pressure(space_q)?;
    let rule = tensor_rule(space_q.degree() + 1)?;
    let tq = tabulate(space_q, &rule);
    let area = space_q.mesh().cell_area();
    let n = space_q.n_local();
    let mut local = vec![0.0; n * n];
    for (q, w) in rule.weights.iter().enumerate() {
        for a in 0..n {
            for b in 0..n {
                local[a * n + b] += w * area * tq[q].value(a, 0) * tq[q].value(b, 0);
            }
        }
    }
    scatter(space_q, space_q, &local, space_q.n_dofs(), space_q.n_dofs())
}

/// `m_j = int q_j`, the integrals of the pressure basis.
pub fn assemble_mean(space_q: &FunctionSpace) -> Result<Vec<f64>> {
    require_scalar_pressure(space_q)?;
    let rule = tensor_rule(space_q.degree() + 1)?;
    let tq = tabulate(space_q, &rule);
    let area = space_q.mesh().cell_area();
    let mut out = vec![0.0; space_q.n_dofs()];
    for cell in 0..space_q.mesh().n_cells() {
        for (q, w) in rule.weights.iter().enumerate() {
            for (a, &d) in space_q.cell_dofs(cell).iter().enumerate() {
                out[d] += w * area * tq[q].value(a, 0);
            }
        }
    }
    Ok(out)
}

/// Scatters one dense local matrix (row space x col space) into every cell.
fn scatter(
    rows: &FunctionSpace,
    cols: &FunctionSpace,
    local: &[f64],
    n_rows: usize,
    n_cols: usize,
) -> Result<SparseMatrix> {
    let (nr, nc) = (rows.n_local(), cols.n_local());
    let n_cells = rows.mesh().n_cells();
    let mut triplets = Vec::with_capacity(n_cells * nr * nc);
    for cell in 0..n_cells {
        let rd = rows.cell_dofs(cell);
        let cd = cols.cell_dofs(cell);
        for a in 0..nr {
            for b in 0..nc {
                let v = local[a * nc + b];
                if v != 0.0 {
                    triplets.push((rd[a], cd[b], v));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

/// Load vector `(f, phi_i)` or `(f, pi_div phi_i)`.
pub fn assemble_load(space_v: &FunctionSpace, f: &dyn Fn(Point) -> [f64; 2], mode: LoadMode) -> Result<Vec<f64>> {
    require_vector(space_v)?;
    match mode {
        LoadMode::Standard => assemble_standard_load(space_v, f),
        LoadMode::Reconstructed => {
            let space = std::sync::Arc::new(space_v.clone());
            let recon = Reconstruction::new(&space)?;
            assemble_reconstructed_load(&recon, f)
        }
    }
}

fn assemble_standard_load(space_v: &FunctionSpace, f: &dyn Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
    let k = space_v.degree();
    let rule = tensor_rule(k + 3)?;
    let table = tabulate(space_v, &rule);
    let mesh = space_v.mesh();
    let area = mesh.cell_area();
    let mut out = vec![0.0; space_v.n_dofs()];
    for cell in 0..mesh.n_cells() {
        let dofs = space_v.cell_dofs(cell);
        for (q, (p, w)) in rule.iter().enumerate() {
            let fv = f(mesh.map_unchecked(cell, p));
            let lb = &table[q];
            for (i, &d) in dofs.iter().enumerate() {
                out[d] += w * area * (fv[0] * lb.value(i, 0) + fv[1] * lb.value(i, 1));
            }
        }
    }
    Ok(out)
}

/// `(f, pi_div phi_i)` through the local reconstruction matrices:
/// per cell, `R^T (f, psi_m)` with `psi_m` the local BDM basis.
pub fn assemble_reconstructed_load(recon: &Reconstruction, f: &dyn Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
    let space_v = recon.space_v();
    let space_bdm = recon.space_bdm();
    let k = space_v.degree();
    let rule = tensor_rule(k + 3)?;
    let table = tabulate(space_bdm, &rule);
    let mesh = space_v.mesh();
    let area = mesh.cell_area();
    let n_bdm = space_bdm.n_local();
    let mut out = vec![0.0; space_v.n_dofs()];
    let mut moments = vec![0.0; n_bdm];
    for cell in 0..mesh.n_cells() {
        moments.iter_mut().for_each(|m| *m = 0.0);
        for (q, (p, w)) in rule.iter().enumerate() {
            let fv = f(mesh.map_unchecked(cell, p));
            let lb = &table[q];
            for (m, acc) in moments.iter_mut().enumerate() {
                *acc += w * area * (fv[0] * lb.value(m, 0) + fv[1] * lb.value(m, 1));
            }
        }
        let r = &recon.local(cell).matrix;
        for (j, &d) in space_v.cell_dofs(cell).iter().enumerate() {
            let mut acc = 0.0;
            for (m, mv) in moments.iter().enumerate() {
                acc += r[(m, j)] * mv;
            }
            out[d] += acc;
        }
    }
    Ok(out)
}
