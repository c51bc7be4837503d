//! Error norms, L2 projections, divergence diagnostics and log-log slopes.

use std::sync::Arc;

use crate::assembly::{assemble_divergence, assemble_pressure_mass, Lambda, SaddleSolution};
use crate::error::{Error, Result};
use crate::fe_basis::{DiscreteField, FunctionSpace, SpaceKind};
use crate::linsolve;
use crate::mesh::Point;
use crate::quadrature::tensor_rule;

/// Exact displacement with its Jacobian (`grad[c][d] = d u_c / d x_d`).
pub type ExactVector = dyn Fn(Point) -> ([f64; 2], [[f64; 2]; 2]);

/// Per-solve diagnostics. Error entries are `None` when the problem has no
/// reference solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub dofs: usize,
    pub err_h1: Option<f64>,
    pub err_h1_semi: Option<f64>,
    pub err_l2: Option<f64>,
    pub norm_u_h1: f64,
    pub norm_p_l2: f64,
    pub div_residual: f64,
    pub constitutive_residual: f64,
    pub solver_residual: f64,
}

fn quad_order(field: &DiscreteField) -> usize {
    field.space().degree() + 3
}

/// `(||u - u_h||_1, |u - u_h|_1, ||u - u_h||_0)` by quadrature of order
/// `k + 3` per direction.
pub fn h1_error(u_h: &DiscreteField, exact: &ExactVector) -> Result<(f64, f64, f64)> {
    let space = u_h.space();
    if space.n_components() != 2 {
        return Err(Error::IncompatibleSpaces(format!(
            "h1_error needs a vector field, got {:?}",
            space.kind()
        )));
    }
    let mesh = space.mesh();
    let rule = tensor_rule(quad_order(u_h))?;
    let area = mesh.cell_area();
    let (mut l2, mut semi) = (0.0, 0.0);
    for cell in 0..mesh.n_cells() {
        for (p, w) in rule.iter() {
            let (v, g) = u_h.eval_in_cell(cell, p)?;
            let (ve, ge) = exact(mesh.map_unchecked(cell, p));
            for c in 0..2 {
                l2 += w * area * (v[c] - ve[c]).powi(2);
                for d in 0..2 {
                    semi += w * area * (g[c][d] - ge[c][d]).powi(2);
                }
            }
        }
    }
    Ok(((l2 + semi).sqrt(), semi.sqrt(), l2.sqrt()))
}

/// `||u_h||_1`.
pub fn field_norm_h1(u_h: &DiscreteField) -> Result<f64> {
    let zero = |_: Point| ([0.0; 2], [[0.0; 2]; 2]);
    match u_h.space().n_components() {
        2 => h1_error(u_h, &zero).map(|e| e.0),
        _ => {
            let (l2, semi) = scalar_norms(u_h)?;
            Ok((l2 * l2 + semi * semi).sqrt())
        }
    }
}

/// `||p_h||_0` of a scalar field.
pub fn field_norm_l2(p_h: &DiscreteField) -> Result<f64> {
    scalar_norms(p_h).map(|n| n.0)
}

fn scalar_norms(f: &DiscreteField) -> Result<(f64, f64)> {
    if f.space().n_components() != 1 {
        return Err(Error::IncompatibleSpaces("expected a scalar field".into()));
    }
    let mesh = f.space().mesh();
    let rule = tensor_rule(quad_order(f))?;
    let area = mesh.cell_area();
    let (mut l2, mut semi) = (0.0, 0.0);
    for cell in 0..mesh.n_cells() {
        for (p, w) in rule.iter() {
            let (v, g) = f.eval_in_cell(cell, p)?;
            l2 += w * area * v[0] * v[0];
            semi += w * area * (g[0][0] * g[0][0] + g[0][1] * g[0][1]);
        }
    }
    Ok((l2.sqrt(), semi.sqrt()))
}

fn require_pressure_space(space_q: &FunctionSpace) -> Result<()> {
    match space_q.kind() {
        SpaceKind::DiscontinuousP(_) | SpaceKind::ScalarLagrangeQ(_) => Ok(()),
        other => Err(Error::IncompatibleSpaces(format!(
            "projection target must be a scalar space, got {other:?}"
        ))),
    }
}

/// L2 projection onto a scalar space by solving `M x = (g, q_j)`.
pub fn l2_project(space_q: &Arc<FunctionSpace>, g: &dyn Fn(Point) -> f64) -> Result<DiscreteField> {
    require_pressure_space(space_q)?;
    let mesh = space_q.mesh();
    let rule = tensor_rule(space_q.degree() + 3)?;
    let area = mesh.cell_area();
    let mut load = vec![0.0; space_q.n_dofs()];
    for cell in 0..mesh.n_cells() {
        for (p, w) in rule.iter() {
            let gv = g(mesh.map_unchecked(cell, p));
            let lb = space_q.eval_basis(cell, p)?;
            for (i, &d) in space_q.cell_dofs(cell).iter().enumerate() {
                load[d] += w * area * gv * lb.value(i, 0);
            }
        }
    }
    let m = assemble_pressure_mass(space_q)?;
    let x = linsolve::factorize(&m)?.solve(&load)?;
    DiscreteField::new(space_q.clone(), x)
}

/// Coefficients of `pi_L2(div u_h)` in `space_q` and the mass matrix.
fn projected_divergence(u_h: &DiscreteField, space_q: &FunctionSpace) -> Result<(Vec<f64>, crate::assembly::SparseMatrix)> {
    let b = assemble_divergence(u_h.space(), space_q)?;
    let m = assemble_pressure_mass(space_q)?;
    let bu = b.matvec(u_h.coeffs());
    let c = linsolve::factorize(&m)?.solve(&bu)?;
    Ok((c, m))
}

/// `||pi_L2(div u_h) - p_h / lambda||_0`; finite `lambda` only.
pub fn constitutive_residual(u_h: &DiscreteField, p_h: &DiscreteField, lambda: Lambda) -> Result<f64> {
    let Lambda::Finite(l) = lambda else {
        return Err(Error::InvalidArgument(
            "constitutive residual needs finite lambda; use div_residual".into(),
        ));
    };
    let (c, m) = projected_divergence(u_h, p_h.space())?;
    let d: Vec<f64> = c.iter().zip(p_h.coeffs()).map(|(a, p)| a - p / l).collect();
    Ok(m.bilinear(&d, &d).max(0.0).sqrt())
}

/// `||pi_L2(div u_h)||_0`.
pub fn div_residual(u_h: &DiscreteField, space_q: &FunctionSpace) -> Result<f64> {
    require_pressure_space(space_q)?;
    let (c, m) = projected_divergence(u_h, space_q)?;
    Ok(m.bilinear(&c, &c).max(0.0).sqrt())
}

/// Builds the report for a solved system, optionally against an exact
/// displacement.
pub fn error_report(solution: &SaddleSolution, lambda: Lambda, exact: Option<&ExactVector>) -> Result<ErrorReport> {
    let u = &solution.u;
    let space_q = solution.p.space();
    let (err_h1, err_h1_semi, err_l2) = match exact {
        Some(e) => {
            let (a, b, c) = h1_error(u, e)?;
            (Some(a), Some(b), Some(c))
        }
        None => (None, None, None),
    };
    let div = div_residual(u, space_q)?;
    let constitutive = match lambda {
        Lambda::Finite(_) => constitutive_residual(u, &solution.p, lambda)?,
        Lambda::Infinite => div,
    };
    Ok(ErrorReport {
        h: u.space().mesh().h(),
        dofs: u.space().n_dofs() + space_q.n_dofs(),
        err_h1,
        err_h1_semi,
        err_l2,
        norm_u_h1: field_norm_h1(u)?,
        norm_p_l2: field_norm_l2(&solution.p)?,
        div_residual: div,
        constitutive_residual: constitutive,
        solver_residual: solution.residual,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("slope fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Values of a vector field on an `n x n` grid spanning the mesh domain,
/// `x` fastest: rows `(x, y, u1, u2)`.
pub fn sample_grid(u_h: &DiscreteField, n: usize) -> Result<Vec<[f64; 4]>> {
    if n < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points per side".into()));
    }
    let mesh = u_h.space().mesh();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = mesh.lx() * i as f64 / (n - 1) as f64;
            let y = mesh.ly() * j as f64 / (n - 1) as f64;
            let (v, _) = u_h.eval([x, y])?;
            out.push([x, y, v[0], v[1]]);
        }
    }
    Ok(out)
}

/// Largest `|u_h|` over a sampled grid.
pub fn max_sampled_magnitude(u_h: &DiscreteField, n: usize) -> Result<f64> {
    Ok(sample_grid(u_h, n)?
        .iter()
        .map(|r| r[2].hypot(r[3]))
        .fold(0.0, f64::max))
}
