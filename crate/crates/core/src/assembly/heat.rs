use std::sync::Arc;

use super::{scatter, tabulate, SparseMatrix};
use crate::error::{Error, Result};
use crate::fe_basis::{DiscreteField, FunctionSpace, SpaceKind};
use crate::linsolve;
use crate::mesh::Point;
use crate::quadrature::tensor_rule;

/// Stiffness `gamma (grad theta, grad tau)` and load `(source, tau)` with
/// homogeneous Dirichlet conditions eliminated symmetrically.
pub fn assemble_heat(
    space_t: &FunctionSpace,
    gamma: f64,
    source: &dyn Fn(Point) -> f64,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let SpaceKind::ScalarLagrangeQ(k) = space_t.kind() else {
        return Err(Error::IncompatibleSpaces(format!(
            "heat problem needs ScalarLagrangeQ, got {:?}",
            space_t.kind()
        )));
    };
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let mesh = space_t.mesh();
    let area = mesh.cell_area();
    let n = space_t.n_local();

    let rule = tensor_rule(k + 1)?;
    let table = tabulate(space_t, &rule);
    let mut local = vec![0.0; n * n];
    for (q, w) in rule.weights.iter().enumerate() {
        for i in 0..n {
            let gi = table[q].grad(i, 0);
            for j in 0..n {
                let gj = table[q].grad(j, 0);
                local[i * n + j] += gamma * w * area * (gi[0] * gj[0] + gi[1] * gj[1]);
            }
        }
    }
    let raw = scatter(space_t, space_t, &local, space_t.n_dofs(), space_t.n_dofs())?;

    let lrule = tensor_rule(k + 3)?;
    let ltable = tabulate(space_t, &lrule);
    let mut load = vec![0.0; space_t.n_dofs()];
    for cell in 0..mesh.n_cells() {
        for (q, (p, w)) in lrule.iter().enumerate() {
            let s = source(mesh.map_unchecked(cell, p));
            for (i, &d) in space_t.cell_dofs(cell).iter().enumerate() {
                load[d] += w * area * s * ltable[q].value(i, 0);
            }
        }
    }

    let mut fixed = vec![false; space_t.n_dofs()];
    for &d in space_t.boundary_dofs() {
        fixed[d] = true;
        load[d] = 0.0;
    }
    let t = raw
        .triplets()
        .filter(|&(r, c, _)| !fixed[r] && !fixed[c])
        .chain(space_t.boundary_dofs().iter().map(|&d| (d, d, 1.0)))
        .collect();
    let matrix = SparseMatrix::from_triplets(space_t.n_dofs(), space_t.n_dofs(), t)?;
    Ok((matrix, load))
}

/// Solves the heat problem for the temperature field.
pub fn solve_heat(
    space_t: &Arc<FunctionSpace>,
    gamma: f64,
    source: &dyn Fn(Point) -> f64,
) -> Result<DiscreteField> {
    let (k, load) = assemble_heat(space_t, gamma, source)?;
    let x = linsolve::factorize(&k)?.solve(&load)?;
    DiscreteField::new(space_t.clone(), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe_basis::build_space;
    use crate::mesh::Mesh;
    use std::f64::consts::PI;

    fn semi_error(theta: &DiscreteField, l: f64) -> f64 {
        let mesh = theta.space().mesh();
        let rule = tensor_rule(5).unwrap();
        let mut e = 0.0;
        for cell in 0..mesh.n_cells() {
            for (p, w) in rule.iter() {
                let x = mesh.ref_to_phys(cell, p).unwrap();
                let (_, g) = theta.eval_in_cell(cell, p).unwrap();
                let k = PI / l;
                let ex = [k * (k * x[0]).cos() * (k * x[1]).sin(), k * (k * x[0]).sin() * (k * x[1]).cos()];
                e += w * mesh.cell_area() * ((g[0][0] - ex[0]).powi(2) + (g[0][1] - ex[1]).powi(2));
            }
        }
        e.sqrt()
    }

    #[test]
    fn zero_source_gives_zero_temperature() {
        let mesh = Arc::new(Mesh::rectangle(4, 4, 0.1, 0.1).unwrap());
        let s = build_space(&mesh, SpaceKind::ScalarLagrangeQ(2)).unwrap();
        let t = solve_heat(&s, 0.2, &|_| 0.0).unwrap();
        assert!(t.coeffs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn manufactured_solution_converges() {
        let l = 0.1;
        let gamma = 0.2;
        let k = PI / l;
        let src = move |p: Point| 2.0 * gamma * k * k * (k * p[0]).sin() * (k * p[1]).sin();
        let errs: Vec<f64> = [4, 8]
            .iter()
            .map(|&n| {
                let mesh = Arc::new(Mesh::rectangle(n, n, l, l).unwrap());
                let s = build_space(&mesh, SpaceKind::ScalarLagrangeQ(2)).unwrap();
                semi_error(&solve_heat(&s, gamma, &src).unwrap(), l)
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate >= 1.9, "rate {rate}");
    }

    #[test]
    fn positive_source_gives_nonnegative_nodes() {
        let l = 0.1;
        let mesh = Arc::new(Mesh::rectangle(8, 8, l, l).unwrap());
        let s = build_space(&mesh, SpaceKind::ScalarLagrangeQ(2)).unwrap();
        let src = |p: Point| {
            let r2 = (p[0] - 0.05).powi(2) + (p[1] - 0.05).powi(2);
            4.0 * (-40.0 * r2).exp()
        };
        let t = solve_heat(&s, 0.2, &src).unwrap();
        assert!(t.coeffs().iter().all(|&x| x >= 0.0));
    }
}
