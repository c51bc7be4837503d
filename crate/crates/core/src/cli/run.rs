use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::{elements_name, method_name, Experiment, ExperimentConfig};
use super::output::{grid_to_csv, loglog_svg, rows_to_csv};
use crate::analysis::{error_report, sample_grid, ErrorReport};
use crate::assembly::Lambda;
use crate::fe_basis::DiscreteField;
use crate::mesh::Mesh;
use crate::problems::{
    example_gradient_cubic, example_gradient_poly, example_incompressible, example_nearly_incompressible,
    thermo_pipeline, Discretization, Method, ProblemSpec, ThermoParams,
};
use crate::reconstruction::reconstruction_defects;

/// Commuting-defect bound checked on a seeded random field per robust mesh.
const COMMUTING_TOLERANCE: f64 = 1e-11;
const GRID_POINTS: usize = 50;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{experiment}: solve failed at h = {h}, mu = {mu}, lambda = {lambda}: {source}")]
    Solver {
        experiment: &'static str,
        h: f64,
        mu: f64,
        lambda: f64,
        source: crate::Error,
    },
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    /// Process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub experiment: &'static str,
    pub method: &'static str,
    pub elements: &'static str,
    pub refinement: u32,
    pub mu: f64,
    pub lambda: Lambda,
    pub report: ErrorReport,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    /// Sampled displacement grids `(row index, rows of x, y, u1, u2)`.
    pub grids: Vec<(usize, Vec<[f64; 4]>)>,
}

fn problem_for(experiment: Experiment, mu: f64, lambda: Lambda) -> ProblemSpec {
    match experiment {
        Experiment::Ex1Incompressible => example_incompressible(mu).with_lambda(lambda),
        Experiment::Ex2GradientPoly => example_gradient_poly(mu, lambda),
        Experiment::Ex3GradientCubic => example_gradient_cubic(mu, lambda),
        Experiment::Ex4NearlyIncompressible => example_nearly_incompressible(mu, lambda),
        Experiment::Thermo => unreachable!("thermo problems are built per mesh"),
    }
}

fn commuting_check(disc: &Discretization, seed: u64) -> crate::Result<()> {
    let space = disc.space_v();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let field = DiscreteField::new(space.clone(), coeffs)?;
    let d = reconstruction_defects(disc.reconstruction()?, disc.space_q(), &field)?;
    if d.commuting_rel > COMMUTING_TOLERANCE {
        return Err(crate::Error::InvalidArgument(format!(
            "reconstruction commuting defect {:e} exceeds {COMMUTING_TOLERANCE:e}",
            d.commuting_rel
        )));
    }
    Ok(())
}

/// Runs every `(h, mu, lambda)` combination in sweep order.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    config.validate().map_err(RunError::Config)?;
    let exp = config.experiment;
    let thermo = ThermoParams::default();
    let mut out = RunOutput::default();
    for &r in &config.refinement {
        let n = 1usize << r;
        let mesh = match exp {
            Experiment::Thermo => Mesh::rectangle(n, n, thermo.l, thermo.l),
            _ => Mesh::unit_square(n),
        }
        .map_err(|e| RunError::Config(e.to_string()))?;
        let mesh = Arc::new(mesh);
        let h = mesh.h();
        let fail = |mu: f64, lambda: Lambda| {
            move |source| RunError::Solver {
                experiment: exp.name(),
                h,
                mu,
                lambda: lambda.as_f64(),
                source,
            }
        };
        let first = (config.mu_list[0], config.lambda_list[0]);
        let disc =
            Discretization::new(&mesh, config.method, config.elements).map_err(|e| RunError::Config(e.to_string()))?;
        if config.method == Method::Robust {
            commuting_check(&disc, config.seed).map_err(fail(first.0, first.1))?;
        }
        let thermo_base = if exp == Experiment::Thermo {
            Some(thermo_pipeline(&thermo, &mesh).map_err(fail(first.0, first.1))?)
        } else {
            None
        };
        for &mu in &config.mu_list {
            for &lambda in &config.lambda_list {
                let problem = match &thermo_base {
                    Some(base) => {
                        let mut p = base.clone().with_lambda(lambda);
                        p.mu = mu;
                        p
                    }
                    None => problem_for(exp, mu, lambda),
                };
                let sol = disc.solve(&problem).map_err(fail(mu, lambda))?;
                let exact = problem.exact_u.as_deref().map(|e| e as &crate::analysis::ExactVector);
                let report = error_report(&sol, lambda, exact).map_err(fail(mu, lambda))?;
                if exp == Experiment::Thermo {
                    let grid = sample_grid(&sol.u, GRID_POINTS).map_err(fail(mu, lambda))?;
                    out.grids.push((out.rows.len(), grid));
                }
                out.rows.push(Row {
                    experiment: exp.name(),
                    method: method_name(config.method),
                    elements: elements_name(config.elements),
                    refinement: r,
                    mu,
                    lambda,
                    report,
                });
            }
        }
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

/// Writes the CSV table, thermo field grids and the optional plot; returns
/// the written paths.
pub fn write_outputs(config: &ExperimentConfig, output: &RunOutput) -> Result<Vec<PathBuf>, RunError> {
    let mut written = Vec::new();
    if let Some(dir) = config.out_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| RunError::Io {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?;
        }
    }
    write(&config.out_path, &rows_to_csv(&output.rows))?;
    written.push(config.out_path.clone());
    for (i, grid) in &output.grids {
        let row = &output.rows[*i];
        let p = sibling(&config.out_path, &format!("_field_r{}_{i}", row.refinement), "csv");
        write(&p, &grid_to_csv(grid))?;
        written.push(p);
    }
    if config.plot {
        let (x_label, xs): (&str, Vec<f64>) = if config.lambda_list.len() > 1 {
            ("lambda", output.rows.iter().map(|r| r.lambda.as_f64()).collect())
        } else if config.mu_list.len() > 1 {
            ("1/mu", output.rows.iter().map(|r| 1.0 / r.mu).collect())
        } else {
            ("h", output.rows.iter().map(|r| r.report.h).collect())
        };
        let use_err = output.rows.iter().all(|r| r.report.err_h1.is_some());
        let (y_label, ys): (&str, Vec<f64>) = if use_err {
            ("err_h1", output.rows.iter().map(|r| r.report.err_h1.unwrap_or(0.0)).collect())
        } else {
            ("norm_u_h1", output.rows.iter().map(|r| r.report.norm_u_h1).collect())
        };
        let title = format!(
            "{} {} {}",
            config.experiment,
            method_name(config.method),
            elements_name(config.elements)
        );
        let p = config.out_path.with_extension("svg");
        write(&p, &loglog_svg(&title, x_label, y_label, &xs, &ys))?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Elements;

    #[test]
    fn small_gradient_sweep_rows() {
        let mut c = ExperimentConfig::new(Experiment::Ex2GradientPoly);
        c.refinement = vec![1];
        c.lambda_list = vec![Lambda::Finite(1.0), Lambda::Finite(10.0)];
        let out = run(&c).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.grids.is_empty());
        let csv = rows_to_csv(&out.rows);
        assert_eq!(csv.lines().count(), 3);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("ex2_gradient_poly,robust,q2_dgp1,0.7071067811865476,0.00001,1,"), "{line}");
    }

    #[test]
    fn config_errors_map_to_exit_code_two() {
        let mut c = ExperimentConfig::new(Experiment::Ex1Incompressible);
        c.elements = Elements::Q2Q1;
        let e = run(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
