//! Experiment data: loads, reference solutions, gradient potentials and the
//! thermo-elastic pipeline, plus a small driver that solves a problem with
//! either the standard or the gradient-robust method.
//!
//! Sign convention: the solver uses `a(u, v) + (p, div v) = load`, so for a
//! strong form `-2 mu div eps(u) + grad p_s = f` the discrete pressure
//! approximates `-p_s`. Stored exact pressures carry that sign.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    apply_dirichlet, assemble_load, assemble_reconstructed_load, build_saddle_system_with_load, solve_heat, Lambda,
    LoadMode, SaddleSolution,
};
use crate::error::{Error, Result};
use crate::fe_basis::{build_space, DiscreteField, FunctionSpace, SpaceKind};
use crate::mesh::{Mesh, Point};
use crate::reconstruction::Reconstruction;

pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type VectorWithGradFn = Arc<dyn Fn(Point) -> ([f64; 2], [[f64; 2]; 2]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub label: String,
    pub mu: f64,
    pub lambda: Lambda,
    pub f: VectorFn,
    pub exact_u: Option<VectorWithGradFn>,
    pub exact_p: Option<ScalarFn>,
    /// Potential with `f = grad phi`, when the load is a pure gradient.
    pub phi: Option<ScalarFn>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("mu", &self.mu)
            .field("lambda", &self.lambda)
            .field("exact_u", &self.exact_u.is_some())
            .field("exact_p", &self.exact_p.is_some())
            .field("phi", &self.phi.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Same data with different material parameters. Loads that depend on
    /// `mu` are rebuilt by the example constructors, not here.
    pub fn with_lambda(mut self, lambda: Lambda) -> ProblemSpec {
        self.lambda = lambda;
        self
    }

    /// Max `|div exact_u|` over `n` seeded random points.
    pub fn max_sampled_divergence(&self, n: usize, seed: u64) -> Option<f64> {
        let u = self.exact_u.as_ref()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Some(
            (0..n)
                .map(|_| {
                    let p = [rng.random::<f64>(), rng.random::<f64>()];
                    let (_, g) = u(p);
                    (g[0][0] + g[1][1]).abs()
                })
                .fold(0.0, f64::max),
        )
    }

    /// Max relative deviation between `f` and a central-difference
    /// gradient of `phi` (step `1e-6`) over `n` seeded points inside
    /// `[0, lx] x [0, ly]`.
    pub fn max_gradient_mismatch(&self, n: usize, seed: u64, lx: f64, ly: f64) -> Option<f64> {
        let phi = self.phi.as_ref()?;
        let d = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let p = [rng.random_range(2.0 * d..lx - 2.0 * d), rng.random_range(2.0 * d..ly - 2.0 * d)];
            let fd = [
                (phi([p[0] + d, p[1]]) - phi([p[0] - d, p[1]])) / (2.0 * d),
                (phi([p[0], p[1] + d]) - phi([p[0], p[1] - d])) / (2.0 * d),
            ];
            let f = (self.f)(p);
            let scale = f[0].hypot(f[1]).max(fd[0].hypot(fd[1])).max(1e-300);
            worst = worst.max((f[0] - fd[0]).hypot(f[1] - fd[1]) / scale);
        }
        Some(worst)
    }
}

fn g(x: f64) -> [f64; 4] {
    // g = x^2 (1-x)^2 and its first three derivatives
    [
        x * x * (1.0 - x) * (1.0 - x),
        2.0 * x - 6.0 * x * x + 4.0 * x * x * x,
        2.0 - 12.0 * x + 12.0 * x * x,
        -12.0 + 24.0 * x,
    ]
}

/// Divergence-free displacement `curl(100 g(x) g(y))` and its Jacobian.
fn incompressible_u(p: Point) -> ([f64; 2], [[f64; 2]; 2]) {
    let (gx, gy) = (g(p[0]), g(p[1]));
    let u = [100.0 * gx[0] * gy[1], -100.0 * gx[1] * gy[0]];
    let grad = [
        [100.0 * gx[1] * gy[1], 100.0 * gx[0] * gy[2]],
        [-100.0 * gx[2] * gy[0], -100.0 * gx[1] * gy[1]],
    ];
    (u, grad)
}

fn incompressible_laplacian(p: Point) -> [f64; 2] {
    let (gx, gy) = (g(p[0]), g(p[1]));
    [
        100.0 * (gx[2] * gy[1] + gx[0] * gy[3]),
        -100.0 * (gx[3] * gy[0] + gx[1] * gy[2]),
    ]
}

/// `-10 (x - 1/2)^3 y^2 + (1 - x)^3 (y - 1/2)^3`.
fn cubic_potential(p: Point) -> f64 {
    let (x, y) = (p[0], p[1]);
    -10.0 * (x - 0.5).powi(3) * y * y + (1.0 - x).powi(3) * (y - 0.5).powi(3)
}

fn cubic_gradient(p: Point) -> [f64; 2] {
    let (x, y) = (p[0], p[1]);
    [
        -30.0 * (x - 0.5).powi(2) * y * y - 3.0 * (1.0 - x).powi(2) * (y - 0.5).powi(3),
        -20.0 * (x - 0.5).powi(3) * y + 3.0 * (1.0 - x).powi(3) * (y - 0.5).powi(2),
    ]
}

/// Load `-mu Laplace(u) + grad p_s` of the incompressible example.
fn incompressible_load(mu: f64) -> VectorFn {
    Arc::new(move |p| {
        let l = incompressible_laplacian(p);
        let gp = cubic_gradient(p);
        [-mu * l[0] + gp[0], -mu * l[1] + gp[1]]
    })
}

/// Incompressible flow-like problem with known `u` and `p`; `lambda = inf`.
pub fn example_incompressible(mu: f64) -> ProblemSpec {
    ProblemSpec {
        label: "ex1_incompressible".into(),
        mu,
        lambda: Lambda::Infinite,
        f: incompressible_load(mu),
        exact_u: Some(Arc::new(incompressible_u)),
        // p_s = cubic + 1/8 has mean 1/8; the discrete pressure is -(p_s - 1/8).
        exact_p: Some(Arc::new(|p| -cubic_potential(p))),
        phi: None,
    }
}

/// Pure gradient load `grad(x^6 + y^6)`; the `lambda -> inf` displacement
/// is zero.
pub fn example_gradient_poly(mu: f64, lambda: Lambda) -> ProblemSpec {
    ProblemSpec {
        label: "ex2_gradient_poly".into(),
        mu,
        lambda,
        f: Arc::new(|p| [6.0 * p[0].powi(5), 6.0 * p[1].powi(5)]),
        exact_u: Some(Arc::new(|_| ([0.0; 2], [[0.0; 2]; 2]))),
        exact_p: None,
        phi: Some(Arc::new(|p| p[0].powi(6) + p[1].powi(6))),
    }
}

/// Pure gradient load of the cubic potential (shifted to mean zero).
pub fn example_gradient_cubic(mu: f64, lambda: Lambda) -> ProblemSpec {
    ProblemSpec {
        label: "ex3_gradient_cubic".into(),
        mu,
        lambda,
        f: Arc::new(cubic_gradient),
        exact_u: Some(Arc::new(|_| ([0.0; 2], [[0.0; 2]; 2]))),
        exact_p: None,
        phi: Some(Arc::new(|p| cubic_potential(p) - 0.125)),
    }
}

/// Load of the incompressible example at finite `lambda`; `exact_u` holds
/// the incompressible limit `u^inf`.
pub fn example_nearly_incompressible(mu: f64, lambda: Lambda) -> ProblemSpec {
    ProblemSpec {
        label: "ex4_nearly_incompressible".into(),
        mu,
        lambda,
        f: incompressible_load(mu),
        exact_u: Some(Arc::new(incompressible_u)),
        exact_p: None,
        phi: None,
    }
}

/// Material and heat data of the thermo-elastic example.
#[derive(Clone)]
pub struct ThermoParams {
    /// Young's modulus (Pa).
    pub e: f64,
    pub nu_poisson: f64,
    /// Thermal expansion (1/K).
    pub alpha: f64,
    /// Conductivity (W/(m K)).
    pub gamma: f64,
    /// Side length of the square domain (m).
    pub l: f64,
    /// Heat source (W/m^3).
    pub heat_source: ScalarFn,
}

impl std::fmt::Debug for ThermoParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ThermoParams")
            .field("e", &self.e)
            .field("nu_poisson", &self.nu_poisson)
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .field("l", &self.l)
            .finish()
    }
}

impl Default for ThermoParams {
    fn default() -> Self {
        let l = 0.1;
        ThermoParams {
            e: 5e7,
            nu_poisson: 0.4999,
            alpha: 8e-5,
            gamma: 0.2,
            l,
            heat_source: Arc::new(move |p| {
                let r2 = (p[0] - 0.5 * l).powi(2) + (p[1] - 0.5 * l).powi(2);
                4.0 * (-40.0 * r2).exp()
            }),
        }
    }
}

impl ThermoParams {
    pub fn lambda(&self) -> f64 {
        let nu = self.nu_poisson;
        self.e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    }

    pub fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu_poisson))
    }

    fn validate(&self) -> Result<()> {
        let ok = self.e > 0.0
            && self.nu_poisson > 0.0
            && self.nu_poisson < 0.5
            && self.alpha.is_finite()
            && self.gamma > 0.0
            && self.l > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid thermo parameters {self:?}")))
        }
    }
}

/// Solves the heat problem on `mesh` with `Q2` and returns the elasticity
/// problem with load `-(2 mu + 3 lambda) alpha grad theta_h`.
pub fn thermo_pipeline(params: &ThermoParams, mesh: &Arc<Mesh>) -> Result<ProblemSpec> {
    params.validate()?;
    let space_t = build_space(mesh, SpaceKind::ScalarLagrangeQ(2))?;
    let src = params.heat_source.clone();
    let theta = Arc::new(solve_heat(&space_t, params.gamma, &|p| src(p))?);
    let (mu, lambda) = (params.mu(), params.lambda());
    let c = -(2.0 * mu + 3.0 * lambda) * params.alpha;
    let th = theta.clone();
    let f: VectorFn = Arc::new(move |p| match th.eval(p) {
        Ok((_, g)) => [c * g[0][0], c * g[0][1]],
        Err(_) => [f64::NAN; 2],
    });
    let phi: ScalarFn = Arc::new(move |p| theta.eval(p).map(|(v, _)| c * v[0]).unwrap_or(f64::NAN));
    Ok(ProblemSpec {
        label: "thermo".into(),
        mu,
        lambda: Lambda::Finite(lambda),
        f,
        exact_u: None,
        exact_p: None,
        phi: Some(phi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Load tested against the BDM interpolant of the test function.
    Robust,
    /// Standard load.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elements {
    Q2Dgp1,
    Q2Q1,
}

/// Spaces and method on one mesh. The reconstruction is built on first use
/// and shared by later solves.
#[derive(Debug)]
pub struct Discretization {
    method: Method,
    elements: Elements,
    space_v: Arc<FunctionSpace>,
    space_q: Arc<FunctionSpace>,
    recon: OnceLock<Reconstruction>,
}

impl Discretization {
    pub fn new(mesh: &Arc<Mesh>, method: Method, elements: Elements) -> Result<Discretization> {
        if method == Method::Robust && elements == Elements::Q2Q1 {
            return Err(Error::IncompatibleSpaces(
                "the robust method needs a discontinuous pressure space (q2_dgp1)".into(),
            ));
        }
        let space_v = build_space(mesh, SpaceKind::VectorLagrangeQ(2))?;
        let q = match elements {
            Elements::Q2Dgp1 => SpaceKind::DiscontinuousP(1),
            Elements::Q2Q1 => SpaceKind::ScalarLagrangeQ(1),
        };
        let space_q = build_space(mesh, q)?;
        Ok(Discretization {
            method,
            elements,
            space_v,
            space_q,
            recon: OnceLock::new(),
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn elements(&self) -> Elements {
        self.elements
    }

    pub fn space_v(&self) -> &Arc<FunctionSpace> {
        &self.space_v
    }

    pub fn space_q(&self) -> &Arc<FunctionSpace> {
        &self.space_q
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space_v.mesh()
    }

    pub fn reconstruction(&self) -> Result<&Reconstruction> {
        if let Some(r) = self.recon.get() {
            return Ok(r);
        }
        let r = Reconstruction::new(&self.space_v)?;
        Ok(self.recon.get_or_init(|| r))
    }

    pub fn load(&self, f: &dyn Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
        match self.method {
            Method::Naive => assemble_load(&self.space_v, f, LoadMode::Standard),
            Method::Robust => assemble_reconstructed_load(self.reconstruction()?, f),
        }
    }

    pub fn solve(&self, problem: &ProblemSpec) -> Result<SaddleSolution> {
        let rhs = self.load(&*problem.f)?;
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "load of {} is not finite on this mesh",
                problem.label
            )));
        }
        let system = build_saddle_system_with_load(problem.mu, problem.lambda, &self.space_v, &self.space_q, rhs)?;
        apply_dirichlet(system).solve()
    }

    /// Zero displacement field of this discretization.
    pub fn zero_u(&self) -> DiscreteField {
        DiscreteField::zeros(self.space_v.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incompressible_values() {
        let p = example_incompressible(1.0);
        let u = p.exact_u.as_ref().unwrap();
        let (v, _) = u([0.5, 0.5]);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        let (v, _) = u([0.25, 0.75]);
        assert!((v[0] + 675.0 / 1024.0).abs() < 1e-14);
        assert!(p.max_sampled_divergence(1000, 1).unwrap() <= 1e-12);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let d = 1e-5;
        for p in [[0.3, 0.7], [0.81, 0.12], [0.5, 0.44]] {
            let (_, g) = incompressible_u(p);
            for dir in 0..2 {
                let mut a = p;
                let mut b = p;
                a[dir] += d;
                b[dir] -= d;
                let (ua, _) = incompressible_u(a);
                let (ub, _) = incompressible_u(b);
                for c in 0..2 {
                    assert!(((ua[c] - ub[c]) / (2.0 * d) - g[c][dir]).abs() < 1e-7);
                }
            }
            // Laplacian via second differences
            let lap = incompressible_laplacian(p);
            let e = 1e-4;
            for c in 0..2 {
                let f = |q: Point| incompressible_u(q).0[c];
                let fd = (f([p[0] + e, p[1]]) + f([p[0] - e, p[1]]) + f([p[0], p[1] + e]) + f([p[0], p[1] - e])
                    - 4.0 * f(p))
                    / (e * e);
                assert!((fd - lap[c]).abs() < 1e-5 * (1.0 + lap[c].abs()));
            }
        }
    }

    #[test]
    fn gradient_loads_match_potentials() {
        for spec in [
            example_gradient_poly(1e-5, Lambda::Finite(1.0)),
            example_gradient_cubic(1e-5, Lambda::Finite(1.0)),
        ] {
            assert!(spec.max_gradient_mismatch(200, 3, 1.0, 1.0).unwrap() <= 1e-6);
        }
        let f = example_gradient_poly(1.0, Lambda::Infinite).f;
        assert_eq!(f([1.0, 1.0]), [6.0, 6.0]);
        for y in [0.0, 0.3, 1.0] {
            assert_eq!(-10.0 * (0.5f64 - 0.5).powi(3) * y * y, 0.0);
        }
    }

    #[test]
    fn potential_norm_of_poly_example() {
        let phi = example_gradient_poly(1.0, Lambda::Infinite).phi.unwrap();
        let rule = crate::quadrature::tensor_rule(7).unwrap();
        let n2: f64 = rule.iter().map(|(p, w)| w * phi(p).powi(2)).sum();
        assert!((n2.sqrt() - (2.0f64 / 13.0 + 2.0 / 49.0).sqrt()).abs() < 1e-13);
        assert!((n2.sqrt() - 0.441205).abs() < 1e-6);
    }

    #[test]
    fn cubic_potential_mean() {
        let rule = crate::quadrature::tensor_rule(4).unwrap();
        let mean: f64 = rule.iter().map(|(p, w)| w * cubic_potential(p)).sum();
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn thermo_material_values() {
        let t = ThermoParams::default();
        assert!((t.lambda() / 8.332e10 - 1.0).abs() < 5e-5);
        assert!((t.mu() / 1.6667e7 - 1.0).abs() < 5e-5);
        assert_eq!((t.heat_source)([0.05, 0.05]), 4.0);
    }

    #[test]
    fn thermo_load_is_gradient_of_scaled_temperature() {
        let t = ThermoParams::default();
        let mesh = Arc::new(Mesh::rectangle(4, 4, t.l, t.l).unwrap());
        let spec = thermo_pipeline(&t, &mesh).unwrap();
        // Central differences inside cells only: grad theta_h jumps across edges.
        let phi = spec.phi.clone().unwrap();
        let d = 1e-7;
        for p in [[0.011, 0.013], [0.047, 0.062], [0.088, 0.031]] {
            let f = (spec.f)(p);
            let fd = [
                (phi([p[0] + d, p[1]]) - phi([p[0] - d, p[1]])) / (2.0 * d),
                (phi([p[0], p[1] + d]) - phi([p[0], p[1] - d])) / (2.0 * d),
            ];
            let s = f[0].hypot(f[1]);
            assert!((f[0] - fd[0]).hypot(f[1] - fd[1]) <= 1e-6 * s);
        }
    }

    #[test]
    fn robust_q2q1_is_rejected() {
        let mesh = Arc::new(Mesh::unit_square(2).unwrap());
        assert!(Discretization::new(&mesh, Method::Robust, Elements::Q2Q1).is_err());
        assert!(Discretization::new(&mesh, Method::Naive, Elements::Q2Q1).is_ok());
    }
}
