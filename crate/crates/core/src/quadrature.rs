//! Gauss–Legendre rules on `[0,1]`, their tensor products on the unit square,
//! and edge rules.

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_POINTS: usize = 10;

/// Points and positive weights on `[0,1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Points and positive weights on `[0,1]^2`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule2d {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule1d {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

impl QuadRule2d {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Legendre polynomial `P_n(x)` on `[-1,1]`.
pub(crate) fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Legendre polynomial `P_n(x)` and its derivative, for `|x| < 1`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule on `[0,1]`, exact up to degree `2n - 1`.
pub fn gauss_1d(n: usize) -> Result<QuadRule1d> {
    if !(1..=MAX_POINTS).contains(&n) {
        return Err(Error::QuadratureOrder(n));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1,1] -> [0,1]; nodes ascending.
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    Ok(QuadRule1d { points, weights })
}

/// Tensor-product Gauss rule with `n` points per direction on `[0,1]^2`.
/// Points are ordered with the first coordinate running fastest.
pub fn tensor_rule(n: usize) -> Result<QuadRule2d> {
    let g = gauss_1d(n)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (y, wy) in g.iter() {
        for (x, wx) in g.iter() {
            points.push([x, y]);
            weights.push(wx * wy);
        }
    }
    Ok(QuadRule2d { points, weights })
}

/// Gauss rule in the edge parameter `s in [0,1]`; multiply the weights by the
/// edge length to integrate with respect to arc length.
pub fn edge_rule(n: usize) -> Result<QuadRule1d> {
    gauss_1d(n)
}
