use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::assembly::Lambda;
use crate::problems::{Elements, Method, ThermoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Ex1Incompressible,
    Ex2GradientPoly,
    Ex3GradientCubic,
    Ex4NearlyIncompressible,
    Thermo,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Ex1Incompressible,
        Experiment::Ex2GradientPoly,
        Experiment::Ex3GradientCubic,
        Experiment::Ex4NearlyIncompressible,
        Experiment::Thermo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Ex1Incompressible => "ex1_incompressible",
            Experiment::Ex2GradientPoly => "ex2_gradient_poly",
            Experiment::Ex3GradientCubic => "ex3_gradient_cubic",
            Experiment::Ex4NearlyIncompressible => "ex4_nearly_incompressible",
            Experiment::Thermo => "thermo",
        }
    }

    pub fn default_refinement(&self) -> Vec<u32> {
        match self {
            Experiment::Thermo => vec![3, 4, 5],
            _ => vec![3],
        }
    }

    pub fn default_mu(&self) -> Vec<f64> {
        match self {
            Experiment::Ex1Incompressible => (0..=5).map(|i| 10f64.powi(-i)).collect(),
            Experiment::Thermo => vec![ThermoParams::default().mu()],
            _ => vec![1e-5],
        }
    }

    pub fn default_lambda(&self) -> Vec<Lambda> {
        match self {
            Experiment::Ex1Incompressible => vec![Lambda::Infinite],
            Experiment::Ex2GradientPoly | Experiment::Ex3GradientCubic => {
                (0..=5).map(|i| Lambda::Finite(10f64.powi(i))).collect()
            }
            Experiment::Ex4NearlyIncompressible => (0..=5).map(|i| Lambda::Finite(10f64.powi(2 * i))).collect(),
            Experiment::Thermo => vec![Lambda::Finite(ThermoParams::default().lambda())],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment '{s}' (expected one of {})", names.join(", "))
            })
    }
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Robust => "robust",
        Method::Naive => "naive",
    }
}

pub fn elements_name(e: Elements) -> &'static str {
    match e {
        Elements::Q2Dgp1 => "q2_dgp1",
        Elements::Q2Q1 => "q2_q1",
    }
}

/// A validated experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub method: Method,
    pub elements: Elements,
    /// Exponents `r`; the mesh has `2^r` cells per side.
    pub refinement: Vec<u32>,
    pub mu_list: Vec<f64>,
    pub lambda_list: Vec<Lambda>,
    pub out_path: PathBuf,
    pub plot: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Config with the experiment's default sweeps.
    pub fn new(experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            method: Method::Robust,
            elements: Elements::Q2Dgp1,
            refinement: experiment.default_refinement(),
            mu_list: experiment.default_mu(),
            lambda_list: experiment.default_lambda(),
            out_path: PathBuf::from(format!("{}.csv", experiment.name())),
            plot: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.method == Method::Robust && self.elements == Elements::Q2Q1 {
            return Err("method robust requires elements q2_dgp1".into());
        }
        if self.refinement.is_empty() || self.mu_list.is_empty() || self.lambda_list.is_empty() {
            return Err("refinement, mu and lambda lists must be nonempty".into());
        }
        if let Some(r) = self.refinement.iter().find(|&&r| r > 8) {
            return Err(format!("refinement {r} too fine (max 8)"));
        }
        if let Some(m) = self.mu_list.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(format!("mu must be positive and finite, got {m}"));
        }
        for l in &self.lambda_list {
            match l {
                Lambda::Infinite if self.experiment != Experiment::Ex1Incompressible => {
                    return Err(format!("lambda = inf is only allowed for {}", Experiment::Ex1Incompressible));
                }
                Lambda::Finite(v) if !(*v > 0.0 && v.is_finite()) => {
                    return Err(format!("lambda must be positive, got {v}"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Parses a comma separated list of positive reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("cannot parse '{t}' as a number"))
        })
        .collect()
}

/// Like [`parse_list`], accepting `inf` entries.
pub fn parse_lambda_list(s: &str) -> Result<Vec<Lambda>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if t.eq_ignore_ascii_case("inf") {
                Ok(Lambda::Infinite)
            } else {
                t.parse::<f64>()
                    .map(Lambda::Finite)
                    .map_err(|_| format!("cannot parse '{t}' as lambda"))
            }
        })
        .collect()
}

pub fn parse_refinement(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u32>().map_err(|_| format!("cannot parse '{t}' as a refinement level"))
        })
        .collect()
}
