//! Finitely supported measures and the machinery built on them: the
//! Prokhorov metric, Gaussian cylinder measures on partition grids, and the
//! invariance-defect experiments.

pub mod cylinder;
pub mod experiment;
pub mod prokhorov;
pub mod quadrature;

use std::sync::Arc;

use serde::Serialize;

use crate::coarse::{DiscreteMap, FiniteMetricSpace};
use crate::error::{Error, Result};

/// Mass comparisons use this slack; probability measures are 1 within it.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A non-negative weight per point of a finite metric space.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteMeasure {
    #[serde(skip)]
    pub space: Arc<FiniteMetricSpace>,
    pub weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(space: Arc<FiniteMetricSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::invalid(format!(
                "{} weights for a space of {} points",
                weights.len(),
                space.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "weight {w} at point {i} is not a finite non-negative real"
                )));
            }
        }
        Ok(FiniteMeasure { space, weights })
    }

    /// Unit mass at one point.
    pub fn dirac(space: Arc<FiniteMetricSpace>, at: usize) -> Result<Self> {
        if at >= space.len() {
            return Err(Error::invalid("dirac point out of range"));
        }
        let mut weights = vec![0.0; space.len()];
        weights[at] = 1.0;
        Ok(FiniteMeasure { space, weights })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= MASS_TOLERANCE
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{i},{w}\n"));
        }
        out
    }
}

/// Same-space check for measure operations: pointer equality or an equal
/// distance matrix.
pub(crate) fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || a.matrix() == b.matrix()
}

/// Weights summed along the fibers of f.
pub fn pushforward(f: &DiscreteMap, nu: &FiniteMeasure) -> Result<FiniteMeasure> {
    if !same_space(&nu.space, &f.source) {
        return Err(Error::invalid("measure does not live on the map's source"));
    }
    let mut weights = vec![0.0; f.target.len()];
    for (i, &w) in nu.weights.iter().enumerate() {
        weights[f.apply(i)] += w;
    }
    Ok(FiniteMeasure {
        space: f.target.clone(),
        weights,
    })
}

/// Half the L1 distance between the weight vectors: the total-variation
/// distance for equal-mass measures.
pub fn total_variation(nu1: &FiniteMeasure, nu2: &FiniteMeasure) -> Result<f64> {
    if !same_space(&nu1.space, &nu2.space) {
        return Err(Error::invalid("measures live on different spaces"));
    }
    let sum: f64 = nu1
        .weights
        .iter()
        .zip(&nu2.weights)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(0.5 * sum)
}

/// Whether mu(B and f^-1(B')) < eps, strictly.
pub fn sigma_generator_membership(
    f: &DiscreteMap,
    mu: &FiniteMeasure,
    b: &[usize],
    b_prime: &[usize],
    eps: f64,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if !same_space(&mu.space, &f.source) {
        return Err(Error::invalid("measure does not live on the map's source"));
    }
    let mut in_b = vec![false; f.source.len()];
    for &i in b {
        if i >= in_b.len() {
            return Err(Error::invalid(format!("source index {i} out of range")));
        }
        in_b[i] = true;
    }
    let mut in_b_prime = vec![false; f.target.len()];
    for &j in b_prime {
        if j >= in_b_prime.len() {
            return Err(Error::invalid(format!("target index {j} out of range")));
        }
        in_b_prime[j] = true;
    }
    let mass: f64 = (0..f.source.len())
        .filter(|&i| in_b[i] && in_b_prime[f.apply(i)])
        .map(|i| mu.weights[i])
        .sum();
    Ok(mass < eps)
}
