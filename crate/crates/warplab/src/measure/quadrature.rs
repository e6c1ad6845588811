//! Gauss-Legendre rules, computed by Newton iteration on the Legendre
//! recurrence and cached per order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

const NEWTON_TOLERANCE: f64 = 1e-15;
const NEWTON_ITERATIONS: usize = 100;

/// Nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GlRule {
    /// Integrate f over [a, b] with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Legendre P_n(x) and P_{n-1}(x) by the three-term recurrence.
fn legendre_pair(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn compute_rule(order: usize) -> Result<GlRule> {
    if order == 0 {
        return Err(Error::invalid("quadrature order must be at least 1"));
    }
    if order == 1 {
        return Ok(GlRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let n = order as f64;
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_ITERATIONS {
            let (p, p_prev) = legendre_pair(order, x);
            let dp = n * (x * p - p_prev) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() <= NEWTON_TOLERANCE {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence(format!(
                "Legendre root {i} of order {order} did not converge"
            )));
        }
        let (p, p_prev) = legendre_pair(order, x);
        let dp = n * (x * p - p_prev) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Roots come out in descending order; flip to ascending.
    nodes.reverse();
    weights.reverse();
    Ok(GlRule { nodes, weights })
}

/// Rule of the given order, from the process-wide cache.
pub fn gauss_legendre(order: usize) -> Result<Arc<GlRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let guard = cache.lock().expect("quadrature cache poisoned");
        if let Some(rule) = guard.get(&order) {
            return Ok(rule.clone());
        }
    }
    let rule = Arc::new(compute_rule(order)?);
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    Ok(guard.entry(order).or_insert(rule).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for order in [1usize, 2, 5, 16, 64, 256] {
            let rule = gauss_legendre(order).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() <= 1e-13, "order {order}: {total}");
        }
    }

    #[test]
    fn nodes_are_antisymmetric_and_sorted() {
        let rule = gauss_legendre(17).unwrap();
        for i in 0..17 {
            assert!((rule.nodes[i] + rule.nodes[16 - i]).abs() <= 1e-14);
            if i > 0 {
                assert!(rule.nodes[i] > rule.nodes[i - 1]);
            }
        }
    }

    #[test]
    fn order_n_is_exact_through_degree_2n_minus_1() {
        let rule = gauss_legendre(4).unwrap();
        // degree 7: odd power integrates to 0
        let odd = rule.integrate(-1.0, 1.0, |x| x.powi(7));
        assert!(odd.abs() <= 1e-14);
        // degree 6 over [-1,1] is 2/7
        let even = rule.integrate(-1.0, 1.0, |x| x.powi(6));
        assert!((even - 2.0 / 7.0).abs() <= 1e-14, "{even}");
    }

    #[test]
    fn gaussian_integral_matches_sqrt_pi() {
        let rule = gauss_legendre(64).unwrap();
        let v = rule.integrate(-8.0, 8.0, |x| (-x * x).exp());
        assert!((v - std::f64::consts::PI.sqrt()).abs() <= 1e-12, "{v}");
    }

    #[test]
    fn affine_rescaling_is_consistent() {
        let rule = gauss_legendre(8).unwrap();
        let v = rule.integrate(2.0, 5.0, |x| 3.0 * x * x);
        assert!((v - (125.0 - 8.0)).abs() <= 1e-11, "{v}");
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(gauss_legendre(0).is_err());
    }
}
