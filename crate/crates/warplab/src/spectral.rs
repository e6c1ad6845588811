//! Second eigenvalue of the normalized graph Laplacian.
//!
//! The gap is computed by power iteration on `M = 2I - L`, whose spectrum is
//! `2 - lambda_i` in [0, 2]. The top eigenvector of `M` is known in closed
//! form (sqrt of the degrees), so iterates are kept orthogonal to it and the
//! iteration converges to `2 - lambda_2`. No dense eigensolver dependency
//! for what is a single extremal eigenvalue.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

const MAX_ITERATIONS: usize = 100_000;
const RELATIVE_TOLERANCE: f64 = 1e-9;

/// lambda_2 of the normalized Laplacian. Zero for disconnected graphs and
/// for graphs with fewer than two vertices.
pub fn spectral_gap(g: &Graph) -> Result<f64> {
    let n = g.vertex_count();
    if n <= 1 || !g.is_connected() {
        return Ok(0.0);
    }
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();

    // Top eigenvector of M: proportional to sqrt(deg).
    let mut v1: Vec<f64> = (0..n).map(|v| (g.degree(v) as f64).sqrt()).collect();
    normalize(&mut v1);

    let mut rng = rng::stream(0x5eed_1ab5, 0);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project_out(&mut v, &v1);
    normalize(&mut v);

    let mut mu_prev = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let mut w = vec![0.0f64; n];
        for i in 0..n {
            let mut acc = 0.0;
            for &j in g.neighbors(i) {
                acc += v[j as usize] * inv_sqrt_deg[j as usize];
            }
            w[i] = v[i] + acc * inv_sqrt_deg[i];
        }
        project_out(&mut w, &v1);
        let mu: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            // v was (numerically) in the top eigenspace only; gap is 2.
            return Ok(2.0);
        }
        v = w;
        if mu_prev.is_finite() && (mu - mu_prev).abs() <= RELATIVE_TOLERANCE * mu.abs().max(1.0) {
            return Ok((2.0 - mu).max(0.0));
        }
        mu_prev = mu;
    }
    Err(Error::Convergence(format!(
        "power iteration did not settle within {MAX_ITERATIONS} steps (n = {n})"
    )))
}

fn project_out(v: &mut [f64], unit: &[f64]) {
    let dot: f64 = v.iter().zip(unit).map(|(a, b)| a * b).sum();
    for (x, u) in v.iter_mut().zip(unit) {
        *x -= dot * u;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}
