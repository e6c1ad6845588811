//! Finite metric spaces and coarse comparison quantities: distortion,
//! quasi-isometry constants, Hausdorff and Gromov-Hausdorff bounds.

pub mod mapspace;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::spaces::Net;
use crate::warped::WarpedLevel;
use rand::Rng;

const AXIOM_TOLERANCE: f64 = 1e-9;
/// Full triple check up to this size; larger spaces get sampled triples.
const FULL_TRIPLE_LIMIT: usize = 500;
const SAMPLED_TRIPLES: usize = 2_000_000;

/// A finite metric space given by its full distance matrix.
#[derive(Clone, Debug)]
pub struct FiniteMetricSpace {
    d: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Validates symmetry, vanishing diagonal, positivity, and the triangle
    /// inequality (to 1e-9; sampled for more than 500 points).
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "distance matrix row {i} has length {} in a {n}-point space",
                    row.len()
                )));
            }
        }
        for i in 0..n {
            if d[i][i] != 0.0 {
                return Err(Error::invalid(format!("nonzero self-distance at {i}")));
            }
            for j in (i + 1)..n {
                let v = d[i][j];
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::invalid(format!(
                        "distance between {i} and {j} must be positive and finite, got {v}"
                    )));
                }
                if (d[i][j] - d[j][i]).abs() > AXIOM_TOLERANCE {
                    return Err(Error::invalid(format!("asymmetric distances at ({i},{j})")));
                }
            }
        }
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            if d[i][j] > d[i][k] + d[k][j] + AXIOM_TOLERANCE {
                return Err(Error::invalid(format!(
                    "triangle inequality fails at ({i},{j},{k}): {} > {} + {}",
                    d[i][j], d[i][k], d[k][j]
                )));
            }
            Ok(())
        };
        if n <= FULL_TRIPLE_LIMIT {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = rng::stream(0x741913, 0);
            for _ in 0..SAMPLED_TRIPLES {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                let k = rng.gen_range(0..n);
                check(i, j, k)?;
            }
        }
        Ok(FiniteMetricSpace { d })
    }

    /// Distances of a warped level, unchecked re-validation skipped: shortest
    /// path closures satisfy the axioms by construction, but cheap to check.
    pub fn from_level(level: &WarpedLevel) -> Result<Self> {
        FiniteMetricSpace::new(level.rho.clone())
    }

    /// Geodesic distances between the points of a net.
    pub fn from_net(net: &Net) -> Result<Self> {
        let n = net.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = net.space.dist_unchecked(&net.points[i], &net.points[j]);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        FiniteMetricSpace::new(d)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn diameter(&self) -> f64 {
        self.d
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Restriction to a subset of indices (order preserved).
    pub fn subspace(&self, indices: &[usize]) -> Result<Self> {
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("subspace index {i} out of range")));
            }
        }
        let d = indices
            .iter()
            .map(|&i| indices.iter().map(|&j| self.d[i][j]).collect())
            .collect();
        FiniteMetricSpace::new(d)
    }

    /// Same point set with all distances multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid("rescale factor must be positive and finite"));
        }
        let d = self
            .d
            .iter()
            .map(|row| row.iter().map(|v| v * factor).collect())
            .collect();
        FiniteMetricSpace::new(d)
    }
}

/// A map between finite metric spaces, stored as an index assignment.
#[derive(Clone, Debug)]
pub struct DiscreteMap {
    pub source: Arc<FiniteMetricSpace>,
    pub target: Arc<FiniteMetricSpace>,
    pub assignment: Vec<usize>,
}

impl DiscreteMap {
    pub fn new(
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if assignment.len() != source.len() {
            return Err(Error::invalid(format!(
                "assignment length {} does not match source size {}",
                assignment.len(),
                source.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&y| y >= target.len()) {
            return Err(Error::invalid(format!("assignment value {bad} out of target range")));
        }
        Ok(DiscreteMap {
            source,
            target,
            assignment,
        })
    }

    pub fn apply(&self, i: usize) -> usize {
        self.assignment[i]
    }
}

/// Additive metric distortion: max |d_Y(f x, f x') - d_X(x, x')|.
pub fn distortion(map: &DiscreteMap) -> f64 {
    let n = map.source.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = map.source.dist(i, j);
            let dy = map.target.dist(map.assignment[i], map.assignment[j]);
            worst = worst.max((dy - dx).abs());
        }
    }
    worst
}

/// Largest target distance to the image: max_y min_x d_Y(y, f x).
pub fn density_defect(map: &DiscreteMap) -> f64 {
    let mut worst = 0.0f64;
    for y in 0..map.target.len() {
        let nearest = map
            .assignment
            .iter()
            .map(|&fx| map.target.dist(y, fx))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QiConstants {
    /// Multiplicative constant, minimal on a 1e-3 grid among those whose
    /// additive constant is within 1e-9 of the best achievable below the cap.
    pub k: f64,
    /// Additive constant at that K.
    pub c: f64,
    /// Density of the image in the target.
    pub c_dense: f64,
}

const K_GRID: f64 = 1e-3;
const C_SLACK: f64 = 1e-9;

/// Additive constant required at multiplicative constant `k`: the smallest C
/// with d_X/k - C <= d_Y <= k d_X + C over all pairs. Non-increasing in k.
pub fn additive_constant_at(map: &DiscreteMap, k: f64) -> f64 {
    let n = map.source.len();
    let mut c = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = map.source.dist(i, j);
            let dy = map.target.dist(map.assignment[i], map.assignment[j]);
            c = c.max(dy - k * dx).max(dx / k - dy);
        }
    }
    c.max(0.0)
}

/// Best quasi-isometry constants under a cap on K.
///
/// The additive constant is minimized first (it is monotone in K, so the
/// minimum over the grid sits at the cap), then the smallest grid K
/// achieving it within 1e-9 is located by bisection.
pub fn qi_constants(map: &DiscreteMap, k_cap: f64) -> Result<QiConstants> {
    if !(k_cap >= 1.0) || !k_cap.is_finite() {
        return Err(Error::invalid("K cap must be a finite value >= 1"));
    }
    if map.source.len() < 2 {
        return Ok(QiConstants {
            k: 1.0,
            c: 0.0,
            c_dense: density_defect(map),
        });
    }
    let steps = ((k_cap - 1.0) / K_GRID).floor() as usize;
    let k_at = |s: usize| 1.0 + s as f64 * K_GRID;
    let c_best = additive_constant_at(map, k_at(steps));
    let mut lo = 0usize; // first index with C <= c_best + slack may be above lo
    let mut hi = steps;
    if additive_constant_at(map, k_at(lo)) <= c_best + C_SLACK {
        hi = lo;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if additive_constant_at(map, k_at(mid)) <= c_best + C_SLACK {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let k = k_at(hi);
    Ok(QiConstants {
        k,
        c: additive_constant_at(map, k),
        c_dense: density_defect(map),
    })
}

/// How far the map is from a surjective isometry: max of distortion and
/// image density.
pub fn epsilon_isometry_defect(map: &DiscreteMap) -> f64 {
    distortion(map).max(density_defect(map))
}

/// Hausdorff distance between two index subsets of one space.
pub fn hausdorff_distance(space: &FiniteMetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty subset"));
    }
    for &i in a.iter().chain(b) {
        if i >= space.len() {
            return Err(Error::invalid(format!("subset index {i} out of range")));
        }
    }
    let side = |from: &[usize], to: &[usize]| -> f64 {
        from.iter()
            .map(|&i| {
                to.iter()
                    .map(|&j| space.dist(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(side(a, b).max(side(b, a)))
}

/// An upper bound on the Gromov-Hausdorff distance, exact when the
/// correspondence search completed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GhBound {
    pub value: f64,
    pub exact: bool,
}

/// Pairs: every x gets one partner and every y gets one partner; any
/// correspondence contains a sub-correspondence of this two-function shape
/// with no larger distortion, so searching these is enough for exactness.
struct CorrespondenceSearch<'a> {
    dx: &'a FiniteMetricSpace,
    dy: &'a FiniteMetricSpace,
    theta: f64,
    budget: usize,
}

impl<'a> CorrespondenceSearch<'a> {
    /// Some(true/false) when decided, None when the node budget ran out.
    fn feasible(&mut self, pairs: &mut Vec<(usize, usize)>, slot: usize) -> Option<bool> {
        let n = self.dx.len();
        let m = self.dy.len();
        if slot == n + m {
            return Some(true);
        }
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        let choices = if slot < n { m } else { n };
        for choice in 0..choices {
            let pair = if slot < n { (slot, choice) } else { (choice, slot - n) };
            let ok = pairs.iter().all(|&(x, y)| {
                (self.dx.dist(pair.0, x) - self.dy.dist(pair.1, y)).abs() <= self.theta
            });
            if !ok {
                continue;
            }
            pairs.push(pair);
            match self.feasible(pairs, slot + 1) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => {
                    pairs.pop();
                    return None;
                }
            }
            pairs.pop();
        }
        Some(false)
    }
}

const EXACT_GH_SIZE: usize = 8;
const GH_NODE_BUDGET: usize = 2_000_000;

fn correspondence_distortion(
    dx: &FiniteMetricSpace,
    dy: &FiniteMetricSpace,
    pairs: &[(usize, usize)],
) -> f64 {
    let mut dis = 0.0f64;
    for (a, &(x, y)) in pairs.iter().enumerate() {
        for &(x2, y2) in &pairs[a + 1..] {
            dis = dis.max((dx.dist(x, x2) - dy.dist(y, y2)).abs());
        }
    }
    dis
}

fn greedy_correspondence(dx: &FiniteMetricSpace, dy: &FiniteMetricSpace) -> Vec<(usize, usize)> {
    let n = dx.len();
    let m = dy.len();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n + m);
    let grown = |pairs: &[(usize, usize)], cand: (usize, usize)| -> f64 {
        pairs
            .iter()
            .map(|&(x, y)| (dx.dist(cand.0, x) - dy.dist(cand.1, y)).abs())
            .fold(0.0, f64::max)
    };
    for x in 0..n {
        let y = (0..m)
            .min_by(|&a, &b| grown(&pairs, (x, a)).total_cmp(&grown(&pairs, (x, b))))
            .unwrap();
        pairs.push((x, y));
    }
    for y in 0..m {
        let x = (0..n)
            .min_by(|&a, &b| grown(&pairs, (a, y)).total_cmp(&grown(&pairs, (b, y))))
            .unwrap();
        pairs.push((x, y));
    }
    // Single-slot replacement until no move lowers the distortion.
    for _ in 0..100 {
        let mut improved = false;
        let current = correspondence_distortion(dx, dy, &pairs);
        for slot in 0..pairs.len() {
            let fixed_side_is_x = slot < n;
            let choices = if fixed_side_is_x { m } else { n };
            let original = pairs[slot];
            for choice in 0..choices {
                pairs[slot] = if fixed_side_is_x {
                    (original.0, choice)
                } else {
                    (choice, original.1)
                };
                if correspondence_distortion(dx, dy, &pairs) < current {
                    improved = true;
                    break;
                }
                pairs[slot] = original;
            }
        }
        if !improved {
            break;
        }
    }
    pairs
}

/// Upper bound on the Gromov-Hausdorff distance between two finite spaces,
/// exact when |X| * |Y| fits in `budget`.
///
/// Exactness never extends past 8x8: the distortion of an optimal
/// correspondence is one of the values |d_X(i,j) - d_Y(k,l)|, and a
/// bisection over that candidate set with a depth-first feasibility check
/// finds the least achievable one, but the search tree grows too fast
/// beyond that size. Everything else gets a greedy correspondence improved
/// by local search; the result is a valid upper bound either way.
pub fn gh_distance_upper(
    dx: &FiniteMetricSpace,
    dy: &FiniteMetricSpace,
    budget: usize,
) -> Result<GhBound> {
    if dx.is_empty() || dy.is_empty() {
        return Err(Error::invalid("Gromov-Hausdorff distance of an empty space"));
    }
    if dx.len() * dy.len() <= budget && dx.len() <= EXACT_GH_SIZE && dy.len() <= EXACT_GH_SIZE {
        let mut candidates: Vec<f64> = Vec::with_capacity(dx.len().pow(2) * dy.len().pow(2));
        for i in 0..dx.len() {
            for j in 0..dx.len() {
                for k in 0..dy.len() {
                    for l in 0..dy.len() {
                        candidates.push((dx.dist(i, j) - dy.dist(k, l)).abs());
                    }
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let mut lo = 0usize;
        let mut hi = candidates.len() - 1; // max candidate always feasible
        let mut exact = true;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let mut search = CorrespondenceSearch {
                dx,
                dy,
                theta: candidates[mid],
                budget: GH_NODE_BUDGET,
            };
            match search.feasible(&mut Vec::new(), 0) {
                Some(true) => hi = mid,
                Some(false) => lo = mid + 1,
                None => {
                    exact = false;
                    break;
                }
            }
        }
        if exact {
            return Ok(GhBound {
                value: candidates[hi] / 2.0,
                exact: true,
            });
        }
    }
    let pairs = greedy_correspondence(dx, dy);
    Ok(GhBound {
        value: correspondence_distortion(dx, dy, &pairs) / 2.0,
        exact: false,
    })
}

/// Consecutive Gromov-Hausdorff upper bounds along a sequence of spaces.
pub fn gh_cauchy_diagnostic(spaces: &[FiniteMetricSpace], budget: usize) -> Result<Vec<GhBound>> {
    if spaces.len() < 2 {
        return Err(Error::invalid("Cauchy diagnostic needs at least two spaces"));
    }
    spaces
        .windows(2)
        .map(|w| gh_distance_upper(&w[0], &w[1], budget))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[&[f64]]) -> FiniteMetricSpace {
        FiniteMetricSpace::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn interval_space(points: &[f64]) -> FiniteMetricSpace {
        let d = points
            .iter()
            .map(|&a| points.iter().map(|&b| (a - b).abs()).collect())
            .collect();
        FiniteMetricSpace::new(d).unwrap()
    }

    #[test]
    fn axiom_violations_are_rejected() {
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::new(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::new(vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ])
        .is_err());
        assert!(FiniteMetricSpace::new(vec![vec![0.5]]).is_err());
    }

    #[test]
    fn identity_map_has_unit_constants() {
        let x = Arc::new(interval_space(&[0.0, 1.0, 2.5, 4.0]));
        let map = DiscreteMap::new(x.clone(), x.clone(), vec![0, 1, 2, 3]).unwrap();
        let qi = qi_constants(&map, 5.0).unwrap();
        assert_eq!(qi.k, 1.0);
        assert_eq!(qi.c, 0.0);
        assert_eq!(qi.c_dense, 0.0);
        assert_eq!(epsilon_isometry_defect(&map), 0.0);
    }

    #[test]
    fn doubling_map_needs_k_two() {
        let x = Arc::new(interval_space(&[0.0, 1.0, 2.0, 3.0]));
        let y = Arc::new(interval_space(&[0.0, 2.0, 4.0, 6.0]));
        let map = DiscreteMap::new(x, y, vec![0, 1, 2, 3]).unwrap();
        let qi = qi_constants(&map, 4.0).unwrap();
        assert!((qi.k - 2.0).abs() < 1e-9, "k = {}", qi.k);
        assert!(qi.c <= 1e-9);
        let dist = distortion(&map);
        assert!((dist - 3.0).abs() < 1e-12); // |6 - 3| at the far pair
    }

    #[test]
    fn bounded_noise_is_absorbed_multiplicatively() {
        // On bounded spaces the additive constant can always be traded for a
        // slightly larger K; the minimal-C rule therefore lands at C = 0 and
        // K = the worst pairwise ratio (1 / 0.8 here).
        let x = Arc::new(interval_space(&[0.0, 1.0, 2.0, 3.0]));
        let y = Arc::new(interval_space(&[0.0, 1.1, 1.9, 3.05]));
        let map = DiscreteMap::new(x, y, vec![0, 1, 2, 3]).unwrap();
        let qi = qi_constants(&map, 3.0).unwrap();
        assert!((qi.k - 1.25).abs() <= 1e-9, "k = {}", qi.k);
        assert!(qi.c <= 1e-9, "c = {}", qi.c);
    }

    #[test]
    fn random_five_to_seven_instance_matches_grid_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream(90210, 0);
        for trial in 0..8 {
            let mut xs: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..4.0)).collect();
            let mut ys: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..6.0)).collect();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            ys.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let x = Arc::new(interval_space(&xs));
            let y = Arc::new(interval_space(&ys));
            let assignment: Vec<usize> = (0..x.len()).map(|_| rng.gen_range(0..y.len())).collect();
            if assignment.windows(2).all(|w| w[0] == w[1]) {
                continue; // constant maps collapse distances to zero
            }
            let map = match DiscreteMap::new(x, y, assignment) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let cap = 20.0;
            let qi = qi_constants(&map, cap).unwrap();
            let steps = ((cap - 1.0) / 1e-3).floor() as usize;
            let c_best = additive_constant_at(&map, 1.0 + steps as f64 * 1e-3);
            let oracle_k = (0..=steps)
                .map(|s| 1.0 + s as f64 * 1e-3)
                .find(|&k| additive_constant_at(&map, k) <= c_best + 1e-9)
                .unwrap();
            assert_eq!(qi.k, oracle_k, "trial {trial}");
            assert_eq!(qi.c, additive_constant_at(&map, oracle_k), "trial {trial}");
        }
    }

    #[test]
    fn additive_constant_is_monotone_in_k() {
        let x = Arc::new(interval_space(&[0.0, 0.7, 1.9, 3.4]));
        let y = Arc::new(interval_space(&[0.0, 1.5, 3.1, 6.0]));
        let map = DiscreteMap::new(x, y, vec![0, 1, 2, 3]).unwrap();
        let mut prev = f64::INFINITY;
        for s in 0..2000 {
            let c = additive_constant_at(&map, 1.0 + s as f64 * 1e-3);
            assert!(c <= prev + 1e-12);
            prev = c;
        }
    }

    #[test]
    fn qi_constants_match_exhaustive_grid() {
        let x = Arc::new(interval_space(&[0.0, 0.9, 2.2]));
        let y = Arc::new(interval_space(&[0.0, 1.7, 4.1]));
        let map = DiscreteMap::new(x, y, vec![0, 1, 2]).unwrap();
        let cap = 3.0;
        let qi = qi_constants(&map, cap).unwrap();
        // Oracle: scan the full grid with the same selection rule.
        let steps = ((cap - 1.0) / 1e-3).floor() as usize;
        let c_best = additive_constant_at(&map, 1.0 + steps as f64 * 1e-3);
        let mut best_k = None;
        for s in 0..=steps {
            let k = 1.0 + s as f64 * 1e-3;
            if additive_constant_at(&map, k) <= c_best + 1e-9 {
                best_k = Some(k);
                break;
            }
        }
        assert_eq!(qi.k, best_k.unwrap());
    }

    #[test]
    fn hausdorff_of_nested_subsets() {
        let x = interval_space(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let h = hausdorff_distance(&x, &[0, 1, 2, 3, 4], &[0, 4]).unwrap();
        assert_eq!(h, 2.0);
        let same = hausdorff_distance(&x, &[1, 3], &[1, 3]).unwrap();
        assert_eq!(same, 0.0);
    }

    #[test]
    fn gh_of_identical_spaces_is_zero() {
        let x = interval_space(&[0.0, 1.0, 2.0, 4.5]);
        let b = gh_distance_upper(&x, &x, 64).unwrap();
        assert!(b.exact);
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn gh_to_a_point_is_half_diameter() {
        let x = interval_space(&[0.0, 1.0, 3.0]);
        let pt = FiniteMetricSpace::new(vec![vec![0.0]]).unwrap();
        let b = gh_distance_upper(&x, &pt, 64).unwrap();
        assert!(b.exact);
        assert_eq!(b.value, 1.5);
    }

    #[test]
    fn gh_between_two_point_spaces() {
        let x = interval_space(&[0.0, 2.0]);
        let y = interval_space(&[0.0, 5.0]);
        let b = gh_distance_upper(&x, &y, 64).unwrap();
        assert!(b.exact);
        assert_eq!(b.value, 1.5);
    }

    #[test]
    fn exact_gh_matches_full_enumeration() {
        let xs = [
            interval_space(&[0.0, 1.0, 2.0, 3.3]),
            interval_space(&[0.0, 0.4, 2.9]),
            space(&[
                &[0.0, 1.0, 1.0, 1.0],
                &[1.0, 0.0, 1.0, 1.0],
                &[1.0, 1.0, 0.0, 1.0],
                &[1.0, 1.0, 1.0, 0.0],
            ]),
        ];
        let ys = [
            interval_space(&[0.0, 1.5, 2.0]),
            space(&[&[0.0, 2.0, 2.0], &[2.0, 0.0, 2.0], &[2.0, 2.0, 0.0]]),
        ];
        for dx in &xs {
            for dy in &ys {
                let engine = gh_distance_upper(dx, dy, 64).unwrap();
                assert!(engine.exact);
                let oracle = brute_force_gh(dx, dy);
                assert!(
                    (engine.value - oracle).abs() <= 1e-12,
                    "engine {} oracle {}",
                    engine.value,
                    oracle
                );
            }
        }
    }

    /// Enumerates every pair of functions f: X -> Y, g: Y -> X and takes the
    /// least distortion of the induced correspondence.
    fn brute_force_gh(dx: &FiniteMetricSpace, dy: &FiniteMetricSpace) -> f64 {
        let n = dx.len();
        let m = dy.len();
        let mut best = f64::INFINITY;
        let total_f = m.pow(n as u32);
        let total_g = n.pow(m as u32);
        for fi in 0..total_f {
            let mut f = Vec::with_capacity(n);
            let mut rem = fi;
            for _ in 0..n {
                f.push(rem % m);
                rem /= m;
            }
            for gi in 0..total_g {
                let mut g = Vec::with_capacity(m);
                let mut rem = gi;
                for _ in 0..m {
                    g.push(rem % n);
                    rem /= n;
                }
                let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n + m);
                pairs.extend(f.iter().enumerate().map(|(x, &y)| (x, y)));
                pairs.extend(g.iter().enumerate().map(|(y, &x)| (x, y)));
                best = best.min(correspondence_distortion(dx, dy, &pairs));
            }
        }
        best / 2.0
    }

    #[test]
    fn large_space_bound_is_valid_and_marked_inexact() {
        let pts: Vec<f64> = (0..12).map(|i| i as f64 * 0.8).collect();
        let x = interval_space(&pts);
        let shifted: Vec<f64> = pts.iter().map(|p| p * 1.05).collect();
        let y = interval_space(&shifted);
        let b = gh_distance_upper(&x, &y, 64).unwrap();
        assert!(!b.exact);
        // identity correspondence gives distortion 0.05 * diam = 0.44
        assert!(b.value <= 0.23, "bound {}", b.value);
        assert!(b.value >= 0.0);
    }

    #[test]
    fn cauchy_diagnostic_decreases_for_converging_sequence() {
        let spaces: Vec<FiniteMetricSpace> = (1..=4)
            .map(|k| {
                let scale = 1.0 + 1.0 / (k as f64 * k as f64);
                interval_space(&[0.0, scale, 2.0 * scale, 3.0 * scale])
            })
            .collect();
        let diag = gh_cauchy_diagnostic(&spaces, 64).unwrap();
        assert_eq!(diag.len(), 3);
        for w in diag.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-12);
        }
    }

    #[test]
    fn rescale_and_subspace_compose() {
        let x = interval_space(&[0.0, 1.0, 2.0, 3.0]);
        let sub = x.subspace(&[0, 2, 3]).unwrap();
        assert_eq!(sub.dist(0, 1), 2.0);
        let scaled = sub.rescaled(0.5).unwrap();
        assert_eq!(scaled.dist(0, 1), 1.0);
    }
}
