//! Gaussian-increment cylinder measures on chart grids.
//!
//! A `Partition` fixes a grid 0 <= x_1^p <= ... <= x_{k_p}^p = a per
//! coordinate of a symmetric cube, together with an abstract measure per
//! grid cell. A field value at a gridpoint is a scalar; a `CylinderSet`
//! constrains each gridpoint value to an interval, and its measure is
//!
//!   K(P) * integral over the intervals of exp(-W(P, u))
//!
//! where W sums squared m-fold increment differences weighted by inverse
//! cell measures. The constant K comes in two flavours: the source text's
//! formula uses pi^k, which does not normalize the Gaussian factors (their
//! masses are sqrt(pi * mu)), so total mass is not 1 as written. Both modes
//! are implemented; `UnitMass` is what the experiments use.

use crate::error::{Error, Result};
use crate::groups::GroupElement;
use crate::measure::quadrature::gauss_legendre;
use crate::par;
use crate::rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Relative tolerance for the adaptive quadrature loop.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Absolute floor so near-zero integrals can still converge relatively.
const QUADRATURE_FLOOR: f64 = 1e-12;
/// Quadrature orders tried in turn until two consecutive values agree.
const QUADRATURE_ORDERS: [usize; 6] = [8, 16, 32, 64, 128, 256];
/// Unbounded integration windows are cut at this many marginal deviations;
/// the discarded tail is below 1e-14 of the mass.
const TAIL_DEVIATIONS: f64 = 8.0;

/// Which constant multiplies the Gaussian integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizationMode {
    /// 1 / (pi^k * sqrt(prod mu)): the formula as printed.
    AsWritten,
    /// prod (pi * mu)^(-1/2): each increment factor integrates to 1.
    UnitMass,
}

/// Grid on one quadrant of the symmetric cube, with a measure per cell.
///
/// `gamma` and `quadrant` tag which component of a cylinder set this grid
/// describes; they do not enter the measure formulas.
#[derive(Clone, Debug)]
pub struct Partition {
    pub gamma: GroupElement,
    pub quadrant: Vec<i8>,
    pub breakpoints: Vec<Vec<f64>>,
    pub cell_measures: Vec<f64>,
}

impl Partition {
    pub fn new(
        gamma: GroupElement,
        quadrant: Vec<i8>,
        breakpoints: Vec<Vec<f64>>,
        cell_measures: Vec<f64>,
    ) -> Result<Self> {
        let m = quadrant.len();
        if m == 0 {
            return Err(Error::invalid("partition needs at least one coordinate"));
        }
        if quadrant.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("quadrant signs must be +1 or -1"));
        }
        if breakpoints.len() != m {
            return Err(Error::invalid(format!(
                "expected {} breakpoint lists, got {}",
                m,
                breakpoints.len()
            )));
        }
        let mut halfside = None;
        for axis in &breakpoints {
            if axis.is_empty() {
                return Err(Error::invalid("each coordinate needs a breakpoint"));
            }
            if axis.iter().any(|x| !x.is_finite() || !(*x >= 0.0)) {
                return Err(Error::invalid("breakpoints must be finite and non-negative"));
            }
            if axis.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid("breakpoints must be sorted"));
            }
            let last = *axis.last().expect("non-empty");
            // every axis ends at the shared cube half-side
            match halfside {
                None => halfside = Some(last),
                Some(a) if a == last => {}
                Some(a) => {
                    return Err(Error::invalid(format!(
                        "axes end at different half-sides: {a} vs {last}"
                    )));
                }
            }
        }
        if !(halfside.expect("m >= 1") > 0.0) {
            return Err(Error::invalid("cube half-side must be positive"));
        }
        let cells: usize = breakpoints.iter().map(|axis| axis.len()).product();
        if cell_measures.len() != cells {
            return Err(Error::invalid(format!(
                "expected {} cell measures, got {}",
                cells,
                cell_measures.len()
            )));
        }
        if cell_measures.iter().any(|s| !s.is_finite() || !(*s >= 0.0)) {
            return Err(Error::invalid("cell measures must be finite and non-negative"));
        }
        Ok(Partition { gamma, quadrant, breakpoints, cell_measures })
    }

    /// Number of grid coordinates.
    pub fn m(&self) -> usize {
        self.quadrant.len()
    }

    /// Gridpoints per coordinate.
    pub fn counts(&self) -> Vec<usize> {
        self.breakpoints.iter().map(|axis| axis.len()).collect()
    }

    /// Total number of gridpoints (= cells).
    pub fn cell_count(&self) -> usize {
        self.breakpoints.iter().map(|axis| axis.len()).product()
    }

    /// Shared cube half-side a.
    pub fn halfside(&self) -> f64 {
        *self.breakpoints[0].last().expect("validated non-empty")
    }

    /// Row-major position of a 1-based multi-index.
    pub fn cell_index(&self, q: &[usize]) -> Result<usize> {
        if q.len() != self.m() {
            return Err(Error::invalid(format!(
                "multi-index has {} coordinates, grid has {}",
                q.len(),
                self.m()
            )));
        }
        let mut idx = 0;
        for (p, &qp) in q.iter().enumerate() {
            let kp = self.breakpoints[p].len();
            if qp == 0 || qp > kp {
                return Err(Error::invalid(format!(
                    "coordinate {} of multi-index out of range: {} not in 1..={}",
                    p, qp, kp
                )));
            }
            idx = idx * kp + (qp - 1);
        }
        Ok(idx)
    }

    fn require_positive_measures(&self) -> Result<()> {
        if self.cell_measures.contains(&0.0) {
            return Err(Error::invalid("zero cell measure makes the Gaussian weight singular"));
        }
        Ok(())
    }

    /// Marginal variance of the field value at each gridpoint: increments
    /// are independent with variance mu/2, and a value sums the increments
    /// of every cell dominated by it.
    fn value_variances(&self) -> Vec<f64> {
        let counts = self.counts();
        let mut acc: Vec<f64> = self.cell_measures.iter().map(|s| 0.5 * s).collect();
        prefix_sums(&mut acc, &counts);
        acc
    }
}

/// Visit every 1-based multi-index of the grid in row-major order.
fn for_each_index(counts: &[usize], mut f: impl FnMut(&[usize])) {
    let mut q = vec![1usize; counts.len()];
    loop {
        f(&q);
        let mut axis = counts.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if q[axis] < counts[axis] {
                q[axis] += 1;
                break;
            }
            q[axis] = 1;
        }
    }
}

/// In-place m-dimensional prefix sums over a row-major grid.
fn prefix_sums(values: &mut [f64], counts: &[usize]) {
    let m = counts.len();
    let mut stride = vec![1usize; m];
    for p in (0..m.saturating_sub(1)).rev() {
        stride[p] = stride[p + 1] * counts[p + 1];
    }
    for p in 0..m {
        // row-major order guarantees the predecessor along axis p is done
        let mut q = vec![1usize; m];
        let mut idx = 0;
        'sweep: loop {
            if q[p] > 1 {
                values[idx] += values[idx - stride[p]];
            }
            let mut axis = m;
            loop {
                if axis == 0 {
                    break 'sweep;
                }
                axis -= 1;
                if q[axis] < counts[axis] {
                    q[axis] += 1;
                    idx += stride[axis];
                    break;
                }
                idx -= (q[axis] - 1) * stride[axis];
                q[axis] = 1;
            }
        }
    }
}

/// Half-side of the maximum-volume symmetric cube inside the radius-r ball.
pub fn max_cube_halfside(r: f64, m: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("cube radius must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("cube dimension must be positive"));
    }
    Ok(r / (m as f64).sqrt())
}

/// m-fold alternating difference of a grid function at a 1-based
/// multi-index, with u = 0 whenever any coordinate hits 0.
pub fn delta_difference(partition: &Partition, u: &[f64], q: &[usize]) -> Result<f64> {
    let m = partition.m();
    if u.len() != partition.cell_count() {
        return Err(Error::invalid(format!(
            "grid function has {} values, grid has {}",
            u.len(),
            partition.cell_count()
        )));
    }
    partition.cell_index(q)?;
    let mut total = 0.0;
    let mut shifted = vec![0usize; m];
    for mask in 0u32..(1 << m) {
        let mut on_boundary = false;
        for p in 0..m {
            let drop = (mask >> p) & 1 == 1;
            let qp = q[p] - usize::from(drop);
            if qp == 0 {
                on_boundary = true;
                break;
            }
            shifted[p] = qp;
        }
        if on_boundary {
            continue;
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * u[partition.cell_index(&shifted)?];
    }
    Ok(total)
}

/// The constant in front of the Gaussian integral.
pub fn normalization_constant(partition: &Partition, mode: NormalizationMode) -> Result<f64> {
    partition.require_positive_measures()?;
    let k = partition.cell_count();
    match mode {
        NormalizationMode::AsWritten => {
            let product: f64 = partition.cell_measures.iter().product();
            Ok(1.0 / (PI.powi(k as i32) * product.sqrt()))
        }
        NormalizationMode::UnitMass => {
            Ok(partition.cell_measures.iter().map(|s| 1.0 / (PI * s).sqrt()).product())
        }
    }
}

/// Quadratic energy: sum over gridpoints of delta(q)^2 / mu(S(q)).
pub fn energy_w(partition: &Partition, u: &[f64]) -> Result<f64> {
    partition.require_positive_measures()?;
    if u.len() != partition.cell_count() {
        return Err(Error::invalid(format!(
            "grid function has {} values, grid has {}",
            u.len(),
            partition.cell_count()
        )));
    }
    let counts = partition.counts();
    let mut total = 0.0;
    let mut failure = None;
    let mut idx = 0;
    for_each_index(&counts, |q| {
        if failure.is_some() {
            return;
        }
        match delta_difference(partition, u, q) {
            Ok(d) => {
                total += d * d / partition.cell_measures[idx];
                idx += 1;
            }
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Closed interval constraint on one gridpoint value; infinite ends allowed.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::invalid("interval bound is NaN"));
        }
        if lo > hi {
            return Err(Error::invalid(format!("empty interval: [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn full_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }
}

/// One (anchor, quadrant) component: a grid plus a window per gridpoint.
#[derive(Clone, Debug)]
pub struct CylinderComponent {
    pub partition: Partition,
    pub rectangles: Vec<Interval>,
}

impl CylinderComponent {
    pub fn new(partition: Partition, rectangles: Vec<Interval>) -> Result<Self> {
        if rectangles.len() != partition.cell_count() {
            return Err(Error::invalid(format!(
                "expected {} rectangles, got {}",
                partition.cell_count(),
                rectangles.len()
            )));
        }
        Ok(CylinderComponent { partition, rectangles })
    }
}

/// Disjoint union of components; its measure is the plain sum.
#[derive(Clone, Debug)]
pub struct CylinderSet {
    pub components: Vec<CylinderComponent>,
}

impl CylinderSet {
    pub fn new(components: Vec<CylinderComponent>) -> Self {
        CylinderSet { components }
    }
}

/// Tensor Gauss-Legendre pass at a fixed order over truncated windows.
fn tensor_pass<D: Fn(f64) -> f64 + Sync>(
    partition: &Partition,
    windows: &[(f64, f64)],
    order: usize,
    density: &D,
) -> Result<f64> {
    let rule = gauss_legendre(order)?;
    let k = windows.len();
    // per-axis affine images of the reference nodes
    let scaled: Vec<(Vec<f64>, Vec<f64>)> = windows
        .iter()
        .map(|&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let nodes: Vec<f64> = rule.nodes.iter().map(|x| mid + half * x).collect();
            let weights: Vec<f64> = rule.weights.iter().map(|w| half * w).collect();
            (nodes, weights)
        })
        .collect();
    let counts = partition.counts();
    let measures = &partition.cell_measures;
    let m = partition.m();
    // gridpoint multi-indices once, in row-major (value-vector) order
    let mut grid_order = Vec::with_capacity(k);
    for_each_index(&counts, |q| grid_order.push(q.to_vec()));
    let evaluate = |point: &[f64]| -> f64 {
        let mut w = 0.0;
        for (idx, q) in grid_order.iter().enumerate() {
            let mut delta = 0.0;
            let mut shifted = vec![0usize; m];
            for mask in 0u32..(1 << m) {
                let mut on_boundary = false;
                for p in 0..m {
                    let drop = (mask >> p) & 1 == 1;
                    let qp = q[p] - usize::from(drop);
                    if qp == 0 {
                        on_boundary = true;
                        break;
                    }
                    shifted[p] = qp;
                }
                if on_boundary {
                    continue;
                }
                let mut pos = 0;
                for p in 0..m {
                    pos = pos * counts[p] + (shifted[p] - 1);
                }
                let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                delta += sign * point[pos];
            }
            w += delta * delta / measures[idx];
        }
        let mut dens = 1.0;
        for &v in point {
            dens *= density(v);
        }
        (-w).exp() * dens
    };
    let outer = scaled[0].0.len();
    let partials = par::map_indexed(outer, |i| {
        let mut point = vec![0.0; k];
        point[0] = scaled[0].0[i];
        if k == 1 {
            return scaled[0].1[i] * evaluate(&point);
        }
        let mut acc = 0.0;
        let mut odo = vec![0usize; k - 1];
        loop {
            let mut weight = scaled[0].1[i];
            for axis in 1..k {
                point[axis] = scaled[axis].0[odo[axis - 1]];
                weight *= scaled[axis].1[odo[axis - 1]];
            }
            acc += weight * evaluate(&point);
            let mut axis = k - 1;
            loop {
                if axis == 1 {
                    if odo[0] + 1 < order {
                        odo[0] += 1;
                        break;
                    }
                    return acc;
                }
                if odo[axis - 1] + 1 < order {
                    odo[axis - 1] += 1;
                    break;
                }
                odo[axis - 1] = 0;
                axis -= 1;
            }
        }
    });
    Ok(partials.iter().sum())
}

fn component_measure<D: Fn(f64) -> f64 + Sync>(
    component: &CylinderComponent,
    mode: NormalizationMode,
    density: &D,
) -> Result<f64> {
    let partition = &component.partition;
    let constant = normalization_constant(partition, mode)?;
    let variances = partition.value_variances();
    let mut windows = Vec::with_capacity(component.rectangles.len());
    for (rect, var) in component.rectangles.iter().zip(&variances) {
        let cut = TAIL_DEVIATIONS * var.sqrt();
        let lo = rect.lo.max(-cut);
        let hi = rect.hi.min(cut);
        if !(lo < hi) {
            // window degenerate or entirely in the discarded tail
            return Ok(0.0);
        }
        windows.push((lo, hi));
    }
    let mut previous: Option<f64> = None;
    for order in QUADRATURE_ORDERS {
        let value = tensor_pass(partition, &windows, order, density)?;
        if let Some(prev) = previous {
            let scale: f64 = value.abs().max(QUADRATURE_FLOOR);
            if (value - prev).abs() <= QUADRATURE_TOLERANCE * scale {
                return Ok(constant * value);
            }
        }
        previous = Some(value);
    }
    Err(Error::Convergence(format!(
        "cylinder quadrature still moving at order {}",
        QUADRATURE_ORDERS[QUADRATURE_ORDERS.len() - 1]
    )))
}

/// Measure of a cylinder set: sum over components of K * int_E exp(-W) with
/// the supplied pointwise target density.
pub fn cylinder_measure<D: Fn(f64) -> f64 + Sync>(
    set: &CylinderSet,
    mode: NormalizationMode,
    density: &D,
) -> Result<f64> {
    let mut total = 0.0;
    for component in &set.components {
        total += component_measure(component, mode, density)?;
    }
    Ok(total)
}

/// Draw one grid function from the increment law exp(-delta^2 / mu):
/// independent increments Normal(0, mu/2), accumulated by prefix sums.
/// Deterministic per seed.
pub fn sample_field(partition: &Partition, seed: u64) -> Result<Vec<f64>> {
    let counts = partition.counts();
    let mut rng = rng::stream(seed, 0);
    let mut values = Vec::with_capacity(partition.cell_count());
    for &s in &partition.cell_measures {
        let normal = Normal::new(0.0, (0.5 * s).sqrt())
            .map_err(|e| Error::invalid(format!("increment law: {e}")))?;
        values.push(normal.sample(&mut rng));
    }
    prefix_sums(&mut values, &counts);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn line_partition(breakpoints: Vec<f64>, measures: Vec<f64>) -> Partition {
        Partition::new(GroupElement::identity(), vec![1], vec![breakpoints], measures).unwrap()
    }

    #[test]
    fn cube_halfside_closed_forms() {
        assert_eq!(max_cube_halfside(3.5, 1).unwrap(), 3.5);
        assert!((max_cube_halfside(1.0, 2).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((max_cube_halfside(2.0, 4).unwrap() - 1.0).abs() < 1e-15);
        assert!(max_cube_halfside(0.0, 1).is_err());
        assert!(max_cube_halfside(1.0, 0).is_err());
    }

    #[test]
    fn partition_validation_rejects_malformed_grids() {
        let e = GroupElement::identity;
        assert!(Partition::new(e(), vec![], vec![], vec![]).is_err());
        assert!(Partition::new(e(), vec![2], vec![vec![1.0]], vec![1.0]).is_err());
        assert!(Partition::new(e(), vec![1], vec![vec![2.0, 1.0]], vec![1.0, 1.0]).is_err());
        // axes must share the half-side
        assert!(Partition::new(
            e(),
            vec![1, -1],
            vec![vec![1.0], vec![2.0]],
            vec![1.0]
        )
        .is_err());
        assert!(Partition::new(e(), vec![1], vec![vec![1.0]], vec![-0.5]).is_err());
        assert!(Partition::new(e(), vec![1], vec![vec![1.0]], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn delta_of_a_constant_line_function() {
        let p = line_partition(vec![0.5, 1.0, 1.5, 2.0], vec![1.0; 4]);
        let u = vec![3.25; 4];
        // boundary zero makes the first difference the value itself
        assert_eq!(delta_difference(&p, &u, &[1]).unwrap(), 3.25);
        for q in 2..=4 {
            assert_eq!(delta_difference(&p, &u, &[q]).unwrap(), 0.0);
        }
    }

    #[test]
    fn deltas_telescope_back_to_the_function() {
        // integer-valued grids keep every sum exact in floating point
        let mut rng = rng::stream(0xce11, 0);
        for _ in 0..20 {
            let k1 = rng.gen_range(1..=3);
            let k2 = rng.gen_range(1..=3);
            // integer multiples so both axes end at exactly k1*k2
            let bp1: Vec<f64> = (1..=k1).map(|i| (i * k2) as f64).collect();
            let bp2: Vec<f64> = (1..=k2).map(|j| (j * k1) as f64).collect();
            let p = Partition::new(
                GroupElement::identity(),
                vec![1, -1],
                vec![bp1, bp2],
                vec![1.0; k1 * k2],
            )
            .unwrap();
            let u: Vec<f64> = (0..k1 * k2).map(|_| rng.gen_range(-9i32..=9) as f64).collect();
            for q1 in 1..=k1 {
                for q2 in 1..=k2 {
                    let mut total = 0.0;
                    for r1 in 1..=q1 {
                        for r2 in 1..=q2 {
                            total += delta_difference(&p, &u, &[r1, r2]).unwrap();
                        }
                    }
                    let direct = u[p.cell_index(&[q1, q2]).unwrap()];
                    assert_eq!(total, direct, "telescoping at ({q1},{q2})");
                }
            }
        }
    }

    #[test]
    fn delta_of_zero_is_zero() {
        let p = Partition::new(
            GroupElement::identity(),
            vec![1, 1],
            vec![vec![1.0, 2.0], vec![2.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let u = vec![0.0, 0.0];
        for q1 in 1..=2 {
            assert_eq!(delta_difference(&p, &u, &[q1, 1]).unwrap(), 0.0);
        }
    }

    #[test]
    fn value_variances_accumulate_over_every_axis() {
        // integer halves make the rectangle sums exact regardless of order
        let p = Partition::new(
            GroupElement::identity(),
            vec![1, -1],
            vec![vec![1.0, 2.0, 6.0], vec![3.0, 6.0]],
            vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
        )
        .unwrap();
        // Var u(q) sums mu/2 over the full rectangle below q, not one axis
        assert_eq!(p.value_variances(), vec![1.0, 3.0, 4.0, 10.0, 9.0, 21.0]);
    }

    #[test]
    fn normalization_closed_forms() {
        let single = line_partition(vec![1.0], vec![1.0]);
        assert_eq!(
            normalization_constant(&single, NormalizationMode::AsWritten).unwrap(),
            1.0 / PI
        );
        assert!(
            (normalization_constant(&single, NormalizationMode::UnitMass).unwrap()
                - 1.0 / PI.sqrt())
            .abs()
                < 1e-15
        );
        let double = line_partition(vec![0.5, 1.0], vec![1.0, 1.0]);
        assert!(
            (normalization_constant(&double, NormalizationMode::UnitMass).unwrap() - 1.0 / PI)
                .abs()
                < 1e-15
        );
        let degenerate = line_partition(vec![0.5, 1.0], vec![0.0, 1.0]);
        assert!(normalization_constant(&degenerate, NormalizationMode::AsWritten).is_err());
    }

    #[test]
    fn energy_closed_forms() {
        let single = line_partition(vec![1.0], vec![0.7]);
        assert_eq!(energy_w(&single, &[0.0]).unwrap(), 0.0);
        let a: f64 = 1.3;
        assert!((energy_w(&single, &[a]).unwrap() - a * a / 0.7).abs() < 1e-15);
        let double = line_partition(vec![0.5, 1.0], vec![0.4, 0.9]);
        let b: f64 = -0.2;
        let expected = a * a / 0.4 + (b - a) * (b - a) / 0.9;
        assert!((energy_w(&double, &[a, b]).unwrap() - expected).abs() < 1e-12);
    }

    fn full_line_set(partition: Partition) -> CylinderSet {
        let k = partition.cell_count();
        CylinderSet::new(vec![
            CylinderComponent::new(partition, vec![Interval::full_line(); k]).unwrap(),
        ])
    }

    #[test]
    fn unit_mass_mode_integrates_to_one() {
        let uniform = |_: f64| 1.0;
        let cases = vec![
            line_partition(vec![1.0], vec![1.0]),
            line_partition(vec![0.4, 1.0], vec![0.8, 0.5]),
            line_partition(vec![0.3, 0.7, 1.0], vec![0.6, 1.1, 0.25]),
            Partition::new(
                GroupElement::identity(),
                vec![1, -1],
                vec![vec![0.5, 1.0], vec![0.25, 1.0]],
                vec![0.9, 0.4, 1.2, 0.7],
            )
            .unwrap(),
        ];
        for p in cases {
            let mass =
                cylinder_measure(&full_line_set(p), NormalizationMode::UnitMass, &uniform)
                    .unwrap();
            assert!((mass - 1.0).abs() <= 1e-6, "mass {mass}");
        }
    }

    #[test]
    fn half_line_is_half_the_mass() {
        let p = line_partition(vec![1.0], vec![1.0]);
        let set = CylinderSet::new(vec![CylinderComponent::new(
            p,
            vec![Interval::new(0.0, f64::INFINITY).unwrap()],
        )
        .unwrap()]);
        let mass = cylinder_measure(&set, NormalizationMode::UnitMass, &|_| 1.0).unwrap();
        assert!((mass - 0.5).abs() <= 1e-6, "mass {mass}");
    }

    #[test]
    fn as_written_mode_exhibits_the_mass_discrepancy() {
        let p = line_partition(vec![1.0], vec![1.0]);
        let mass =
            cylinder_measure(&full_line_set(p), NormalizationMode::AsWritten, &|_| 1.0).unwrap();
        assert!((mass - 1.0 / PI.sqrt()).abs() <= 1e-6, "mass {mass}");
    }

    #[test]
    fn refining_a_cell_preserves_cylinder_measure() {
        // split the first cell and marginalize the new gridpoint
        let coarse = line_partition(vec![0.5, 1.0], vec![0.3, 0.7]);
        let windows = vec![
            Interval::new(-0.4, 0.9).unwrap(),
            Interval::new(-1.2, 0.3).unwrap(),
        ];
        let coarse_set =
            CylinderSet::new(vec![CylinderComponent::new(coarse, windows.clone()).unwrap()]);
        let fine = line_partition(vec![0.25, 0.5, 1.0], vec![0.12, 0.18, 0.7]);
        let fine_set = CylinderSet::new(vec![CylinderComponent::new(
            fine,
            vec![Interval::full_line(), windows[0], windows[1]],
        )
        .unwrap()]);
        let uniform = |_: f64| 1.0;
        let a = cylinder_measure(&coarse_set, NormalizationMode::UnitMass, &uniform).unwrap();
        let b = cylinder_measure(&fine_set, NormalizationMode::UnitMass, &uniform).unwrap();
        assert!((a - b).abs() <= 1e-6, "coarse {a} fine {b}");

        let coarse2 = Partition::new(
            GroupElement::identity(),
            vec![1, 1],
            vec![vec![1.0], vec![0.5, 1.0]],
            vec![0.45, 0.85],
        )
        .unwrap();
        let w2 = vec![Interval::new(-0.8, 0.6).unwrap(), Interval::new(-0.1, 1.4).unwrap()];
        let coarse2_set =
            CylinderSet::new(vec![CylinderComponent::new(coarse2, w2.clone()).unwrap()]);
        let fine2 = Partition::new(
            GroupElement::identity(),
            vec![1, 1],
            vec![vec![1.0], vec![0.2, 0.5, 1.0]],
            vec![0.2, 0.25, 0.85],
        )
        .unwrap();
        let fine2_set = CylinderSet::new(vec![CylinderComponent::new(
            fine2,
            vec![Interval::full_line(), w2[0], w2[1]],
        )
        .unwrap()]);
        let a2 = cylinder_measure(&coarse2_set, NormalizationMode::UnitMass, &uniform).unwrap();
        let b2 = cylinder_measure(&fine2_set, NormalizationMode::UnitMass, &uniform).unwrap();
        assert!((a2 - b2).abs() <= 1e-6, "coarse {a2} fine {b2}");
    }

    #[test]
    fn sampled_increments_have_the_prescribed_moments() {
        let p = line_partition(vec![1.0], vec![1.0]);
        let n = 100_000;
        let mut mean = 0.0;
        let mut second = 0.0;
        for seed in 0..n {
            let v = sample_field(&p, seed as u64).unwrap()[0];
            mean += v;
            second += v * v;
        }
        mean /= n as f64;
        second /= n as f64;
        assert!(mean.abs() <= 0.01, "mean {mean}");
        let variance = second - mean * mean;
        assert!((variance - 0.5).abs() <= 0.01, "variance {variance}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = line_partition(vec![0.5, 1.0], vec![0.3, 0.7]);
        assert_eq!(sample_field(&p, 41).unwrap(), sample_field(&p, 41).unwrap());
        assert_ne!(sample_field(&p, 41).unwrap(), sample_field(&p, 42).unwrap());
    }

    #[test]
    fn sampled_fields_accumulate_increments() {
        // second value = first + its own increment; check via per-seed variance
        let p = line_partition(vec![0.5, 1.0], vec![0.8, 0.6]);
        let n = 50_000;
        let mut second_sq = 0.0;
        for seed in 0..n {
            let u = sample_field(&p, seed as u64).unwrap();
            second_sq += u[1] * u[1];
        }
        // var u(2) = (0.8 + 0.6) / 2 = 0.7
        let variance = second_sq / n as f64;
        assert!((variance - 0.7).abs() <= 0.02, "variance {variance}");
    }

    #[test]
    fn monte_carlo_frequency_matches_quadrature() {
        let p = line_partition(vec![0.6, 1.0], vec![0.8, 0.5]);
        let set = CylinderSet::new(vec![CylinderComponent::new(
            p.clone(),
            vec![Interval::new(0.0, f64::INFINITY).unwrap(); 2],
        )
        .unwrap()]);
        let predicted =
            cylinder_measure(&set, NormalizationMode::UnitMass, &|_| 1.0).unwrap();
        let samples = 10_000;
        let mut hits = 0;
        for seed in 0..samples {
            let u = sample_field(&p, seed as u64).unwrap();
            if u.iter().all(|&v| v >= 0.0) {
                hits += 1;
            }
        }
        let frequency = hits as f64 / samples as f64;
        let budget = 3.0 / (samples as f64).sqrt();
        assert!(
            (frequency - predicted).abs() <= budget,
            "frequency {frequency} predicted {predicted} budget {budget}"
        );
    }

    #[test]
    fn empty_and_tail_windows_have_no_mass() {
        let p = line_partition(vec![1.0], vec![1.0]);
        let tail = CylinderSet::new(vec![CylinderComponent::new(
            p.clone(),
            vec![Interval::new(90.0, 95.0).unwrap()],
        )
        .unwrap()]);
        assert_eq!(
            cylinder_measure(&tail, NormalizationMode::UnitMass, &|_| 1.0).unwrap(),
            0.0
        );
        let degenerate = CylinderSet::new(vec![CylinderComponent::new(
            p,
            vec![Interval::new(0.25, 0.25).unwrap()],
        )
        .unwrap()]);
        assert_eq!(
            cylinder_measure(&degenerate, NormalizationMode::UnitMass, &|_| 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn density_hook_reweights_the_integral() {
        // a density of 2 doubles the one-gridpoint integral
        let p = line_partition(vec![1.0], vec![1.0]);
        let set = full_line_set(p);
        let base = cylinder_measure(&set, NormalizationMode::UnitMass, &|_| 1.0).unwrap();
        let scaled = cylinder_measure(&set, NormalizationMode::UnitMass, &|_| 2.0).unwrap();
        assert!((scaled - 2.0 * base).abs() <= 1e-9);
    }
}

