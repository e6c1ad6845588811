//! Invariance-defect experiments on enumerated map spaces.
//!
//! The pipeline samples random fields over anchor charts of a source level,
//! reads each sample off as a basepointed assignment into the target level,
//! projects it to the nearest stored map, and compares the resulting
//! empirical measure at radius r (transported by a group element) with the
//! one at radius r - |gamma| in the Prokhorov metric. The boundary term the
//! comparison is expected to track is the mass of the shell
//! T = gamma B(r) \ B(r - |gamma|) of anchor charts.

use crate::coarse::mapspace::{
    enumerate_map_space, gamma_act, EnumerationParams, MapSpaceLevel,
};
use crate::error::{Error, Result};
use crate::groups::{GroupElement, DEFAULT_BALL_CAP};
use crate::measure::cylinder::{max_cube_halfside, sample_field, Partition};
use crate::measure::prokhorov::prokhorov_distance;
use crate::measure::FiniteMeasure;
use crate::par;
use crate::spaces::Point;
use crate::warped::WarpedLevel;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

/// Shell-anchor qualification slack on squared warped offsets.
const OFFSET_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ExperimentParams {
    /// Multiplicative QI constant of the enumerated levels.
    pub k: f64,
    /// Additive QI constant of the enumerated levels.
    pub c: f64,
    pub samples: u64,
    pub seed: u64,
    /// Gridpoints per coordinate in each quadrant chart.
    pub cells_per_quadrant: usize,
    pub enumeration: EnumerationParams,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            k: 1.0,
            c: 0.0,
            samples: 200,
            seed: 7,
            cells_per_quadrant: 2,
            enumeration: EnumerationParams::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub gamma: String,
    pub gamma_len: usize,
    pub r: f64,
    pub t: f64,
    pub samples: u64,
    /// Prokhorov distance between the transported radius-r empirical measure
    /// and the radius-(r - |gamma|) one.
    pub defect: f64,
    /// Mass of the net points whose nearest anchor chart lies in the shell.
    pub shell_mass: f64,
    pub rejected_samples: u64,
    pub rejected_big: u64,
    pub rejected_small: u64,
    pub big_map_count: usize,
    pub small_map_count: usize,
    pub truncated: bool,
}

/// Excision-tolerant distance between `values` (over the given ball
/// positions) and a stored assignment, with no basepoint requirement;
/// transported candidates can sit off the orbit by snap noise.
fn tilde_delta_values(
    level: &MapSpaceLevel,
    positions: &[usize],
    values: &[u32],
    assignment: &[u32],
) -> f64 {
    let src = &level.source;
    let mut disagreements: Vec<(f64, f64)> = Vec::new();
    for (i, &p) in positions.iter().enumerate() {
        if values[i] != assignment[p] {
            let net = level.source_ball[p] as usize;
            disagreements.push((src.rho[level.m0][net], src.net.weights[net]));
        }
    }
    if disagreements.is_empty() {
        return 0.0;
    }
    let mut best = (-disagreements[0].0).exp2();
    let mut excised = 0.0f64;
    for k in 0..disagreements.len() {
        excised += disagreements[k].1;
        let rest = disagreements
            .get(k + 1)
            .map(|&(r, _)| (-r).exp2())
            .unwrap_or(0.0);
        best = best.min(excised.max(rest));
    }
    best
}

/// Nearest stored map to a value vector over the given positions. Exact
/// agreement wins outright, so stored maps are fixed points of the
/// projection; otherwise the smallest excision-tolerant distance, ties to
/// the lowest index.
fn project_values(level: &MapSpaceLevel, positions: &[usize], values: &[u32]) -> Result<usize> {
    if level.maps.is_empty() {
        return Err(Error::invalid("no stored maps to project onto"));
    }
    if let Some(i) = (0..level.maps.len()).find(|&i| {
        positions
            .iter()
            .enumerate()
            .all(|(j, &p)| level.maps[i].assignment[p] == values[j])
    }) {
        return Ok(i);
    }
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, map) in level.maps.iter().enumerate() {
        let v = tilde_delta_values(level, positions, values, &map.assignment);
        if v < best_value {
            best_value = v;
            best = i;
        }
    }
    Ok(best)
}

/// Stable per-(sample, anchor, quadrant, component) seed, independent of the
/// level the field is read on so equal levels sample identical fields.
fn field_seed(
    seed: u64,
    sample: u64,
    anchor: &GroupElement,
    quadrant: &[i8],
    component: usize,
) -> u64 {
    fn feed(mut h: u64, x: u64) -> u64 {
        for b in x.to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
        h
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    h = feed(h, seed);
    h = feed(h, sample);
    h = feed(h, anchor.word().len() as u64);
    for &g in anchor.word() {
        h = feed(h, g as u64 + 1);
    }
    for &s in quadrant {
        h = feed(h, if s > 0 { 2 } else { 1 });
    }
    feed(h, component as u64)
}

struct AnchorChart {
    element: GroupElement,
    source_point: Point,
    target_point: Point,
}

struct PointChart {
    anchor: usize,
    quadrant: Vec<i8>,
    /// 1-based gridpoint per coordinate; 0 marks the zero boundary.
    grid: Vec<usize>,
    boundary: bool,
}

struct ChartScheme {
    anchors: Vec<AnchorChart>,
    /// Shared grid: every (anchor, quadrant) chart uses the same breakpoints
    /// and cell measures; only the field seed distinguishes them.
    template: Partition,
    decomposition: Vec<PointChart>,
    components: usize,
}

/// Anchor charts and per-ball-point decompositions for one enumerated level.
fn build_charts(level: &MapSpaceLevel, params: &ExperimentParams) -> Result<ChartScheme> {
    let src = &level.source;
    let tgt = &level.target;
    let sgroup = src.action.group();
    let tgroup = tgt.action.group();
    if sgroup.generator_count() != tgroup.generator_count() {
        return Err(Error::invalid(
            "source and target groups need generating sets of equal size",
        ));
    }
    let m = src.net.space.dim();
    let a = max_cube_halfside(level.r, m)?;
    let kq = params.cells_per_quadrant;
    if kq == 0 {
        return Err(Error::invalid("cells_per_quadrant must be positive"));
    }
    let breakpoints: Vec<f64> = (1..=kq).map(|j| a * (j as f64 / kq as f64)).collect();
    // cell measures are unwarped chart volumes: warped width over t
    let width = a / (kq as f64 * src.t);
    let template = Partition::new(
        GroupElement::identity(),
        vec![1; m],
        vec![breakpoints.clone(); m],
        vec![width.powi(m as i32); kq.pow(m as u32)],
    )?;
    let mut anchors = Vec::with_capacity(level.source_orbit.len());
    for (g, idx) in &level.source_orbit {
        let lambda = tgroup.element_from_word(g.word())?;
        let target_point = tgt.net.points[tgt.net_act(&lambda, level.n0)].clone();
        anchors.push(AnchorChart {
            element: g.clone(),
            source_point: src.net.points[*idx as usize].clone(),
            target_point,
        });
    }
    let mut decomposition = Vec::with_capacity(level.source_ball.len());
    for &x in &level.source_ball {
        let xp = &src.net.points[x as usize];
        let mut best = 0usize;
        let mut best_norm = f64::INFINITY;
        let mut best_offset: Vec<f64> = Vec::new();
        // anchors are sorted, so strict improvement keeps the least element
        for (i, anchor) in anchors.iter().enumerate() {
            let w: Vec<f64> = src
                .net
                .space
                .log(&anchor.source_point, xp)
                .iter()
                .map(|c| c * src.t)
                .collect();
            let n2: f64 = w.iter().map(|c| c * c).sum();
            if n2 < best_norm {
                best_norm = n2;
                best = i;
                best_offset = w;
            }
        }
        let mut quadrant = vec![0i8; m];
        let mut grid = vec![0usize; m];
        let mut boundary = false;
        for p in 0..m {
            quadrant[p] = if best_offset[p] < 0.0 { -1 } else { 1 };
            // shell points past the cube face read its boundary gridpoint
            let mag = best_offset[p].abs().min(a);
            if mag == 0.0 {
                boundary = true;
            } else {
                grid[p] = 1 + breakpoints
                    .iter()
                    .position(|&x| x >= mag)
                    .expect("clamped magnitude is at most the last breakpoint");
            }
        }
        decomposition.push(PointChart { anchor: best, quadrant, grid, boundary });
    }
    Ok(ChartScheme {
        anchors,
        template,
        decomposition,
        components: tgt.net.space.dim(),
    })
}

/// One sampled assignment over the level's source ball, or None when an
/// image escapes the target comparison ball.
fn sample_assignment(
    level: &MapSpaceLevel,
    scheme: &ChartScheme,
    params: &ExperimentParams,
    sample: u64,
) -> Result<Option<Vec<u32>>> {
    let tgt = &level.target;
    let escape = level.k * level.r + level.c;
    let mut cache: HashMap<(usize, Vec<i8>, usize), Vec<f64>> = HashMap::new();
    let mut assignment = Vec::with_capacity(scheme.decomposition.len());
    let mut offset = vec![0.0; scheme.components];
    for chart in &scheme.decomposition {
        for value in offset.iter_mut() {
            *value = 0.0;
        }
        if !chart.boundary {
            for (component, value) in offset.iter_mut().enumerate() {
                let key = (chart.anchor, chart.quadrant.clone(), component);
                if !cache.contains_key(&key) {
                    let seed = field_seed(
                        params.seed,
                        sample,
                        &scheme.anchors[chart.anchor].element,
                        &chart.quadrant,
                        component,
                    );
                    cache.insert(key.clone(), sample_field(&scheme.template, seed)?);
                }
                let field = &cache[&key];
                *value = field[scheme.template.cell_index(&chart.grid)?] / tgt.t;
            }
        }
        let image = tgt
            .net
            .space
            .exp(&scheme.anchors[chart.anchor].target_point, &offset);
        let (y, _) = tgt.net.nearest(&image);
        if tgt.rho[level.n0][y] > escape {
            return Ok(None);
        }
        assignment.push(y as u32);
    }
    Ok(Some(assignment))
}

/// Projected-sample weights on the stored maps, plus the rejection count.
fn empirical_weights(
    level: &MapSpaceLevel,
    scheme: &ChartScheme,
    params: &ExperimentParams,
) -> Result<(Vec<f64>, u64)> {
    let positions: Vec<usize> = (0..level.source_ball.len()).collect();
    let outcomes: Vec<Result<Option<usize>>> =
        par::map_indexed(params.samples as usize, |s| {
            match sample_assignment(level, scheme, params, s as u64)? {
                None => Ok(None),
                Some(assignment) => Ok(Some(project_values(level, &positions, &assignment)?)),
            }
        });
    let mut counts = vec![0u64; level.map_count()];
    let mut rejected = 0u64;
    for outcome in outcomes {
        match outcome? {
            Some(i) => counts[i] += 1,
            None => rejected += 1,
        }
    }
    let accepted = params.samples - rejected;
    if accepted == 0 {
        return Err(Error::Discretization(
            "every sampled field escaped the target comparison ball".into(),
        ));
    }
    let weights = counts.iter().map(|&c| c as f64 / accepted as f64).collect();
    Ok((weights, rejected))
}

/// Mass of the net points whose nearest qualifying anchor chart belongs to
/// the shell T = gamma B(floor r) \ B(floor (r - |gamma|)). An anchor
/// qualifies for a point when the warped chart offset has norm at most r;
/// ties go to the least anchor element.
pub fn shell_mass(
    level: &WarpedLevel,
    m0: usize,
    gamma: &GroupElement,
    r: f64,
) -> Result<f64> {
    if m0 >= level.len() {
        return Err(Error::invalid("basepoint index out of range"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("shell radius must be positive"));
    }
    let glen = gamma.len() as f64;
    if glen > r {
        return Err(Error::invalid("group element is longer than the radius"));
    }
    let group = level.action.group();
    let inner: HashSet<GroupElement> = group
        .word_ball((r - glen).floor() as usize, DEFAULT_BALL_CAP)?
        .into_iter()
        .collect();
    let mut anchors: Vec<GroupElement> = group
        .word_ball(r.floor() as usize, DEFAULT_BALL_CAP)?
        .iter()
        .map(|b| group.multiply(gamma, b))
        .collect();
    anchors.sort();
    anchors.dedup();
    let anchor_points: Vec<usize> = anchors.iter().map(|a| level.net_act(a, m0)).collect();
    let in_shell: Vec<bool> = anchors.iter().map(|a| !inner.contains(a)).collect();
    let space = &level.net.space;
    let budget = r * r + OFFSET_SLACK;
    let mut mass = 0.0;
    for x in 0..level.len() {
        let xp = &level.net.points[x];
        let mut best: Option<usize> = None;
        let mut best_norm = f64::INFINITY;
        for (i, &ai) in anchor_points.iter().enumerate() {
            let n2: f64 = space
                .log(&level.net.points[ai], xp)
                .iter()
                .map(|c| {
                    let w = c * level.t;
                    w * w
                })
                .sum();
            if n2 > budget {
                continue;
            }
            if n2 < best_norm {
                best_norm = n2;
                best = Some(i);
            }
        }
        if let Some(i) = best {
            if in_shell[i] {
                mass += level.net.weights[x];
            }
        }
    }
    Ok(mass)
}

/// Sample empirical measures at radii r and r - |gamma|, transport the first
/// by gamma, and report their Prokhorov distance together with the shell
/// mass of the proof's boundary term.
pub fn invariance_defect_experiment(
    source: Arc<WarpedLevel>,
    target: Arc<WarpedLevel>,
    m0: usize,
    n0: usize,
    gamma: &GroupElement,
    r: f64,
    params: &ExperimentParams,
) -> Result<InvarianceReport> {
    if params.samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let generator_count = source.action.group().generator_count();
    if gamma.word().iter().any(|&g| g >= generator_count) {
        return Err(Error::invalid("gamma uses generators outside the source group"));
    }
    let glen = gamma.len() as f64;
    if !(glen < r) {
        return Err(Error::invalid(
            "gamma must be shorter than the level radius so the restricted level is nonempty",
        ));
    }
    let big = enumerate_map_space(
        source.clone(),
        target.clone(),
        m0,
        n0,
        params.k,
        params.c,
        r,
        &params.enumeration,
    )?;
    let small = enumerate_map_space(
        source.clone(),
        target.clone(),
        m0,
        n0,
        params.k,
        params.c,
        r - glen,
        &params.enumeration,
    )?;

    let big_scheme = build_charts(&big, params)?;
    let small_scheme = build_charts(&small, params)?;
    let (big_weights, rejected_big) = empirical_weights(&big, &big_scheme, params)?;
    let (small_weights, rejected_small) = empirical_weights(&small, &small_scheme, params)?;

    let space = Arc::new(small.as_metric_space()?);
    let small_empirical = FiniteMeasure::new(space.clone(), small_weights)?;
    let mut pushed = vec![0.0; small.map_count()];
    let small_positions: Vec<usize> = (0..small.source_ball.len()).collect();
    for (i, map) in big.maps.iter().enumerate() {
        let rm = gamma_act(&big, gamma, map)?;
        let consistent = rm.positions.len() == small.source_ball.len()
            && rm
                .positions
                .iter()
                .zip(&small.source_ball)
                .all(|(&p, &net)| big.source_ball[p] == net);
        if !consistent {
            return Err(Error::Internal(
                "restricted domain does not realize the smaller ball".into(),
            ));
        }
        let j = project_values(&small, &small_positions, &rm.values)?;
        pushed[j] += big_weights[i];
    }
    let transported = FiniteMeasure::new(space, pushed)?;
    let defect = prokhorov_distance(&transported, &small_empirical)?;
    let shell = shell_mass(&source, m0, gamma, r)?;

    Ok(InvarianceReport {
        gamma: source.action.group().describe(gamma),
        gamma_len: gamma.len(),
        r,
        t: source.t,
        samples: params.samples,
        defect,
        shell_mass: shell,
        rejected_samples: rejected_big + rejected_small,
        rejected_big,
        rejected_small,
        big_map_count: big.map_count(),
        small_map_count: small.map_count(),
        truncated: big.truncated || small.truncated,
    })
}

/// Empirical measure on a map-space level together with its sampling stats.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    pub measure: FiniteMeasure,
    pub samples: u64,
    pub rejected: u64,
    pub map_count: usize,
    pub truncated: bool,
}

/// Sample fields at radius `r` and bin the projected maps into an empirical
/// measure on the map-space metric. Sample `s` always draws the same field,
/// so runs with growing sample counts are prefix-coupled and their distances
/// expose genuine sampling convergence rather than reseeding noise.
pub fn empirical_map_measure(
    source: Arc<WarpedLevel>,
    target: Arc<WarpedLevel>,
    m0: usize,
    n0: usize,
    r: f64,
    params: &ExperimentParams,
) -> Result<EmpiricalMeasure> {
    if params.samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let level = enumerate_map_space(
        source,
        target,
        m0,
        n0,
        params.k,
        params.c,
        r,
        &params.enumeration,
    )?;
    let scheme = build_charts(&level, params)?;
    let (weights, rejected) = empirical_weights(&level, &scheme, params)?;
    let space = Arc::new(level.as_metric_space()?);
    Ok(EmpiricalMeasure {
        measure: FiniteMeasure::new(space, weights)?,
        samples: params.samples,
        rejected,
        map_count: level.map_count(),
        truncated: level.truncated,
    })
}

/// Prokhorov distances between consecutive measures of a tower.
pub fn weak_star_diagnostic(measures: &[FiniteMeasure]) -> Result<Vec<f64>> {
    measures
        .windows(2)
        .map(|pair| prokhorov_distance(&pair[0], &pair[1]))
        .collect()
}

/// Per-element invariance defect of a measure on a level's stored maps:
/// the Prokhorov distance between the pushforward along each group element
/// of length at most `radius` and the measure itself.
pub fn invariance_profile(
    level: &MapSpaceLevel,
    nu: &FiniteMeasure,
    radius: usize,
) -> Result<Vec<(String, f64)>> {
    if nu.weights.len() != level.map_count() {
        return Err(Error::invalid(
            "measure does not live on the level's stored maps",
        ));
    }
    let group = level.source.action.group();
    let mut out = Vec::new();
    for (g, table) in &level.gamma_tables {
        if g.len() > radius {
            continue;
        }
        let mut pushed = vec![0.0; level.map_count()];
        for (i, entry) in table.iter().enumerate() {
            let j = match entry {
                Some(j) => *j,
                // the action left the stored family: fall back to projecting
                None => {
                    let rm = gamma_act(level, g, &level.maps[i])?;
                    project_values(level, &rm.positions, &rm.values)?
                }
            };
            pushed[j] += nu.weights[i];
        }
        let moved = FiniteMeasure::new(nu.space.clone(), pushed)?;
        out.push((group.describe(g), prokhorov_distance(&moved, nu)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;
    use crate::spaces::{net_from_points, ActionSpec, CompactSpace};
    use crate::warped::{warped_level, WarpedLevelParams};

    fn uniform_circle_level(n: usize, shift: usize, t: f64) -> Arc<WarpedLevel> {
        let pts: Vec<Point> = (0..n).map(|i| Point(vec![i as f64 / n as f64])).collect();
        let mesh = 0.5 / n as f64;
        let net = net_from_points(&CompactSpace::circle(), pts, mesh, 17, 20_000).unwrap();
        let action = ActionSpec::circle_rotation(shift as f64 / n as f64, true, true).unwrap();
        Arc::new(
            warped_level(Arc::new(net), Arc::new(action), t, &WarpedLevelParams::default())
                .unwrap(),
        )
    }

    fn small_params(samples: u64) -> ExperimentParams {
        ExperimentParams { samples, seed: 11, ..ExperimentParams::default() }
    }

    #[test]
    fn identity_transport_has_zero_defect() {
        let level = uniform_circle_level(8, 1, 8.0);
        let report = invariance_defect_experiment(
            level.clone(),
            level,
            0,
            0,
            &GroupElement::identity(),
            2.0,
            &small_params(40),
        )
        .unwrap();
        assert_eq!(report.defect, 0.0);
        assert_eq!(report.shell_mass, 0.0);
        assert_eq!(report.big_map_count, 2);
        assert_eq!(report.small_map_count, 2);
        assert_eq!(report.rejected_big, report.rejected_small);
        assert_eq!(report.samples, 40);
    }

    #[test]
    fn prefix_coupled_empirical_measures_converge() {
        let level = uniform_circle_level(8, 1, 8.0);
        let runs: Vec<EmpiricalMeasure> = [30u64, 60]
            .iter()
            .map(|&n| {
                empirical_map_measure(level.clone(), level.clone(), 0, 0, 2.0, &small_params(n))
                    .unwrap()
            })
            .collect();
        for run in &runs {
            assert!(run.measure.is_probability());
            assert_eq!(run.map_count, 2);
            assert!(!run.truncated);
        }
        let measures: Vec<FiniteMeasure> = runs.iter().map(|r| r.measure.clone()).collect();
        let gaps = weak_star_diagnostic(&measures).unwrap();
        assert_eq!(gaps.len(), 1);
        assert!(gaps[0] >= 0.0 && gaps[0] <= 1.0 + 1e-9, "gap {}", gaps[0]);

        // rerun at the same count reproduces the weights bit for bit
        let again =
            empirical_map_measure(level.clone(), level, 0, 0, 2.0, &small_params(60)).unwrap();
        assert_eq!(again.measure.weights, runs[1].measure.weights);
    }

    #[test]
    fn one_step_rotation_reports_a_bounded_defect() {
        let level = uniform_circle_level(8, 1, 8.0);
        let group = level.action.group().clone();
        let plus = group.element_from_labels(&["+e1"]).unwrap();
        let report = invariance_defect_experiment(
            level.clone(),
            level,
            0,
            0,
            &plus,
            2.0,
            &small_params(60),
        )
        .unwrap();
        assert!((0.0..=1.0).contains(&report.defect), "defect {}", report.defect);
        assert_eq!(report.gamma_len, 1);
        assert_eq!(report.small_map_count, 2);
        assert!(report.rejected_big <= 60 && report.rejected_small <= 60);
        assert!(!report.gamma.is_empty());
    }

    #[test]
    fn shell_mass_matches_a_hand_count() {
        let level = uniform_circle_level(8, 1, 8.0);
        let group = level.action.group().clone();
        let plus = group.element_from_labels(&["+e1"]).unwrap();
        // anchors gamma B(2) = {-1..3}; nets 2, 3, 4 resolve to anchors +2
        // and +3, the two shell elements; net 5 ties and keeps -1
        let expected = level.net.weights[2] + level.net.weights[3] + level.net.weights[4];
        let shell = shell_mass(&level, 0, &plus, 2.0).unwrap();
        assert!((shell - expected).abs() <= 1e-12, "shell {shell} expected {expected}");
        assert_eq!(shell_mass(&level, 0, &GroupElement::identity(), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn reports_are_byte_identical_across_reruns() {
        let level = uniform_circle_level(8, 1, 8.0);
        let group = level.action.group().clone();
        let plus = group.element_from_labels(&["+e1"]).unwrap();
        let run = || {
            let report = invariance_defect_experiment(
                level.clone(),
                level.clone(),
                0,
                0,
                &plus,
                2.0,
                &small_params(30),
            )
            .unwrap();
            serde_json::to_string(&report).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trivial_group_degenerate_case_is_exact() {
        let pts: Vec<Point> = (0..4).map(|i| Point(vec![i as f64 / 4.0])).collect();
        let net = net_from_points(&CompactSpace::circle(), pts, 0.125, 3, 10_000).unwrap();
        let action = ActionSpec::trivial(GroupSpec::trivial(), CompactSpace::circle()).unwrap();
        let level = Arc::new(
            warped_level(Arc::new(net), Arc::new(action), 4.0, &WarpedLevelParams::default())
                .unwrap(),
        );
        let report = invariance_defect_experiment(
            level.clone(),
            level,
            0,
            0,
            &GroupElement::identity(),
            0.5,
            &small_params(25),
        )
        .unwrap();
        assert_eq!(report.defect, 0.0);
        assert_eq!(report.big_map_count, 1);
        assert_eq!(report.shell_mass, 0.0);
        assert_eq!(report.rejected_samples, 0);
    }

    #[test]
    fn consecutive_distances_of_a_constant_tower_vanish() {
        let level = uniform_circle_level(8, 1, 8.0);
        let msl = enumerate_map_space(
            level.clone(),
            level,
            0,
            0,
            1.0,
            0.0,
            2.0,
            &EnumerationParams::default(),
        )
        .unwrap();
        let space = Arc::new(msl.as_metric_space().unwrap());
        let nu = FiniteMeasure::new(space, vec![0.5, 0.5]).unwrap();
        let tower = vec![nu.clone(), nu.clone(), nu];
        assert_eq!(weak_star_diagnostic(&tower).unwrap(), vec![0.0, 0.0]);
        assert!(weak_star_diagnostic(&tower[..1]).unwrap().is_empty());
    }

    #[test]
    fn symmetric_measures_have_a_flat_invariance_profile() {
        let level = uniform_circle_level(8, 1, 8.0);
        let msl = enumerate_map_space(
            level.clone(),
            level,
            0,
            0,
            1.0,
            0.0,
            2.0,
            &EnumerationParams::default(),
        )
        .unwrap();
        let space = Arc::new(msl.as_metric_space().unwrap());
        let nu = FiniteMeasure::new(space, vec![0.5, 0.5]).unwrap();
        let profile = invariance_profile(&msl, &nu, 1).unwrap();
        assert_eq!(profile.len(), 3); // identity and the two rotations
        for (name, defect) in profile {
            assert_eq!(defect, 0.0, "gamma {name}");
        }
    }
}
