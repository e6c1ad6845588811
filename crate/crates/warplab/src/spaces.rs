//! Compact model spaces, epsilon-nets, and isometric group actions.
//!
//! Built-in spaces: the unit-circumference circle, flat tori [0,1)^d, and the
//! rotation group of 3-space as unit quaternions. All carry their uniform
//! probability measure. Nets are greedy farthest-point samples whose covering
//! radius is certified by random probes; cell weights are Monte Carlo
//! estimates of the Voronoi masses.


use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{GenId, GroupElement, GroupSpec};
use crate::par;
use crate::quat::Quat;
use crate::rng;

/// A point of a [`CompactSpace`]; the coordinate layout depends on the space
/// (1 wrapped coordinate for the circle, d for a torus, a unit quaternion
/// for rotations).
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Circle,
    Torus(usize),
    Rotations3,
}

/// A compact homogeneous space with its geodesic metric and uniform measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompactSpace {
    kind: SpaceKind,
}

fn wrap01(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed representative of `b - a` on the circle, in (-1/2, 1/2].
fn circle_diff(a: f64, b: f64) -> f64 {
    let d = wrap01(b - a);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

impl CompactSpace {
    pub fn circle() -> Self {
        CompactSpace {
            kind: SpaceKind::Circle,
        }
    }

    pub fn torus(d: usize) -> Result<Self> {
        if d == 0 || d > 8 {
            return Err(Error::invalid(format!("torus dimension must be 1..=8, got {d}")));
        }
        Ok(CompactSpace {
            kind: SpaceKind::Torus(d),
        })
    }

    pub fn rotations3() -> Self {
        CompactSpace {
            kind: SpaceKind::Rotations3,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn name(&self) -> String {
        match self.kind {
            SpaceKind::Circle => "circle".to_string(),
            SpaceKind::Torus(d) => format!("torus{d}"),
            SpaceKind::Rotations3 => "rotations3".to_string(),
        }
    }

    /// Dimension of the space (= length of chart vectors).
    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::Circle => 1,
            SpaceKind::Torus(d) => d,
            SpaceKind::Rotations3 => 3,
        }
    }

    /// Number of stored coordinates per point.
    pub fn point_len(&self) -> usize {
        match self.kind {
            SpaceKind::Circle => 1,
            SpaceKind::Torus(d) => d,
            SpaceKind::Rotations3 => 4,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            SpaceKind::Circle => 0.5,
            SpaceKind::Torus(d) => 0.5 * (d as f64).sqrt(),
            SpaceKind::Rotations3 => std::f64::consts::PI,
        }
    }

    pub fn validate(&self, p: &Point) -> Result<()> {
        if p.0.len() != self.point_len() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, {} expects {}",
                p.0.len(),
                self.name(),
                self.point_len()
            )));
        }
        if p.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        if let SpaceKind::Rotations3 = self.kind {
            let q = self.as_quat(p);
            if (q.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "quaternion norm {} deviates from 1 beyond 1e-9",
                    q.norm()
                )));
            }
        }
        Ok(())
    }

    fn as_quat(&self, p: &Point) -> Quat {
        Quat::new(p.0[0], p.0[1], p.0[2], p.0[3])
    }

    fn quat_to_point(&self, q: Quat) -> Point {
        let q = q.normalized().canonical_sign();
        Point(vec![q.w, q.x, q.y, q.z])
    }

    /// Wrap coordinates into their canonical ranges.
    pub fn normalize(&self, p: &Point) -> Point {
        match self.kind {
            SpaceKind::Circle | SpaceKind::Torus(_) => {
                Point(p.0.iter().map(|&c| wrap01(c)).collect())
            }
            SpaceKind::Rotations3 => self.quat_to_point(self.as_quat(p)),
        }
    }

    pub(crate) fn dist_unchecked(&self, p: &Point, q: &Point) -> f64 {
        match self.kind {
            SpaceKind::Circle => circle_diff(p.0[0], q.0[0]).abs(),
            SpaceKind::Torus(_) => p
                .0
                .iter()
                .zip(q.0.iter())
                .map(|(&a, &b)| {
                    let d = circle_diff(a, b);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            SpaceKind::Rotations3 => self.as_quat(p).angle_to(&self.as_quat(q)),
        }
    }

    /// Uniformly random point.
    pub fn sample(&self, rng: &mut impl Rng) -> Point {
        match self.kind {
            SpaceKind::Circle => Point(vec![rng.gen::<f64>()]),
            SpaceKind::Torus(d) => Point((0..d).map(|_| rng.gen::<f64>()).collect()),
            SpaceKind::Rotations3 => {
                let q = Quat::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                if q.norm() < 1e-12 {
                    return Point(vec![1.0, 0.0, 0.0, 0.0]);
                }
                self.quat_to_point(q)
            }
        }
    }

    /// Geodesic chart at `base`: returns the point at chart vector `v`.
    /// `v` must satisfy |v| <= injectivity radius for `log` to invert it.
    pub fn exp(&self, base: &Point, v: &[f64]) -> Point {
        match self.kind {
            SpaceKind::Circle | SpaceKind::Torus(_) => Point(
                base.0
                    .iter()
                    .zip(v.iter())
                    .map(|(&b, &x)| wrap01(b + x))
                    .collect(),
            ),
            SpaceKind::Rotations3 => {
                let q = self.as_quat(base);
                self.quat_to_point(q.mul(&Quat::exp([v[0], v[1], v[2]])))
            }
        }
    }

    /// Chart vector of `p` at `base` (inverse of [`CompactSpace::exp`] inside
    /// the injectivity radius). Euclidean norm of the result equals the
    /// geodesic distance.
    pub fn log(&self, base: &Point, p: &Point) -> Vec<f64> {
        match self.kind {
            SpaceKind::Circle | SpaceKind::Torus(_) => base
                .0
                .iter()
                .zip(p.0.iter())
                .map(|(&b, &x)| circle_diff(b, x))
                .collect(),
            SpaceKind::Rotations3 => {
                let rel = self.as_quat(base).conj().mul(&self.as_quat(p));
                rel.log().to_vec()
            }
        }
    }
}

/// Geodesic distance with input validation.
pub fn geodesic_distance(space: &CompactSpace, p: &Point, q: &Point) -> Result<f64> {
    space.validate(p)?;
    space.validate(q)?;
    Ok(space.dist_unchecked(p, q))
}

/// Finite net on a compact space with Monte Carlo Voronoi weights.
#[derive(Clone, Debug)]
pub struct Net {
    pub space: CompactSpace,
    pub points: Vec<Point>,
    /// Target covering radius; certified by random probes at build time.
    pub mesh: f64,
    /// Voronoi cell masses, estimated by `weight_samples` uniform draws.
    pub weights: Vec<f64>,
    pub seed: u64,
    pub weight_samples: usize,
}

#[derive(Clone, Debug)]
pub struct NetParams {
    pub eps: f64,
    pub seed: u64,
    /// Hard cap on the number of net points.
    pub point_cap: usize,
    /// Size of the candidate pool for farthest-point sampling.
    pub pool: usize,
    /// Number of covering-certificate probes.
    pub probes: usize,
    /// Number of Monte Carlo draws for the Voronoi weights.
    pub weight_samples: usize,
}

impl NetParams {
    pub fn new(eps: f64, seed: u64) -> Self {
        NetParams {
            eps,
            seed,
            point_cap: 4096,
            pool: 50_000,
            probes: 10_000,
            weight_samples: 100_000,
        }
    }
}

const WEIGHT_BLOCK: usize = 4096;

/// Greedy farthest-point net with covering radius <= eps (probe-certified)
/// and Monte Carlo cell weights. Deterministic for a fixed seed.
pub fn build_net(space: &CompactSpace, params: &NetParams) -> Result<Net> {
    if !(params.eps > 0.0) {
        return Err(Error::invalid("net eps must be positive"));
    }
    let eps = params.eps;

    // Candidate pool (stream 0).
    let mut pool_rng = rng::stream(params.seed, 0);
    let pool: Vec<Point> = (0..params.pool).map(|_| space.sample(&mut pool_rng)).collect();

    // Farthest-point traversal until the pool is covered with margin.
    let stop_at = 0.9 * eps;
    let mut points: Vec<Point> = vec![pool[0].clone()];
    let mut dist: Vec<f64> = pool
        .iter()
        .map(|p| space.dist_unchecked(p, &points[0]))
        .collect();
    loop {
        let (best, bestd) = dist
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bd), (i, &d)| {
                if d > bd {
                    (i, d)
                } else {
                    (bi, bd)
                }
            });
        if bestd <= stop_at {
            break;
        }
        if points.len() + 1 > params.point_cap {
            return Err(Error::ResourceLimit {
                what: "net points",
                cap: params.point_cap,
                requested: points.len() + 1,
            });
        }
        let newp = pool[best].clone();
        for (i, p) in pool.iter().enumerate() {
            let d = space.dist_unchecked(p, &newp);
            if d < dist[i] {
                dist[i] = d;
            }
        }
        points.push(newp);
    }

    // Covering certificate: fresh probes must all land within eps. A failing
    // probe is promoted into the net and the round restarts.
    let mut round = 0u64;
    loop {
        let mut probe_rng = rng::stream(params.seed, 1 + round);
        let mut worst: Option<(f64, Point)> = None;
        for _ in 0..params.probes {
            let p = space.sample(&mut probe_rng);
            let d = points
                .iter()
                .map(|q| space.dist_unchecked(&p, q))
                .fold(f64::INFINITY, f64::min);
            if d > eps {
                match &worst {
                    Some((w, _)) if *w >= d => {}
                    _ => worst = Some((d, p)),
                }
            }
        }
        match worst {
            None => break,
            Some((_, p)) => {
                if points.len() + 1 > params.point_cap {
                    return Err(Error::ResourceLimit {
                        what: "net points",
                        cap: params.point_cap,
                        requested: points.len() + 1,
                    });
                }
                points.push(p);
                round += 1;
                if round > 50 {
                    return Err(Error::Discretization(
                        "covering certificate kept failing after 50 refinement rounds".into(),
                    ));
                }
            }
        }
    }

    let weights = voronoi_weights(space, &points, params.seed, params.weight_samples);

    Ok(Net {
        space: *space,
        points,
        mesh: eps,
        weights,
        seed: params.seed,
        weight_samples: params.weight_samples,
    })
}

/// Monte Carlo Voronoi cell masses (streams 1000+block, merged in block
/// order, so the result does not depend on the thread count).
fn voronoi_weights(space: &CompactSpace, points: &[Point], seed: u64, samples: usize) -> Vec<f64> {
    let blocks = samples.div_ceil(WEIGHT_BLOCK);
    let counts: Vec<Vec<u32>> = par::map_indexed(blocks, |b| {
        let mut block_rng = rng::stream(seed, 1000 + b as u64);
        let take = WEIGHT_BLOCK.min(samples - b * WEIGHT_BLOCK);
        let mut c = vec![0u32; points.len()];
        for _ in 0..take {
            let p = space.sample(&mut block_rng);
            let mut bi = 0usize;
            let mut bd = f64::INFINITY;
            for (i, q) in points.iter().enumerate() {
                let d = space.dist_unchecked(&p, q);
                if d < bd {
                    bd = d;
                    bi = i;
                }
            }
            c[bi] += 1;
        }
        c
    });
    let mut total = vec![0u64; points.len()];
    for c in counts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x as u64;
        }
    }
    total.iter().map(|&c| c as f64 / samples as f64).collect()
}

/// Net with caller-chosen points and a declared covering radius. The radius
/// is certified by probes; weights are Monte Carlo as in [`build_net`].
/// Intended for structured nets (evenly spaced points) where exact geometry
/// matters.
pub fn net_from_points(
    space: &CompactSpace,
    points: Vec<Point>,
    mesh: f64,
    seed: u64,
    weight_samples: usize,
) -> Result<Net> {
    if points.is_empty() {
        return Err(Error::invalid("a net needs at least one point"));
    }
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::invalid("declared mesh must be positive and finite"));
    }
    for p in &points {
        space.validate(p)?;
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if space.dist_unchecked(&points[i], &points[j]) == 0.0 {
                return Err(Error::invalid(format!("net points {i} and {j} coincide")));
            }
        }
    }
    let mut probe_rng = rng::stream(seed, 1);
    for _ in 0..10_000 {
        let p = space.sample(&mut probe_rng);
        let d = points
            .iter()
            .map(|q| space.dist_unchecked(&p, q))
            .fold(f64::INFINITY, f64::min);
        if d > mesh {
            return Err(Error::Discretization(format!(
                "declared mesh {mesh} is not a covering radius: probe at distance {d}"
            )));
        }
    }
    let weights = voronoi_weights(space, &points, seed, weight_samples);
    Ok(Net {
        space: *space,
        points,
        mesh,
        weights,
        seed,
        weight_samples,
    })
}

impl Net {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and distance of the nearest net point.
    pub fn nearest(&self, p: &Point) -> (usize, f64) {
        let mut bi = 0usize;
        let mut bd = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = self.space.dist_unchecked(p, q);
            if d < bd {
                bd = d;
                bi = i;
            }
        }
        (bi, bd)
    }

    /// CSV rows: index, coordinates..., weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let coord_names: Vec<String> = (0..self.space.point_len())
            .map(|i| format!("c{i}"))
            .collect();
        out.push_str(&format!("index,{},weight\n", coord_names.join(",")));
        for (i, (p, w)) in self.points.iter().zip(&self.weights).enumerate() {
            let coords: Vec<String> = p.0.iter().map(|c| format!("{c}")).collect();
            out.push_str(&format!("{i},{},{w}\n", coords.join(",")));
        }
        out
    }
}

/// One isometry of a built-in space.
#[derive(Clone, Debug)]
pub enum IsometryMap {
    Identity,
    /// Rotate the circle by `alpha` (fraction of a full turn).
    CircleRotate(f64),
    /// Translate the torus by the given vector.
    TorusTranslate(Vec<f64>),
    /// Left-multiply by a fixed rotation.
    RotateLeft(Quat),
}

impl IsometryMap {
    pub(crate) fn apply(&self, p: &Point) -> Point {
        match self {
            IsometryMap::Identity => p.clone(),
            IsometryMap::CircleRotate(a) => Point(vec![wrap01(p.0[0] + a)]),
            IsometryMap::TorusTranslate(v) => Point(
                p.0.iter()
                    .zip(v.iter())
                    .map(|(&c, &t)| wrap01(c + t))
                    .collect(),
            ),
            IsometryMap::RotateLeft(q) => {
                let r = q.mul(&Quat::new(p.0[0], p.0[1], p.0[2], p.0[3]));
                let r = r.normalized().canonical_sign();
                Point(vec![r.w, r.x, r.y, r.z])
            }
        }
    }
}

/// User-declared properties of an action; the audit spot-checks them but the
/// declarations themselves are taken on trust.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ActionFlags {
    pub free: bool,
    pub measure_preserving: bool,
    pub ergodic: bool,
}

/// An action of a [`GroupSpec`] on a [`CompactSpace`] by one isometry per
/// generator (inverse generators get the inverse isometry).
#[derive(Clone, Debug)]
pub struct ActionSpec {
    group: GroupSpec,
    space: CompactSpace,
    maps: Vec<IsometryMap>,
    pub flags: ActionFlags,
}

impl ActionSpec {
    /// `maps[i]` is the isometry of generator `i`; consistency of inverse
    /// pairs and isometry are spot-checked on seeded samples.
    pub fn new(
        group: GroupSpec,
        space: CompactSpace,
        maps: Vec<IsometryMap>,
        flags: ActionFlags,
    ) -> Result<Self> {
        if maps.len() != group.generator_count() {
            return Err(Error::invalid(format!(
                "action needs {} generator maps, got {}",
                group.generator_count(),
                maps.len()
            )));
        }
        let action = ActionSpec {
            group,
            space,
            maps,
            flags,
        };
        action.self_check()?;
        Ok(action)
    }

    fn self_check(&self) -> Result<()> {
        let mut check_rng = rng::stream(0xA0D17, 0);
        for _ in 0..64 {
            let p = self.space.sample(&mut check_rng);
            let q = self.space.sample(&mut check_rng);
            let dpq = self.space.dist_unchecked(&p, &q);
            for g in 0..self.maps.len() {
                let gi = self.group.inverse_gen(g);
                let gp = self.maps[g].apply(&p);
                let back = self.maps[gi].apply(&gp);
                if self.space.dist_unchecked(&back, &p) > 1e-9 {
                    return Err(Error::invalid(format!(
                        "generator '{}' inverse map does not invert it",
                        self.group.generator(g).label
                    )));
                }
                let gq = self.maps[g].apply(&q);
                let defect = (self.space.dist_unchecked(&gp, &gq) - dpq).abs();
                if defect > 1e-12 {
                    return Err(Error::invalid(format!(
                        "generator '{}' distorts distances by {defect}",
                        self.group.generator(g).label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn space(&self) -> &CompactSpace {
        &self.space
    }

    pub fn generator_map(&self, g: GenId) -> &IsometryMap {
        &self.maps[g]
    }

    /// Trivial action of `group` on `space`.
    pub fn trivial(group: GroupSpec, space: CompactSpace) -> Result<Self> {
        let maps = vec![IsometryMap::Identity; group.generator_count()];
        ActionSpec::new(
            group,
            space,
            maps,
            ActionFlags {
                free: false,
                measure_preserving: true,
                ergodic: false,
            },
        )
    }

    /// Z acting on the circle by rotation `alpha`.
    pub fn circle_rotation(alpha: f64, declared_free: bool, declared_ergodic: bool) -> Result<Self> {
        ActionSpec::new(
            GroupSpec::integers(1)?,
            CompactSpace::circle(),
            vec![
                IsometryMap::CircleRotate(alpha),
                IsometryMap::CircleRotate(-alpha),
            ],
            ActionFlags {
                free: declared_free,
                measure_preserving: true,
                ergodic: declared_ergodic,
            },
        )
    }

    /// Z/n acting on the circle by rotation p/n.
    pub fn cyclic_rotation(p: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cyclic order must be >= 1"));
        }
        let alpha = p as f64 / n as f64;
        ActionSpec::new(
            GroupSpec::cyclic(n)?,
            CompactSpace::circle(),
            vec![
                IsometryMap::CircleRotate(alpha),
                IsometryMap::CircleRotate(-alpha),
            ],
            ActionFlags {
                free: p != 0 && gcd(p, n) == 1,
                measure_preserving: true,
                ergodic: false,
            },
        )
    }

    /// Z^k acting on a torus by one translation vector per free generator.
    pub fn torus_translation(d: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let space = CompactSpace::torus(d)?;
        let group = GroupSpec::integers(vectors.len())?;
        let mut maps = Vec::with_capacity(2 * vectors.len());
        for v in &vectors {
            if v.len() != d {
                return Err(Error::invalid(format!(
                    "translation vector has {} coordinates, torus has {d}",
                    v.len()
                )));
            }
            maps.push(IsometryMap::TorusTranslate(v.clone()));
            maps.push(IsometryMap::TorusTranslate(v.iter().map(|&x| -x).collect()));
        }
        ActionSpec::new(
            group,
            space,
            maps,
            ActionFlags {
                free: true,
                measure_preserving: true,
                ergodic: true,
            },
        )
    }

    /// F_2 acting on rotations by left multiplication with two rotations by
    /// acos(3/5) about orthogonal axes.
    pub fn free_rotations() -> Result<Self> {
        let angle = (3.0f64 / 5.0).acos();
        let a = Quat::from_axis_angle([0.0, 0.0, 1.0], angle);
        let b = Quat::from_axis_angle([1.0, 0.0, 0.0], angle);
        ActionSpec::new(
            GroupSpec::free(2)?,
            CompactSpace::rotations3(),
            vec![
                IsometryMap::RotateLeft(a),
                IsometryMap::RotateLeft(a.conj()),
                IsometryMap::RotateLeft(b),
                IsometryMap::RotateLeft(b.conj()),
            ],
            ActionFlags {
                free: true,
                measure_preserving: true,
                ergodic: false,
            },
        )
    }

    /// Apply a group element to a point: the canonical word acts letter by
    /// letter, rightmost letter first, so `act(gh, p) = act(g, act(h, p))`
    /// whenever the canonical word of `gh` is the concatenation.
    pub fn act(&self, gamma: &GroupElement, p: &Point) -> Result<Point> {
        self.space.validate(p)?;
        let mut cur = p.clone();
        for &g in gamma.word().iter().rev() {
            if g >= self.maps.len() {
                return Err(Error::invalid(format!("generator id {g} out of range")));
            }
            cur = self.maps[g].apply(&cur);
        }
        Ok(cur)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Audit report for an action on a net.
#[derive(Clone, Debug, Serialize)]
pub struct ActionAudit {
    /// Max |d(s p, s q) - d(p, q)| over sampled pairs and generators.
    pub max_isometry_defect: f64,
    /// Max |pushforward weight - weight| over cells and generators.
    pub max_measure_defect: f64,
    /// Monte Carlo noise scale (3/sqrt(samples)) for the measure defect.
    pub measure_noise_bound: f64,
    /// Min displacement over net points per nonidentity element of a small
    /// ball; zero displacement on a declared-free action is suspicious.
    pub min_displacement: Vec<(String, f64)>,
    pub declared: ActionFlags,
    pub samples: usize,
}

/// Spot-check an action against a net: isometry defect on sampled pairs,
/// measure transport of Voronoi weights, and a freeness proxy on a ball of
/// radius `freeness_radius`.
pub fn action_audit(
    action: &ActionSpec,
    net: &Net,
    samples: usize,
    seed: u64,
    freeness_radius: usize,
) -> Result<ActionAudit> {
    if net.space != *action.space() {
        return Err(Error::invalid("net and action live on different spaces"));
    }
    let space = action.space();
    let mut iso_rng = rng::stream(seed, 0);
    let mut max_iso = 0.0f64;
    for _ in 0..samples.min(20_000) {
        let p = space.sample(&mut iso_rng);
        let q = space.sample(&mut iso_rng);
        let d = space.dist_unchecked(&p, &q);
        for g in 0..action.group().generator_count() {
            let gp = action.generator_map(g).apply(&p);
            let gq = action.generator_map(g).apply(&q);
            max_iso = max_iso.max((space.dist_unchecked(&gp, &gq) - d).abs());
        }
    }

    // Measure transport: empirical pushforward of the uniform measure through
    // each generator, binned by nearest net point, against stored weights.
    let gens = action.group().generator_count();
    let mut counts = vec![vec![0u64; net.len()]; gens];
    let mut mt_rng = rng::stream(seed, 1);
    for _ in 0..samples {
        let p = space.sample(&mut mt_rng);
        for (g, row) in counts.iter_mut().enumerate() {
            let gp = action.generator_map(g).apply(&p);
            let (i, _) = net.nearest(&gp);
            row[i] += 1;
        }
    }
    let mut max_measure = 0.0f64;
    for row in &counts {
        for (i, &c) in row.iter().enumerate() {
            let w = c as f64 / samples as f64;
            max_measure = max_measure.max((w - net.weights[i]).abs());
        }
    }

    // Freeness proxy.
    let ball = action.group().word_ball(freeness_radius, 100_000)?;
    let mut min_disp = Vec::new();
    for gamma in ball.iter().filter(|g| !g.is_identity()) {
        let mut best = f64::INFINITY;
        for p in &net.points {
            let gp = action.act(gamma, p)?;
            best = best.min(space.dist_unchecked(&gp, p));
        }
        min_disp.push((action.group().describe(gamma), best));
    }

    Ok(ActionAudit {
        max_isometry_defect: max_iso,
        max_measure_defect: max_measure,
        measure_noise_bound: 3.0 / (samples as f64).sqrt(),
        min_displacement: min_disp,
        declared: action.flags,
        samples,
    })
}

/// Mass of the net not covered by rescaled balls around the orbit of `m0`:
/// sums Voronoi weights of net points farther than `r/t` from every orbit
/// point `gamma . m0` with word length <= floor(r).
pub fn coverage_defect(
    action: &ActionSpec,
    net: &Net,
    t: f64,
    r: f64,
    m0: &Point,
    ball_cap: usize,
) -> Result<f64> {
    if !(t > 0.0) || !(r >= 0.0) {
        return Err(Error::invalid("coverage_defect needs t > 0 and r >= 0"));
    }
    net.space.validate(m0)?;
    if net.space != *action.space() {
        return Err(Error::invalid("net and action live on different spaces"));
    }
    let ball = action.group().word_ball(r.floor() as usize, ball_cap)?;
    let orbit: Vec<Point> = ball
        .iter()
        .map(|g| action.act(g, m0))
        .collect::<Result<Vec<_>>>()?;
    let radius = r / t;
    let mut defect = 0.0;
    for (p, w) in net.points.iter().zip(&net.weights) {
        let covered = orbit
            .iter()
            .any(|o| net.space.dist_unchecked(p, o) <= radius);
        if !covered {
            defect += w;
        }
    }
    Ok(defect)
}
