//! Finite spaces of basepointed, orbit-preserving quasi-isometric maps
//! between two warped levels, with the 2^(-agreement-radius) metric and the
//! group action by pre/post composition.
//!
//! A stored map assigns to every net point of the source R-ball a net point
//! of the target (KR+C)-ball, sending basepoint to basepoint and orbit
//! points to orbit points. Enumeration walks the orbit assignments first,
//! then off-orbit points in order of distance from the basepoint, pruning
//! with the two-sided quasi-isometry window; completed assignments are
//! deduplicated by a floor fingerprint evaluated on the group-ball x
//! integer-lattice domain, which is what keeps the stored family an
//! epsilon-net rather than a raw explosion of assignments.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::coarse::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::groups::{GroupElement, DEFAULT_BALL_CAP};
use crate::par;
use crate::warped::WarpedLevel;

/// Comparison slack for the quasi-isometry window; matches the audit slack
/// in [`crate::coarse::qi_constants`].
const QI_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EnumerationParams {
    /// Cap on stored (fingerprint-distinct) maps.
    pub map_cap: usize,
    /// Cap on search nodes per orbit branch.
    pub node_budget: u64,
    /// Cap on complete orbit assignments.
    pub orbit_cap: usize,
    /// When false, hitting any cap is a hard error instead of a truncation.
    pub allow_truncation: bool,
}

impl Default for EnumerationParams {
    fn default() -> Self {
        EnumerationParams {
            map_cap: 4096,
            node_budget: 2_000_000,
            orbit_cap: 50_000,
            allow_truncation: true,
        }
    }
}

/// Per lattice point: index of the nearest target orbit slot and the floored
/// chart offset from it, in units of 1/t.
pub type Fingerprint = Vec<(u32, Vec<i64>)>;

#[derive(Clone, Debug)]
pub struct StoredMap {
    /// Target net index per source-ball position.
    pub assignment: Vec<u32>,
    /// Orbit part: group element of the source ball -> target group element.
    pub psi: Vec<(GroupElement, GroupElement)>,
    pub fingerprint: Fingerprint,
}

impl StoredMap {
    pub fn psi_of(&self, gamma: &GroupElement) -> Option<&GroupElement> {
        self.psi
            .binary_search_by(|(g, _)| g.cmp(gamma))
            .ok()
            .map(|i| &self.psi[i].1)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct EnumerationStats {
    pub orbit_assignments: u64,
    pub dfs_nodes: u64,
    pub qi_rejections: u64,
    pub duplicate_fingerprints: u64,
}

#[derive(Clone, Debug)]
pub struct MapSpaceLevel {
    pub source: Arc<WarpedLevel>,
    pub target: Arc<WarpedLevel>,
    pub m0: usize,
    pub n0: usize,
    pub k: f64,
    pub c: f64,
    pub r: f64,
    /// Source ball net indices sorted by (distance from m0, index); position
    /// 0 is m0 itself.
    pub source_ball: Vec<u32>,
    /// Target ball net indices sorted by (distance from n0, index).
    pub target_ball: Vec<u32>,
    /// Source orbit points: (gamma, its net index), sorted by gamma.
    pub source_orbit: Vec<(GroupElement, u32)>,
    /// Target orbit points: (lambda, its net index), sorted by lambda; the
    /// first lambda landing on a net point is its canonical name.
    pub target_orbit: Vec<(GroupElement, u32)>,
    /// Fingerprint domain: (gamma, lattice offset, source-ball position).
    pub lattice_domain: Vec<(GroupElement, Vec<i64>, usize)>,
    pub maps: Vec<StoredMap>,
    /// First-disagreement radius per map pair; infinite on the diagonal.
    pub radius: Vec<Vec<f64>>,
    /// For each gamma in the stored ball, the index of the stored map whose
    /// restriction equals gamma acting on each map; None when the action
    /// leaves the stored family.
    pub gamma_tables: Vec<(GroupElement, Vec<Option<usize>>)>,
    pub truncated: bool,
    pub stats: EnumerationStats,
    source_pos: HashMap<u32, usize>,
}

/// Ball positions sorted by (distance, index), basepoint first.
fn sorted_ball(level: &WarpedLevel, center: usize, radius: f64) -> Vec<u32> {
    let mut ball: Vec<u32> = level
        .warped_ball(center, radius)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    ball.sort_by(|&a, &b| {
        level.rho[center][a as usize]
            .total_cmp(&level.rho[center][b as usize])
            .then(a.cmp(&b))
    });
    ball
}

fn l1_norm(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Integer lattice points of l1 norm at most `budget` in `dim` coordinates,
/// lexicographic order.
fn lattice_points(dim: usize, budget: i64) -> Vec<Vec<i64>> {
    if dim == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in -budget..=budget {
        for mut rest in lattice_points(dim - 1, budget - first.abs()) {
            let mut v = Vec::with_capacity(dim);
            v.push(first);
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

struct EnumCtx<'a> {
    src: &'a WarpedLevel,
    tgt: &'a WarpedLevel,
    k: f64,
    c: f64,
    sball: &'a [u32],
    /// Source-ball positions in assignment order: orbit slots first.
    slot_order: &'a [usize],
    orbit_len: usize,
    /// Target candidates for orbit slots (net indices of orbit points).
    orbit_candidates: &'a [u32],
    /// Target candidates for off-orbit slots (whole target ball).
    all_candidates: &'a [u32],
    /// Value fingerprint of every target ball point.
    coord_of: &'a HashMap<u32, (u32, Vec<i64>)>,
    /// Fingerprint domain positions (into the source ball).
    domain_positions: &'a [usize],
}

impl<'a> EnumCtx<'a> {
    fn window_ok(&self, chosen: &[(usize, u32)], pos: usize, val: u32) -> bool {
        let vi = val as usize;
        let pi = self.sball[pos] as usize;
        for &(p2, v2) in chosen {
            let dx = self.src.rho[pi][self.sball[p2] as usize];
            let dy = self.tgt.rho[vi][v2 as usize];
            if dy > self.k * dx + self.c + QI_SLACK || dy < dx / self.k - self.c - QI_SLACK {
                return false;
            }
        }
        true
    }

    fn fingerprint(&self, assignment: &[u32]) -> Fingerprint {
        self.domain_positions
            .iter()
            .map(|&p| self.coord_of[&assignment[p]].clone())
            .collect()
    }
}

struct BranchOut {
    maps: Vec<(Vec<u32>, Fingerprint)>,
    nodes: u64,
    rejections: u64,
    duplicates: u64,
    truncated: bool,
}

fn off_orbit_dfs(
    ctx: &EnumCtx,
    chosen: &mut Vec<(usize, u32)>,
    depth: usize,
    budget: &mut u64,
    map_cap: usize,
    seen: &mut HashSet<Fingerprint>,
    out: &mut BranchOut,
) {
    if out.maps.len() >= map_cap {
        out.truncated = true;
        return;
    }
    if depth == ctx.slot_order.len() {
        let mut assignment = vec![0u32; ctx.sball.len()];
        for &(p, v) in chosen.iter() {
            assignment[p] = v;
        }
        let fp = ctx.fingerprint(&assignment);
        if seen.insert(fp.clone()) {
            out.maps.push((assignment, fp));
        } else {
            out.duplicates += 1;
        }
        return;
    }
    if *budget == 0 {
        out.truncated = true;
        return;
    }
    *budget -= 1;
    out.nodes += 1;
    let pos = ctx.slot_order[depth];
    for &val in ctx.all_candidates {
        if !ctx.window_ok(chosen, pos, val) {
            out.rejections += 1;
            continue;
        }
        chosen.push((pos, val));
        off_orbit_dfs(ctx, chosen, depth + 1, budget, map_cap, seen, out);
        chosen.pop();
        if out.truncated {
            return;
        }
    }
}

struct OrbitSearch {
    assignments: Vec<Vec<(usize, u32)>>,
    budget: u64,
    cap: usize,
    truncated: bool,
    rejections: u64,
    nodes: u64,
}

fn orbit_dfs(ctx: &EnumCtx, chosen: &mut Vec<(usize, u32)>, depth: usize, acc: &mut OrbitSearch) {
    if acc.assignments.len() >= acc.cap {
        acc.truncated = true;
        return;
    }
    if depth == ctx.orbit_len {
        acc.assignments.push(chosen.clone());
        return;
    }
    if acc.budget == 0 {
        acc.truncated = true;
        return;
    }
    acc.budget -= 1;
    acc.nodes += 1;
    let pos = ctx.slot_order[depth];
    for &val in ctx.orbit_candidates {
        if !ctx.window_ok(chosen, pos, val) {
            acc.rejections += 1;
            continue;
        }
        chosen.push((pos, val));
        orbit_dfs(ctx, chosen, depth + 1, acc);
        chosen.pop();
        if acc.truncated {
            return;
        }
    }
}

/// Enumerate the map space of level `r` between two warped levels.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_map_space(
    source: Arc<WarpedLevel>,
    target: Arc<WarpedLevel>,
    m0: usize,
    n0: usize,
    k: f64,
    c: f64,
    r: f64,
    params: &EnumerationParams,
) -> Result<MapSpaceLevel> {
    if m0 >= source.len() || n0 >= target.len() {
        return Err(Error::invalid("basepoint index out of range"));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::invalid("multiplicative constant K must be >= 1"));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid("additive constant C must be >= 0"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("map space radius R must be positive"));
    }
    let rt = k * r + c;

    let source_ball = sorted_ball(&source, m0, r);
    let target_ball = sorted_ball(&target, n0, rt);
    let source_pos: HashMap<u32, usize> = source_ball
        .iter()
        .enumerate()
        .map(|(p, &i)| (i, p))
        .collect();
    let target_in_ball: HashSet<u32> = target_ball.iter().copied().collect();

    // Orbit points on both sides.
    let src_words = source.action.group().word_ball(r.floor() as usize, DEFAULT_BALL_CAP)?;
    let mut source_orbit: Vec<(GroupElement, u32)> = src_words
        .iter()
        .map(|g| (g.clone(), source.net_act(g, m0) as u32))
        .collect();
    source_orbit.sort_by(|a, b| a.0.cmp(&b.0));
    let tgt_words = target.action.group().word_ball(rt.floor() as usize, DEFAULT_BALL_CAP)?;
    let mut target_orbit: Vec<(GroupElement, u32)> = tgt_words
        .iter()
        .map(|l| (l.clone(), target.net_act(l, n0) as u32))
        .collect();
    target_orbit.sort_by(|a, b| a.0.cmp(&b.0));
    // Canonical lambda per target net point: the Ord-least one.
    let mut canonical_lambda: HashMap<u32, GroupElement> = HashMap::new();
    for (l, idx) in &target_orbit {
        canonical_lambda.entry(*idx).or_insert_with(|| l.clone());
    }

    // Slot order: orbit positions by (radius, index), then the rest.
    let mut orbit_positions: Vec<usize> = source_orbit
        .iter()
        .map(|(_, idx)| {
            source_pos.get(idx).copied().ok_or_else(|| {
                Error::Internal("orbit point escaped its own word-length ball".into())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    orbit_positions.sort_unstable();
    orbit_positions.dedup();
    if orbit_positions.first() != Some(&0) {
        // m0 is the orbit point of the identity, always at position 0.
        return Err(Error::Internal("basepoint missing from orbit positions".into()));
    }
    let off_positions: Vec<usize> = {
        let in_orbit: HashSet<usize> = orbit_positions.iter().copied().collect();
        (0..source_ball.len()).filter(|p| !in_orbit.contains(p)).collect()
    };
    let slot_order: Vec<usize> = orbit_positions
        .iter()
        .copied()
        .chain(off_positions.iter().copied())
        .collect();
    let orbit_len = orbit_positions.len();

    // Candidate lists, ordered by (distance from n0, index).
    let orbit_candidates: Vec<u32> = {
        let mut set: Vec<u32> = canonical_lambda
            .keys()
            .copied()
            .filter(|idx| target_in_ball.contains(idx))
            .collect();
        set.sort_by(|&a, &b| {
            target.rho[n0][a as usize]
                .total_cmp(&target.rho[n0][b as usize])
                .then(a.cmp(&b))
        });
        set
    };
    // n0 is the orbit point of the identity, so it is always a candidate;
    // the basepoint slot is forced to it before the search starts.
    if !orbit_candidates.contains(&(n0 as u32)) {
        return Err(Error::Internal("basepoint missing from orbit candidates".into()));
    }
    let all_candidates: Vec<u32> = target_ball.clone();

    // Fingerprint scaffolding.
    let space = source.net.space;
    let dim = space.dim();
    let mut lattice_domain: Vec<(GroupElement, Vec<i64>, usize)> = Vec::new();
    for g in &src_words {
        let budget = (r - g.len() as f64).floor() as i64;
        if budget < 0 {
            continue;
        }
        let anchor = source.net_act(g, m0);
        for v in lattice_points(dim, budget) {
            if g.len() as i64 + l1_norm(&v) > r.floor() as i64 {
                continue;
            }
            let offset: Vec<f64> = v.iter().map(|&x| x as f64 / source.t).collect();
            let p = space.exp(&source.net.points[anchor], &offset);
            let (idx, _) = source.net.nearest(&p);
            if let Some(&pos) = source_pos.get(&(idx as u32)) {
                lattice_domain.push((g.clone(), v, pos));
            }
        }
    }
    lattice_domain.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let domain_positions: Vec<usize> = lattice_domain.iter().map(|(_, _, p)| *p).collect();

    // Value fingerprint of each target ball point: nearest orbit slot
    // (ties to the smallest distance, then net index), floored offset.
    let tspace = target.net.space;
    let mut coord_of: HashMap<u32, (u32, Vec<i64>)> = HashMap::new();
    let orbit_slots_sorted: Vec<u32> = orbit_candidates.clone();
    for &y in &target_ball {
        let mut best = 0usize;
        let mut bestd = f64::INFINITY;
        for (s, &slot) in orbit_slots_sorted.iter().enumerate() {
            let d = target.rho[y as usize][slot as usize];
            if d < bestd || (d == bestd && slot < orbit_slots_sorted[best]) {
                bestd = d;
                best = s;
            }
        }
        let anchor = orbit_slots_sorted[best];
        let u = tspace.log(&target.net.points[anchor as usize], &target.net.points[y as usize]);
        let floored: Vec<i64> = u.iter().map(|&x| (x * target.t).floor() as i64).collect();
        coord_of.insert(y, (best as u32, floored));
    }

    let ctx = EnumCtx {
        src: &source,
        tgt: &target,
        k,
        c,
        sball: &source_ball,
        slot_order: &slot_order,
        orbit_len,
        orbit_candidates: &orbit_candidates,
        all_candidates: &all_candidates,
        coord_of: &coord_of,
        domain_positions: &domain_positions,
    };

    // Phase 1: orbit assignments (basepoint forced to n0).
    let mut stats = EnumerationStats::default();
    let mut search = OrbitSearch {
        assignments: Vec::new(),
        budget: params.node_budget,
        cap: params.orbit_cap,
        truncated: false,
        rejections: 0,
        nodes: 0,
    };
    {
        let mut chosen = vec![(0usize, n0 as u32)];
        orbit_dfs(&ctx, &mut chosen, 1, &mut search);
    }
    let orbit_assignments = search.assignments;
    let mut truncated = search.truncated;
    stats.qi_rejections = search.rejections;
    stats.dfs_nodes = search.nodes;
    stats.orbit_assignments = orbit_assignments.len() as u64;

    // Phase 2: off-orbit extension, parallel over orbit branches in chunks,
    // merged in branch order so the outcome is thread-count independent.
    let mut maps: Vec<StoredMap> = Vec::new();
    let mut global_seen: HashSet<Fingerprint> = HashSet::new();
    const CHUNK: usize = 256;
    'outer: for chunk in orbit_assignments.chunks(CHUNK) {
        let branch_results: Vec<BranchOut> = par::map_indexed(chunk.len(), |b| {
            let mut out = BranchOut {
                maps: Vec::new(),
                nodes: 0,
                rejections: 0,
                duplicates: 0,
                truncated: false,
            };
            let mut chosen = chunk[b].clone();
            let mut budget = params.node_budget;
            let mut seen = HashSet::new();
            off_orbit_dfs(
                &ctx,
                &mut chosen,
                orbit_len,
                &mut budget,
                params.map_cap,
                &mut seen,
                &mut out,
            );
            out
        });
        for out in branch_results {
            stats.dfs_nodes += out.nodes;
            stats.qi_rejections += out.rejections;
            stats.duplicate_fingerprints += out.duplicates;
            truncated |= out.truncated;
            for (assignment, fp) in out.maps {
                if !global_seen.insert(fp.clone()) {
                    stats.duplicate_fingerprints += 1;
                    continue;
                }
                let psi: Vec<(GroupElement, GroupElement)> = source_orbit
                    .iter()
                    .map(|(g, idx)| {
                        let y = assignment[source_pos[idx]];
                        (g.clone(), canonical_lambda[&y].clone())
                    })
                    .collect();
                maps.push(StoredMap {
                    assignment,
                    psi,
                    fingerprint: fp,
                });
                if maps.len() >= params.map_cap {
                    truncated = true;
                    break 'outer;
                }
            }
        }
    }
    if truncated && !params.allow_truncation {
        return Err(Error::ResourceLimit {
            what: "map space enumeration",
            cap: params.map_cap,
            requested: params.map_cap + 1,
        });
    }

    // Agreement radii.
    let n = maps.len();
    let mut radius = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let a = &maps[i].assignment;
            let b = &maps[j].assignment;
            let mut rad = f64::INFINITY;
            for (p, &net_idx) in source_ball.iter().enumerate() {
                if a[p] != b[p] {
                    rad = source.rho[m0][net_idx as usize];
                    break;
                }
            }
            radius[i][j] = rad;
            radius[j][i] = rad;
        }
    }

    let mut level = MapSpaceLevel {
        source,
        target,
        m0,
        n0,
        k,
        c,
        r,
        source_ball,
        target_ball,
        source_orbit,
        target_orbit,
        lattice_domain,
        maps,
        radius,
        gamma_tables: Vec::new(),
        truncated,
        stats,
        source_pos,
    };

    let mut tables = Vec::with_capacity(src_words.len());
    for g in &src_words {
        let mut table = Vec::with_capacity(level.maps.len());
        for m in &level.maps {
            let rm = gamma_act(&level, g, m)?;
            table.push(match_restriction(&level, &rm));
        }
        tables.push((g.clone(), table));
    }
    level.gamma_tables = tables;
    Ok(level)
}

impl MapSpaceLevel {
    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    /// First-disagreement radius; infinite for identical maps.
    pub fn agreement_radius(&self, i: usize, j: usize) -> f64 {
        self.radius[i][j]
    }

    /// 2^(-agreement radius); zero for identical maps.
    pub fn delta(&self, i: usize, j: usize) -> f64 {
        (-self.radius[i][j]).exp2()
    }

    pub fn source_position(&self, net_index: u32) -> Option<usize> {
        self.source_pos.get(&net_index).copied()
    }

    pub fn gamma_table(&self, gamma: &GroupElement) -> Option<&[Option<usize>]> {
        self.gamma_tables
            .iter()
            .find(|(g, _)| g == gamma)
            .map(|(_, t)| t.as_slice())
    }

    /// The stored maps as a finite metric space under delta.
    pub fn as_metric_space(&self) -> Result<FiniteMetricSpace> {
        let n = self.maps.len();
        let d: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { self.delta(i, j) }).collect())
            .collect();
        FiniteMetricSpace::new(d)
    }

    /// Number of distinct fingerprints (equals the stored map count by
    /// construction; kept as an explicit quantity for the cardinality bound).
    pub fn fingerprint_count(&self) -> usize {
        self.maps
            .iter()
            .map(|m| &m.fingerprint)
            .collect::<HashSet<_>>()
            .len()
    }

    /// The cardinality bound (|S_G|+2m)^R (|S_L|+2n)^(KR+C) evaluated for
    /// this level.
    pub fn fingerprint_bound(&self) -> f64 {
        let sg = self.source.action.group().generator_count() as f64;
        let sl = self.target.action.group().generator_count() as f64;
        let m = self.source.net.space.dim() as f64;
        let n = self.target.net.space.dim() as f64;
        (sg + 2.0 * m).powf(self.r) * (sl + 2.0 * n).powf(self.k * self.r + self.c)
    }

    pub fn export_json(&self) -> serde_json::Value {
        let group = self.source.action.group();
        let tgroup = self.target.action.group();
        json!({
            "t_source": self.source.t,
            "t_target": self.target.t,
            "k": self.k,
            "c": self.c,
            "r": self.r,
            "m0": self.m0,
            "n0": self.n0,
            "truncated": self.truncated,
            "stats": self.stats,
            "source_ball": self.source_ball,
            "target_ball": self.target_ball,
            "maps": self.maps.iter().map(|m| json!({
                "assignment": m.assignment,
                "psi": m.psi.iter().map(|(g, l)| json!([group.describe(g), tgroup.describe(l)])).collect::<Vec<_>>(),
                "fingerprint": m.fingerprint,
            })).collect::<Vec<_>>(),
            "delta": (0..self.maps.len()).map(|i| {
                (0..self.maps.len()).map(|j| if i == j { 0.0 } else { self.delta(i, j) }).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "gamma_action": self.gamma_tables.iter().map(|(g, t)| json!({
                "gamma": group.describe(g),
                "table": t,
            })).collect::<Vec<_>>(),
        })
    }
}

fn validate_assignment(level: &MapSpaceLevel, a: &[u32]) -> Result<()> {
    if a.len() != level.source_ball.len() {
        return Err(Error::invalid(format!(
            "assignment length {} does not match the source ball size {}",
            a.len(),
            level.source_ball.len()
        )));
    }
    if a[0] != level.n0 as u32 {
        return Err(Error::invalid(
            "basepoint mismatch: assignment does not send m0 to n0",
        ));
    }
    Ok(())
}

/// Radius of first disagreement between two assignments; infinite when they
/// agree everywhere.
pub fn delta_radius(level: &MapSpaceLevel, a: &[u32], b: &[u32]) -> Result<f64> {
    validate_assignment(level, a)?;
    validate_assignment(level, b)?;
    for (p, &net_idx) in level.source_ball.iter().enumerate() {
        if a[p] != b[p] {
            return Ok(level.source.rho[level.m0][net_idx as usize]);
        }
    }
    Ok(f64::INFINITY)
}

/// 2^(-first disagreement radius); 0 for identical maps.
pub fn delta_metric(level: &MapSpaceLevel, a: &[u32], b: &[u32]) -> Result<f64> {
    Ok((-delta_radius(level, a, b)?).exp2())
}

/// Variant of delta that may excise an exceptional set: the best value of
/// max(excised mass, 2^(-first disagreement radius outside the excision))
/// over prefixes of the disagreement cells ordered by distance from m0.
/// Excising nearest disagreements first is optimal: any other set with the
/// same delta-restriction weighs at least as much.
pub fn tilde_delta_metric(level: &MapSpaceLevel, a: &[u32], b: &[u32]) -> Result<f64> {
    validate_assignment(level, a)?;
    validate_assignment(level, b)?;
    let mut disagreements: Vec<(f64, f64)> = Vec::new(); // (radius, weight)
    for (p, &net_idx) in level.source_ball.iter().enumerate() {
        if a[p] != b[p] {
            let i = net_idx as usize;
            disagreements.push((level.source.rho[level.m0][i], level.source.net.weights[i]));
        }
    }
    if disagreements.is_empty() {
        return Ok(0.0);
    }
    let mut best = (-disagreements[0].0).exp2(); // empty excision
    let mut excised = 0.0f64;
    for k in 0..disagreements.len() {
        excised += disagreements[k].1;
        let rest = disagreements
            .get(k + 1)
            .map(|&(r, _)| (-r).exp2())
            .unwrap_or(0.0);
        best = best.min(excised.max(rest));
    }
    Ok(best)
}

/// The admissible input perturbation for a desired output perturbation
/// `eps` under the action of `gamma`: eps * 2^|gamma|.
pub fn equicontinuity_delta(eps: f64, gamma: &GroupElement) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    Ok(eps * (gamma.len() as f64).exp2())
}

/// A map transported by gamma, defined on the shrunken ball.
#[derive(Clone, Debug)]
pub struct RestrictedMap {
    pub gamma: GroupElement,
    /// Source ball positions with distance <= r - |gamma|, ascending.
    pub positions: Vec<usize>,
    /// Target net index per position.
    pub values: Vec<u32>,
}

/// Transport a stored map by gamma: m maps to psi(gamma^-1)^-1 applied to
/// the original image of gamma^-1 m, all realized through snapped orbit
/// steps on the nets.
pub fn gamma_act(level: &MapSpaceLevel, gamma: &GroupElement, map: &StoredMap) -> Result<RestrictedMap> {
    let glen = gamma.len() as f64;
    if glen > level.r {
        return Err(Error::invalid(format!(
            "group element of length {} escapes the level radius {}",
            gamma.len(),
            level.r
        )));
    }
    let sgroup = level.source.action.group();
    let ginv = sgroup.inverse(gamma);
    let lambda = map.psi_of(&ginv).ok_or_else(|| {
        Error::invalid("orbit part of the map does not cover gamma^-1")
    })?;
    let lambda_inv = level.target.action.group().inverse(lambda);
    let limit = level.r - glen;
    let mut positions = Vec::new();
    let mut values = Vec::new();
    for (p, &net_idx) in level.source_ball.iter().enumerate() {
        if level.source.rho[level.m0][net_idx as usize] > limit {
            continue;
        }
        let pre = level.source.net_act(&ginv, net_idx as usize);
        let q = *level
            .source_pos
            .get(&(pre as u32))
            .ok_or_else(|| Error::Internal("transported point escaped the source ball".into()))?;
        let y = map.assignment[q];
        values.push(level.target.net_act(&lambda_inv, y as usize) as u32);
        positions.push(p);
    }
    Ok(RestrictedMap {
        gamma: gamma.clone(),
        positions,
        values,
    })
}

/// First stored map agreeing with the restriction on its whole domain.
pub fn match_restriction(level: &MapSpaceLevel, rm: &RestrictedMap) -> Option<usize> {
    (0..level.maps.len()).find(|&i| {
        rm.positions
            .iter()
            .zip(&rm.values)
            .all(|(&p, &v)| level.maps[i].assignment[p] == v)
    })
}

/// First-disagreement radius between two restricted maps over their common
/// domain; they must be restrictions by the same gamma.
pub fn restricted_delta_radius(
    level: &MapSpaceLevel,
    a: &RestrictedMap,
    b: &RestrictedMap,
) -> Result<f64> {
    if a.gamma != b.gamma {
        return Err(Error::invalid("restricted maps have different domains"));
    }
    for (i, &p) in a.positions.iter().enumerate() {
        if a.values[i] != b.values[i] {
            return Ok(level.source.rho[level.m0][level.source_ball[p] as usize]);
        }
    }
    Ok(f64::INFINITY)
}

/// Additive QI constant of a restricted map at multiplicative constant k.
pub fn restricted_additive_constant(level: &MapSpaceLevel, rm: &RestrictedMap, k: f64) -> f64 {
    let mut c = 0.0f64;
    for (i, &p) in rm.positions.iter().enumerate() {
        for (j, &p2) in rm.positions.iter().enumerate().skip(i + 1) {
            let dx = level.source.rho[level.source_ball[p] as usize][level.source_ball[p2] as usize];
            let dy = level.target.rho[rm.values[i] as usize][rm.values[j] as usize];
            c = c.max(dy - k * dx).max(dx / k - dy);
        }
    }
    c.max(0.0)
}

/// Largest delta mismatch between acting-then-mapping and mapping-then-acting
/// for a map `f` between the stored families of two levels.
pub fn equivariance_defect(
    f: &crate::coarse::DiscreteMap,
    source_level: &MapSpaceLevel,
    target_level: &MapSpaceLevel,
    gamma: &GroupElement,
) -> Result<f64> {
    if f.source.len() != source_level.map_count() || f.target.len() != target_level.map_count() {
        return Err(Error::invalid(
            "map does not connect the stored families of the two levels",
        ));
    }
    let src_table = source_level
        .gamma_table(gamma)
        .ok_or_else(|| Error::invalid("gamma is outside the source level's action ball"))?;
    let tgt_table = target_level
        .gamma_table(gamma)
        .ok_or_else(|| Error::invalid("gamma is outside the target level's action ball"))?;
    let mut worst = 0.0f64;
    for i in 0..source_level.map_count() {
        let acted_then_mapped = src_table[i]
            .map(|j| f.apply(j))
            .ok_or_else(|| Error::invalid(format!("gamma action undefined on source map {i}")))?;
        let mapped_then_acted = tgt_table[f.apply(i)].ok_or_else(|| {
            Error::invalid(format!("gamma action undefined on target map {}", f.apply(i)))
        })?;
        worst = worst.max(target_level.delta(mapped_then_acted, acted_then_mapped));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::{epsilon_isometry_defect, hausdorff_distance, DiscreteMap};
    use crate::spaces::{net_from_points, ActionSpec, CompactSpace, Point};
    use crate::warped::{warped_level, WarpedLevelParams};

    /// Evenly spaced circle net acted on by rotation shift/n, warped at t.
    /// With t = n the level is exactly the n-cycle with unit edges.
    fn uniform_circle_level(n: usize, shift: usize, t: f64) -> Arc<WarpedLevel> {
        let pts: Vec<Point> = (0..n).map(|i| Point(vec![i as f64 / n as f64])).collect();
        let mesh = 0.5 / n as f64;
        let net = net_from_points(&CompactSpace::circle(), pts, mesh, 17, 20_000).unwrap();
        let action = ActionSpec::circle_rotation(shift as f64 / n as f64, true, true).unwrap();
        Arc::new(warped_level(Arc::new(net), Arc::new(action), t, &WarpedLevelParams::default()).unwrap())
    }

    fn eight_point_level() -> Arc<WarpedLevel> {
        uniform_circle_level(8, 1, 8.0)
    }

    #[test]
    fn eight_point_level_is_the_unit_cycle() {
        let level = eight_point_level();
        for i in 0..8usize {
            for j in 0..8usize {
                let hops = (i as i64 - j as i64).rem_euclid(8).min((j as i64 - i as i64).rem_euclid(8));
                assert_eq!(level.rho[i][j], hops as f64, "({i},{j})");
            }
        }
    }

    fn isometric_level_maps() -> MapSpaceLevel {
        let level = eight_point_level();
        enumerate_map_space(
            level.clone(),
            level,
            0,
            0,
            1.0,
            0.0,
            2.0,
            &EnumerationParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn rigid_enumeration_finds_identity_and_reflection() {
        let ms = isometric_level_maps();
        assert_eq!(ms.map_count(), 2);
        assert!(!ms.truncated);
        // ball order: 0 (r=0), 1 and 7 (r=1), 2 and 6 (r=2)
        assert_eq!(ms.source_ball, vec![0, 1, 7, 2, 6]);
        let assignments: Vec<&[u32]> = ms.maps.iter().map(|m| m.assignment.as_slice()).collect();
        assert!(assignments.contains(&[0u32, 1, 7, 2, 6].as_slice()), "identity stored");
        assert!(assignments.contains(&[0u32, 7, 1, 6, 2].as_slice()), "reflection stored");
        // identity and reflection first disagree on the radius-1 shell
        assert_eq!(ms.agreement_radius(0, 1), 1.0);
        assert_eq!(ms.delta(0, 1), 0.5);
    }

    #[test]
    fn trivial_groups_with_singleton_balls_store_one_map() {
        let pts = vec![Point(vec![0.0]), Point(vec![0.5])];
        let net = net_from_points(&CompactSpace::circle(), pts, 0.26, 3, 10_000).unwrap();
        let action = ActionSpec::trivial(crate::groups::GroupSpec::trivial(), CompactSpace::circle()).unwrap();
        let level = Arc::new(
            warped_level(Arc::new(net), Arc::new(action), 1.0, &WarpedLevelParams::default()).unwrap(),
        );
        let ms = enumerate_map_space(
            level.clone(),
            level,
            0,
            0,
            1.0,
            0.0,
            0.25,
            &EnumerationParams::default(),
        )
        .unwrap();
        assert_eq!(ms.map_count(), 1);
        assert_eq!(ms.maps[0].assignment, vec![0]);
    }

    #[test]
    fn enumeration_matches_exhaustive_oracle() {
        // Source: 8-cycle, R = 1 (3-point ball). Target: 16-cycle,
        // radius K*R+C = 3 (7-point ball). All points are orbit points.
        let src = eight_point_level();
        let tgt = uniform_circle_level(16, 1, 16.0);
        let (k, c, r) = (2.0, 1.0, 1.0);
        let ms = enumerate_map_space(
            src.clone(),
            tgt.clone(),
            0,
            0,
            k,
            c,
            r,
            &EnumerationParams::default(),
        )
        .unwrap();
        assert!(!ms.truncated);

        // Oracle: try every assignment of the two free ball points.
        let sball = ms.source_ball.clone();
        let tball = ms.target_ball.clone();
        assert_eq!(sball.len(), 3);
        assert_eq!(tball.len(), 7);
        let mut oracle_fps: HashSet<Fingerprint> = HashSet::new();
        let mut oracle_assignments: HashSet<Vec<u32>> = HashSet::new();
        let coord_of: HashMap<u32, (u32, Vec<i64>)> = {
            // rebuild the fingerprint table exactly as the engine does
            let mut m = HashMap::new();
            for map in &ms.maps {
                for (d, (_, _, pos)) in ms.lattice_domain.iter().enumerate() {
                    m.insert(map.assignment[*pos], map.fingerprint[d].clone());
                }
            }
            m
        };
        for y1 in &tball {
            for y2 in &tball {
                let a = vec![0u32, *y1, *y2];
                // window check over all pairs
                let mut ok = true;
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let dx = src.rho[sball[i] as usize][sball[j] as usize];
                        let dy = tgt.rho[a[i] as usize][a[j] as usize];
                        if dy > k * dx + c + 1e-9 || dy < dx / k - c - 1e-9 {
                            ok = false;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                oracle_assignments.insert(a.clone());
                let fp: Fingerprint = ms
                    .lattice_domain
                    .iter()
                    .map(|(_, _, pos)| coord_of[&a[*pos]].clone())
                    .collect();
                oracle_fps.insert(fp);
            }
        }
        assert_eq!(ms.map_count(), oracle_fps.len());
        for m in &ms.maps {
            assert!(oracle_assignments.contains(&m.assignment));
        }
        let engine_fps: HashSet<Fingerprint> =
            ms.maps.iter().map(|m| m.fingerprint.clone()).collect();
        assert_eq!(engine_fps, oracle_fps);
    }

    #[test]
    fn delta_formula_and_ultrametric() {
        let ms = isometric_level_maps();
        // synthetic assignments differing first on the radius-2 shell
        let a = vec![0u32, 1, 7, 2, 6];
        let mut b = a.clone();
        b[3] = 6; // position of net point 2, radius 2
        b[4] = 2;
        assert_eq!(delta_radius(&ms, &a, &b).unwrap(), 2.0);
        assert_eq!(delta_metric(&ms, &a, &b).unwrap(), 0.25);
        assert_eq!(delta_metric(&ms, &a, &a).unwrap(), 0.0);

        // ultrametric across the stored maps plus the synthetic one
        let maps: Vec<Vec<u32>> = ms
            .maps
            .iter()
            .map(|m| m.assignment.clone())
            .chain([b.clone()])
            .collect();
        for x in &maps {
            for y in &maps {
                for z in &maps {
                    let rxz = delta_radius(&ms, x, z).unwrap();
                    let rxy = delta_radius(&ms, x, y).unwrap();
                    let ryz = delta_radius(&ms, y, z).unwrap();
                    assert!(rxz >= rxy.min(ryz), "agreement radii are ultrametric");
                }
            }
        }
    }

    #[test]
    fn basepoint_mismatch_is_an_input_error() {
        let ms = isometric_level_maps();
        let a = vec![0u32, 1, 7, 2, 6];
        let bad = vec![1u32, 1, 7, 2, 6];
        assert!(delta_metric(&ms, &a, &bad).is_err());
    }

    #[test]
    fn tilde_delta_sweep_matches_subset_oracle() {
        let ms = isometric_level_maps();
        let id = vec![0u32, 1, 7, 2, 6];
        let variants = [
            vec![0u32, 7, 1, 6, 2],
            vec![0u32, 1, 7, 6, 2],
            vec![0u32, 7, 7, 2, 6],
            vec![0u32, 1, 1, 6, 6],
        ];
        for b in &variants {
            let sweep = tilde_delta_metric(&ms, &id, b).unwrap();
            // oracle: all subsets of the disagreement set
            let disagreements: Vec<usize> = (0..id.len()).filter(|&p| id[p] != b[p]).collect();
            let mut oracle = f64::INFINITY;
            for mask in 0..(1u32 << disagreements.len()) {
                let mut weight = 0.0;
                let mut rest_radius = f64::INFINITY;
                for (bit, &p) in disagreements.iter().enumerate() {
                    let net_idx = ms.source_ball[p] as usize;
                    if mask & (1 << bit) != 0 {
                        weight += ms.source.net.weights[net_idx];
                    } else {
                        rest_radius = rest_radius.min(ms.source.rho[ms.m0][net_idx]);
                    }
                }
                oracle = oracle.min(weight.max((-rest_radius).exp2()));
            }
            assert!(
                (sweep - oracle).abs() <= 1e-12,
                "sweep {sweep} oracle {oracle} for {b:?}"
            );
            assert!(sweep <= delta_metric(&ms, &id, b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn tilde_delta_excises_a_light_far_cell() {
        let ms = isometric_level_maps();
        let id = vec![0u32, 1, 7, 2, 6];
        let mut b = id.clone();
        b[3] = 6; // single disagreement at radius 2
        let plain = delta_metric(&ms, &id, &b).unwrap();
        assert_eq!(plain, 0.25);
        let tilde = tilde_delta_metric(&ms, &id, &b).unwrap();
        // the cell weighs about 1/8 < 1/4, so excising it wins
        let w = ms.source.net.weights[ms.source_ball[3] as usize];
        assert!((tilde - w).abs() <= 1e-12);
        assert!(tilde < plain);
    }

    #[test]
    fn identity_gamma_fixes_every_map() {
        let ms = isometric_level_maps();
        let e = ms.source.action.group().element_from_labels(&[]).unwrap();
        for (i, m) in ms.maps.iter().enumerate() {
            let rm = gamma_act(&ms, &e, m).unwrap();
            assert_eq!(rm.positions.len(), ms.source_ball.len());
            assert_eq!(rm.values, m.assignment);
            assert_eq!(match_restriction(&ms, &rm), Some(i));
        }
    }

    #[test]
    fn gamma_action_composes_on_the_rigid_fixture() {
        // Acting by g1 after g2 agrees with acting by g1*g2 on the ball of
        // radius r - |g1| - |g2|, where both sides are defined. The
        // intermediate restriction is rehydrated through a stored map, which
        // is faithful here because the rigid fixture's maps are already
        // distinguished at radius 1.
        let ms = isometric_level_maps();
        let group = ms.source.action.group();
        let ball1 = group.word_ball(1, 100).unwrap();
        let lookup = |rm: &RestrictedMap, p: usize| -> Option<u32> {
            rm.positions.iter().position(|&q| q == p).map(|i| rm.values[i])
        };
        for g1 in &ball1 {
            for g2 in &ball1 {
                if (g1.len() + g2.len()) as f64 > ms.r {
                    continue;
                }
                let prod = group.multiply(g1, g2);
                let common = ms.r - (g1.len() + g2.len()) as f64;
                for m in &ms.maps {
                    let rm2 = gamma_act(&ms, g2, m).unwrap();
                    let mid = match_restriction(&ms, &rm2).expect("intermediate stored");
                    let rm1 = gamma_act(&ms, g1, &ms.maps[mid]).unwrap();
                    let rmp = gamma_act(&ms, &prod, m).unwrap();
                    for (p, &net_idx) in ms.source_ball.iter().enumerate() {
                        if ms.source.rho[ms.m0][net_idx as usize] > common {
                            continue;
                        }
                        assert_eq!(
                            lookup(&rm1, p).expect("in stepwise domain"),
                            lookup(&rmp, p).expect("in product domain"),
                            "composition mismatch at ball position {p}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_tables_are_total_on_the_rigid_fixture() {
        let ms = isometric_level_maps();
        for (g, table) in &ms.gamma_tables {
            for (i, entry) in table.iter().enumerate() {
                assert!(entry.is_some(), "map {i} lost under {:?}", g);
            }
        }
    }

    #[test]
    fn equicontinuity_is_exact_on_radii() {
        let ms = isometric_level_maps();
        let group = ms.source.action.group();
        for gamma in group.word_ball(2, 100).unwrap() {
            if gamma.len() as f64 > ms.r {
                continue;
            }
            for i in 0..ms.map_count() {
                for j in 0..ms.map_count() {
                    let ri = gamma_act(&ms, &gamma, &ms.maps[i]).unwrap();
                    let rj = gamma_act(&ms, &gamma, &ms.maps[j]).unwrap();
                    let acted = restricted_delta_radius(&ms, &ri, &rj).unwrap();
                    let base = ms.agreement_radius(i, j);
                    assert!(
                        acted + gamma.len() as f64 >= base,
                        "radius dropped too far: {acted} vs {base} under |gamma|={}",
                        gamma.len()
                    );
                }
            }
        }
    }

    #[test]
    fn equicontinuity_helper_formula() {
        let group = crate::groups::GroupSpec::integers(1).unwrap();
        let g2 = group.element_from_labels(&["+e1", "+e1"]).unwrap();
        let e = group.element_from_labels(&[]).unwrap();
        assert_eq!(equicontinuity_delta(0.03125, &g2).unwrap(), 0.125);
        assert_eq!(equicontinuity_delta(0.25, &e).unwrap(), 0.25);
        let g3 = group.element_from_labels(&["+e1"; 3]).unwrap();
        assert!(equicontinuity_delta(0.25, &g3).unwrap() > equicontinuity_delta(0.25, &g2).unwrap());
        assert!(equicontinuity_delta(0.0, &e).is_err());
    }

    #[test]
    fn transported_maps_keep_qi_constants_within_slack() {
        let ms = isometric_level_maps();
        let group = ms.source.action.group();
        for gamma in group.word_ball(2, 100).unwrap() {
            for m in &ms.maps {
                let rm = gamma_act(&ms, &gamma, m).unwrap();
                let c_after = restricted_additive_constant(&ms, &rm, ms.k);
                let budget = ms.c + 2.0 * ms.k * gamma.len() as f64;
                assert!(
                    c_after <= budget + 1e-9,
                    "constant {c_after} exceeds {budget} under |gamma|={}",
                    gamma.len()
                );
            }
        }
    }

    #[test]
    fn fingerprint_count_respects_cardinality_bound() {
        let ms = isometric_level_maps();
        assert!(ms.fingerprint_count() as f64 <= ms.fingerprint_bound());
        assert_eq!(ms.fingerprint_count(), ms.map_count());
    }

    #[test]
    fn map_space_diameter_is_at_most_one() {
        let ms = isometric_level_maps();
        let space = ms.as_metric_space().unwrap();
        assert!(space.diameter() <= 1.0);
    }

    #[test]
    fn equivariance_defect_of_identity_is_zero() {
        let ms = isometric_level_maps();
        let space = Arc::new(ms.as_metric_space().unwrap());
        let f = DiscreteMap::new(space.clone(), space, (0..ms.map_count()).collect()).unwrap();
        let group = ms.source.action.group();
        for gamma in group.word_ball(2, 100).unwrap() {
            assert_eq!(equivariance_defect(&f, &ms, &ms, &gamma).unwrap(), 0.0);
        }
    }

    #[test]
    fn hausdorff_equivariance_bound_holds_exhaustively() {
        let ms = isometric_level_maps();
        let space = Arc::new(ms.as_metric_space().unwrap());
        let n = ms.map_count();
        let group = ms.source.action.group();
        // all functions from the stored family to itself
        let mut fs: Vec<Vec<usize>> = Vec::new();
        for code in 0..n.pow(n as u32) {
            let mut f = Vec::with_capacity(n);
            let mut rem = code;
            for _ in 0..n {
                f.push(rem % n);
                rem /= n;
            }
            fs.push(f);
        }
        for f_assign in fs {
            let f = DiscreteMap::new(space.clone(), space.clone(), f_assign.clone()).unwrap();
            let eps = epsilon_isometry_defect(&f);
            for gamma in group.word_ball(2, 100).unwrap() {
                let defect = equivariance_defect(&f, &ms, &ms, &gamma).unwrap();
                let table = ms.gamma_table(&gamma).unwrap();
                let act = |set: &[usize]| -> Option<Vec<usize>> {
                    set.iter().map(|&i| table[i]).collect()
                };
                let bound = 2.0 * (defect + eps);
                for mask in 1u32..(1 << n) {
                    let a: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
                    let preimage: Vec<usize> =
                        (0..n).filter(|&i| a.contains(&f_assign[i])).collect();
                    if preimage.is_empty() {
                        continue;
                    }
                    let lhs_set = act(&preimage).unwrap();
                    let acted_a = act(&a).unwrap();
                    let rhs_set: Vec<usize> =
                        (0..n).filter(|&i| acted_a.contains(&f_assign[i])).collect();
                    if rhs_set.is_empty() {
                        continue;
                    }
                    let h = hausdorff_distance(space.as_ref(), &lhs_set, &rhs_set).unwrap();
                    assert!(
                        h <= bound + 1e-9,
                        "Hausdorff {h} exceeds bound {bound} for subset {a:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn truncation_respects_the_disallow_flag() {
        let level = eight_point_level();
        let params = EnumerationParams {
            map_cap: 1,
            allow_truncation: false,
            ..EnumerationParams::default()
        };
        let err = enumerate_map_space(level.clone(), level, 0, 0, 1.0, 0.0, 2.0, &params);
        assert!(matches!(err, Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn export_json_has_the_documented_shape() {
        let ms = isometric_level_maps();
        let v = ms.export_json();
        assert_eq!(v["maps"].as_array().unwrap().len(), 2);
        assert_eq!(v["delta"][0][0], 0.0);
        assert!(v["gamma_action"].as_array().unwrap().len() >= 3);
        assert_eq!(v["truncated"], false);
    }
}
