//! Warped shortest-path metrics on nets over group actions.
//!
//! A level at parameter `t` is the graph metric on a net where nearby net
//! points are joined by edges of weight `t * d(x,y)` and every net point is
//! joined to the snapped image of each generator by an edge of weight 1.
//! The shortest-path closure is then the largest metric below both
//! constraint families; chaining generator edges makes longer relators
//! redundant. Edge weights are floored onto the 2^-32 dyadic grid (see
//! [`crate::graph`]), so distances are exact sums and independent of the
//! traversal algorithm.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{apsp, quantize_down, Graph, WeightedGraph};
use crate::groups::GroupElement;
use crate::spaces::{ActionSpec, Net};

/// Pairs closer than `METRIC_EDGE_FACTOR * mesh` receive a direct metric
/// edge; geodesics are recovered by chaining such edges along the net.
pub const METRIC_EDGE_FACTOR: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct WarpedLevelParams {
    /// Max distance between a generator image and its snapped net point;
    /// defaults to the net mesh.
    pub snap_tolerance: Option<f64>,
    /// Cap on the number of net points (APSP is quadratic in memory).
    pub point_cap: usize,
}

impl Default for WarpedLevelParams {
    fn default() -> Self {
        WarpedLevelParams {
            snap_tolerance: None,
            point_cap: 6000,
        }
    }
}

/// A finite warped level: net, action, and the full distance matrix.
#[derive(Clone, Debug)]
pub struct WarpedLevel {
    pub t: f64,
    pub net: Arc<Net>,
    pub action: Arc<ActionSpec>,
    pub snap_tolerance: f64,
    /// rho[i][j]: warped distance between net points i and j.
    pub rho: Vec<Vec<f64>>,
    /// snap[g][i]: net index of the snapped image of point i under
    /// generator g.
    pub snap: Vec<Vec<u32>>,
    pub metric_edge_count: usize,
    pub generator_edge_count: usize,
}

/// Build the level-`t` warped metric for an action on a net.
pub fn warped_level(
    net: Arc<Net>,
    action: Arc<ActionSpec>,
    t: f64,
    params: &WarpedLevelParams,
) -> Result<WarpedLevel> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("level parameter t must be positive, got {t}")));
    }
    if net.space != *action.space() {
        return Err(Error::invalid("net and action live on different spaces"));
    }
    let n = net.len();
    if n == 0 {
        return Err(Error::invalid("net is empty"));
    }
    if n > params.point_cap {
        return Err(Error::ResourceLimit {
            what: "warped level points",
            cap: params.point_cap,
            requested: n,
        });
    }
    let snap_tol = params.snap_tolerance.unwrap_or(net.mesh);

    // Snap tables: nearest net point of each generator image.
    let gens = action.group().generator_count();
    let mut snap = vec![vec![0u32; n]; gens];
    for (g, table) in snap.iter_mut().enumerate() {
        for i in 0..n {
            let image = action
                .generator_map(g)
                .apply(&net.points[i]);
            let (j, d) = net.nearest(&image);
            if d > snap_tol {
                return Err(Error::Discretization(format!(
                    "generator '{}' image of net point {i} lands {d:.6} away from the net \
                     (snap tolerance {snap_tol:.6}); refine the net",
                    action.group().generator(g).label
                )));
            }
            table[i] = j as u32;
        }
    }

    // Constraint graph.
    let mut graph = WeightedGraph::new(n);
    let mut metric_edges = 0usize;
    let reach = METRIC_EDGE_FACTOR * net.mesh;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = net.space.dist_unchecked(&net.points[i], &net.points[j]);
            if d <= reach {
                graph.add_edge(i, j, quantize_down(t * d));
                metric_edges += 1;
            }
        }
    }
    let mut generator_edges = 0usize;
    for table in &snap {
        for (i, &j) in table.iter().enumerate() {
            if i != j as usize {
                graph.add_edge(i, j as usize, 1.0);
                generator_edges += 1;
            }
        }
    }
    if !graph.is_connected() {
        return Err(Error::Internal(
            "warped constraint graph is disconnected; the net cannot chain geodesics".into(),
        ));
    }

    let rho = apsp(&graph);

    Ok(WarpedLevel {
        t,
        net,
        action,
        snap_tolerance: snap_tol,
        rho,
        snap,
        metric_edge_count: metric_edges,
        generator_edge_count: generator_edges,
    })
}

impl WarpedLevel {
    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    /// The constraint graph the level was built from (for oracles and
    /// exports).
    pub fn constraint_graph(&self) -> WeightedGraph {
        let n = self.len();
        let mut graph = WeightedGraph::new(n);
        let reach = METRIC_EDGE_FACTOR * self.net.mesh;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self
                    .net
                    .space
                    .dist_unchecked(&self.net.points[i], &self.net.points[j]);
                if d <= reach {
                    graph.add_edge(i, j, quantize_down(self.t * d));
                }
            }
        }
        for table in &self.snap {
            for (i, &j) in table.iter().enumerate() {
                if i != j as usize {
                    graph.add_edge(i, j as usize, 1.0);
                }
            }
        }
        graph
    }

    /// Apply `gamma` to net point `i` by iterated snapped generator steps
    /// (rightmost letter of the canonical word first). Chaining guarantees
    /// `rho(i, net_act(gamma, i)) <= |gamma|` exactly.
    pub fn net_act(&self, gamma: &GroupElement, i: usize) -> usize {
        let mut cur = i;
        for &g in gamma.word().iter().rev() {
            cur = self.snap[g][cur] as usize;
        }
        cur
    }

    /// Net indices within warped distance `r` of `center`, ascending.
    pub fn warped_ball(&self, center: usize, r: f64) -> Vec<usize> {
        self.rho[center]
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d <= r)
            .map(|(i, _)| i)
            .collect()
    }

    /// Unweighted graph joining pairs with 0 < rho <= threshold.
    pub fn level_graph(&self, threshold: f64) -> Result<Graph> {
        if !(threshold > 0.0) {
            return Err(Error::invalid("level graph threshold must be positive"));
        }
        let n = self.len();
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.rho[i][j] <= threshold {
                    g.add_edge(i as u32, j as u32)?;
                }
            }
        }
        Ok(g)
    }

    /// Distance matrix as CSV with a parameter header.
    pub fn rho_to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# t={} mesh={} snap_tolerance={} points={}\n",
            self.t,
            self.net.mesh,
            self.snap_tolerance,
            self.len()
        ));
        for row in &self.rho {
            let cells: Vec<String> = row.iter().map(|d| format!("{d}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Level-graph edge list as CSV.
    pub fn edges_to_csv(&self, threshold: f64) -> Result<String> {
        let g = self.level_graph(threshold)?;
        let mut out = String::new();
        out.push_str(&format!(
            "# t={} threshold={} vertices={} edges={}\n",
            self.t,
            threshold,
            g.vertex_count(),
            g.edge_count()
        ));
        out.push_str("u,v\n");
        for &(u, v) in g.edges() {
            out.push_str(&format!("{u},{v}\n"));
        }
        Ok(out)
    }
}

/// Outcome of comparing a warped ball against its product model.
#[derive(Clone, Debug, Serialize)]
pub struct TrivializationReport {
    /// Max |rho - model distance| over matched pairs; infinite when the
    /// matching failed.
    pub defect: f64,
    pub ball_size: usize,
    pub matched: usize,
    /// Why the matching failed, if it did.
    pub failure: Option<String>,
}

impl TrivializationReport {
    pub fn is_finite(&self) -> bool {
        self.defect.is_finite()
    }
}

/// Margin added to `r` when accepting chart decompositions; generous enough
/// to absorb snap drift at desk scale, small enough to catch genuine
/// collisions.
const DECOMPOSITION_MARGIN: f64 = 0.5;

/// Compare the warped ball of radius `r` around net point `m0` with the
/// group-ball x lattice model.
///
/// Every ball point is decomposed as `gamma . exp_m0(u / t)`; the matching
/// fails (infinite defect) when some point has no such decomposition inside
/// the window or has several, which signals a non-free action or a level
/// parameter below the trivialization threshold for this radius.
///
/// Model distances mix unit generator steps with Euclidean moves. Generator
/// steps are available at every position and Euclidean moves in every group
/// slice, so shortest chains split: distance((g,u),(h,v)) = |g^-1 h| +
/// (Euclidean chain length from u to v through the lattice scaffold). The
/// split form is what gets computed; a test checks it against the explicit
/// product graph on a small instance.
pub fn trivialization_defect(level: &WarpedLevel, m0: usize, r: f64) -> Result<TrivializationReport> {
    if m0 >= level.len() {
        return Err(Error::invalid(format!("basepoint index {m0} out of range")));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("trivialization radius must be positive"));
    }
    let space = level.net.space;
    let m = space.dim();
    let t = level.t;
    let group = level.action.group();
    let ball = level.warped_ball(m0, r);
    let word_ball = group.word_ball(r.ceil() as usize, crate::groups::DEFAULT_BALL_CAP)?;
    let base = &level.net.points[m0];

    // Decompose each ball point.
    let mut matched: Vec<(usize, Vec<f64>)> = Vec::with_capacity(ball.len());
    for &x in &ball {
        let p = &level.net.points[x];
        let mut found: Vec<(usize, Vec<f64>)> = Vec::new();
        for (gi, gamma) in word_ball.iter().enumerate() {
            let ginv = group.inverse(gamma);
            let moved = level.action.act(&ginv, p)?;
            let u: Vec<f64> = space.log(base, &moved).iter().map(|c| c * t).collect();
            let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm <= r + DECOMPOSITION_MARGIN {
                found.push((gi, u));
            }
        }
        match found.len() {
            0 => {
                return Ok(TrivializationReport {
                    defect: f64::INFINITY,
                    ball_size: ball.len(),
                    matched: matched.len(),
                    failure: Some(format!(
                        "net point {x} admits no group-times-chart decomposition within the window"
                    )),
                });
            }
            1 => matched.push(found.pop().unwrap()),
            _ => {
                let g0 = group.describe(&word_ball[found[0].0]);
                let g1 = group.describe(&word_ball[found[1].0]);
                return Ok(TrivializationReport {
                    defect: f64::INFINITY,
                    ball_size: ball.len(),
                    matched: matched.len(),
                    failure: Some(format!(
                        "net point {x} decomposes through both '{g0}' and '{g1}' \
                         (orbit collision: action not free at this scale, or t below t(r))"
                    )),
                });
            }
        }
    }

    // Position scaffold: integer lattice plus the matched chart vectors.
    let lattice_r = r.ceil() as i64 + 1;
    let mut positions: Vec<Vec<f64>> = Vec::new();
    let mut cursor = vec![-lattice_r; m];
    'outer: loop {
        let norm2: i64 = cursor.iter().map(|&c| c * c).sum();
        if norm2 <= lattice_r * lattice_r {
            positions.push(cursor.iter().map(|&c| c as f64).collect());
        }
        for c in cursor.iter_mut() {
            *c += 1;
            if *c <= lattice_r {
                continue 'outer;
            }
            *c = -lattice_r;
        }
        break;
    }
    let lattice_len = positions.len();
    let mut pos_index: HashMap<usize, usize> = HashMap::new(); // matched idx -> position idx
    for (k, (_, u)) in matched.iter().enumerate() {
        let existing = positions
            .iter()
            .position(|p| p.iter().zip(u.iter()).all(|(a, b)| a == b));
        let idx = match existing {
            Some(i) => i,
            None => {
                positions.push(u.clone());
                positions.len() - 1
            }
        };
        pos_index.insert(k, idx);
    }
    if positions.len() * word_ball.len() > 2_000_000 {
        return Err(Error::ResourceLimit {
            what: "trivialization model vertices",
            cap: 2_000_000,
            requested: positions.len() * word_ball.len(),
        });
    }
    let _ = lattice_len;

    // Euclidean chain graph on positions (moves of length <= 2).
    let mut chain = WeightedGraph::new(positions.len());
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d2: f64 = positions[i]
                .iter()
                .zip(&positions[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 <= 4.0 && d2 > 0.0 {
                chain.add_edge(i, j, quantize_down(d2.sqrt()));
            }
        }
    }
    let needed: Vec<usize> = {
        let mut v: Vec<usize> = pos_index.values().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let chain_rows: Vec<Vec<f64>> = crate::par::map_indexed(needed.len(), |k| chain.dijkstra(needed[k]));
    let chain_row_of: HashMap<usize, usize> = needed.iter().enumerate().map(|(k, &p)| (p, k)).collect();

    // Word-metric distances between matched slices.
    let mut word_dist: HashMap<(usize, usize), f64> = HashMap::new();
    for k1 in 0..word_ball.len() {
        for k2 in 0..word_ball.len() {
            let rel = group.multiply(&group.inverse(&word_ball[k1]), &word_ball[k2]);
            word_dist.insert((k1, k2), rel.len() as f64);
        }
    }

    let mut defect = 0.0f64;
    for a in 0..matched.len() {
        let (ga, _) = &matched[a];
        let row = &chain_rows[chain_row_of[&pos_index[&a]]];
        for b in (a + 1)..matched.len() {
            let (gb, _) = &matched[b];
            let model = word_dist[&(*ga, *gb)] + row[pos_index[&b]];
            let actual = level.rho[ball[a]][ball[b]];
            defect = defect.max((actual - model).abs());
        }
    }

    Ok(TrivializationReport {
        defect,
        ball_size: ball.len(),
        matched: matched.len(),
        failure: None,
    })
}
